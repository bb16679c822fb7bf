use num_traits::{One, Signed, Zero};

use super::{pow2_inv, product, sign_rat, CertificateStatus, PositionCertificate};
use crate::error::{Error, Result};
use crate::quadspace::{BilinearSpace, Vector};
use crate::rational::{self, rat_int, Rat, RatMatrix};

/// Vertices `C_0, ..., C_q` of a simplicial collection.
#[derive(Clone, Debug)]
pub struct SimplicialCollection {
    space: BilinearSpace,
    verts: Vec<Vector>,
    /// `R = (C,C)^{-1}`, exact (floating input is converted exactly).
    inv: RatMatrix,
}

/// `s(x) ∈ Δ_q` and `λ(x, C) = Σ_j (x, C_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialIntersection {
    pub exact: Option<Vec<Rat>>,
    pub s: Vec<f64>,
    pub lambda: f64,
}

fn exact_coords(v: &Vector) -> Vec<Rat> {
    match v.exact() {
        Some(e) => e.to_vec(),
        None => v.coords().iter().map(|&c| rational::from_f64(c).unwrap_or_else(Rat::zero)).collect(),
    }
}

fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0usize..1 << n).filter(move |m| m.count_ones() as usize == k).map(move |m| (0..n).filter(|i| m >> i & 1 == 1).collect())
}

impl SimplicialCollection {
    /// Validates independence, signature `(1, q)` of `(C, C)`, and that every
    /// `q`-subset spans a negative `q`-plane.
    pub fn new(space: BilinearSpace, verts: Vec<Vector>) -> Result<Self> {
        if verts.is_empty() {
            return Err(Error::Invalid("simplicial collection needs at least one vector".into()));
        }
        for (i, v) in verts.iter().enumerate() {
            if v.len() != space.dim() {
                return Err(Error::Dimension { expected: space.dim(), found: v.len(), what: format!("C_{i}") });
            }
        }
        let q = verts.len() - 1;
        let rows: Vec<Vec<Rat>> = verts.iter().map(exact_coords).collect();
        let gram = space.gram().gram_of(&rows);
        let (pos, neg, zero) = gram.inertia();
        if zero > 0 {
            return Err(Error::Invalid("vectors are linearly dependent or span a degenerate subspace".into()));
        }
        if (pos, neg) != (1, q) {
            return Err(Error::Invalid(format!("Gram matrix of the collection has signature ({pos},{neg}), expected (1,{q})")));
        }
        for subset in subsets_of_size(q + 1, q) {
            if !gram.principal_submatrix(&subset).is_negative_definite() {
                return Err(Error::NotNegativeDefinite(format!("vectors {subset:?} do not span a negative plane")));
            }
        }
        let inv = gram.inverse().ok_or_else(|| Error::Invalid("singular Gram matrix".into()))?;
        Ok(Self { space, verts, inv })
    }

    pub fn q(&self) -> usize {
        self.verts.len() - 1
    }

    pub fn space(&self) -> &BilinearSpace {
        &self.space
    }

    pub fn verts(&self) -> &[Vector] {
        &self.verts
    }

    /// `R = (C, C)^{-1}`, the Gram matrix of the dual basis.
    pub fn dual_gram(&self) -> &RatMatrix {
        &self.inv
    }

    /// `C∨ = C (C,C)^{-1}`, so that `(C_i∨, C_j) = δ_ij`.
    pub fn dual_basis(&self) -> Vec<Vector> {
        let n = self.verts.len();
        (0..n)
            .map(|j| {
                let mut acc = self.verts[0].scale_rat(self.inv.get(0, j));
                for i in 1..n {
                    acc = acc.add(&self.verts[i].scale_rat(self.inv.get(i, j)));
                }
                acc
            })
            .collect()
    }

    /// Good position means `s R sᵀ > 0` on the whole simplex. Certified directly when
    /// `R ≥ 0` entrywise; in any case the exact minimum is found by solving the
    /// stationarity system on every face.
    pub fn good_position(&self) -> PositionCertificate {
        let n = self.verts.len();
        let nonneg = self.inv.rows().iter().flatten().all(|r| !r.is_negative());
        let (min, argmin) = self.simplex_minimum();
        let scale = rational::to_f64(&self.inv.max_abs()).max(f64::MIN_POSITIVE);
        let margin = rational::to_f64(&min);
        let tol = self.space.tol() * scale;
        let status = if nonneg || margin > tol {
            CertificateStatus::Certified
        } else if !min.is_positive() {
            CertificateStatus::Refuted
        } else {
            CertificateStatus::Undecided
        };
        debug_assert!(n > 0);
        PositionCertificate {
            status,
            witness: (status == CertificateStatus::Refuted).then_some(argmin),
            resolution: 0.0,
            margin,
        }
    }

    /// Exact `min_{s ∈ Δ_q} s R sᵀ` and a minimizer.
    fn simplex_minimum(&self) -> (Rat, Vec<Rat>) {
        let n = self.verts.len();
        let mut best: Option<(Rat, Vec<Rat>)> = None;
        for mask in 1usize..1 << n {
            let face: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let Some(s_face) = self.face_stationary_point(&face) else { continue };
            if s_face.iter().any(Signed::is_negative) {
                continue;
            }
            let mut s = vec![Rat::zero(); n];
            for (&i, v) in face.iter().zip(s_face) {
                s[i] = v;
            }
            let value = self.inv.bilinear(&s, &s);
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, s));
            }
        }
        // vertices always give a stationary point, so `best` is set
        best.expect("simplex has vertices")
    }

    /// Solves `[2R_F 1; 1ᵀ 0] (s, -ν) = (0, 1)` on the face `F`.
    fn face_stationary_point(&self, face: &[usize]) -> Option<Vec<Rat>> {
        let k = face.len();
        let mut rows = vec![vec![Rat::zero(); k + 1]; k + 1];
        for (a, &i) in face.iter().enumerate() {
            for (b, &j) in face.iter().enumerate() {
                rows[a][b] = self.inv.get(i, j) * rat_int(2);
            }
            rows[a][k] = Rat::one();
            rows[k][a] = Rat::one();
        }
        let m = RatMatrix::from_rows(rows).ok()?;
        let mut rhs = vec![Rat::zero(); k + 1];
        rhs[k] = Rat::one();
        let sol = m.solve(&rhs)?;
        Some(sol[..k].to_vec())
    }

    /// `Φ△_q(x) = 2^{-q-1} (∏_j (1 - sgn(x,C_j)) + (-1)^q ∏_j (1 + sgn(x,C_j)))`.
    pub fn phi(&self, x: &Vector) -> Rat {
        let signs: Vec<i32> = self.verts.iter().map(|c| self.space.sign_inner(x, c)).collect();
        simplicial_phi_from_signs(&signs)
    }

    /// `s(x)_j = (x, C_j) / λ`; present when `Q(pr_U x) > 0` and the non-zero
    /// signs of `(x, C_j)` agree.
    pub fn intersection_point(&self, x: &Vector) -> Option<SimplicialIntersection> {
        let signs: Vec<i32> = self.verts.iter().map(|c| self.space.sign_inner(x, c)).collect();
        let first = signs.iter().copied().find(|&s| s != 0)?;
        if signs.iter().any(|&s| s != 0 && s != first) {
            return None;
        }
        let exact: Option<Vec<Rat>> = self.verts.iter().map(|c| self.space.inner_exact(x, c)).collect();
        match exact {
            Some(b) => {
                if !self.inv.bilinear(&b, &b).is_positive() {
                    return None;
                }
                let lambda: Rat = b.iter().sum();
                let s: Vec<Rat> = b.iter().map(|v| v / &lambda).collect();
                Some(SimplicialIntersection {
                    s: s.iter().map(rational::to_f64).collect(),
                    exact: Some(s),
                    lambda: rational::to_f64(&lambda),
                })
            }
            None => {
                let b: Vec<f64> = self.verts.iter().map(|c| self.space.inner_unchecked(x, c)).collect();
                let r = self.inv.to_f64();
                let bv = nalgebra::DVector::from_column_slice(&b);
                if bv.dot(&(&r * &bv)) <= 0.0 {
                    return None;
                }
                let lambda: f64 = b.iter().sum();
                Some(SimplicialIntersection { exact: None, s: b.iter().map(|v| v / lambda).collect(), lambda })
            }
        }
    }

    /// `C[j] = [C_{i⊥j}]_{i≠j}` in `V_j = C_j^⊥`.
    pub fn face(&self, j: usize) -> Result<Self> {
        let axis = self
            .verts
            .get(j)
            .ok_or_else(|| Error::Invalid(format!("face index {j} out of range for q = {}", self.q())))?;
        if self.q() == 0 {
            return Err(Error::Invalid("a 0-simplex has no faces".into()));
        }
        let verts = self
            .verts
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != j)
            .map(|(_, c)| self.space.project_perp(c, axis))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.space.clone(), verts)
    }

    /// A basis of the negative plane `C∨(s)^⊥` inside `span C`, for `s` in the simplex:
    /// the vectors `C_i - (s_i / (w,w)) w` with `w = C∨(s)`, leaving out the index with
    /// the largest `|(Rs)_i|`.
    pub fn plane_at(&self, s: &[Rat]) -> Result<Vec<Vector>> {
        let n = self.verts.len();
        if s.len() != n {
            return Err(Error::Dimension { expected: n, found: s.len(), what: "simplex point".into() });
        }
        let rs = self.inv.mul_vec(s);
        let ww: Rat = s.iter().zip(&rs).map(|(a, b)| a * b).sum();
        if !ww.is_positive() {
            return Err(Error::NotNegativeDefinite("C∨(s) is not a positive vector".into()));
        }
        let drop = (0..n).max_by(|&i, &j| rs[i].abs().cmp(&rs[j].abs())).unwrap_or(0);
        let verts: Vec<Vector> = self.verts.iter().map(|c| Vector::from_rats(exact_coords(c))).collect();
        let mut w = Vector::zeros(self.space.dim());
        for (c, r) in verts.iter().zip(&rs) {
            w = w.add(&c.scale_rat(r));
        }
        Ok((0..n).filter(|&i| i != drop).map(|i| verts[i].sub(&w.scale_rat(&(&s[i] / &ww)))).collect())
    }

    /// The sub-collection `C^{(I)}` with the vectors indexed by `omit` removed
    /// (no projection).
    pub fn omit(&self, omit: &[usize]) -> Vec<Vector> {
        self.verts.iter().enumerate().filter(|(i, _)| !omit.contains(i)).map(|(_, v)| v.clone()).collect()
    }
}

/// `Φ△_q` as a function of the sign vector `(sgn(x, C_j))_{j=0..q}`.
pub fn simplicial_phi_from_signs(signs: &[i32]) -> Rat {
    let q = signs.len().saturating_sub(1);
    let minus = product(signs.iter().map(|&s| sign_rat(1 - s)));
    let plus = product(signs.iter().map(|&s| sign_rat(1 + s)));
    let alt = if q % 2 == 0 { plus } else { -plus };
    (minus + alt) * pow2_inv(q + 1)
}

/// The odd-subset form `(-1)^q 2^{-q} Σ_{|I| odd} ∏_{i∉I} sgn(x, C_i)`.
pub fn odd_subset_phi(signs: &[i32]) -> Rat {
    let n = signs.len();
    let q = n.saturating_sub(1);
    let mut total = Rat::zero();
    for mask in 0usize..1 << n {
        if mask.count_ones() % 2 == 1 {
            total += product((0..n).filter(|i| mask >> i & 1 == 0).map(|i| sign_rat(signs[i])));
        }
    }
    let total = total * pow2_inv(q);
    if q % 2 == 0 {
        total
    } else {
        -total
    }
}
