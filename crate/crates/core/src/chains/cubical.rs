use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::{pow2_inv, product, sign_rat, CertificateStatus, PositionCertificate, Tristate};
use crate::error::{Error, Result};
use crate::quadspace::{max_eigenvalue, BilinearSpace, Vector};
use crate::rational::{self, rat, Rat};

/// Parameters of the grid-and-bound good-position check for cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    /// Grid intervals per axis; the step is `1/grid`.
    pub grid: u32,
    /// Maximal number of local bisections of a cell that the Lipschitz bound does not close.
    pub max_depth: u32,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { grid: 32, max_depth: 6 }
    }
}

/// `q` pairs `(C_j, C_j')` of negative vectors.
#[derive(Clone, Debug)]
pub struct CubicalCollection {
    space: BilinearSpace,
    pairs: Vec<(Vector, Vector)>,
}

/// The point `s(x)` of the cube where `D_x` meets `S(C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntersectionPoint {
    pub exact: Option<Vec<Rat>>,
    pub coords: Vec<f64>,
}

impl CubicalCollection {
    /// Checks dimensions only. Listed vectors that fail to be negative are caught by
    /// [`good_position`](Self::good_position), since every vertex of the cube is sampled.
    pub fn new(space: BilinearSpace, pairs: Vec<(Vector, Vector)>) -> Result<Self> {
        for (j, (c, c1)) in pairs.iter().enumerate() {
            for (v, name) in [(c, "C"), (c1, "C'")] {
                if v.len() != space.dim() {
                    return Err(Error::Dimension {
                        expected: space.dim(),
                        found: v.len(),
                        what: format!("{name}_{}", j + 1),
                    });
                }
            }
        }
        Ok(Self { space, pairs })
    }

    pub fn q(&self) -> usize {
        self.pairs.len()
    }

    pub fn space(&self) -> &BilinearSpace {
        &self.space
    }

    pub fn pairs(&self) -> &[(Vector, Vector)] {
        &self.pairs
    }

    /// The vertex collection `C^I`: bit `j` of `subset` selects `C_j'` over `C_j`.
    pub fn vertex(&self, subset: usize) -> Vec<Vector> {
        self.pairs
            .iter()
            .enumerate()
            .map(|(j, (c, c1))| if subset >> j & 1 == 1 { c1.clone() } else { c.clone() })
            .collect()
    }

    /// `B_j(s_j) = (1 - s_j) C_j + s_j C_j'`.
    pub fn b_of_s(&self, s: &[f64]) -> Result<Vec<Vector>> {
        self.check_point(s.len(), s.iter().all(|v| (0.0..=1.0).contains(v)))?;
        Ok(self
            .pairs
            .iter()
            .zip(s)
            .map(|((c, c1), &t)| Vector::from_dvector(c.coords() * (1.0 - t) + c1.coords() * t))
            .collect())
    }

    /// Exact `B(s)` for rational `s`; falls back to floats for floating collections.
    pub fn b_of_s_exact(&self, s: &[Rat]) -> Result<Vec<Vector>> {
        self.check_point(s.len(), s.iter().all(|v| !v.is_negative_rat() && *v <= Rat::one()))?;
        Ok(self
            .pairs
            .iter()
            .zip(s)
            .map(|((c, c1), t)| c.scale_rat(&(Rat::one() - t)).add(&c1.scale_rat(t)))
            .collect())
    }

    fn check_point(&self, len: usize, inside: bool) -> Result<()> {
        if len != self.q() {
            return Err(Error::Dimension { expected: self.q(), found: len, what: "cube parameter".into() });
        }
        if !inside {
            return Err(Error::Invalid("parameter point outside [0,1]^q".into()));
        }
        Ok(())
    }

    fn gram_exact_at(&self, s: &[Rat]) -> Option<bool> {
        let b = self.b_of_s_exact(s).ok()?;
        self.space.gram_of_exact(&b).map(|g| g.is_negative_definite())
    }

    /// Negative definiteness of `Gram(B(s))` at a rational point; exact when possible.
    fn negative_at(&self, s: &[Rat], tol: f64) -> bool {
        match self.gram_exact_at(s) {
            Some(ok) => ok,
            None => {
                let sf: Vec<f64> = s.iter().map(rational::to_f64).collect();
                let g = GramModel::new(self).at(&sf);
                crate::quadspace::is_negative_definite(&g, tol)
            }
        }
    }

    /// Decides whether `span B(s)` is a negative `q`-plane for all `s ∈ [0,1]^q`.
    ///
    /// Grid vertices are scanned for violations first (checked exactly), then every
    /// grid cell is closed with a Lipschitz bound on the top eigenvalue, bisecting
    /// cells the bound cannot close.
    pub fn good_position(&self, opts: &CertifyOptions) -> PositionCertificate {
        let q = self.q();
        let tol = self.space.tol();
        if q == 0 {
            return PositionCertificate {
                status: CertificateStatus::Certified,
                witness: None,
                resolution: 0.0,
                margin: f64::INFINITY,
            };
        }
        let n = opts.grid.max(1) as usize;
        let model = GramModel::new(self);
        let scale = model.scale();
        let step = 1.0 / n as f64;

        let vertex_count = (n + 1).pow(q as u32);
        let witness = (0..vertex_count).into_par_iter().find_map_first(|idx| {
            let digits = mixed_radix(idx, n + 1, q);
            let sf: Vec<f64> = digits.iter().map(|&d| d as f64 / n as f64).collect();
            let lam = max_eigenvalue(&model.at(&sf));
            if lam < -1e-8 * scale {
                return None;
            }
            let s: Vec<Rat> = digits.iter().map(|&d| rat(d as i64, n as i64)).collect();
            (!self.negative_at(&s, tol)).then_some(s)
        });
        if let Some(w) = witness {
            return PositionCertificate {
                status: CertificateStatus::Refuted,
                witness: Some(w),
                resolution: step,
                margin: 0.0,
            };
        }

        let cell_count = n.pow(q as u32);
        let results: Vec<CellOutcome> = (0..cell_count)
            .into_par_iter()
            .map(|idx| {
                let digits = mixed_radix(idx, n, q);
                let center: Vec<Rat> = digits.iter().map(|&d| rat(2 * d as i64 + 1, 2 * n as i64)).collect();
                self.check_cell(&model, &center, &rat(1, 2 * n as i64), 0, opts.max_depth, scale, tol)
            })
            .collect();

        let mut margin = f64::INFINITY;
        let mut finest = step;
        let mut undecided = false;
        for r in results {
            match r {
                CellOutcome::Closed { margin: m, half_width } => {
                    margin = margin.min(m);
                    finest = finest.min(2.0 * half_width);
                }
                CellOutcome::Refuted(w) => {
                    let m = -max_eigenvalue(&model.at(&w.iter().map(rational::to_f64).collect::<Vec<_>>()));
                    return PositionCertificate {
                        status: CertificateStatus::Refuted,
                        witness: Some(w),
                        resolution: finest,
                        margin: m.min(0.0),
                    };
                }
                CellOutcome::Undecided { margin: m, half_width } => {
                    undecided = true;
                    margin = margin.min(m);
                    finest = finest.min(2.0 * half_width);
                }
            }
        }
        PositionCertificate {
            status: if undecided { CertificateStatus::Undecided } else { CertificateStatus::Certified },
            witness: None,
            resolution: finest,
            margin,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn check_cell(
        &self,
        model: &GramModel,
        center: &[Rat],
        half: &Rat,
        depth: u32,
        max_depth: u32,
        scale: f64,
        tol: f64,
    ) -> CellOutcome {
        let cf: Vec<f64> = center.iter().map(rational::to_f64).collect();
        let w = rational::to_f64(half);
        let lam = max_eigenvalue(&model.at(&cf));
        let bound = model.cell_bound(&cf, w);
        let slack = lam + bound + tol * scale;
        if slack < 0.0 {
            return CellOutcome::Closed { margin: -(lam + bound), half_width: w };
        }
        if lam >= -tol * scale && !self.negative_at(center, tol) {
            return CellOutcome::Refuted(center.to_vec());
        }
        if depth >= max_depth {
            return CellOutcome::Undecided { margin: -(lam + bound), half_width: w };
        }
        let q = center.len();
        let child_half = half / Rat::from_integer(2.into());
        let mut margin = f64::INFINITY;
        let mut half_width = w;
        let mut undecided = false;
        for corner in 0..(1usize << q) {
            let child: Vec<Rat> = center
                .iter()
                .enumerate()
                .map(|(i, c)| if corner >> i & 1 == 1 { c + &child_half } else { c - &child_half })
                .collect();
            match self.check_cell(model, &child, &child_half, depth + 1, max_depth, scale, tol) {
                CellOutcome::Closed { margin: m, half_width: hw } => {
                    margin = margin.min(m);
                    half_width = half_width.min(hw);
                }
                CellOutcome::Undecided { margin: m, half_width: hw } => {
                    undecided = true;
                    margin = margin.min(m);
                    half_width = half_width.min(hw);
                }
                refuted @ CellOutcome::Refuted(_) => return refuted,
            }
        }
        if undecided {
            CellOutcome::Undecided { margin, half_width }
        } else {
            CellOutcome::Closed { margin, half_width }
        }
    }

    /// The face collection `C[j]` (or `C[j']` when `primed`) in `C_j^⊥` (resp. `C_j'^⊥`).
    pub fn face(&self, j: usize, primed: bool) -> Result<Self> {
        let (c, c1) = self
            .pairs
            .get(j)
            .ok_or_else(|| Error::Invalid(format!("face index {j} out of range for q = {}", self.q())))?;
        let axis = if primed { c1 } else { c };
        let pairs = self
            .pairs
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, (a, b))| Ok((self.space.project_perp(a, axis)?, self.space.project_perp(b, axis)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.space.clone(), pairs)
    }

    /// `Φ□_q(x) = 2^{-q} ∏_j (sgn(x, C_j') - sgn(x, C_j))`, with `sgn(0) = 0`.
    pub fn phi(&self, x: &Vector) -> Rat {
        let p = product(self.pairs.iter().map(|(c, c1)| {
            sign_rat(self.space.sign_inner(x, c1) - self.space.sign_inner(x, c))
        }));
        p * pow2_inv(self.q())
    }

    /// `s(x)_j = (x,C_j) / ((x,C_j) - (x,C_j'))`; absent when `Φ□_q(x) = 0`.
    pub fn intersection_point(&self, x: &Vector) -> Option<IntersectionPoint> {
        if self.phi(x).is_zero() {
            return None;
        }
        let exact: Option<Vec<Rat>> = self
            .pairs
            .iter()
            .map(|(c, c1)| {
                let a = self.space.inner_exact(x, c)?;
                let b = self.space.inner_exact(x, c1)?;
                Some(&a / (&a - &b))
            })
            .collect();
        let coords = match &exact {
            Some(e) => e.iter().map(rational::to_f64).collect(),
            None => self
                .pairs
                .iter()
                .map(|(c, c1)| {
                    let a = self.space.inner_unchecked(x, c);
                    let b = self.space.inner_unchecked(x, c1);
                    a / (a - b)
                })
                .collect(),
        };
        Some(IntersectionPoint { exact, coords })
    }

    /// Weighted local intersection number `2^{-r} ∏_j sgn((x,C_j') - (x,C_j))` of
    /// `S(C)` with `D_x` at `s(x)`, where `r` counts the walls through `s(x)`.
    pub fn intersection_number(&self, x: &Vector) -> Result<Rat> {
        if self.phi(x).is_zero() {
            return Err(Error::Precondition("D_x does not meet S(C) (Φ = 0)".into()));
        }
        let mut walls = 0;
        let mut local = 1;
        for (c, c1) in &self.pairs {
            let sc = self.space.sign_inner(x, c);
            let sc1 = self.space.sign_inner(x, c1);
            if sc == 0 || sc1 == 0 {
                walls += 1;
            }
            let diff = match (self.space.inner_exact(x, c1), self.space.inner_exact(x, c)) {
                (Some(b), Some(a)) => rational::sign(&(b - a)),
                _ => {
                    let d = self.space.inner_unchecked(x, c1) - self.space.inner_unchecked(x, c);
                    if d > 0.0 {
                        1
                    } else if d < 0.0 {
                        -1
                    } else {
                        0
                    }
                }
            };
            local *= diff;
        }
        Ok(sign_rat(local) * pow2_inv(walls))
    }

    pub fn is_regular(&self, x: &Vector) -> bool {
        self.pairs.iter().all(|(c, c1)| self.space.sign_inner(x, c) != 0 && self.space.sign_inner(x, c1) != 0)
    }

    /// Sufficient condition for an embedded cube: the `2q` listed vectors are independent.
    pub fn very_good_position(&self) -> Tristate {
        let vectors: Vec<&Vector> = self.pairs.iter().flat_map(|(a, b)| [a, b]).collect();
        if vectors.len() > self.space.dim() {
            return Tristate::Unknown;
        }
        let exact: Option<Vec<Vec<Rat>>> = vectors.iter().map(|v| v.exact().map(<[Rat]>::to_vec)).collect();
        let independent = match exact {
            Some(rows) => rational::rank(&rows) == rows.len(),
            None => {
                let m = DMatrix::from_fn(vectors.len(), self.space.dim(), |i, j| vectors[i].coords()[j]);
                m.rank(1e-10 * m.amax().max(1.0)) == vectors.len()
            }
        };
        if independent {
            Tristate::True
        } else {
            Tristate::Unknown
        }
    }
}

enum CellOutcome {
    Closed { margin: f64, half_width: f64 },
    Undecided { margin: f64, half_width: f64 },
    Refuted(Vec<Rat>),
}

fn mixed_radix(mut idx: usize, base: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0; len];
    for d in digits.iter_mut().rev() {
        *d = idx % base;
        idx /= base;
    }
    digits
}

trait NegativeRat {
    fn is_negative_rat(&self) -> bool;
}

impl NegativeRat for Rat {
    fn is_negative_rat(&self) -> bool {
        rational::sign(self) < 0
    }
}

/// `Gram(B(s))_ij = (C_i,C_j) + s_i (D_i,C_j) + s_j (C_i,D_j) + s_i s_j (D_i,D_j)`
/// with `D_j = C_j' - C_j`.
struct GramModel {
    cc: DMatrix<f64>,
    cd: DMatrix<f64>,
    dd: DMatrix<f64>,
}

impl GramModel {
    fn new(cc: &CubicalCollection) -> Self {
        let space = &cc.space;
        let c: Vec<Vector> = cc.pairs.iter().map(|(a, _)| a.clone()).collect();
        let d: Vec<Vector> = cc.pairs.iter().map(|(a, b)| b.sub(a)).collect();
        let q = c.len();
        Self {
            cc: space.gram_of(&c),
            cd: DMatrix::from_fn(q, q, |i, j| space.inner_unchecked(&c[i], &d[j])),
            dd: space.gram_of(&d),
        }
    }

    fn scale(&self) -> f64 {
        let s = self.cc.amax() + 2.0 * self.cd.amax() + self.dd.amax();
        if s == 0.0 {
            1.0
        } else {
            s
        }
    }

    fn at(&self, s: &[f64]) -> DMatrix<f64> {
        let q = s.len();
        DMatrix::from_fn(q, q, |i, j| {
            self.cc[(i, j)] + s[i] * self.cd[(j, i)] + s[j] * self.cd[(i, j)] + s[i] * s[j] * self.dd[(i, j)]
        })
    }

    /// Frobenius bound on `Gram(B(s)) - Gram(B(c))` over the box `|s - c|_∞ ≤ w`.
    fn cell_bound(&self, c: &[f64], w: f64) -> f64 {
        let q = c.len();
        let mut sum = 0.0;
        for i in 0..q {
            for j in 0..q {
                let lin = w * (self.cd[(j, i)].abs() + self.cd[(i, j)].abs());
                let quad = w * (c[i].abs() + c[j].abs() + w) * self.dd[(i, j)].abs();
                let b = (lin + quad) * (1.0 + 1e-12);
                sum += b * b;
            }
        }
        sum.sqrt()
    }
}
