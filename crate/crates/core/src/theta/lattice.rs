use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::quadspace::{BilinearSpace, NegativeFrame, Vector};
use crate::rational::{self, rat_int, Rat};

/// An even lattice `ℤ^m` with integral Gram matrix.
#[derive(Clone, Debug)]
pub struct EvenLattice {
    gram: Vec<Vec<i64>>,
    space: BilinearSpace,
}

impl EvenLattice {
    pub fn new(gram: Vec<Vec<i64>>) -> Result<Self> {
        for (i, row) in gram.iter().enumerate() {
            if row[i] % 2 != 0 {
                return Err(Error::Invalid(format!("lattice is not even: diagonal entry {i} is {}", row[i])));
            }
        }
        let space = BilinearSpace::from_i64_rows(&gram)?;
        Ok(Self { gram, space })
    }

    pub fn diagonal(entries: &[i64]) -> Result<Self> {
        let m = entries.len();
        Self::new((0..m).map(|i| (0..m).map(|j| if i == j { entries[i] } else { 0 }).collect()).collect())
    }

    pub fn rank(&self) -> usize {
        self.gram.len()
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn space(&self) -> &BilinearSpace {
        &self.space
    }

    /// `Q(x) = ½ (x, x)`, exactly.
    pub fn q_exact(&self, x: &[Rat]) -> Rat {
        self.space.gram().bilinear(x, x) / rat_int(2)
    }
}

/// A class `μ ∈ L∨/L`, stored by a rational representative.
#[derive(Clone, Debug, PartialEq)]
pub struct Coset {
    mu: Vec<Rat>,
}

impl Coset {
    /// Checks `(μ, x) ∈ ℤ` for all `x ∈ L`, i.e. `Gμ ∈ ℤ^m`.
    pub fn new(lattice: &EvenLattice, mu: Vec<Rat>) -> Result<Self> {
        if mu.len() != lattice.rank() {
            return Err(Error::Dimension { expected: lattice.rank(), found: mu.len(), what: "coset vector".into() });
        }
        let gm = lattice.space().gram().mul_vec(&mu);
        if gm.iter().any(|v| !v.is_integer()) {
            return Err(Error::Invalid("μ is not in the dual lattice".into()));
        }
        Ok(Self { mu })
    }

    pub fn zero(rank: usize) -> Self {
        Self { mu: vec![Rat::zero(); rank] }
    }

    pub fn mu(&self) -> &[Rat] {
        &self.mu
    }

    pub fn neg(&self) -> Self {
        Self { mu: self.mu.iter().map(|v| -v).collect() }
    }

    /// True when `μ ∈ L`, i.e. the class is zero.
    pub fn is_zero_class(&self) -> bool {
        self.mu.iter().all(Rat::is_integer)
    }

    /// `Q(μ) mod 1`, in `[0, 1)`.
    pub fn q_mod_one(&self, lattice: &EvenLattice) -> Rat {
        let q = lattice.q_exact(&self.mu);
        &q - q.floor()
    }

    /// The lattice vector `μ + n`.
    pub fn point(&self, n: &[i64]) -> Vector {
        Vector::from_rats(self.mu.iter().zip(n).map(|(m, &k)| m + rat_int(k)).collect())
    }
}

/// `τ = u + iv` in the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauPoint {
    pub u: f64,
    pub v: f64,
}

impl TauPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(v > 0.0) || !u.is_finite() || !v.is_finite() {
            return Err(Error::Invalid(format!("τ = {u} + {v}i is not in the upper half plane")));
        }
        Ok(Self { u, v })
    }

    /// `e(τ n) = e^{2πiun} e^{-2πvn}`.
    pub fn q_pow(&self, n: f64) -> Complex64 {
        Complex64::from_polar((-2.0 * std::f64::consts::PI * self.v * n).exp(), phase(self.u, n))
    }
}

/// `2π (u·n mod 1)`.
pub(crate) fn phase(u: f64, n: f64) -> f64 {
    let t = u * n;
    2.0 * std::f64::consts::PI * (t - t.floor())
}

/// The affine lattice `offset + Σ_i n_i basis_i`, `n ∈ ℤ^k`.
#[derive(Clone, Debug)]
pub struct AffineLattice {
    offset: Vec<Rat>,
    basis: Vec<Vec<Rat>>,
}

impl AffineLattice {
    pub fn new(offset: Vec<Rat>, basis: Vec<Vec<Rat>>) -> Result<Self> {
        if basis.iter().any(|b| b.len() != offset.len()) {
            return Err(Error::Invalid("affine lattice basis and offset lengths differ".into()));
        }
        if rational::rank(&basis) != basis.len() {
            return Err(Error::Invalid("affine lattice basis is not independent".into()));
        }
        Ok(Self { offset, basis })
    }

    pub fn coset(coset: &Coset) -> Self {
        let m = coset.mu().len();
        let basis = (0..m).map(|i| (0..m).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()).collect();
        Self { offset: coset.mu().to_vec(), basis }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn offset(&self) -> &[Rat] {
        &self.offset
    }

    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.basis
    }

    pub fn point(&self, n: &[i64]) -> Vector {
        let mut p = self.offset.clone();
        for (b, &k) in self.basis.iter().zip(n) {
            if k != 0 {
                let kr = rat_int(k);
                for (pi, bi) in p.iter_mut().zip(b) {
                    *pi += bi * &kr;
                }
            }
        }
        Vector::from_rats(p)
    }

    /// All `n` with `pᵀ M p ≤ radius` for `p = offset + B n`, in lexicographic order
    /// of `n`, each with its value `pᵀ M p`. `M` must be positive definite on the span.
    pub fn enumerate(&self, m: &DMatrix<f64>, radius: f64) -> Result<Vec<(Vec<i64>, f64)>> {
        if radius < 0.0 || !radius.is_finite() {
            return Err(Error::Invalid(format!("enumeration radius {radius} must be a non-negative number")));
        }
        let k = self.rank();
        let dim = self.offset.len();
        let b = DMatrix::from_fn(dim, k, |r, c| rational::to_f64(&self.basis[c][r]));
        let o = DVector::from_iterator(dim, self.offset.iter().map(rational::to_f64));
        let value = |n: &[i64]| {
            let p = &o + &b * DVector::from_iterator(k, n.iter().map(|&v| v as f64));
            p.dot(&(m * &p))
        };
        if k == 0 {
            let v = value(&[]);
            return Ok(if v <= radius * (1.0 + 1e-12) { vec![(vec![], v)] } else { vec![] });
        }
        let a = b.transpose() * m * &b;
        let a = (&a + a.transpose()) * 0.5;
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotNegativeDefinite("enumeration form is not positive definite".into()))?;
        // center c = -A^{-1} Bᵀ M o, so that value(n) = (n - c)ᵀ A (n - c) + const
        let rhs = -(b.transpose() * m * &o);
        let center = chol.solve(&rhs);
        let constant = o.dot(&(m * &o)) - center.dot(&(&a * &center));
        let budget = radius - constant;
        let slack = 1e-9 * (radius.abs() + constant.abs() + 1.0);
        let mut out = Vec::new();
        if budget + slack < 0.0 {
            return Ok(out);
        }
        let u = chol.l().transpose();
        let mut n = vec![0i64; k];
        fincke_pohst(&u, center.as_slice(), budget + slack, k, 0.0, &mut n, &mut |n| {
            let v = value(n);
            if v <= radius * (1.0 + 1e-12) + 1e-12 {
                out.push((n.to_vec(), v));
            }
        });
        out.sort_by(|x, y| x.0.cmp(&y.0));
        Ok(out)
    }
}

/// Recursive enumeration of `|U(n - c)|² ≤ budget` for upper-triangular `U`,
/// fixing coordinates from the last to the first.
fn fincke_pohst(
    u: &DMatrix<f64>,
    c: &[f64],
    budget: f64,
    level: usize,
    used: f64,
    n: &mut [i64],
    emit: &mut dyn FnMut(&[i64]),
) {
    if level == 0 {
        emit(n);
        return;
    }
    let i = level - 1;
    let k = c.len();
    let mut shift = 0.0;
    for j in (i + 1)..k {
        shift += u[(i, j)] * (n[j] as f64 - c[j]);
    }
    let uii = u[(i, i)];
    let mid = c[i] - shift / uii;
    let room = (budget - used).max(0.0).sqrt() / uii;
    let lo = (mid - room).ceil() as i64;
    let hi = (mid + room).floor() as i64;
    for v in lo..=hi {
        let t = uii * (v as f64 - c[i]) + shift;
        let next = used + t * t;
        if next <= budget {
            n[i] = v;
            fincke_pohst(u, c, budget, i, next, n, emit);
        }
    }
    n[i] = 0;
}

/// All `x ∈ μ + L` with majorant `(x, x)_z ≤ radius`, in lexicographic order.
pub fn enumerate_coset(
    lattice: &EvenLattice,
    coset: &Coset,
    frame: &NegativeFrame,
    radius: f64,
) -> Result<Vec<Vector>> {
    let m = lattice.space().majorant_matrix(frame)?;
    let pts = AffineLattice::coset(coset).enumerate(&m, radius)?;
    Ok(pts.into_iter().map(|(n, _)| coset.point(&n)).collect())
}
