//! The ambient quadratic space `V` of signature `(p, q)`.
//!
//! Gram matrices are stored exactly; every sign decision that can be made in
//! rational arithmetic is made there. Analytic quantities (norms, projections onto
//! negative planes, majorants) are computed in doubles.

use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{self, Rat, RatMatrix};

/// Default tolerance for floating definiteness decisions, relative to matrix scale.
pub const DEFAULT_TOL: f64 = 1e-12;

/// A vector of `V` in the coordinates of the space's basis.
///
/// Vectors built from rational data keep their exact coordinates alongside the
/// floating ones, so that inner-product signs can be decided exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector {
    coords: DVector<f64>,
    exact: Option<Vec<Rat>>,
}

impl Vector {
    pub fn from_rats(coords: Vec<Rat>) -> Self {
        let f = DVector::from_iterator(coords.len(), coords.iter().map(rational::to_f64));
        Self { coords: f, exact: Some(coords) }
    }

    pub fn from_i64(coords: &[i64]) -> Self {
        Self::from_rats(coords.iter().map(|&c| rational::rat_int(c)).collect())
    }

    pub fn from_f64(coords: &[f64]) -> Self {
        Self { coords: DVector::from_column_slice(coords), exact: None }
    }

    pub fn from_dvector(coords: DVector<f64>) -> Self {
        Self { coords, exact: None }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_rats(vec![Rat::zero(); dim])
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn exact(&self) -> Option<&[Rat]> {
        self.exact.as_deref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(e) => e.iter().all(Zero::is_zero),
            None => self.coords.iter().all(|&c| c == 0.0),
        }
    }

    pub fn scale_rat(&self, s: &Rat) -> Self {
        match &self.exact {
            Some(e) => Self::from_rats(e.iter().map(|c| c * s).collect()),
            None => Self::from_dvector(&self.coords * rational::to_f64(s)),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_dvector(&self.coords * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Self::from_rats(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => Self::from_dvector(&self.coords + &other.coords),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => Self::from_rats(a.iter().zip(b).map(|(x, y)| x - y).collect()),
            _ => Self::from_dvector(&self.coords - &other.coords),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale_rat(&rational::rat_int(-1))
    }

    /// Drops the exact representation (used when a computation must be floating).
    pub fn to_float(&self) -> Self {
        Self::from_dvector(self.coords.clone())
    }
}

/// The ambient inner-product space: exact Gram matrix, signature and tolerance policy.
#[derive(Clone, Debug)]
pub struct BilinearSpace {
    gram: RatMatrix,
    gram_f: DMatrix<f64>,
    signature: (usize, usize),
    tol: f64,
}

impl BilinearSpace {
    /// Builds an indefinite, non-degenerate space from an exact Gram matrix.
    pub fn new(gram: RatMatrix) -> Result<Self> {
        if gram.dim() == 0 {
            return Err(Error::Invalid("empty Gram matrix".into()));
        }
        if !gram.is_symmetric() {
            return Err(Error::Invalid("Gram matrix is not symmetric".into()));
        }
        let (p, q, z) = gram.inertia();
        if z > 0 {
            return Err(Error::Invalid(format!("Gram matrix is degenerate (signature ({p},{q}), {z} zero)")));
        }
        if p == 0 || q == 0 {
            return Err(Error::Invalid(format!("signature ({p},{q}) is not indefinite")));
        }
        let gram_f = gram.to_f64();
        Ok(Self { gram, gram_f, signature: (p, q), tol: DEFAULT_TOL })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(RatMatrix::from_i64_rows(rows)?)
    }

    /// Diagonal space `diag(d_1, ..., d_m)`.
    pub fn diagonal(entries: &[i64]) -> Result<Self> {
        let m = entries.len();
        let rows: Vec<Vec<i64>> =
            (0..m).map(|i| (0..m).map(|j| if i == j { entries[i] } else { 0 }).collect()).collect();
        Self::from_i64_rows(&rows)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.gram.dim()
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    /// Number of negative directions, the `q` of the signature.
    pub fn neg_index(&self) -> usize {
        self.signature.1
    }

    pub fn gram(&self) -> &RatMatrix {
        &self.gram
    }

    pub fn gram_f64(&self) -> &DMatrix<f64> {
        &self.gram_f
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn check_dim(&self, v: &Vector, what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), found: v.len(), what: what.to_string() });
        }
        Ok(())
    }

    /// `(x, y) = xᵀ G y`.
    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_dim(x, "x")?;
        self.check_dim(y, "y")?;
        Ok(self.inner_unchecked(x, y))
    }

    pub(crate) fn inner_unchecked(&self, x: &Vector, y: &Vector) -> f64 {
        if let (Some(a), Some(b)) = (x.exact(), y.exact()) {
            return rational::to_f64(&self.gram.bilinear(a, b));
        }
        x.coords().dot(&(&self.gram_f * y.coords()))
    }

    /// Exact inner product, available when both vectors are rational.
    pub fn inner_exact(&self, x: &Vector, y: &Vector) -> Option<Rat> {
        match (x.exact(), y.exact()) {
            (Some(a), Some(b)) if a.len() == self.dim() && b.len() == self.dim() => Some(self.gram.bilinear(a, b)),
            _ => None,
        }
    }

    /// `Q(x) = (x, x) / 2`.
    pub fn quadratic(&self, x: &Vector) -> Result<f64> {
        Ok(0.5 * self.inner(x, x)?)
    }

    /// Sign of `(x, y)`, exact for rational inputs; otherwise values within
    /// `tol · |x|·|y|·|G|` of zero count as zero.
    pub fn sign_inner(&self, x: &Vector, y: &Vector) -> i32 {
        if let Some(v) = self.inner_exact(x, y) {
            return rational::sign(&v);
        }
        let v = self.inner_unchecked(x, y);
        let scale = self.gram_f.amax().max(1.0) * x.coords().amax().max(f64::MIN_POSITIVE) * y.coords().amax().max(f64::MIN_POSITIVE);
        if v.abs() <= self.tol * scale {
            0
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    }

    /// `x_{⊥y} = x - (x,y)/(y,y) · y`.
    pub fn project_perp(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_dim(x, "x")?;
        self.check_dim(y, "y")?;
        if let (Some(xy), Some(yy)) = (self.inner_exact(x, y), self.inner_exact(y, y)) {
            if yy.is_zero() {
                return Err(Error::Isotropic("cannot project perpendicular to an isotropic vector".into()));
            }
            return Ok(x.sub(&y.scale_rat(&(xy / yy))));
        }
        let yy = self.inner_unchecked(y, y);
        if yy.abs() <= self.tol * self.gram_f.amax().max(1.0) * y.coords().norm_squared() {
            return Err(Error::Isotropic("cannot project perpendicular to an isotropic vector".into()));
        }
        let xy = self.inner_unchecked(x, y);
        Ok(Vector::from_dvector(x.coords() - y.coords() * (xy / yy)))
    }

    /// `C̄ = C |(C,C)|^{-1/2}` for a negative vector `C`.
    pub fn normalize_negative(&self, c: &Vector) -> Result<Vector> {
        self.check_dim(c, "C")?;
        let negative = match self.inner_exact(c, c) {
            Some(v) => v.is_negative(),
            None => self.inner_unchecked(c, c) < 0.0,
        };
        if !negative {
            return Err(Error::NotNegativeDefinite("vector does not have negative norm".into()));
        }
        let n = self.inner_unchecked(c, c);
        Ok(c.scale(1.0 / (-n).sqrt()))
    }

    /// Gram matrix of a list of vectors in doubles.
    pub fn gram_of(&self, vectors: &[Vector]) -> DMatrix<f64> {
        let k = vectors.len();
        DMatrix::from_fn(k, k, |i, j| self.inner_unchecked(&vectors[i], &vectors[j]))
    }

    /// Exact Gram matrix, when every vector is rational.
    pub fn gram_of_exact(&self, vectors: &[Vector]) -> Option<RatMatrix> {
        let rows: Option<Vec<Vec<Rat>>> = vectors.iter().map(|v| v.exact().map(<[Rat]>::to_vec)).collect();
        Some(self.gram.gram_of(&rows?))
    }

    /// Negative-definiteness of the span of `vectors`: exact when possible.
    pub fn spans_negative_plane(&self, vectors: &[Vector]) -> bool {
        if vectors.is_empty() {
            return true;
        }
        match self.gram_of_exact(vectors) {
            Some(g) => g.is_negative_definite(),
            None => is_negative_definite(&self.gram_of(vectors), self.tol),
        }
    }

    /// Gram–Schmidt for a negative plane: returns an oriented frame with
    /// `(ζ_i, ζ_j) = -δ_ij` and an upper triangular, positive-diagonal change of basis.
    pub fn orthonormalize_negative(&self, basis: &[Vector]) -> Result<NegativeFrame> {
        for b in basis {
            self.check_dim(b, "frame vector")?;
        }
        if !self.spans_negative_plane(basis) {
            return Err(Error::NotNegativeDefinite("frame Gram matrix is not negative definite".into()));
        }
        let mut ortho: Vec<Vector> = Vec::with_capacity(basis.len());
        for b in basis {
            let mut w = b.coords().clone();
            // two passes of modified Gram-Schmidt for stability
            for _ in 0..2 {
                for z in &ortho {
                    let c = Vector::from_dvector(w.clone());
                    let bz = self.inner_unchecked(&c, z);
                    // (ζ,ζ) = -1, so the ζ-component of w is -(w,ζ) ζ
                    w += z.coords() * bz;
                }
            }
            let wv = Vector::from_dvector(w);
            let n = self.inner_unchecked(&wv, &wv);
            if n >= 0.0 {
                return Err(Error::NotNegativeDefinite("Gram–Schmidt produced a non-negative vector".into()));
            }
            ortho.push(wv.scale(1.0 / (-n).sqrt()));
        }
        Ok(NegativeFrame { basis: basis.to_vec(), ortho })
    }

    /// Majorant `(x,x)_z = (x,x) + 2R(x,z)` with `R(x,z) = -(pr_z x, pr_z x)`.
    pub fn majorant_norm(&self, x: &Vector, frame: &NegativeFrame) -> Result<f64> {
        self.check_dim(x, "x")?;
        if frame.dim() != self.neg_index() {
            return Err(Error::Precondition(format!(
                "majorant needs a maximal negative plane (dimension {}), got {}",
                self.neg_index(),
                frame.dim()
            )));
        }
        let xx = self.inner_unchecked(x, x);
        let r: f64 = frame.ortho.iter().map(|z| self.inner_unchecked(x, z).powi(2)).sum();
        Ok(xx + 2.0 * r)
    }

    /// Matrix `M` of the majorant, `(x,x)_z = xᵀ M x`.
    pub fn majorant_matrix(&self, frame: &NegativeFrame) -> Result<DMatrix<f64>> {
        if frame.dim() != self.neg_index() {
            return Err(Error::Precondition("majorant needs a maximal negative plane".into()));
        }
        let mut m = self.gram_f.clone();
        for z in &frame.ortho {
            let gz = &self.gram_f * z.coords();
            m += &gz * gz.transpose() * 2.0;
        }
        Ok((&m + m.transpose()) * 0.5)
    }
}

/// An oriented orthonormal frame of a negative `k`-plane.
#[derive(Clone, Debug)]
pub struct NegativeFrame {
    basis: Vec<Vector>,
    ortho: Vec<Vector>,
}

impl NegativeFrame {
    pub fn dim(&self) -> usize {
        self.ortho.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn ortho(&self) -> &[Vector] {
        &self.ortho
    }

    /// Sign of the determinant of the change of basis from `vectors` (spanning the
    /// same plane) to this frame: `+1` when they define the same orientation.
    pub fn orientation_of(&self, space: &BilinearSpace, vectors: &[Vector]) -> i32 {
        let k = self.dim();
        if vectors.len() != k {
            return 0;
        }
        // coefficient of v_i along ζ_j is -(v_i, ζ_j)
        let m = DMatrix::from_fn(k, k, |i, j| -space.inner_unchecked(&vectors[i], &self.ortho[j]));
        let d = m.determinant();
        if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        }
    }

    /// Largest `|(ζ_i, ζ_j) + δ_ij|`.
    pub fn orthonormality_residual(&self, space: &BilinearSpace) -> f64 {
        let g = space.gram_of(&self.ortho);
        let k = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { -1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// True iff every eigenvalue of the symmetric matrix `m` is `< -tol·scale`,
/// `scale = max |m_ij|` (1 for the zero matrix).
pub fn is_negative_definite(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let scale = m.amax();
    let scale = if scale == 0.0 { 1.0 } else { scale };
    max_eigenvalue(m) < -tol * scale
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Floating inertia, for comparison with the exact computation.
pub fn float_inertia(m: &DMatrix<f64>, tol: f64) -> (usize, usize, usize) {
    let scale = m.amax().max(1.0);
    let sym = (m + m.transpose()) * 0.5;
    let ev = sym.symmetric_eigen().eigenvalues;
    let pos = ev.iter().filter(|&&e| e > tol * scale).count();
    let neg = ev.iter().filter(|&&e| e < -tol * scale).count();
    (pos, neg, ev.len() - pos - neg)
}
