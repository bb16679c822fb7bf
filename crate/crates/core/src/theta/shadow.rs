use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Signed, Zero};

use super::completed::{completed_theta, quadratic, shell_sum, TermFamily, ThetaOptions, ThetaValue};
use super::lattice::{phase, AffineLattice, Coset, EvenLattice, TauPoint};
use super::{check_compatible, quadratic_exact, reference_frame};
use crate::chains::{CertifiedCollection, Collection, CubicalCollection};
use crate::error::{Error, Result};
use crate::numeric::ComplexSum;
use crate::quadspace::{BilinearSpace, Vector};
use crate::rational::{self, rat_int, Rat, RatMatrix};

/// One boundary face of the cube: the vector `C` cut out, the sign of its term and
/// the completed-term family of the face collection in `C^⊥`.
struct Face {
    axis: Vector,
    norm2: Rat,
    sign: f64,
    family: TermFamily,
}

fn cubical(collection: &CertifiedCollection) -> Result<&CubicalCollection> {
    match collection.collection() {
        Collection::Cubical(cc) => Ok(cc),
        Collection::Simplicial(_) => Err(Error::Precondition("shadows are implemented for cubical collections".into())),
    }
}

/// Faces in listing order `C_1, C_1', C_2, ...`; primed faces enter with `+`.
fn faces(cc: &CubicalCollection) -> Result<Vec<Face>> {
    let space = cc.space();
    let mut out = Vec::with_capacity(2 * cc.q());
    for (j, (c, c1)) in cc.pairs().iter().enumerate() {
        for (axis, primed) in [(c, false), (c1, true)] {
            let norm2 = space
                .inner_exact(axis, axis)
                .ok_or_else(|| Error::Invalid("shadows need exact collection vectors".into()))?;
            if !norm2.is_negative() {
                return Err(Error::NotNegativeDefinite(format!("collection vector {} is not negative", j + 1)));
            }
            out.push(Face {
                axis: axis.clone(),
                norm2: -norm2,
                sign: if primed { 1.0 } else { -1.0 },
                family: TermFamily::cubical(&cc.face(j, primed)?)?,
            });
        }
    }
    Ok(out)
}

impl Face {
    /// `(x, C̄)` and `Q(x_⊥)` for lattice `x`.
    fn split(&self, space: &BilinearSpace, x: &Vector, qx: &Rat) -> Result<(f64, Rat)> {
        let xc = space
            .inner_exact(x, &self.axis)
            .ok_or_else(|| Error::Invalid("shadows need exact lattice vectors".into()))?;
        let q_perp = qx + &xc * &xc / (&self.norm2 * rat_int(2));
        Ok((rational::to_f64(&xc) / rational::to_f64(&self.norm2).sqrt(), q_perp))
    }
}

/// `-2iv² ∂/∂τ̄ I_μ(τ, C)` as the lattice sum over `x` of
///
/// `2^{-1/2} v^{3/2} Σ_j [a' e^{-2πva'²} q^{-a'²/2} I(τ, x_{⊥j'}, C[j']) - (same for C_j)]`
///
/// with `a = (x, C̄_j)` and `I(τ, x, C[j])` the completed term of the face collection.
pub fn shadow_value(
    lattice: &EvenLattice,
    coset: &Coset,
    collection: &CertifiedCollection,
    tau: TauPoint,
    opts: &ThetaOptions,
) -> Result<ThetaValue> {
    opts.validate()?;
    Coset::new(lattice, coset.mu().to_vec())?;
    check_compatible(lattice, collection.collection())?;
    let cc = cubical(collection)?;
    let faces = faces(cc)?;
    let frame = reference_frame(collection.collection())?;
    let maj = lattice.space().majorant_matrix(&frame)?;
    let space = lattice.space();
    let v = tau.v;
    let tol_term = opts.term_tol();
    let scale = std::f64::consts::FRAC_1_SQRT_2 * v.powf(1.5);
    let sum = shell_sum(&AffineLattice::coset(coset), &maj, v, opts.tol, opts.max_doublings, |x, _| {
        let qx = quadratic_exact(lattice, x).ok_or_else(|| Error::Invalid("inexact lattice vector".into()))?;
        let mut total = 0.0;
        for f in &faces {
            let (a, q_perp) = f.split(space, x, &qx)?;
            let kappa = -PI * v * a * a - 2.0 * PI * v * rational::to_f64(&q_perp);
            let inner = f.family.scaled_sum(&opts.evaluator, space, x, v, kappa, tol_term / (1.0 + a.abs()))?;
            total += f.sign * a * inner;
        }
        Ok(Complex64::from_polar(scale * total, phase(tau.u, rational::to_f64(&qx))))
    })?;
    Ok(ThetaValue {
        value: sum.value,
        truncation_radius: sum.radius,
        est_error: sum.tail + sum.terms as f64 * faces.len() as f64 * scale * tol_term,
    })
}

/// A central-difference lowering with its error budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoweringEstimate {
    pub value: Complex64,
    /// `noise + truncation`.
    pub est_error: f64,
    /// Propagated error of the four function values.
    pub noise: f64,
    /// `|D(h) - D(2h)| / 3`, when `v > 2h`.
    pub truncation: f64,
}

/// `-2iv² ∂/∂τ̄ f` at `τ` by central differences of step `h` in `u` and `v`.
pub fn lowering_fd_with<F>(f: F, tau: TauPoint, h: f64) -> Result<LoweringEstimate>
where
    F: Fn(TauPoint) -> Result<ThetaValue>,
{
    if !(h > 0.0) || tau.v - h <= 0.0 {
        return Err(Error::Invalid(format!("step {h} is not in (0, v = {})", tau.v)));
    }
    let v = tau.v;
    let step = |h: f64| -> Result<(Complex64, f64)> {
        let up = f(TauPoint::new(tau.u + h, v)?)?;
        let um = f(TauPoint::new(tau.u - h, v)?)?;
        let vp = f(TauPoint::new(tau.u, v + h)?)?;
        let vm = f(TauPoint::new(tau.u, v - h)?)?;
        let du = (up.value - um.value) / (2.0 * h);
        let dv = (vp.value - vm.value) / (2.0 * h);
        let dbar = 0.5 * (du + Complex64::i() * dv);
        let noise = v * v * (up.est_error + um.est_error + vp.est_error + vm.est_error) / (2.0 * h);
        Ok((Complex64::new(0.0, -2.0 * v * v) * dbar, noise))
    };
    let (value, noise) = step(h)?;
    let truncation = if v > 2.0 * h {
        let (coarse, coarse_noise) = step(2.0 * h)?;
        ((value - coarse).norm() - noise - coarse_noise).max(0.0) / 3.0
    } else {
        0.0
    };
    Ok(LoweringEstimate { value, est_error: noise + truncation, noise, truncation })
}

/// [`lowering_fd_with`] applied to `completed_theta`, evaluated at a tenth of `opts.tol`.
pub fn lowering_fd(
    lattice: &EvenLattice,
    coset: &Coset,
    collection: &CertifiedCollection,
    tau: TauPoint,
    h: f64,
    opts: &ThetaOptions,
) -> Result<LoweringEstimate> {
    let inner = opts.with_tol(opts.tol / 10.0);
    lowering_fd_with(|t| completed_theta(lattice, coset, collection, t, &inner), tau, h)
}

/// An orthogonal pair of sublattices `ℤ l0 ⊕ L1` of finite index in `L`, with `l0`
/// parallel to one collection vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splitting {
    pub l0: Vec<i64>,
    pub l1: Vec<Vec<i64>>,
}

impl Splitting {
    fn check(&self, lattice: &EvenLattice, axis: &Vector) -> Result<()> {
        let m = lattice.rank();
        if self.l0.len() != m || self.l1.len() + 1 != m || self.l1.iter().any(|b| b.len() != m) {
            return Err(Error::Invalid(format!("splitting must consist of {m} vectors of length {m}")));
        }
        let l0 = Vector::from_i64(&self.l0);
        for b in &self.l1 {
            if !lattice.space().inner_exact(&l0, &Vector::from_i64(b)).is_some_and(|v| v.is_zero()) {
                return Err(Error::Invalid("splitting is not orthogonal".into()));
            }
        }
        let axis = axis.exact().ok_or_else(|| Error::Invalid("collection vector is not exact".into()))?;
        if rational::rank(&[to_rats(&self.l0), axis.to_vec()]) != 1 || self.l0.iter().all(|&v| v == 0) {
            return Err(Error::Invalid("l0 is not parallel to the collection vector".into()));
        }
        if rational::rank(&self.rows()) != m {
            return Err(Error::Invalid("splitting does not have full rank".into()));
        }
        Ok(())
    }

    fn rows(&self) -> Vec<Vec<Rat>> {
        std::iter::once(&self.l0).chain(&self.l1).map(|r| to_rats(r)).collect()
    }

    /// Representatives of `L / (ℤ l0 ⊕ L1)`, in lexicographic order.
    fn coset_reps(&self) -> Result<Vec<Vec<i64>>> {
        let rows = RatMatrix::from_rows(self.rows())?;
        let m = rows.dim();
        let index = rows.det().abs();
        let d: i64 = index
            .to_integer()
            .try_into()
            .map_err(|_| Error::Invalid("splitting index is too large".into()))?;
        if (d as f64).powi(m as i32) > 4e6 {
            return Err(Error::Invalid(format!("splitting index {d} is too large to enumerate")));
        }
        // n lies in the sublattice iff n = c·rows with integral c
        let inv = rows.inverse().ok_or_else(|| Error::Invalid("singular splitting".into()))?;
        let mut seen: Vec<Vec<Rat>> = Vec::new();
        let mut reps = Vec::new();
        for code in 0..d.pow(m as u32) {
            let n: Vec<i64> = (0..m).rev().map(|i| code / d.pow(i as u32) % d).collect();
            let c: Vec<Rat> = (0..m)
                .map(|j| (0..m).map(|i| inv.get(i, j) * rat_int(n[i])).sum::<Rat>())
                .map(|v: Rat| &v - v.floor())
                .collect();
            if !seen.contains(&c) {
                seen.push(c);
                reps.push(n);
            }
            if reps.len() as i64 == d {
                break;
            }
        }
        Ok(reps)
    }
}

fn to_rats(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&k| rat_int(k)).collect()
}

/// The shadow through a splitting `L ⊇ ℤ l0 ⊕ L1` for each collection vector:
///
/// `2^{-1/2} v^{3/2} Σ_j ± Σ_r conj(θ_{μ0,r}(τ)) I_{μ1,r}(τ, C[j], L1)`,
///
/// with `θ_{μ0}(τ) = Σ_{x ∈ μ0 + ℤ l0} (x, C̄_j) q^{(x,C̄_j)²/2}`. Splittings are listed
/// in the order `C_1, C_1', C_2, ...`.
pub fn shadow_factored(
    lattice: &EvenLattice,
    coset: &Coset,
    collection: &CertifiedCollection,
    splittings: &[Splitting],
    tau: TauPoint,
    opts: &ThetaOptions,
) -> Result<ThetaValue> {
    opts.validate()?;
    Coset::new(lattice, coset.mu().to_vec())?;
    check_compatible(lattice, collection.collection())?;
    let cc = cubical(collection)?;
    let faces = faces(cc)?;
    if splittings.len() != faces.len() {
        return Err(Error::Invalid(format!("expected {} splittings, got {}", faces.len(), splittings.len())));
    }
    let space = lattice.space();
    let frame = reference_frame(collection.collection())?;
    let maj = space.majorant_matrix(&frame)?;
    let v = tau.v;
    let scale = std::f64::consts::FRAC_1_SQRT_2 * v.powf(1.5);
    let mut total = ComplexSum::new();
    let mut est_error = 0.0;
    for (face, split) in faces.iter().zip(splittings) {
        split.check(lattice, &face.axis)?;
        let reps = split.coset_reps()?;
        let tol = opts.tol / (2.0 * faces.len() as f64 * reps.len() as f64);
        let norm = rational::to_f64(&face.norm2).sqrt();
        let axis = face.axis.exact().expect("checked exact");
        let l0 = AffineLattice::new(vec![Rat::zero(); lattice.rank()], vec![to_rats(&split.l0)])?;
        for r in &reps {
            let y: Vec<Rat> = coset.mu().iter().zip(r).map(|(m, &k)| m + rat_int(k)).collect();
            let yv = Vector::from_rats(y.clone());
            let t = space.inner_exact(&yv, &face.axis).expect("exact") / -&face.norm2;
            let mu0: Vec<Rat> = axis.iter().map(|c| c * &t).collect();
            let mu1: Vec<Rat> = y.iter().zip(&mu0).map(|(a, b)| a - b).collect();
            let unary_lat = AffineLattice::new(mu0, l0.basis().to_vec())?;
            let unary = shell_sum(&unary_lat, &maj, v, tol, opts.max_doublings, |x, _| {
                let a = space.inner(x, &face.axis)? / norm;
                Ok(Complex64::from_polar(a * (-PI * v * a * a).exp(), phase(tau.u, 0.5 * a * a)))
            })?;
            let face_lat = AffineLattice::new(mu1, split.l1.iter().map(|b| to_rats(b)).collect())?;
            let tol_term = tol * 1e-3;
            let theta = shell_sum(&face_lat, &maj, v, tol, opts.max_doublings, |x, _| {
                let qx = quadratic(space, x)?;
                face.family.term(&opts.evaluator, space, x, qx, tau, tol_term)
            })?;
            let theta_err = theta.tail + theta.terms as f64 * tol_term;
            total.add(face.sign * scale * unary.value.conj() * theta.value);
            est_error += scale * (unary.tail * (theta.value.norm() + theta_err) + unary.value.norm() * theta_err);
        }
    }
    Ok(ThetaValue { value: total.value(), truncation_radius: f64::NAN, est_error })
}
