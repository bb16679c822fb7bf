use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::lattice::{phase, AffineLattice, Coset, EvenLattice, TauPoint};
use super::{check_compatible, quadratic_exact, reference_frame};
use crate::chains::{CertifiedCollection, Collection, CubicalCollection, SimplicialCollection};
use crate::error::{Error, Result};
use crate::generf::{ErrorFunctionEvaluator, SignedFamily};
use crate::numeric::ComplexSum;
use crate::quadspace::{BilinearSpace, NegativeFrame, Vector};
use crate::rational;

/// Controls for lattice sums.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaOptions {
    /// Absolute tolerance of the truncated sum.
    pub tol: f64,
    pub evaluator: ErrorFunctionEvaluator,
    /// Radius doublings allowed before reporting non-convergence.
    pub max_doublings: u32,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        Self { tol: 1e-10, evaluator: ErrorFunctionEvaluator::default(), max_doublings: 12 }
    }
}

impl ThetaOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Invalid(format!("tolerance {} must be positive", self.tol)));
        }
        self.evaluator.validate()
    }

    /// Per-term tolerance handed to the error-function evaluator.
    pub(crate) fn term_tol(&self) -> f64 {
        self.tol * 1e-3
    }

    pub(crate) fn with_tol(&self, tol: f64) -> Self {
        Self { tol, ..self.clone() }
    }
}

/// A truncated lattice sum at one `τ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaValue {
    pub value: Complex64,
    /// Majorant radius of the last shell.
    pub truncation_radius: f64,
    pub est_error: f64,
}

/// The alternating sum of error functions behind a completed term, as a signed
/// family over the listed vectors with its overall factor `(-1)^q 2^{-q}`.
#[derive(Clone, Debug)]
pub(crate) struct TermFamily {
    vectors: Vec<Vector>,
    family: SignedFamily,
    prefactor: f64,
}

fn inner(space: &BilinearSpace, x: &Vector, c: &Vector) -> Result<f64> {
    match space.inner_exact(x, c) {
        Some(r) => Ok(rational::to_f64(&r)),
        None => space.inner(x, c),
    }
}

pub(crate) fn quadratic(space: &BilinearSpace, x: &Vector) -> Result<f64> {
    match space.inner_exact(x, x) {
        Some(r) => Ok(0.5 * rational::to_f64(&r)),
        None => space.quadratic(x),
    }
}

fn alternating(q: usize) -> f64 {
    if q % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl TermFamily {
    /// Members `C^I` for `I ⊆ {1..q}`, weighted `(-1)^{|I|}`; vector `2j` is `C_j`, `2j+1` is `C_j'`.
    pub(crate) fn cubical(cc: &CubicalCollection) -> Result<Self> {
        let q = cc.q();
        let vectors: Vec<Vector> = cc.pairs().iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        let members = (0u32..1 << q)
            .map(|set| {
                let mask = (0..q).fold(0u32, |m, j| m | 1 << (2 * j + (set >> j & 1) as usize));
                (if set.count_ones() % 2 == 0 { 1 } else { -1 }, mask)
            })
            .collect();
        let gram = cc.space().gram_of(&vectors);
        Ok(Self { vectors, family: SignedFamily::new(gram, members)?, prefactor: alternating(q) * 0.5f64.powi(q as i32) })
    }

    /// Members `C^{(I)}` for odd `|I|`, all with weight one.
    pub(crate) fn simplicial(sc: &SimplicialCollection) -> Result<Self> {
        let n = sc.verts().len();
        let full = (1u32 << n) - 1;
        let members = (0u32..1 << n).filter(|i| i.count_ones() % 2 == 1).map(|i| (1, full & !i)).collect();
        let vectors = sc.verts().to_vec();
        let gram = sc.space().gram_of(&vectors);
        let q = sc.q();
        Ok(Self { vectors, family: SignedFamily::new(gram, members)?, prefactor: alternating(q) * 0.5f64.powi(q as i32) })
    }

    pub(crate) fn of(collection: &Collection) -> Result<Self> {
        match collection {
            Collection::Cubical(cc) => Self::cubical(cc),
            Collection::Simplicial(sc) => Self::simplicial(sc),
        }
    }

    pub(crate) fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// `e^κ (-1)^q 2^{-q} Σ_I w_I E(S_I; x√(2v))`, split as the limit `Σ w_I sgn(S_I; x)`
    /// plus the deviation, which stays accurate when `κ` is large.
    pub(crate) fn scaled_sum(
        &self,
        ev: &ErrorFunctionEvaluator,
        space: &BilinearSpace,
        x: &Vector,
        v: f64,
        kappa: f64,
        tol: f64,
    ) -> Result<f64> {
        let root = (2.0 * v).sqrt();
        let b = self.vectors.iter().map(|c| inner(space, x, c).map(|t| root * t)).collect::<Result<Vec<f64>>>()?;
        let limit = self.family.sign_sum(&b);
        let head = if limit == 0 { 0.0 } else { limit as f64 * kappa.exp() };
        let dev = ev.deviation(&self.family, &b, kappa, tol)?;
        Ok(self.prefactor * (head + dev))
    }

    /// The completed term at `x`, with `Q(x) = qx`.
    pub(crate) fn term(
        &self,
        ev: &ErrorFunctionEvaluator,
        space: &BilinearSpace,
        x: &Vector,
        qx: f64,
        tau: TauPoint,
        tol: f64,
    ) -> Result<Complex64> {
        let r = self.scaled_sum(ev, space, x, tau.v, -2.0 * PI * tau.v * qx, tol)?;
        Ok(Complex64::from_polar(r, phase(tau.u, qx)))
    }
}

/// `(-1)^q 2^{-q} Σ_I (-1)^{|I|} E_q(C^I; x√(2v)) q^{Q(x)}`.
pub fn completed_term_cubical(
    cc: &CubicalCollection,
    x: &Vector,
    tau: TauPoint,
    ev: &ErrorFunctionEvaluator,
) -> Result<Complex64> {
    let qx = quadratic(cc.space(), x)?;
    TermFamily::cubical(cc)?.term(ev, cc.space(), x, qx, tau, ev.quad_tol)
}

/// `(-1)^q 2^{-q} Σ_{|I| odd} E_{q+1-|I|}(C^{(I)}; x√(2v)) q^{Q(x)}`, with `E_0 = 1`.
pub fn completed_term_simplicial(
    sc: &SimplicialCollection,
    x: &Vector,
    tau: TauPoint,
    ev: &ErrorFunctionEvaluator,
) -> Result<Complex64> {
    let qx = quadratic(sc.space(), x)?;
    TermFamily::simplicial(sc)?.term(ev, sc.space(), x, qx, tau, ev.quad_tol)
}

/// Result of a shell-by-shell lattice sum.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ShellSum {
    pub value: Complex64,
    pub radius: f64,
    /// Absolute contribution of the last two shells.
    pub tail: f64,
    pub terms: usize,
}

/// Sums `term(x, (x,x)_M)` over the affine lattice in shells of `M`-radius
/// `R_0, 2R_0, 4R_0, ...` until two consecutive shells each contribute less than `tol`.
/// Terms are added in order of `(radius, coordinates)`.
pub(crate) fn shell_sum<F>(
    lat: &AffineLattice,
    maj: &DMatrix<f64>,
    v: f64,
    tol: f64,
    max_doublings: u32,
    term: F,
) -> Result<ShellSum>
where
    F: Fn(&Vector, f64) -> Result<Complex64> + Sync,
{
    let mut radius = ((1.0 / tol).ln().max(0.0) + 5.0) / (PI * v) + 1.0;
    let mut lower = f64::NEG_INFINITY;
    let mut total = ComplexSum::new();
    let mut terms = 0;
    let mut small = 0;
    let mut recent = [0.0f64; 2];
    for k in 0..=max_doublings {
        let mut pts: Vec<(Vec<i64>, f64)> = lat.enumerate(maj, radius)?.into_iter().filter(|p| p.1 > lower).collect();
        pts.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let values: Vec<Complex64> = pts.par_iter().map(|(n, m)| term(&lat.point(n), *m)).collect::<Result<_>>()?;
        let shell: f64 = values.iter().map(|z| z.norm()).sum();
        if !shell.is_finite() {
            return Err(Error::NonConvergence(format!("non-finite terms in the shell of radius {radius:.3}")));
        }
        values.into_iter().for_each(|z| total.add(z));
        terms += pts.len();
        recent = [recent[1], shell];
        small = if k > 0 && shell < tol { small + 1 } else { 0 };
        if small >= 2 {
            return Ok(ShellSum { value: total.value(), radius, tail: recent[0] + recent[1], terms });
        }
        lower = radius;
        radius *= 2.0;
    }
    Err(Error::NonConvergence(format!(
        "lattice sum still changing after {max_doublings} radius doublings (last shell {:.3e})",
        recent[1]
    )))
}

fn check_coset(lattice: &EvenLattice, coset: &Coset) -> Result<()> {
    // re-validates against this lattice, since cosets are not tied to one
    Coset::new(lattice, coset.mu().to_vec()).map(|_| ())
}

/// `I_μ(τ, C) = Σ_{x ∈ μ+L}` of the completed terms, truncated in majorant shells
/// around the reference plane of the collection.
pub fn completed_theta(
    lattice: &EvenLattice,
    coset: &Coset,
    collection: &CertifiedCollection,
    tau: TauPoint,
    opts: &ThetaOptions,
) -> Result<ThetaValue> {
    opts.validate()?;
    check_coset(lattice, coset)?;
    let collection = collection.collection();
    check_compatible(lattice, collection)?;
    let frame = reference_frame(collection)?;
    let maj = lattice.space().majorant_matrix(&frame)?;
    let family = TermFamily::of(collection)?;
    let space = lattice.space();
    let tol_term = opts.term_tol();
    let sum = shell_sum(&AffineLattice::coset(coset), &maj, tau.v, opts.tol, opts.max_doublings, |x, _| {
        let qx = quadratic_exact(lattice, x).map(|r| rational::to_f64(&r)).unwrap_or(0.0);
        family.term(&opts.evaluator, space, x, qx, tau, tol_term)
    })?;
    Ok(ThetaValue {
        value: sum.value,
        truncation_radius: sum.radius,
        est_error: sum.tail + sum.terms as f64 * tol_term * family.prefactor().abs(),
    })
}

/// `Σ_{x ∈ μ+L} e^{-2πvR(x,z)} q^{Q(x)} = Σ e^{-πv(x,x)_z} e^{2πiuQ(x)}`.
pub fn siegel_theta(
    lattice: &EvenLattice,
    coset: &Coset,
    frame: &NegativeFrame,
    tau: TauPoint,
    opts: &ThetaOptions,
) -> Result<ThetaValue> {
    opts.validate()?;
    check_coset(lattice, coset)?;
    let maj = lattice.space().majorant_matrix(frame)?;
    let sum = shell_sum(&AffineLattice::coset(coset), &maj, tau.v, opts.tol, opts.max_doublings, |x, m| {
        let qx = quadratic_exact(lattice, x).map(|r| rational::to_f64(&r)).unwrap_or(0.0);
        Ok(Complex64::from_polar((-PI * tau.v * m).exp(), phase(tau.u, qx)))
    })?;
    Ok(ThetaValue {
        value: sum.value,
        truncation_radius: sum.radius,
        est_error: sum.tail + sum.terms as f64 * 1e-15,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::CertifyOptions;
    use crate::generf::erf_e;
    use crate::rational::{rat, rat_int};

    fn basic_instance() -> (EvenLattice, Coset, CertifiedCollection) {
        let l = EvenLattice::diagonal(&[2, -4]).unwrap();
        let mu = Coset::new(&l, vec![rat_int(0), rat(1, 4)]).unwrap();
        let cc = CubicalCollection::new(
            l.space().clone(),
            vec![(Vector::from_i64(&[0, 1]), Vector::from_i64(&[1, 2]))],
        )
        .unwrap();
        (l, mu, Collection::Cubical(cc).into_certified(&CertifyOptions::default()).unwrap())
    }

    fn ev() -> ErrorFunctionEvaluator {
        ErrorFunctionEvaluator { quad_tol: 1e-12, ..Default::default() }
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn cubical_q1_is_difference_of_erf() {
        let space = BilinearSpace::diagonal(&[2, -4]).unwrap();
        let (c, c1) = (Vector::from_i64(&[0, 1]), Vector::from_i64(&[1, 2]));
        let cc = CubicalCollection::new(space.clone(), vec![(c.clone(), c1.clone())]).unwrap();
        let tau = TauPoint::new(0.3, 0.7).unwrap();
        for x in [[1.0, 0.25], [2.0, -0.75], [-1.0, 1.25], [3.0, 1.25]] {
            let xv = Vector::from_f64(&x);
            let root = (2.0 * tau.v).sqrt();
            let e = |cv: &Vector| {
                erf_e(root * space.inner(&xv, &space.normalize_negative(cv).unwrap()).unwrap())
            };
            let qx = space.quadratic(&xv).unwrap();
            let want = tau.q_pow(qx) * (0.5 * (e(&c1) - e(&c)));
            let got = completed_term_cubical(&cc, &xv, tau, &ev()).unwrap();
            assert!(close(got, want, 1e-12 * (1.0 + want.norm())), "{x:?}: {got} vs {want}");
        }
    }

    #[test]
    fn simplicial_q1_and_q2_forms() {
        let space = BilinearSpace::diagonal(&[2, -2]).unwrap();
        let (c0, c1) = (Vector::from_i64(&[0, 1]), Vector::from_i64(&[1, -2]));
        let sc = SimplicialCollection::new(space.clone(), vec![c0.clone(), c1.clone()]).unwrap();
        let tau = TauPoint::new(-0.2, 1.3).unwrap();
        let root = (2.0 * tau.v).sqrt();
        let x = Vector::from_f64(&[1.5, 0.4]);
        let e1 = |c: &Vector| erf_e(root * space.inner(&x, &space.normalize_negative(c).unwrap()).unwrap());
        let want = tau.q_pow(space.quadratic(&x).unwrap()) * (-0.5 * (e1(&c0) + e1(&c1)));
        let got = completed_term_simplicial(&sc, &x, tau, &ev()).unwrap();
        assert!(close(got, want, 1e-12), "{got} vs {want}");

        let tetra = BilinearSpace::from_i64_rows(&[vec![-4, 3, 3], vec![3, -4, 3], vec![3, 3, -4]]).unwrap();
        let a: Vec<Vector> = (0..3).map(|i| {
            let mut e = [0i64; 3];
            e[i] = 1;
            Vector::from_i64(&e)
        }).collect();
        let sc = SimplicialCollection::new(tetra.clone(), a.clone()).unwrap();
        let x = Vector::from_f64(&[0.4, -0.1, 0.9]);
        let xs = x.scale(root);
        let e2 = |i: usize, j: usize| ev().eq_recursive(&tetra, &[a[i].clone(), a[j].clone()], &xs).unwrap();
        let want = tau.q_pow(tetra.quadratic(&x).unwrap()) * (0.25 * (e2(1, 2) + e2(0, 2) + e2(0, 1) + 1.0));
        let got = completed_term_simplicial(&sc, &x, tau, &ev()).unwrap();
        assert!(close(got, want, 1e-10), "{got} vs {want}");
    }

    #[test]
    fn large_v_limit_is_phi() {
        let (l, _, cc) = basic_instance();
        let tau = TauPoint::new(0.1, 40.0).unwrap();
        let Collection::Cubical(c) = cc.collection() else { unreachable!() };
        for x in [[1, 1], [3, 1], [-2, -1], [5, 2]] {
            let xv = Vector::from_i64(&x);
            let qx = l.space().quadratic(&xv).unwrap();
            let phi = rational::to_f64(&c.phi(&xv));
            let got = completed_term_cubical(c, &xv, tau, &ev()).unwrap();
            let want = tau.q_pow(qx) * phi;
            assert!(close(got, want, 1e-12 * want.norm().max(1e-300)) || (phi == 0.0 && got.norm() < 1e-40), "{x:?}");
        }
    }

    #[test]
    fn point_cube_vanishes() {
        let space = BilinearSpace::diagonal(&[2, -4]).unwrap();
        let c = Vector::from_i64(&[1, 3]);
        let cc = CubicalCollection::new(space, vec![(c.clone(), c)]).unwrap();
        let tau = TauPoint::new(0.0, 1.0).unwrap();
        for x in [[0.0, 0.0], [1.0, 0.5], [-2.0, 0.3]] {
            assert_eq!(completed_term_cubical(&cc, &Vector::from_f64(&x), tau, &ev()).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn negative_norm_terms_match_direct_sum() {
        // q = 2 cube at a point with Q(x) < 0, where the direct E-sum is still accurate
        let space = BilinearSpace::diagonal(&[2, -2, -4]).unwrap();
        let pairs = vec![
            (Vector::from_i64(&[0, 1, 0]), Vector::from_i64(&[1, 2, 0])),
            (Vector::from_i64(&[0, 0, 1]), Vector::from_i64(&[1, 0, 2])),
        ];
        let cc = CubicalCollection::new(space.clone(), pairs.clone()).unwrap();
        let tau = TauPoint::new(0.25, 0.4).unwrap();
        let x = Vector::from_f64(&[0.5, 0.75, -0.25]);
        let qx = space.quadratic(&x).unwrap();
        assert!(qx < 0.0);
        let xs = x.scale((2.0 * tau.v).sqrt());
        let e = ErrorFunctionEvaluator { quad_tol: 1e-13, ..Default::default() };
        let mut sum = 0.0;
        for set in 0..4usize {
            let c: Vec<Vector> =
                (0..2).map(|j| if set >> j & 1 == 1 { pairs[j].1.clone() } else { pairs[j].0.clone() }).collect();
            let sign = if set.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * e.eq_recursive(&space, &c, &xs).unwrap();
        }
        let want = tau.q_pow(qx) * (0.25 * sum);
        let got = completed_term_cubical(&cc, &x, tau, &e).unwrap();
        assert!(close(got, want, 1e-9), "{got} vs {want}");
    }

    #[test]
    fn phase_and_parity_q1() {
        let (l, mu, cc) = basic_instance();
        let opts = ThetaOptions::default();
        let tau = TauPoint::new(0.15, 0.9).unwrap();
        let a = completed_theta(&l, &mu, &cc, tau, &opts).unwrap();
        let b = completed_theta(&l, &mu, &cc, TauPoint::new(1.15, 0.9).unwrap(), &opts).unwrap();
        let e = Complex64::from_polar(1.0, 2.0 * PI * 7.0 / 8.0);
        assert!(close(b.value, a.value * e, 2.0 * (a.est_error + b.est_error)), "{a:?} {b:?}");
        let n = completed_theta(&l, &mu.neg(), &cc, tau, &opts).unwrap();
        assert!(close(n.value, -a.value, 2.0 * (a.est_error + n.est_error)), "{a:?} {n:?}");
        assert!(a.value.norm() > 1e-3);
    }

    #[test]
    fn siegel_matches_box_sum() {
        let l = EvenLattice::diagonal(&[2, -4]).unwrap();
        let mu = Coset::new(&l, vec![rat(1, 2), rat(1, 4)]).unwrap();
        let frame = l.space().orthonormalize_negative(&[Vector::from_i64(&[1, 3])]).unwrap();
        let tau = TauPoint::new(0.37, 0.8).unwrap();
        let got = siegel_theta(&l, &mu, &frame, tau, &ThetaOptions::default()).unwrap();
        let mut want = ComplexSum::new();
        for a in -40..=40i64 {
            for b in -40..=40i64 {
                let x = mu.point(&[a, b]);
                let m = l.space().majorant_norm(&x, &frame).unwrap();
                let qx = l.space().quadratic(&x).unwrap();
                want.add(Complex64::from_polar((-PI * tau.v * m).exp(), 2.0 * PI * tau.u * qx));
            }
        }
        assert!(close(got.value, want.value(), 1e-10), "{:?} vs {}", got, want.value());
        let shifted = siegel_theta(&l, &mu, &frame, TauPoint::new(1.37, 0.8).unwrap(), &ThetaOptions::default()).unwrap();
        let e = Complex64::from_polar(1.0, 2.0 * PI * rational::to_f64(&mu.q_mod_one(&l)));
        assert!(close(shifted.value, got.value * e, 1e-12));
    }

    #[test]
    fn rejects_bad_input() {
        let (l, mu, cc) = basic_instance();
        let tau = TauPoint::new(0.0, 1.0).unwrap();
        let bad = ThetaOptions { tol: 0.0, ..Default::default() };
        assert!(completed_theta(&l, &mu, &cc, tau, &bad).is_err());
        let other = EvenLattice::diagonal(&[2, -2]).unwrap();
        assert!(completed_theta(&other, &Coset::zero(2), &cc, tau, &ThetaOptions::default()).is_err());
        let few = ThetaOptions { max_doublings: 0, ..Default::default() };
        assert!(matches!(completed_theta(&l, &mu, &cc, tau, &few), Err(Error::NonConvergence(_))));
    }
}
