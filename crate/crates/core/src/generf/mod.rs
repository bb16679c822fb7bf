//! Generalized error functions `E_q(C; x)`.
//!
//! `E_q` is the Gaussian average of `sgn(C_1,y)···sgn(C_q,y)` over the negative
//! plane `z` spanned by `C`, centred at `pr_z x`. It depends on `x` and `C` only
//! through the Gram matrix `G = (C_i, C_k)` and the products `b_k = (x, C_k)`, and
//! the recursive evaluator works on that reduced data throughout.

mod oracle;

pub use oracle::{OracleEstimate, PlaneIntegralFrame};

use std::cell::RefCell;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{integrate, NeumaierSum, MAX_DEPTH};
use crate::quadspace::{BilinearSpace, Vector};

/// `E(u) = 2 ∫_0^u e^{-πt²} dt = erf(√π u)`.
pub fn erf_e(u: f64) -> f64 {
    libm::erf(std::f64::consts::PI.sqrt() * u)
}

/// `1 - E(u)` for `u ≥ 0`, without cancellation.
pub fn erfc_e(u: f64) -> f64 {
    libm::erfc(std::f64::consts::PI.sqrt() * u)
}

/// `sgn(C; x) = ∏_k sgn(x, C_k)`, decided exactly for rational input.
pub fn sgn_product(space: &BilinearSpace, c: &[Vector], x: &Vector) -> i32 {
    c.iter().map(|ck| space.sign_inner(x, ck)).product()
}

/// The `q = 1` primitive `½(E_1(C; x√2) - sgn(x, C))`.
pub fn psi0_primitive_q1(space: &BilinearSpace, c: &Vector, x: &Vector) -> Result<f64> {
    let cbar = space.normalize_negative(c)?;
    let u = space.inner(x, &cbar)?;
    let s = space.sign_inner(x, c) as f64;
    Ok(-0.5 * s * libm::erfc((2.0 * std::f64::consts::PI).sqrt() * u.abs()))
}

/// Evaluation parameters for `E_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorFunctionEvaluator {
    /// Absolute tolerance of the recursive evaluation.
    pub quad_tol: f64,
    /// Normalized inner products below this count as near-zero.
    pub reg_eps: f64,
    pub mc_samples: u64,
    pub rng_seed: u64,
    /// Largest `q` accepted.
    pub max_depth: usize,
}

impl Default for ErrorFunctionEvaluator {
    fn default() -> Self {
        Self { quad_tol: 1e-10, reg_eps: 1e-9, mc_samples: 1_000_000, rng_seed: 0x5eed, max_depth: 8 }
    }
}

/// Gram matrix and inner products of the face `C[j]` and `x_{⊥j}`:
/// `G'_ik = G_ik - G_ij G_jk / G_jj`, `b'_i = b_i - G_ij b_j / G_jj` for `i, k ≠ j`.
pub(crate) fn face_reduce(g: &DMatrix<f64>, b: &[f64], j: usize) -> (DMatrix<f64>, Vec<f64>) {
    let idx: Vec<usize> = (0..b.len()).filter(|&i| i != j).collect();
    let gjj = g[(j, j)];
    let gf = DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
        let (i, k) = (idx[r], idx[c]);
        g[(i, k)] - g[(i, j)] * g[(k, j)] / gjj
    });
    let bf = idx.iter().map(|&i| b[i] - g[(i, j)] * b[j] / gjj).collect();
    (gf, bf)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `ln erfc(y)` for `y ≥ 0`, continued asymptotically where `erfc` underflows.
pub(crate) fn ln_erfc(y: f64) -> f64 {
    if y < 26.0 {
        libm::erfc(y).ln()
    } else {
        let y2 = y * y;
        -y2 - (y * std::f64::consts::PI.sqrt()).ln() + (1.0 - 0.5 / y2 + 0.75 / (y2 * y2)).ln()
    }
}

/// Smallest `S > lo` on a fine grid with `w e^{κ-πS²}/(2πS) < tol`, a bound for
/// `∫_S^∞ w e^{κ-πs²} ds`.
fn tail_cutoff_scaled(lo: f64, kappa: f64, w: f64, tol: f64) -> f64 {
    let bound = |s: f64| (kappa - std::f64::consts::PI * s * s).exp() * w / (2.0 * std::f64::consts::PI * s);
    let mut s = lo.max(0.5);
    // jump near the root of κ - πS² = ln(tol/w), then walk
    let target = (kappa - (tol / w).ln()) / std::f64::consts::PI;
    if target > s * s {
        s = target.sqrt().max(s) * 0.9;
        s = s.max(lo.max(0.5));
    }
    while bound(s) >= tol {
        s += 0.125;
    }
    s
}

/// A signed family `Σ_I w_I · [S_I]` of sub-collections of a list of negative vectors;
/// bit `k` of a mask selects vector `k`.
#[derive(Clone, Debug)]
pub(crate) struct SignedFamily {
    gram: DMatrix<f64>,
    members: Vec<(i64, u32)>,
}

impl SignedFamily {
    pub(crate) fn new(gram: DMatrix<f64>, members: Vec<(i64, u32)>) -> Result<Self> {
        if gram.nrows() > 31 {
            return Err(Error::Invalid("too many vectors in a family".into()));
        }
        Ok(Self { gram, members })
    }

    /// `Σ_I w_I sgn(S_I; x)` from `b_k = (x, C_k)`.
    pub(crate) fn sign_sum(&self, b: &[f64]) -> i64 {
        sign_sum(&self.members, b)
    }
}

fn sign_sum(members: &[(i64, u32)], b: &[f64]) -> i64 {
    members
        .iter()
        .map(|&(w, mask)| {
            let mut s = w;
            for (k, &v) in b.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    s *= sign(v) as i64;
                }
            }
            s
        })
        .sum()
}

/// Members containing vector `a`, with `a` removed and indices above `a` shifted down;
/// equal masks are merged.
fn face_members(members: &[(i64, u32)], a: usize) -> Vec<(i64, u32)> {
    let low = (1u32 << a) - 1;
    let mut out: Vec<(i64, u32)> = Vec::new();
    for &(w, mask) in members {
        if mask >> a & 1 == 0 {
            continue;
        }
        let m = (mask & low) | ((mask >> (a + 1)) << a);
        match out.iter_mut().find(|e| e.1 == m) {
            Some(e) => e.0 += w,
            None => out.push((w, m)),
        }
    }
    out.retain(|e| e.0 != 0);
    out
}

impl ErrorFunctionEvaluator {
    pub fn validate(&self) -> Result<()> {
        if !(self.quad_tol > 0.0) {
            return Err(Error::Invalid("quad_tol must be positive".into()));
        }
        if self.mc_samples < 10_000 {
            return Err(Error::Invalid("mc_samples must be at least 10^4".into()));
        }
        if !(self.reg_eps >= 0.0) {
            return Err(Error::Invalid("reg_eps must be non-negative".into()));
        }
        Ok(())
    }

    fn reduce(&self, space: &BilinearSpace, c: &[Vector], x: &Vector) -> Result<(DMatrix<f64>, Vec<f64>)> {
        self.validate()?;
        if c.len() > self.max_depth {
            return Err(Error::Invalid(format!("q = {} exceeds max_depth = {}", c.len(), self.max_depth)));
        }
        for v in c.iter().chain(std::iter::once(x)) {
            if v.len() != space.dim() {
                return Err(Error::Dimension { expected: space.dim(), found: v.len(), what: "vector".into() });
            }
        }
        if !space.spans_negative_plane(c) {
            return Err(Error::NotNegativeDefinite("Gram matrix of C is not negative definite".into()));
        }
        let g = space.gram_of(c);
        let b = c.iter().map(|ck| space.inner_unchecked(x, ck)).collect();
        Ok((g, b))
    }

    /// `E_q(C; x)` by the inductive formula: `E_1` in closed form, and for `q ≥ 2`
    ///
    /// `E_q = sgn(C;x) - 2 Σ_j c_j ∫_1^∞ e^{-πt²c_j²} E_{q-1}(C[j]; t x_{⊥j}) dt`,
    /// `c_j = (x, C̄_j)`.
    pub fn eq_recursive(&self, space: &BilinearSpace, c: &[Vector], x: &Vector) -> Result<f64> {
        let (g, b) = self.reduce(space, c, x)?;
        self.eq_reduced(&g, &b)
    }

    /// `E_q` from the Gram matrix `g` of `C` (negative definite, unchecked) and `b_k = (x, C_k)`.
    pub fn eq_reduced(&self, g: &DMatrix<f64>, b: &[f64]) -> Result<f64> {
        self.eq_reduced_tol(g, b, self.quad_tol)
    }

    pub(crate) fn eq_reduced_tol(&self, g: &DMatrix<f64>, b: &[f64], tol: f64) -> Result<f64> {
        let q = b.len();
        match q {
            0 => return Ok(1.0),
            1 => return Ok(erf_e(b[0] / (-g[(0, 0)]).sqrt())),
            _ => {}
        }
        let family = SignedFamily::new(g.clone(), vec![(1, (1u32 << q) - 1)])?;
        let sgn = family.sign_sum(b) as f64;
        Ok(sgn + self.deviation(&family, b, 0.0, tol)?)
    }

    /// `e^κ Σ_I w_I (E(S_I; x) - sgn(S_I; x))` for the signed family, to absolute tolerance `tol`.
    pub(crate) fn deviation(&self, family: &SignedFamily, b: &[f64], kappa: f64, tol: f64) -> Result<f64> {
        let v = self.dev(&family.gram, &family.members, b, kappa, tol, true, true)?;
        if !v.is_finite() {
            return Err(Error::NonConvergence("error-function deviation overflowed".into()));
        }
        Ok(v)
    }

    #[allow(clippy::too_many_arguments)]
    fn dev(
        &self,
        g: &DMatrix<f64>,
        members: &[(i64, u32)],
        b: &[f64],
        kappa: f64,
        tol: f64,
        perturb: bool,
        parallel: bool,
    ) -> Result<f64> {
        let used: u32 = members.iter().fold(0, |acc, m| acc | m.1);
        if used == 0 {
            return Ok(0.0);
        }
        let n = b.len();
        let norms: Vec<f64> = (0..n).map(|k| (-g[(k, k)]).sqrt()).collect();
        let small: Vec<usize> =
            (0..n).filter(|&k| used >> k & 1 == 1 && (b[k] / norms[k]).abs() < self.reg_eps).collect();
        if perturb && small.len() >= 2 {
            // sign products are unstable here: average over x ± δw with w = Σ_{small} C̄_l
            let delta = 4.0 * self.reg_eps.max(f64::EPSILON);
            let dir: Vec<f64> = (0..n).map(|k| small.iter().map(|&l| g[(k, l)] / norms[l]).sum()).collect();
            let plus: Vec<f64> = (0..n).map(|k| b[k] + delta * dir[k]).collect();
            let minus: Vec<f64> = (0..n).map(|k| b[k] - delta * dir[k]).collect();
            let a = self.dev(g, members, &plus, kappa, tol, false, parallel)?;
            let m = self.dev(g, members, &minus, kappa, tol, false, parallel)?;
            let sgn_shift = 0.5 * (sign_sum(members, &plus) + sign_sum(members, &minus)) as f64
                - sign_sum(members, b) as f64;
            let shift = if sgn_shift == 0.0 { 0.0 } else { sgn_shift * kappa.exp() };
            return Ok(0.5 * (a + m) + shift);
        }
        let active: Vec<usize> = (0..n).filter(|&k| used >> k & 1 == 1).collect();
        let weight: f64 = members.iter().map(|m| m.0.unsigned_abs() as f64).sum();
        let part_tol = tol / (4.0 * active.len() as f64);
        let term = |a: usize| -> Result<f64> {
            let c = b[a] / norms[a];
            let ac = c.abs();
            if ac == 0.0 {
                return Ok(0.0);
            }
            let face = face_members(members, a);
            let (gf, bf) = face_reduce(g, b, a);
            let s_face = sign_sum(&face, &bf);
            let head = if s_face == 0 {
                0.0
            } else {
                s_face as f64 * 0.5 * (kappa + ln_erfc(std::f64::consts::PI.sqrt() * ac)).exp()
            };
            let face_used = face.iter().any(|m| m.1 != 0);
            let mut body = 0.0;
            if face_used {
                // |integrand| ≤ 2W e^{κ - πs²}; cut where the tail is below part_tol / 2
                let cutoff = tail_cutoff_scaled(ac, kappa, 2.0 * weight, part_tol / 2.0);
                if cutoff > ac {
                    let inner_tol = part_tol / (2.0 * (cutoff - ac).max(1.0));
                    let failure: RefCell<Option<Error>> = RefCell::new(None);
                    let integrand = |s: f64| {
                        let scaled: Vec<f64> = bf.iter().map(|v| v * s / ac).collect();
                        let k = kappa - std::f64::consts::PI * s * s;
                        match self.dev(&gf, &face, &scaled, k, inner_tol, true, false) {
                            Ok(e) => e,
                            Err(err) => {
                                failure.borrow_mut().get_or_insert(err);
                                0.0
                            }
                        }
                    };
                    let r = integrate(integrand, ac, cutoff, part_tol / 2.0, MAX_DEPTH);
                    if let Some(err) = failure.into_inner() {
                        return Err(err);
                    }
                    if !r.converged && r.error > 100.0 * part_tol {
                        return Err(Error::NonConvergence(format!(
                            "quadrature along vector {a} reached error {:.3e} (tolerance {part_tol:.3e})",
                            r.error
                        )));
                    }
                    body = r.value;
                }
            }
            Ok(-2.0 * sign(c) * (head + body))
        };
        let terms: Vec<f64> = if parallel && active.len() > 1 {
            active.par_iter().map(|&a| term(a)).collect::<Result<_>>()?
        } else {
            active.iter().map(|&a| term(a)).collect::<Result<_>>()?
        };
        Ok(terms.into_iter().collect::<NeumaierSum>().value())
    }

    /// Monte-Carlo estimate of the defining plane integral, with its standard error.
    pub fn eq_oracle(&self, space: &BilinearSpace, c: &[Vector], x: &Vector) -> Result<OracleEstimate> {
        self.reduce(space, c, x)?;
        let frame = PlaneIntegralFrame::new(space, c, x)?;
        Ok(frame.estimate(self.mc_samples, self.rng_seed))
    }

    /// Both sides of `d/dt E_q(C; tx)|_{t=1} = 2 Σ_j c_j e^{-πc_j²} E_{q-1}(C[j]; x_{⊥j})`:
    /// a central difference with step `h`, and the closed-form sum.
    pub fn radial_derivative_check(
        &self,
        space: &BilinearSpace,
        c: &[Vector],
        x: &Vector,
        h: f64,
    ) -> Result<(f64, f64)> {
        let (g, b) = self.reduce(space, c, x)?;
        if c.iter().any(|ck| space.sign_inner(x, ck) == 0) {
            return Err(Error::Precondition("x is not regular with respect to C".into()));
        }
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Invalid("step h must lie in (0, 1)".into()));
        }
        let tol = self.quad_tol.min(1e-12);
        let up: Vec<f64> = b.iter().map(|v| v * (1.0 + h)).collect();
        let down: Vec<f64> = b.iter().map(|v| v * (1.0 - h)).collect();
        let lhs = (self.eq_reduced_tol(&g, &up, tol)? - self.eq_reduced_tol(&g, &down, tol)?) / (2.0 * h);
        let mut rhs = NeumaierSum::new();
        for j in 0..b.len() {
            let cj = b[j] / (-g[(j, j)]).sqrt();
            let (gf, bf) = face_reduce(&g, &b, j);
            let inner = self.eq_reduced_tol(&gf, &bf, tol)?;
            rhs.add(2.0 * cj * (-std::f64::consts::PI * cj * cj).exp() * inner);
        }
        Ok((lhs, rhs.value()))
    }
}
