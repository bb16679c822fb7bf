//! Built-in identity suites: each runs a fixed family of instances and reports
//! the worst deviation against its tolerance.

pub mod instances;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chains::{odd_subset_phi, simplicial_phi_from_signs};
use crate::error::{Error, Result};
use crate::generf::{sgn_product, ErrorFunctionEvaluator};
use crate::quadspace::{BilinearSpace, Vector};
use crate::rational;

use instances::{random_negative_collection, random_regular_point, random_space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// `E_2(A_1+A_2, A_1) + E_2(A_1+A_2, A_2) = E_2(A_1, A_2) + 1`.
    SumIdentity,
    /// `d/dt E_q(C; tx)` against the face sum.
    RadialDerivative,
    /// `Φ△_q` against its odd-subset form on every sign vector, `q ≤ 4`.
    SimplicialPhi,
    /// `E_q(C; tx) → sgn(C; x)`.
    BoundaryLimit,
    /// Recursive evaluator against the Monte-Carlo plane integral.
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::SumIdentity, Suite::RadialDerivative, Suite::SimplicialPhi, Suite::BoundaryLimit, Suite::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SumIdentity => "sum-identity",
            Suite::RadialDerivative => "radial-derivative",
            Suite::SimplicialPhi => "simplicial-phi",
            Suite::BoundaryLimit => "boundary-limit",
            Suite::Oracle => "oracle",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::SumIdentity => 1e-8,
            Suite::RadialDerivative => 1e-6,
            Suite::SimplicialPhi => 0.0,
            Suite::BoundaryLimit => 1e-7,
            Suite::Oracle => 1e-6,
        }
    }

    /// Whether the outcome depends on the Monte-Carlo seed.
    pub fn uses_seed(self) -> bool {
        self == Suite::Oracle
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Replaces the suite's default tolerance.
    pub tol: Option<f64>,
    /// Carries `mc_samples` and `rng_seed` for the oracle suite.
    pub evaluator: ErrorFunctionEvaluator,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { tol: None, evaluator: ErrorFunctionEvaluator { quad_tol: 1e-12, ..Default::default() } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

/// Instances come from a fixed stream per suite, so only the oracle suite reacts
/// to the seed.
pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    opts.evaluator.validate()?;
    let tolerance = opts.tol.unwrap_or(suite.default_tolerance());
    if !(tolerance >= 0.0) {
        return Err(Error::Invalid(format!("tolerance {tolerance} must be non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1dea + suite as u64);
    let ev = &opts.evaluator;
    // (error, allowed) per case
    let cases: Vec<(f64, f64)> = match suite {
        Suite::SumIdentity => sum_identity(&mut rng, ev, tolerance)?,
        Suite::RadialDerivative => radial_derivative(&mut rng, ev, tolerance)?,
        Suite::SimplicialPhi => simplicial_phi(),
        Suite::BoundaryLimit => boundary_limit(&mut rng, ev, tolerance)?,
        Suite::Oracle => oracle(&mut rng, ev, tolerance)?,
    };
    let failures = cases.iter().filter(|(e, allowed)| !(e <= allowed)).count();
    let max_error = cases.iter().map(|c| c.0).fold(0.0, f64::max);
    Ok(SuiteReport { suite, cases: cases.len(), failures, max_error, tolerance })
}

pub fn run_all(opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    Suite::ALL.into_iter().map(|s| run_suite(s, opts)).collect()
}

fn sum_identity<R: Rng>(rng: &mut R, ev: &ErrorFunctionEvaluator, tol: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for _ in 0..25 {
        let space = random_space(rng, 1, 2);
        let a = random_negative_collection(rng, &space, 2);
        let s = a[0].add(&a[1]);
        // x in the span of A_1, A_2
        let x = a[0].scale(rng.random_range(-1.5..1.5)).add(&a[1].scale(rng.random_range(-1.5..1.5)));
        let lhs = ev.eq_recursive(&space, &[s.clone(), a[0].clone()], &x)?
            + ev.eq_recursive(&space, &[s, a[1].clone()], &x)?;
        let rhs = ev.eq_recursive(&space, &a, &x)? + 1.0;
        out.push(((lhs - rhs).abs(), tol));
    }
    Ok(out)
}

fn radial_derivative<R: Rng>(rng: &mut R, ev: &ErrorFunctionEvaluator, tol: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for i in 0..25 {
        let q = 2 + i % 2;
        let space = random_space(rng, 1, q);
        let c = random_negative_collection(rng, &space, q);
        let x = random_regular_point(rng, &space, &c, 0.05);
        let (lhs, rhs) = ev.radial_derivative_check(&space, &c, &x, 1e-4)?;
        out.push(((lhs - rhs).abs(), tol));
    }
    Ok(out)
}

fn simplicial_phi() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for q in 0..=4u32 {
        let n = q as usize + 1;
        for code in 0..3usize.pow(n as u32) {
            let signs: Vec<i32> = (0..n).map(|i| (code / 3usize.pow(i as u32) % 3) as i32 - 1).collect();
            let d = simplicial_phi_from_signs(&signs) - odd_subset_phi(&signs);
            out.push((rational::to_f64(&d).abs(), 0.0));
        }
    }
    out
}

fn boundary_limit<R: Rng>(rng: &mut R, ev: &ErrorFunctionEvaluator, tol: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for i in 0..50 {
        let q = 1 + i % 3;
        let space = random_space(rng, 2, q);
        let c = random_negative_collection(rng, &space, q);
        let x = random_regular_point(rng, &space, &c, 0.05);
        let t = scale_to_boundary(&space, &c, &x, 6.0)?;
        let e = ev.eq_recursive(&space, &c, &x.scale(t))?;
        out.push(((e - sgn_product(&space, &c, &x) as f64).abs(), tol));
    }
    Ok(out)
}

/// Smallest `t` with `min_k |(tx, C̄_k)| ≥ target`.
pub fn scale_to_boundary(space: &BilinearSpace, c: &[Vector], x: &Vector, target: f64) -> Result<f64> {
    let mut m = f64::INFINITY;
    for ck in c {
        m = m.min(space.inner(x, &space.normalize_negative(ck)?)?.abs());
    }
    if !(m > 0.0) {
        return Err(Error::Precondition("x is not regular".into()));
    }
    Ok(target / m)
}

fn oracle<R: Rng>(rng: &mut R, ev: &ErrorFunctionEvaluator, tol: f64) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for i in 0..100 {
        let q = 2 + i % 2;
        let space = random_space(rng, 1, q);
        let c = random_negative_collection(rng, &space, q);
        let x = random_regular_point(rng, &space, &c, 0.05);
        let rec = ev.eq_recursive(&space, &c, &x)?;
        let est = ev.eq_oracle(&space, &c, &x)?;
        out.push(((rec - est.value).abs(), tol.max(4.0 * est.stderr)));
    }
    Ok(out)
}
