use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::Result;
use crate::quadspace::{BilinearSpace, NegativeFrame, Vector};

const CHUNK: u64 = 1 << 16;

/// Coordinates on `z = span(C)` in which the defining integral becomes a standard
/// Gaussian average: `y = Σ u_i ζ_i`, `(C_k, y) = Σ_i ℓ_ki u_i`, and the weight is
/// `e^{-π|u - a|²}` with `a_i = -(x, ζ_i)`.
#[derive(Clone, Debug)]
pub struct PlaneIntegralFrame {
    frame: NegativeFrame,
    shift: Vec<f64>,
    linforms: DMatrix<f64>,
}

/// Mean and CLT standard error of a Monte-Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl PlaneIntegralFrame {
    pub fn new(space: &BilinearSpace, c: &[Vector], x: &Vector) -> Result<Self> {
        let frame = space.orthonormalize_negative(c)?;
        let shift = frame.ortho().iter().map(|z| space.inner(x, z).map(|v| -v)).collect::<Result<Vec<_>>>()?;
        let k = c.len();
        let linforms = DMatrix::from_fn(k, k, |r, i| space.inner_unchecked(&c[r], &frame.ortho()[i]));
        Ok(Self { frame, shift, linforms })
    }

    pub fn frame(&self) -> &NegativeFrame {
        &self.frame
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn linforms(&self) -> &DMatrix<f64> {
        &self.linforms
    }

    /// `∏_k sgn(ℓ_k · u)`.
    pub fn integrand(&self, u: &[f64]) -> i32 {
        let mut s = 1;
        for r in 0..self.linforms.nrows() {
            let v: f64 = (0..u.len()).map(|i| self.linforms[(r, i)] * u[i]).sum();
            if v == 0.0 {
                return 0;
            }
            if v < 0.0 {
                s = -s;
            }
        }
        s
    }

    /// Averages the integrand over `samples` draws from `N(a, 1/(2π))`.
    ///
    /// Chunk `i` uses its own ChaCha stream, and integer counts are combined, so the
    /// result depends only on `(samples, seed)`.
    pub fn estimate(&self, samples: u64, seed: u64) -> OracleEstimate {
        let sigma = (2.0 * std::f64::consts::PI).sqrt().recip();
        let k = self.shift.len();
        let chunks = samples.div_ceil(CHUNK);
        let (sum, nonzero): (i64, u64) = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk);
                let n = CHUNK.min(samples - chunk * CHUNK);
                let mut u = vec![0.0; k];
                let mut sum = 0i64;
                let mut nonzero = 0u64;
                for _ in 0..n {
                    for (ui, ai) in u.iter_mut().zip(&self.shift) {
                        let z: f64 = rng.sample(StandardNormal);
                        *ui = ai + sigma * z;
                    }
                    let v = self.integrand(&u);
                    sum += i64::from(v);
                    nonzero += u64::from(v != 0);
                }
                (sum, nonzero)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let n = samples as f64;
        let mean = sum as f64 / n;
        let var = ((nonzero as f64 / n) - mean * mean).max(0.0) * n / (n - 1.0);
        OracleEstimate { value: mean, stderr: (var / n).sqrt(), samples }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{erf_e, ErrorFunctionEvaluator};
    use super::*;

    fn ev(samples: u64) -> ErrorFunctionEvaluator {
        ErrorFunctionEvaluator { mc_samples: samples, ..Default::default() }
    }

    #[test]
    fn q1_matches_closed_form() {
        let space = BilinearSpace::diagonal(&[2, 4, -2]).unwrap();
        let c = vec![Vector::from_i64(&[1, 0, 2])];
        let x = Vector::from_f64(&[0.3, -0.2, 0.25]);
        let est = ev(200_000).eq_oracle(&space, &c, &x).unwrap();
        let want = erf_e(space.inner(&x, &space.normalize_negative(&c[0]).unwrap()).unwrap());
        assert!((est.value - want).abs() < 4.0 * est.stderr, "{est:?} vs {want}");
    }

    #[test]
    fn odd_q_centered_is_zero() {
        let space = BilinearSpace::diagonal(&[2, -2, -2, -2]).unwrap();
        let c = vec![Vector::from_i64(&[0, 1, 0, 0]), Vector::from_i64(&[0, 1, 1, 0]), Vector::from_i64(&[0, 0, 1, 1])];
        let x = Vector::from_i64(&[1, 0, 0, 0]);
        let est = ev(200_000).eq_oracle(&space, &c, &x).unwrap();
        assert!(est.value.abs() < 4.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn orthogonal_pair_separates() {
        let space = BilinearSpace::diagonal(&[2, -2, -4]).unwrap();
        let c = vec![Vector::from_i64(&[0, 1, 0]), Vector::from_i64(&[0, 0, 1])];
        let x = Vector::from_f64(&[0.3, 0.21, -0.17]);
        let e = ev(400_000);
        let est = e.eq_oracle(&space, &c, &x).unwrap();
        let want = e.eq_recursive(&space, &c[..1], &x).unwrap() * e.eq_recursive(&space, &c[1..], &x).unwrap();
        assert!((est.value - want).abs() < 4.0 * est.stderr, "{est:?} vs {want}");
    }

    #[test]
    fn deterministic_given_seed() {
        let space = BilinearSpace::diagonal(&[2, -2, -4]).unwrap();
        let c = vec![Vector::from_i64(&[0, 1, 0]), Vector::from_i64(&[1, 1, 1])];
        let x = Vector::from_f64(&[0.3, 0.21, -0.17]);
        let a = ev(100_000).eq_oracle(&space, &c, &x).unwrap();
        let b = ev(100_000).eq_oracle(&space, &c, &x).unwrap();
        assert_eq!(a, b);
        let other = ErrorFunctionEvaluator { rng_seed: 99, ..ev(100_000) }.eq_oracle(&space, &c, &x).unwrap();
        assert_ne!(a.value, other.value);
    }
}
