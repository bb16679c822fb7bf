use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;

use super::lattice::{phase, AffineLattice, Coset, EvenLattice, TauPoint};
use super::{check_compatible, quadratic_exact, reference_frame};
use crate::chains::{CertifiedCollection, Collection};
use crate::error::{Error, Result};
use crate::numeric::ComplexSum;
use crate::quadspace::NegativeFrame;
use crate::rational::{self, rat, rat_int, Rat};

/// A truncated `q`-series `Σ c_n q^n` with exact exponents and coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QExpansion {
    terms: BTreeMap<Rat, Rat>,
    truncation: Rat,
}

impl QExpansion {
    pub fn new(truncation: Rat) -> Self {
        Self { terms: BTreeMap::new(), truncation }
    }

    /// Adds `c q^n`; zero coefficients are not stored.
    pub fn add_term(&mut self, n: Rat, c: Rat) {
        let slot = self.terms.entry(n.clone()).or_insert_with(Rat::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&n);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Rat, Rat> {
        &self.terms
    }

    pub fn truncation(&self) -> &Rat {
        &self.truncation
    }

    pub fn coefficient(&self, n: &Rat) -> Rat {
        self.terms.get(n).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ c_n e^{2πinτ}`, summed in increasing exponent order.
    pub fn evaluate(&self, tau: TauPoint) -> Complex64 {
        self.terms
            .iter()
            .map(|(n, c)| {
                let n = rational::to_f64(n);
                let modulus = rational::to_f64(c) * (-2.0 * std::f64::consts::PI * tau.v * n).exp();
                Complex64::from_polar(modulus, phase(tau.u, n))
            })
            .collect::<ComplexSum>()
            .value()
    }
}

/// `λ_max(M_z^{-1} M_*)`: how much the majorant at `z_*` can exceed the one at `z`.
fn distortion(m_z: &DMatrix<f64>, m_star: &DMatrix<f64>) -> Result<f64> {
    let chol = m_z
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotNegativeDefinite("majorant is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotNegativeDefinite("singular majorant".into()))?;
    let a = &linv * m_star * linv.transpose();
    Ok(((&a + a.transpose()) * 0.5).symmetric_eigen().eigenvalues.max())
}

/// Planes `z(s)` on a grid over the cube (9 points per axis) or the simplex (step 1/8).
fn grid_planes(collection: &Collection) -> Result<Vec<Vec<crate::quadspace::Vector>>> {
    match collection {
        Collection::Cubical(cc) => {
            let q = cc.q();
            (0..9usize.pow(q as u32))
                .map(|idx| {
                    let s: Vec<Rat> = (0..q).map(|j| rat((idx / 9usize.pow(j as u32) % 9) as i64, 8)).collect();
                    cc.b_of_s_exact(&s)
                })
                .collect()
        }
        Collection::Simplicial(sc) => {
            let n = sc.q() + 1;
            let mut out = Vec::new();
            let mut parts = vec![0i64; n];
            compositions(8, 0, &mut parts, &mut |p| {
                let s: Vec<Rat> = p.iter().map(|&k| rat(k, 8)).collect();
                out.push(sc.plane_at(&s));
            });
            out.into_iter().collect()
        }
    }
}

fn compositions(left: i64, i: usize, parts: &mut [i64], emit: &mut dyn FnMut(&[i64])) {
    if i + 1 == parts.len() {
        parts[i] = left;
        emit(parts);
        return;
    }
    for k in 0..=left {
        parts[i] = k;
        compositions(left - k, i + 1, parts, emit);
    }
}

/// Reference frame `z_*` and a majorant radius containing every `x` with
/// `Q(x) ≤ n_max` and `Φ(x) ≠ 0`.
///
/// Such `x` is orthogonal to some plane `z(s)` of the collection, where its majorant
/// is `(x,x) = 2Q(x)`; the radius is `2.5 N K` with `K` the largest distortion
/// between `z_*` and the sampled planes.
pub fn enumeration_radius(collection: &Collection, n_max: i64) -> Result<(NegativeFrame, f64)> {
    let space = collection.space();
    let frame = reference_frame(collection)?;
    let m_star = space.majorant_matrix(&frame)?;
    let mut k_max: f64 = 1.0;
    for basis in grid_planes(collection)? {
        let m_z = space.majorant_matrix(&space.orthonormalize_negative(&basis)?)?;
        k_max = k_max.max(distortion(&m_z, &m_star)?);
    }
    Ok((frame, 2.5 * n_max.max(0) as f64 * k_max))
}

/// `Σ_{x ∈ μ+L, Q(x) ≤ N} Φ(x) q^{Q(x)}` with exact coefficients, using at most six
/// ball doublings to confirm the enumeration radius.
pub fn holomorphic_theta(
    lattice: &EvenLattice,
    coset: &Coset,
    collection: &CertifiedCollection,
    n_max: i64,
) -> Result<QExpansion> {
    holomorphic_theta_with(lattice, coset, collection, n_max, 6)
}

/// As [`holomorphic_theta`]; the expansion is accepted once doubling the ball leaves
/// it unchanged.
pub fn holomorphic_theta_with(
    lattice: &EvenLattice,
    coset: &Coset,
    collection: &CertifiedCollection,
    n_max: i64,
    max_doublings: u32,
) -> Result<QExpansion> {
    Coset::new(lattice, coset.mu().to_vec())?;
    let collection = collection.collection();
    check_compatible(lattice, collection)?;
    let (frame, mut radius) = enumeration_radius(collection, n_max)?;
    let maj = lattice.space().majorant_matrix(&frame)?;
    let cap = rat_int(n_max);
    let lat = AffineLattice::coset(coset);
    let expand = |radius: f64| -> Result<QExpansion> {
        let pts = lat.enumerate(&maj, radius)?;
        let contributions: Vec<(Rat, Rat)> = pts
            .par_iter()
            .filter_map(|(n, _)| {
                let x = lat.point(n);
                let qx = quadratic_exact(lattice, &x)?;
                if qx > cap {
                    return None;
                }
                let phi = collection.phi(&x);
                (!phi.is_zero()).then_some((qx, phi))
            })
            .collect();
        let mut e = QExpansion::new(cap.clone());
        for (n, c) in contributions {
            e.add_term(n, c);
        }
        Ok(e)
    };
    let mut current = expand(radius)?;
    for _ in 0..max_doublings {
        radius = (2.0 * radius).max(1.0);
        let next = expand(radius)?;
        if next == current {
            return Ok(current);
        }
        current = next;
    }
    Err(Error::NonConvergence(format!(
        "holomorphic coefficients still changing at majorant radius {radius:.3}"
    )))
}
