//! Collections of negative vectors defining singular cubes and simplices in the
//! space of negative planes, their good-position certificates, and the sign
//! functions `Φ□_q`, `Φ△_q` that become the holomorphic theta coefficients.

mod cubical;
mod simplicial;

pub use cubical::{CertifyOptions, CubicalCollection, IntersectionPoint};
pub use simplicial::{odd_subset_phi, simplicial_phi_from_signs, SimplicialCollection, SimplicialIntersection};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::quadspace::{BilinearSpace, Vector};
use crate::rational::{rat_int, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateStatus {
    Certified,
    Refuted,
    Undecided,
}

/// Outcome of a good-position check.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionCertificate {
    pub status: CertificateStatus,
    /// Parameter point violating the predicate, when refuted.
    pub witness: Option<Vec<Rat>>,
    /// Finest grid step used (0 for exact procedures).
    pub resolution: f64,
    /// Worst definiteness margin found; positive when certified.
    pub margin: f64,
}

impl PositionCertificate {
    pub fn is_certified(&self) -> bool {
        self.status == CertificateStatus::Certified
    }
}

/// Three-valued answer of a sufficient-condition test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tristate {
    True,
    Unknown,
}

/// Either kind of collection.
#[derive(Clone, Debug)]
pub enum Collection {
    Cubical(CubicalCollection),
    Simplicial(SimplicialCollection),
}

impl Collection {
    pub fn q(&self) -> usize {
        match self {
            Self::Cubical(c) => c.q(),
            Self::Simplicial(s) => s.q(),
        }
    }

    pub fn space(&self) -> &BilinearSpace {
        match self {
            Self::Cubical(c) => c.space(),
            Self::Simplicial(s) => s.space(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Cubical(_) => "cubical",
            Self::Simplicial(_) => "simplicial",
        }
    }

    /// Every vector of the collection, in listing order.
    pub fn listed_vectors(&self) -> Vec<Vector> {
        match self {
            Self::Cubical(c) => c.pairs().iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect(),
            Self::Simplicial(s) => s.verts().to_vec(),
        }
    }

    pub fn phi(&self, x: &Vector) -> Rat {
        match self {
            Self::Cubical(c) => c.phi(x),
            Self::Simplicial(s) => s.phi(x),
        }
    }

    pub fn certify(&self, opts: &CertifyOptions) -> PositionCertificate {
        match self {
            Self::Cubical(c) => c.good_position(opts),
            Self::Simplicial(s) => s.good_position(),
        }
    }

    pub fn is_regular(&self, x: &Vector) -> bool {
        is_regular(self.space(), &self.listed_vectors(), x)
    }

    /// Certifies and wraps; fails unless the certificate is `Certified`.
    pub fn into_certified(self, opts: &CertifyOptions) -> Result<CertifiedCollection> {
        let certificate = self.certify(opts);
        if !certificate.is_certified() {
            return Err(Error::Uncertified(format!("{:?}", certificate.status).to_lowercase()));
        }
        Ok(CertifiedCollection { collection: self, certificate })
    }
}

/// A collection together with the certificate that admits it to theta computations.
#[derive(Clone, Debug)]
pub struct CertifiedCollection {
    collection: Collection,
    certificate: PositionCertificate,
}

impl CertifiedCollection {
    /// Wraps a collection whatever its certificate says (the `--force` path).
    pub fn assume(collection: Collection, certificate: PositionCertificate) -> Self {
        Self { collection, certificate }
    }

    pub fn collection(&self) -> &Collection {
        &self.collection
    }

    pub fn certificate(&self) -> &PositionCertificate {
        &self.certificate
    }
}

/// `x` is regular when `(x, C) ≠ 0` for every listed `C`.
pub fn is_regular(space: &BilinearSpace, vectors: &[Vector], x: &Vector) -> bool {
    vectors.iter().all(|c| space.sign_inner(x, c) != 0)
}

pub(crate) fn pow2_inv(k: usize) -> Rat {
    Rat::one() / Rat::from_integer(num_bigint::BigInt::from(1u8) << k)
}

pub(crate) fn sign_rat(s: i32) -> Rat {
    rat_int(i64::from(s))
}

pub(crate) fn product(values: impl IntoIterator<Item = Rat>) -> Rat {
    values.into_iter().fold(Rat::one(), |acc, v| if acc.is_zero() { acc } else { acc * v })
}
