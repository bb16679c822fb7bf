//! Indefinite theta series of even lattices through generalized error functions.
//!
//! The crate is layered bottom-up: [`quadspace`] holds exact quadratic-space
//! arithmetic, [`chains`] the cubical and simplicial collections with their
//! good-position certificates, [`generf`] the error functions `E_q`, and [`theta`]
//! the lattice sums. [`verify`] bundles the identity suites used by the CLI.

pub mod chains;
pub mod error;
pub mod generf;
pub mod numeric;
pub mod quadspace;
pub mod rational;
pub mod theta;
pub mod verify;

pub use chains::{
    CertificateStatus, CertifiedCollection, CertifyOptions, Collection, CubicalCollection, PositionCertificate,
    SimplicialCollection, Tristate,
};
pub use error::{Error, Result};
pub use generf::{erf_e, ErrorFunctionEvaluator, OracleEstimate};
pub use num_complex::Complex64;
pub use quadspace::{BilinearSpace, NegativeFrame, Vector};
pub use rational::{Rat, RatMatrix};
pub use theta::{Coset, EvenLattice, QExpansion, TauPoint, ThetaOptions, ThetaValue};
