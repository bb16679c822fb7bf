//! Lattice sums attached to a certified collection: holomorphic indefinite theta
//! series, their modular completions, the Siegel theta function and shadows.

mod completed;
mod expansion;
mod lattice;
mod shadow;

pub use completed::{
    completed_term_cubical, completed_term_simplicial, completed_theta, siegel_theta, ThetaOptions, ThetaValue,
};
pub use expansion::{enumeration_radius, holomorphic_theta, holomorphic_theta_with, QExpansion};
pub use lattice::{enumerate_coset, AffineLattice, Coset, EvenLattice, TauPoint};
pub use shadow::{lowering_fd, lowering_fd_with, shadow_factored, shadow_value, LoweringEstimate, Splitting};

use crate::chains::Collection;
use crate::error::{Error, Result};
use crate::quadspace::{NegativeFrame, Vector};
use crate::rational::{rat, rat_int, Rat};

/// Frame of the plane at the centre of the cube, or at the barycentre of the simplex.
pub fn reference_frame(collection: &Collection) -> Result<NegativeFrame> {
    let space = collection.space();
    let basis = match collection {
        Collection::Cubical(cc) => cc.b_of_s_exact(&vec![rat(1, 2); cc.q()])?,
        Collection::Simplicial(sc) => sc.plane_at(&vec![rat(1, sc.q() as i64 + 1); sc.q() + 1])?,
    };
    space.orthonormalize_negative(&basis)
}

/// The collection must live on the lattice's space and span a maximal negative plane.
pub(crate) fn check_compatible(lattice: &EvenLattice, collection: &Collection) -> Result<()> {
    if collection.space().gram() != lattice.space().gram() {
        return Err(Error::Invalid("collection and lattice have different Gram matrices".into()));
    }
    let q = collection.q();
    if q != lattice.space().neg_index() {
        return Err(Error::Precondition(format!(
            "collection has q = {q} but the lattice has signature {:?}",
            lattice.space().signature()
        )));
    }
    Ok(())
}

/// `Q(x)` exactly when possible.
pub(crate) fn quadratic_exact(lattice: &EvenLattice, x: &Vector) -> Option<Rat> {
    lattice.space().inner_exact(x, x).map(|v| v / rat_int(2))
}
