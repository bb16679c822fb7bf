//! Shared instances for the criterion benches.

use indefinite_theta::chains::{CertifyOptions, Collection, CubicalCollection, SimplicialCollection};
use indefinite_theta::rational::{rat, rat_int};
use indefinite_theta::theta::{Coset, EvenLattice};
use indefinite_theta::{CertifiedCollection, Vector};

/// `diag(2, -4)`, `μ = (0, 1/4)`, the pair `((0,1), (1,2))`.
pub fn signature_1_1() -> (EvenLattice, Coset, CertifiedCollection) {
    let l = EvenLattice::diagonal(&[2, -4]).expect("even");
    let mu = Coset::new(&l, vec![rat_int(0), rat(1, 4)]).expect("dual vector");
    let cc = CubicalCollection::new(l.space().clone(), vec![(Vector::from_i64(&[0, 1]), Vector::from_i64(&[1, 2]))])
        .expect("dimensions");
    let cc = Collection::Cubical(cc).into_certified(&CertifyOptions::default()).expect("good position");
    (l, mu, cc)
}

/// `diag(2, -2, -4)` with two pairs, `μ = (1/2, 0, 1/4)`.
pub fn signature_1_2() -> (EvenLattice, Coset, CertifiedCollection) {
    let l = EvenLattice::diagonal(&[2, -2, -4]).expect("even");
    let mu = Coset::new(&l, vec![rat(1, 2), rat_int(0), rat(1, 4)]).expect("dual vector");
    let pairs = vec![
        (Vector::from_i64(&[0, 1, 0]), Vector::from_i64(&[1, 2, 0])),
        (Vector::from_i64(&[0, 0, 1]), Vector::from_i64(&[1, 0, 2])),
    ];
    let cc = Collection::Cubical(CubicalCollection::new(l.space().clone(), pairs).expect("dimensions"));
    (l, mu, cc.into_certified(&CertifyOptions::default()).expect("good position"))
}

/// The rank 3 simplicial instance with Gram `3J - 7I`.
pub fn simplicial_q2() -> (EvenLattice, Coset, CertifiedCollection) {
    let l = EvenLattice::new(vec![vec![-4, 3, 3], vec![3, -4, 3], vec![3, 3, -4]]).expect("even");
    let mu = Coset::new(&l, vec![rat(1, 14), rat(3, 14), rat(3, 14)]).expect("dual vector");
    let verts = vec![Vector::from_i64(&[1, 0, 0]), Vector::from_i64(&[0, 1, 0]), Vector::from_i64(&[0, 0, 1])];
    let cc = Collection::Simplicial(SimplicialCollection::new(l.space().clone(), verts).expect("simplex"));
    (l, mu, cc.into_certified(&CertifyOptions::default()).expect("good position"))
}
