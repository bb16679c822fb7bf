//! Random test instances: spaces, negative collections, certified cubes, regular points.

use rand::Rng;

use crate::chains::{CertifyOptions, CubicalCollection};
use crate::error::Result;
use crate::quadspace::{BilinearSpace, Vector};
use crate::rational::{rat, rat_int, Rat};

/// `diag(2a_1, ..., 2a_p, -2b_1, ..., -2b_q)` with `a_i, b_j ∈ {1, 2, 3}`.
pub fn random_space<R: Rng>(rng: &mut R, p: usize, q: usize) -> BilinearSpace {
    let entries: Vec<i64> = (0..p + q)
        .map(|i| {
            let k = 2 * rng.random_range(1..=3i64);
            if i < p {
                k
            } else {
                -k
            }
        })
        .collect();
    BilinearSpace::diagonal(&entries).expect("diagonal entries are non-zero")
}

fn random_rat<R: Rng>(rng: &mut R, span: i64, den: i64) -> Rat {
    rat(rng.random_range(-span..=span), den)
}

/// `q` exact vectors spanning a negative plane: negative-part coordinates in
/// `[-3, 3]` plus positive-part noise of size at most `1/4`.
pub fn random_negative_collection<R: Rng>(rng: &mut R, space: &BilinearSpace, q: usize) -> Vec<Vector> {
    let (p, _) = space.signature();
    loop {
        let c: Vec<Vector> = (0..q)
            .map(|_| {
                Vector::from_rats(
                    (0..space.dim())
                        .map(|i| if i < p { random_rat(rng, 2, 8) } else { random_rat(rng, 12, 4) })
                        .collect(),
                )
            })
            .collect();
        if space.spans_negative_plane(&c) && c.iter().all(|v| !v.is_zero()) {
            return c;
        }
    }
}

/// A floating point `x` with `|(x, C̄_k)| ≥ margin` for every `k`.
pub fn random_regular_point<R: Rng>(rng: &mut R, space: &BilinearSpace, c: &[Vector], margin: f64) -> Vector {
    let norms: Vec<Vector> = c.iter().map(|v| space.normalize_negative(v).expect("negative vector")).collect();
    loop {
        let x: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let x = Vector::from_f64(&x);
        if norms.iter().all(|n| space.inner(&x, n).is_ok_and(|v| v.abs() >= margin)) {
            return x;
        }
    }
}

/// A cube with `C_j ≈ e_{p+j}` and `C_j' ≈ e_{p+j} + (perturbation)`, certified
/// by the default options; retries until certification succeeds.
pub fn random_certified_cube<R: Rng>(rng: &mut R, p: usize, q: usize) -> Result<CubicalCollection> {
    let space = random_space(rng, p, q);
    loop {
        let vec_near = |rng: &mut R, j: usize| {
            Vector::from_rats(
                (0..p + q)
                    .map(|i| {
                        let base = if i == p + j { rat_int(1) } else { rat_int(0) };
                        base + random_rat(rng, 3, 8)
                    })
                    .collect(),
            )
        };
        let pairs: Vec<(Vector, Vector)> = (0..q).map(|j| (vec_near(rng, j), vec_near(rng, j))).collect();
        let cc = CubicalCollection::new(space.clone(), pairs)?;
        if cc.good_position(&CertifyOptions::default()).is_certified() {
            return Ok(cc);
        }
    }
}

/// An exact `x ⊥ B(s)` for random rational `s ∈ (0,1)^q`, regular for the cube;
/// such `x` has `Φ(x) ≠ 0` and intersection point `s`.
pub fn random_intersecting_point<R: Rng>(rng: &mut R, cc: &CubicalCollection) -> Option<(Vector, Vec<Rat>)> {
    let space = cc.space();
    let q = cc.q();
    for _ in 0..100 {
        let s: Vec<Rat> = (0..q).map(|_| rat(rng.random_range(1..16), 16)).collect();
        let b = cc.b_of_s_exact(&s).ok()?;
        let y = Vector::from_rats((0..space.dim()).map(|_| random_rat(rng, 8, 2)).collect());
        let x = project_out(space, &y, &b)?;
        if cc.is_regular(&x) {
            return Some((x, s));
        }
    }
    None
}

/// `y - Σ_k c_k B_k` with `(x, B_j) = 0` for all `j`, exactly.
fn project_out(space: &BilinearSpace, y: &Vector, b: &[Vector]) -> Option<Vector> {
    let g = space.gram_of_exact(b)?;
    let rhs: Vec<Rat> = b.iter().map(|bk| space.inner_exact(y, bk)).collect::<Option<_>>()?;
    let c = g.solve(&rhs)?;
    let mut x = y.clone();
    for (ck, bk) in c.iter().zip(b) {
        x = x.sub(&bk.scale_rat(ck));
    }
    Some(x)
}
