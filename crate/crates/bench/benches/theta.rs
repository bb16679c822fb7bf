use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use indefinite_theta::chains::CertifyOptions;
use indefinite_theta::theta::{completed_theta, holomorphic_theta, shadow_value, TauPoint, ThetaOptions};
use indefinite_theta::verify::instances::{random_negative_collection, random_regular_point, random_space};
use indefinite_theta::ErrorFunctionEvaluator;
use indefinite_theta_bench::{signature_1_1, signature_1_2, simplicial_q2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn error_functions(c: &mut Criterion) {
    let mut group = c.benchmark_group("eq_recursive");
    let ev = ErrorFunctionEvaluator { quad_tol: 1e-12, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for q in 1..=3 {
        let space = random_space(&mut rng, 1, q);
        let cs = random_negative_collection(&mut rng, &space, q);
        let x = random_regular_point(&mut rng, &space, &cs, 0.05);
        group.bench_with_input(BenchmarkId::from_parameter(q), &q, |b, _| {
            b.iter(|| ev.eq_recursive(&space, black_box(&cs), black_box(&x)).unwrap())
        });
    }
    group.finish();
}

fn certification(c: &mut Criterion) {
    let (_, _, cc) = signature_1_2();
    let opts = CertifyOptions::default();
    c.bench_function("certify cube q=2", |b| b.iter(|| cc.collection().certify(black_box(&opts))));
}

fn lattice_sums(c: &mut Criterion) {
    let opts = ThetaOptions::default();
    let tau = TauPoint::new(0.3, 1.1).unwrap();
    let mut group = c.benchmark_group("completed_theta");
    group.sample_size(10);
    for (name, (l, mu, cc)) in [("cubical q=1", signature_1_1()), ("cubical q=2", signature_1_2()), ("simplicial q=2", simplicial_q2())] {
        group.bench_function(name, |b| b.iter(|| completed_theta(&l, &mu, &cc, black_box(tau), &opts).unwrap()));
    }
    group.finish();

    let (l, mu, cc) = signature_1_1();
    c.bench_function("holomorphic_theta N=40", |b| b.iter(|| holomorphic_theta(&l, &mu, &cc, black_box(40)).unwrap()));
    c.bench_function("shadow_value q=1", |b| b.iter(|| shadow_value(&l, &mu, &cc, black_box(tau), &opts).unwrap()));
}

criterion_group!(benches, error_functions, certification, lattice_sums);
criterion_main!(benches);
