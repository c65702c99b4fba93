use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use modelspace::duality::random_minkowski_body;
use modelspace::{
    canonical_patch, dual_body, dual_support, embedding_data, projective_distance, Flavor, GridSpec, ModelSpace,
    ProjPoint, SpaceName, SupportFunction,
};
use rand::SeedableRng;

fn distance(c: &mut Criterion) {
    let hyp: ModelSpace = "Hyp3".parse().unwrap();
    let x = ProjPoint::from_slice(&[0.1, 0.2, -0.3, 1.0]).unwrap();
    let y = ProjPoint::from_slice(&[-0.4, 0.1, 0.2, 1.0]).unwrap();
    c.bench_function("distance/Hyp3", |b| b.iter(|| projective_distance(&hyp, black_box(&x), black_box(&y)).unwrap()));
}

fn duality(c: &mut Criterion) {
    let mut g = c.benchmark_group("dual_support/ball");
    for m in [16, 32, 64] {
        let h = SupportFunction::constant(Flavor::Euclidean, 3, GridSpec { m, radius: 0.8 }, 2.0);
        g.bench_with_input(BenchmarkId::from_parameter(m), &h, |b, h| b.iter(|| dual_support(h).unwrap()));
    }
    g.finish();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let k = random_minkowski_body(&mut rng, 3, 20, 0.97);
    c.bench_function("dual_body/minkowski", |b| b.iter(|| dual_body(black_box(&k), Flavor::Minkowski).unwrap()));
}

fn surfaces(c: &mut Criterion) {
    let p = canonical_patch(SpaceName::Hyp, 0.7).unwrap();
    let hyp = ModelSpace::named(SpaceName::Hyp, 3);
    c.bench_function("embedding_data/Hyp3/33", |b| b.iter(|| embedding_data(&p, &hyp, 33).unwrap()));
}

criterion_group!(benches, distance, duality, surfaces);
criterion_main!(benches);
