use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use skewinfo::divergence::{self, OrderParameter};
use skewinfo::numerics::{self, TolerancePolicy};
use skewinfo::states::{self, RngSeed};
use skewinfo::{harness, resource, KrausChannel, Property, ResourceChoice, SuiteConfig};

fn eig(c: &mut Criterion) {
    let tol = TolerancePolicy::default();
    let mut group = c.benchmark_group("hermitian_eig");
    for dim in [2, 4, 8, 16] {
        let h = states::random_hermitian(dim, &mut RngSeed::new(1).rng());
        group.bench_with_input(BenchmarkId::from_parameter(dim), &h, |b, h| {
            b.iter(|| numerics::hermitian_eig(black_box(h), &tol).unwrap())
        });
    }
    group.finish();
}

fn measures(c: &mut Criterion) {
    let tol = TolerancePolicy::default();
    let mut rng = RngSeed::new(2).rng();
    let mut group = c.benchmark_group("measures");
    for dim in [2, 4, 8] {
        let rho = states::random_density(dim, dim, &mut rng).unwrap();
        let sigma = states::random_density(dim, dim, &mut rng).unwrap();
        let lambda = KrausChannel::random(dim, 3, &mut rng, &tol).unwrap();
        let k = states::ginibre(dim, dim, &mut rng);
        group.bench_function(BenchmarkId::new("skew_info_channel", dim), |b| {
            b.iter(|| divergence::skew_info_channel(black_box(&rho), &lambda, &tol).unwrap())
        });
        for p in [0.5, 1.0, 1.5, 2.0] {
            let p = OrderParameter::new(p).unwrap();
            group.bench_function(BenchmarkId::new(format!("j_p/{}", p.value()), dim), |b| {
                b.iter(|| divergence::j_p(black_box(&k), &rho, &sigma, p, &tol).unwrap())
            });
        }
        group.bench_function(BenchmarkId::new("j_p_spectral", dim), |b| {
            b.iter(|| divergence::j_p_spectral(black_box(&k), &rho, &sigma, OrderParameter::HALF, &tol).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let tol = TolerancePolicy::default();
    let spec = resource::dephasing_map(4, &tol).unwrap();
    let sampler = resource::FreeOperationSampler::for_resource(&spec, &tol).unwrap();
    let mut rng = RngSeed::new(3).rng();
    c.bench_function("free_operation_sample/dephasing-4", |b| {
        b.iter(|| sampler.sample(2, &mut rng, &tol).unwrap())
    });
}

fn suites(c: &mut Criterion) {
    let mut group = c.benchmark_group("suite_100_trials");
    group.sample_size(10);
    for property in [Property::Monotonicity, Property::StrongMonotonicity] {
        let config = SuiteConfig::new(property, ResourceChoice::TwirlCyclic(3), 3, 100, 4)
            .with_p(Some(OrderParameter::new(0.7).unwrap()));
        group.bench_function(property.name(), |b| {
            b.iter(|| harness::run_suite(black_box(&config)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, eig, measures, sampling, suites);
criterion_main!(benches);
