use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wlab_core::entropy::StateCalculus;
use wlab_core::flows::{normalize, run_geodesic, SolverConfig};
use wlab_core::{build_geometry, FourierTerm, GeometryDescriptor, ScalarField, TorusGeometry};

fn line(n: usize) -> Arc<TorusGeometry> {
    Arc::new(build_geometry(&GeometryDescriptor::line(n, vec![FourierTerm::cos(&[1], 0.3)], Some(3.0))).unwrap())
}

fn derivatives(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for n in [64, 128, 256, 1024] {
        let geom = line(n);
        let v = geom.sample(|x| (x[0].cos() + 0.3 * (2.0 * x[0]).sin()).exp());
        g.bench_with_input(BenchmarkId::new("grad", n), &v, |b, v| b.iter(|| geom.grad_values(black_box(v))));
        g.bench_with_input(BenchmarkId::new("witten_laplacian", n), &v, |b, v| {
            b.iter(|| geom.witten_laplacian_values(black_box(v)))
        });
    }
    let plane = Arc::new(build_geometry(&GeometryDescriptor::plane([64, 64], vec![], None)).unwrap());
    let v = plane.sample(|x| (x[0] + x[1]).sin());
    g.bench_function("hessian_64x64", |b| b.iter(|| plane.hess_values(black_box(&v))));
    g.finish();
}

fn calculus(c: &mut Criterion) {
    let geom = line(128);
    let rho = normalize(&ScalarField::from_fn(geom.clone(), |x| 1.0 + 0.2 * x[0].cos()));
    let phi = ScalarField::from_fn(geom, |x| 0.1 * x[0].cos());
    c.bench_function("state_calculus_128", |b| b.iter(|| StateCalculus::from_fields(black_box(&rho), Some(&phi)).unwrap()));
}

fn geodesic_run(c: &mut Criterion) {
    let geom = line(128);
    let rho = normalize(&ScalarField::from_fn(geom.clone(), |x| 1.0 + 0.2 * x[0].cos()));
    let phi = ScalarField::from_fn(geom, |x| 0.1 * x[0].cos());
    let cfg = SolverConfig::new(1e-3, 0.5, 0.6, 10);
    let mut g = c.benchmark_group("flows");
    g.sample_size(20);
    g.bench_function("geodesic_128_100_steps", |b| b.iter(|| run_geodesic(&rho, &phi, black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, derivatives, calculus, geodesic_run);
criterion_main!(benches);
