use criterion::{black_box, criterion_group, criterion_main, Criterion};
use wnc_core::kirchhoff::{backward_representation, cubic_time};
use wnc_core::wave_solver::leapfrog_step;
use wnc_core::{
    simulate_radial, sphere_rule, trace_characteristic, EikonalRegion, InitialData, MetricModel, TraceOptions,
};

fn leapfrog(c: &mut Criterion) {
    let metric = MetricModel::radial(vec![1.0, 1.0]).unwrap();
    let n = 4001;
    let dr = 0.005;
    let cur: Vec<f64> = (0..n)
        .map(|j| (j as f64 * dr) * (-(j as f64 * dr).powi(2)).exp() * 0.1)
        .collect();
    let prev = cur.clone();
    let mut next = vec![0.0; n];
    c.bench_function("leapfrog_step 4001", |b| {
        b.iter(|| leapfrog_step(&metric, 0.81, dr, 0.0, black_box(&prev), black_box(&cur), &mut next).unwrap())
    });
}

fn tracing(c: &mut Criterion) {
    let metric = MetricModel::radial(vec![1.0, 1.0]).unwrap();
    let field = simulate_radial(
        &metric,
        &InitialData::bump(1.0, 0.0, 1.0).unwrap(),
        0.1,
        30.0,
        0.01,
        0.9,
    )
    .unwrap();
    let region = EikonalRegion::new(0.05, 0.1, 1.0, 0.5).unwrap();
    let opts = TraceOptions::default();
    c.bench_function("trace_characteristic q=0", |b| {
        b.iter(|| trace_characteristic(&field, &region, region.launch_time(black_box(0.0)), &opts).unwrap())
    });
}

fn sphere(c: &mut Criterion) {
    let rule = sphere_rule(24).unwrap();
    c.bench_function("sphere_rule(24) integrate", |b| {
        b.iter(|| rule.integrate(&|w: &[f64; 3]| (w[0] * 3.0).sin() * w[2] * w[2]))
    });
    c.bench_function("sphere_rule(24) build", |b| {
        b.iter(|| sphere_rule(black_box(24)).unwrap())
    });
}

fn kirchhoff(c: &mut Criterion) {
    let rule = sphere_rule(24).unwrap();
    let s = cubic_time();
    c.bench_function("backward_representation cubic", |b| {
        b.iter(|| backward_representation(&s, 2.0, black_box(&[1.0, 0.0, 0.0]), 10.0, &rule, 64).unwrap())
    });
}

criterion_group!(benches, leapfrog, tracing, sphere, kirchhoff);
criterion_main!(benches);
