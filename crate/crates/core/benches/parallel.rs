use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use divesim::dynamics::{pulse_survival, LagTable, PulseSchedule, VolterraOptions};
use divesim::exec::Execution;
use divesim::formfactor::SpectralMeasure;
use divesim::spectral::{Model, StaticPropagator};

const WORKERS: usize = 4;

fn model() -> Model {
    Model::new(SpectralMeasure::power_law(1, 4.0).unwrap(), 0.5).unwrap()
}

fn modes() -> [(&'static str, Execution); 2] {
    [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::with_workers(WORKERS)),
    ]
}

/// Independent full-pulse runs, one per η.
fn eta_sweep(c: &mut Criterion) {
    let model = model();
    let schedule = PulseSchedule::sin_squared(-1.0, 0.5).unwrap();
    let etas = [0.8, 0.6, 0.4, 0.3];
    let options = VolterraOptions::default();
    let mut group = c.benchmark_group("eta_sweep");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(&etas, |&eta| pulse_survival(&model, &schedule, eta, &options).unwrap()))
        });
    }
    group.finish();
}

/// Product-integration weights of the memory kernel.
fn lag_table(c: &mut Criterion) {
    let model = model();
    let kernel = model.measure().weighted(|_| 1.0);
    let mut group = c.benchmark_group("lag_table");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| LagTable::new(black_box(&kernel), 0.02, 1000, exec))
        });
    }
    group.finish();
}

/// Frozen survival amplitude on a log-spaced time grid.
fn static_amplitudes(c: &mut Criterion) {
    let model = model();
    let propagator = StaticPropagator::new(&model, 0.5).unwrap();
    let times: Vec<f64> = (0..64).map(|k| 1e2 * 10f64.powf(2.0 * k as f64 / 63.0)).collect();
    let mut group = c.benchmark_group("static_amplitudes");
    for (name, exec) in modes() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(&times, |&t| propagator.amplitude(black_box(t)).norm()))
        });
    }
    group.finish();
}

criterion_group!(benches, eta_sweep, lag_table, static_amplitudes);
criterion_main!(benches);
