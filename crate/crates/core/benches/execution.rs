use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holonomy::adiabatic::convergence_study;
use holonomy::curve::TransportOptions;
use holonomy::exec::Execution;
use holonomy::propagate::Method;
use holonomy::quadrupole::{self, PrecessionScenario};
use holonomy::study::{gauge_trials, precession_adiabatic, LevelRun};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut out = vec![("sequential", Execution::Sequential)];
    if Execution::parallel_available() {
        out.push(("parallel", Execution::Parallel));
    }
    out
}

fn bench_gauge_trials(c: &mut Criterion) {
    let s = PrecessionScenario::tycko();
    let curve = s.curve(600).unwrap();
    let h = s.hamiltonian_fn();
    let run = LevelRun::new(&s.family(), &curve, &h, 1, Method::Magnus4, &TransportOptions::default()).unwrap();
    let mut group = c.benchmark_group("gauge_trials");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(gauge_trials(&run, &h, 1, 32, Method::Magnus4, exec).unwrap()))
        });
    }
    group.finish();
}

fn bench_tau_ladder(c: &mut Criterion) {
    let base = PrecessionScenario::new(1.0, 1.0, quadrupole::tycko_theta(), 0.0, 2.0 * PI / 20.0, 2.0 * PI).unwrap();
    let scenario = precession_adiabatic(&base, 400).unwrap();
    let taus = [20.0, 40.0, 80.0, 160.0];
    let mut group = c.benchmark_group("tau_ladder");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(convergence_study(&scenario, &taus, Method::Magnus4, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gauge_trials, bench_tau_ladder);
criterion_main!(benches);
