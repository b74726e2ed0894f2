use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hut::datagen::{gen_speeds, Profile, DEFAULT_N};
use hut::harness::{run_sweep, trial_mses, QueryKind, SweepSpec};
use hut::{ExecMode, Method, Params};

const MODES: [(&str, ExecMode); 2] = [
    ("sequential", ExecMode::Sequential),
    ("parallel", ExecMode::Parallel),
];

fn bench_trials(c: &mut Criterion) {
    let ds = gen_speeds(DEFAULT_N, Profile::RightSkewed, 1).unwrap();
    let params = Params::new(0.02, 10, 0.35, 42, 100).unwrap();
    let mut group = c.benchmark_group("hut_trials_100");
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| trial_mses(Method::Hut, &ds, &params, mode).unwrap())
        });
    }
    group.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let ds = gen_speeds(DEFAULT_N, Profile::RightSkewed, 1).unwrap();
    let spec = SweepSpec {
        trials: 5,
        ..SweepSpec::defaults(QueryKind::Simple)
    };
    let mut group = c.benchmark_group("simple_sweep");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| run_sweep(&spec, &ds, 42, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_trials, bench_sweep);
criterion_main!(benches);
