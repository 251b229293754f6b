//! Study throughput: the same run matrix scheduled sequentially and on the
//! rayon pool. Without the `parallel` feature both arms run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lattice_homog::meshbuild::CaseKind;
use lattice_homog::studies::{run_study_with, Execution, StudyConfig};

fn matrix() -> StudyConfig {
    StudyConfig {
        sizes: vec![750.0, 1000.0],
        strains: vec![0.01],
        cases: vec![CaseKind::ActuatorStiff, CaseKind::NodeStiff],
        ..StudyConfig::default()
    }
}

fn bench_study(c: &mut Criterion) {
    let cfg = matrix();
    let mut group = c.benchmark_group("study_40_runs");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(run_study_with(&cfg, Execution::Sequential).unwrap()))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(run_study_with(&cfg, Execution::Parallel(None)).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_study);
criterion_main!(benches);
