//! One-thread pool against the default pool on the same verification workload.
//! `cargo bench --no-default-features` measures the plain sequential build.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ddr_core::ddr3d::CellDdr;
use ddr_core::ddr2d::Options;
use ddr_core::mesh::shapes;
use ddr_core::par;
use ddr_core::verify::{self, Config, Suite};

fn full_suite(c: &mut Criterion) {
    let cells: Vec<_> = ["pentagon", "tetra", "prism"].iter().map(|n| shapes::by_name(n).unwrap().cell(0).unwrap()).collect();
    let cfg = Config { samples: 5, timing: false, ..Config::default() };
    let mut g = c.benchmark_group("suite");
    g.sample_size(10);
    for (label, jobs) in [("1-thread", Some(1)), ("default-pool", None)] {
        g.bench_with_input(BenchmarkId::new("all-suites k=0..2", label), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || verify::run(&cells, &[0, 1, 2], &Suite::ALL, &cfg).unwrap()))
        });
    }
    g.finish();
}

fn cell_assembly(c: &mut Criterion) {
    let cell = shapes::by_name("lprism").unwrap().cell(0).unwrap();
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    for (label, jobs) in [("1-thread", Some(1)), ("default-pool", None)] {
        g.bench_with_input(BenchmarkId::new("lprism k=2", label), &jobs, |b, &jobs| {
            b.iter(|| par::with_jobs(jobs, || CellDdr::new(&cell, 2, &Options::default()).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, full_suite, cell_assembly);
criterion_main!(benches);
