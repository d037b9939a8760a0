use bbs_bench::iid_cells;
use bbs_core::evolve::{pack_right_aligned, run_currents, run_currents_packed, step_blocked, step_seq};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

fn step_kernels(c: &mut Criterion) {
    let mut g = c.benchmark_group("step");
    for n in [100_000usize, 1_000_000] {
        let cells = iid_cells(0.3, n, 1);
        let mut out = vec![0u8; n];
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new("sequential", n), &cells, |b, cells| {
            b.iter(|| step_seq(black_box(cells), 0, &mut out))
        });
        for block in [4096usize, 65_536] {
            g.bench_with_input(BenchmarkId::new(format!("blocked-{block}"), n), &cells, |b, cells| {
                b.iter(|| step_blocked(black_box(cells), 0, &mut out, block))
            });
        }
    }
    g.finish();
}

fn current_kernels(c: &mut Criterion) {
    let (n, k) = (24_000usize, 1000usize);
    let cells = iid_cells(0.2, n, 2);
    let mut g = c.benchmark_group("currents");
    g.sample_size(20);
    g.bench_function("plain", |b| {
        b.iter(|| {
            let mut work = cells.clone();
            let mut cur = Vec::with_capacity(k);
            run_currents(&mut work, k, &mut cur);
            cur
        })
    });
    g.bench_function("packed", |b| b.iter(|| run_currents_packed(black_box(&cells), k, None)));
    g.bench_function("packed-cone", |b| b.iter(|| run_currents_packed(black_box(&cells), k, Some(16))));
    g.bench_function("pack", |b| b.iter(|| pack_right_aligned(black_box(&cells))));
    g.finish();
}

criterion_group!(benches, step_kernels, current_kernels);
criterion_main!(benches);
