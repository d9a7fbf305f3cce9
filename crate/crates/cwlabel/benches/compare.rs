//! Sequential vs rayon comparison for the data-parallel entry points:
//! encoding, all-pairs decoding, and a verification suite cell.
//!
//! Run with `cargo bench`, or `cargo bench --no-default-features` to
//! confirm the sequential-only build still drives every benchmark.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use cwlabel::kexpr::{gen_random, GenRandomParams};
use cwlabel::labels::{decode_labels, encode_with, Labeling};
use cwlabel::union_tree::{make_proper, UnionTree};
use cwlabel::verify::{run_suite, SuiteGrid};
use cwlabel::Parallelism;

fn strategies() -> Vec<(&'static str, Parallelism)> {
    #[allow(unused_mut)]
    let mut out = vec![("sequential", Parallelism::Sequential)];
    #[cfg(feature = "parallel")]
    out.push(("rayon", Parallelism::Rayon));
    out
}

fn proper_tree(n: usize, seed: u64) -> UnionTree {
    let expr = gen_random(GenRandomParams {
        n,
        k: 8,
        p_join: 0.2,
        p_relabel: 0.3,
        seed,
    })
    .expect("generator parameters are valid");
    make_proper(&UnionTree::from_kexpression(&expr))
}

fn bench_encode(c: &mut Criterion) {
    let mut group = c.benchmark_group("encode");
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    for n in [1_000usize, 8_000] {
        let tree = proper_tree(n, 11);
        group.throughput(Throughput::Elements(n as u64));
        for (name, par) in strategies() {
            group.bench_with_input(BenchmarkId::new(name, n), &tree, |b, tree| {
                b.iter(|| encode_with(tree, par).expect("tree is proper"));
            });
        }
    }
    group.finish();
}

fn all_pairs(labeling: &Labeling, par: Parallelism) -> usize {
    let labels: Vec<_> = labeling.labels.values().collect();
    let count = |i: usize| {
        let a = labels[i];
        labels[i + 1..]
            .iter()
            .filter(|b| decode_labels(a, b).expect("labels share a header"))
            .count()
    };
    match par {
        Parallelism::Sequential => (0..labels.len()).map(count).sum(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => {
            use rayon::prelude::*;
            (0..labels.len()).into_par_iter().map(count).sum()
        }
    }
}

fn bench_decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode_all_pairs");
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    for n in [500usize, 2_000] {
        let labeling =
            encode_with(&proper_tree(n, 23), Parallelism::default()).expect("tree is proper");
        group.throughput(Throughput::Elements((n * (n - 1) / 2) as u64));
        for (name, par) in strategies() {
            group.bench_with_input(BenchmarkId::new(name, n), &labeling, |b, labeling| {
                b.iter(|| all_pairs(labeling, par));
            });
        }
    }
    group.finish();
}

fn bench_suite_cell(c: &mut Criterion) {
    let mut group = c.benchmark_group("suite_cell");
    group.sample_size(10).measurement_time(Duration::from_secs(8));
    let grid = SuiteGrid {
        ns: vec![256],
        ks: vec![4],
        ws: vec![0],
        trials: 8,
        p_join: 0.2,
        p_relabel: 0.3,
        seed: 37,
    };
    for (name, par) in strategies() {
        group.bench_with_input(BenchmarkId::new(name, "n256_k4_x8"), &grid, |b, grid| {
            b.iter(|| {
                let report = run_suite(grid, par);
                assert!(report.passed);
                report.pairs_checked
            });
        });
    }
    group.finish();
}

criterion_group!(benches, bench_encode, bench_decode, bench_suite_cell);
criterion_main!(benches);
