//! Parallel vs sequential batch execution on the two chunky workloads:
//! spectral classification of a parameter batch and a small epsilon sweep.
//! `map_batch` fans out over rayon under the default `parallel` feature;
//! `map_batch_serial` is the sequential baseline. Run with
//! `--no-default-features` to also time the fallback build.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use kdvlab::exec;
use kdvlab::experiments::{self, BaseShapes};
use kdvlab::integrator;
use kdvlab::model::{Grid, Regime, SystemParams};
use kdvlab::spectral;

fn spectral_batch(crit: &mut Criterion) {
    let grid = Grid::new(3.0, 96).unwrap();
    let triples: Vec<(f64, f64, f64)> = (0..24)
        .map(|i| {
            let t = i as f64 / 24.0;
            (0.4 * t, -1.0 + 1.2 * t, 1.0 - t)
        })
        .collect();
    let classify = |&(a, b, c): &(f64, f64, f64)| {
        let params = SystemParams::new(a, b, c, 0.1, 3.0, Regime::FastKdv);
        let g = spectral::assemble_generator(&params, &grid).unwrap();
        spectral::spectral_abscissa(&g).unwrap()
    };
    let mut group = crit.benchmark_group("spectral_batch_24x96");
    group.sample_size(10);
    group.bench_function("parallel_feature", |bench| {
        bench.iter_batched(
            || triples.clone(),
            |ts| black_box(exec::map_batch(&ts, classify)),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("serial", |bench| {
        bench.iter_batched(
            || triples.clone(),
            |ts| black_box(exec::map_batch_serial(&ts, classify)),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

fn sweep_point_batch(crit: &mut Criterion) {
    let grid = Grid::new(3.0, 80).unwrap();
    let shapes = BaseShapes::default();
    let params = SystemParams::new(0.1, -1.0, 1.0, 0.1, 3.0, Regime::FastKdv);
    let eps_lists: Vec<Vec<f64>> = vec![vec![0.2], vec![0.1], vec![0.05], vec![0.025]];
    let run = |eps: &Vec<f64>| {
        experiments::tikhonov_sweep_r1(&shapes, &params, eps, 1.0, &grid, integrator::dt_rule)
            .unwrap()
            .points[0]
            .error
    };
    let mut group = crit.benchmark_group("sweep_points_r1_n80");
    group.sample_size(10);
    group.bench_function("parallel_feature", |bench| {
        bench.iter(|| black_box(exec::map_batch(&eps_lists, run)))
    });
    group.bench_function("serial", |bench| {
        bench.iter(|| black_box(exec::map_batch_serial(&eps_lists, run)))
    });
    group.finish();
}

criterion_group!(benches, spectral_batch, sweep_point_batch);
criterion_main!(benches);
