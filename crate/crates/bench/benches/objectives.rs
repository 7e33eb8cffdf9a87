use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mpf_core::baselines::pl_objective;
use mpf_core::flowcore::{ising_mpf, mpf_objective};
use mpf_core::hopfield::{hopfield_mpf_objective, random_patterns};
use mpf_core::models::lattice_ising;
use mpf_core::oracle::exact_nll_and_grad;
use mpf_core::rng::seeded;
use mpf_core::samplers::{gibbs_sweep, sample_model};
use mpf_core::{ConnectivityScheme, Dataset, HopfieldNet, IsingModel, MpfOptions};

fn lattice_data(rows: usize, cols: usize, samples: usize) -> (IsingModel, Dataset) {
    let mut rng = seeded(1);
    let truth = lattice_ising(rows, cols, 1.0, &mut rng).unwrap();
    let (x, _) = sample_model(&truth, samples, &mut rng).unwrap();
    let data = Dataset::binary(rows * cols, x).unwrap();
    (truth, data)
}

fn ising(c: &mut Criterion) {
    let (truth, data) = lattice_data(4, 4, 20_000);
    let jp = truth.to_full();
    let opts = MpfOptions::default();
    let mut g = c.benchmark_group("ising-d16-n20000");
    g.sample_size(20);
    g.bench_function("ising_mpf", |b| {
        b.iter(|| ising_mpf(black_box(&jp), 16, &data, false).unwrap())
    });
    g.bench_function("mpf_objective", |b| {
        b.iter(|| {
            mpf_objective(
                black_box(&truth),
                &data,
                &ConnectivityScheme::SingleBitFlip,
                &opts,
            )
            .unwrap()
        })
    });
    g.bench_function("pl_objective", |b| {
        b.iter(|| pl_objective(black_box(&truth), &data).unwrap())
    });
    let compact = data.compressed().unwrap();
    g.bench_function("exact_nll_and_grad", |b| {
        b.iter(|| exact_nll_and_grad(black_box(&truth), &compact).unwrap())
    });
    g.finish();
}

fn hopfield(c: &mut Criterion) {
    let patterns = random_patterns(64, 64, &mut seeded(2)).unwrap();
    let net = HopfieldNet::zeros(64);
    c.bench_function("hopfield_mpf_objective n64 m64", |b| {
        b.iter(|| hopfield_mpf_objective(black_box(&net), &patterns).unwrap())
    });
}

fn gibbs(c: &mut Criterion) {
    let (truth, _) = lattice_data(10, 10, 1);
    let mut rng = seeded(3);
    let mut x = vec![0u8; 100];
    c.bench_function("gibbs_sweep d100", |b| {
        b.iter(|| gibbs_sweep(black_box(&truth), &mut x, &mut rng))
    });
}

criterion_group!(benches, ising, hopfield, gibbs);
criterion_main!(benches);
