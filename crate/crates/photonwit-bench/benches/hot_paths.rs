//! Hot paths of the toolkit: homodyne sampling, pattern-function
//! tomography, the separable-bound SDP solves, and analytic certificate
//! assembly. Run with `cargo bench -p photonwit-bench`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use photonwit_core::bounds::{
    build_certificate, pjoint_program_bound, sdp_enhanced_bound, sdp_original_bound,
};
use photonwit_core::fock::{
    apply_loss, beam_splitter_split, heralded_source_state, local_photon_probs, lossy_bell_state,
    LossParams, TwoModeState,
};
use photonwit_core::homodyne::sample_batch;
use photonwit_core::tomography::{estimate_local_probs, Party};
use photonwit_core::witness::s_from_samples;
use std::hint::black_box;

/// Heralded source with two-photon contamination, split and attenuated:
/// the state with the richest sampling ensemble.
fn modeled_state() -> TwoModeState {
    let source = heralded_source_state(0.68, 0.02).unwrap();
    let split = beam_splitter_split(&source, 0.5).unwrap();
    apply_loss(&split, &LossParams::new(0.9, 0.8).unwrap())
}

fn bench_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sampling");
    let per_setting = 10_000usize;
    group.throughput(Throughput::Elements(4 * per_setting as u64));
    for (label, state) in [
        ("ideal", lossy_bell_state(1.0, 1.0).unwrap()),
        ("modeled_lossy", modeled_state()),
    ] {
        group.bench_with_input(BenchmarkId::from_parameter(label), &state, |b, state| {
            b.iter(|| sample_batch(black_box(state), per_setting, 17).unwrap());
        });
    }
    group.finish();
}

fn bench_estimation(c: &mut Criterion) {
    let state = modeled_state();
    let batch = sample_batch(&state, 25_000, 17).unwrap();

    let mut group = c.benchmark_group("estimation");
    group.throughput(Throughput::Elements(batch.count() as u64));
    group.bench_function("witness_from_samples", |b| {
        b.iter(|| s_from_samples(black_box(&batch)).unwrap());
    });
    group.bench_function("local_probs_pattern_fns", |b| {
        b.iter(|| estimate_local_probs(black_box(&batch), Party::A, 3).unwrap());
    });
    group.finish();
}

fn bench_bounds(c: &mut Criterion) {
    let (full_a, full_b) = local_photon_probs(&modeled_state());
    let reduced = {
        let arm = 0.68_f64.sqrt();
        let (a, b) = local_photon_probs(&lossy_bell_state(arm, arm).unwrap());
        (a, b)
    };

    let mut group = c.benchmark_group("bounds");
    group.sample_size(20);
    group.bench_function("sdp_enhanced_full_support", |b| {
        b.iter(|| sdp_enhanced_bound(black_box(&full_a), black_box(&full_b)).unwrap());
    });
    group.bench_function("sdp_enhanced_reduced_support", |b| {
        b.iter(|| sdp_enhanced_bound(black_box(&reduced.0), black_box(&reduced.1)).unwrap());
    });
    group.bench_function("sdp_original_full_support", |b| {
        b.iter(|| sdp_original_bound(black_box(&full_a), black_box(&full_b)).unwrap());
    });
    group.bench_function("pjoint_program", |b| {
        b.iter(|| pjoint_program_bound(black_box(0.1)).unwrap());
    });
    group.finish();
}

fn bench_certificate(c: &mut Criterion) {
    c.bench_function("certificate_assembly", |b| {
        b.iter(|| build_certificate(black_box(0.1)).unwrap());
    });
}

criterion_group!(
    benches,
    bench_sampling,
    bench_estimation,
    bench_bounds,
    bench_certificate
);
criterion_main!(benches);
