use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thzris_core::channel::{delay_taps, freq_channel, ArraySpec, OfdmSpec, Path, PathSet};
use thzris_core::seqmodel::{Example, Mode, ModelParams, ModelShape, PositionNormalizer, Task};
use thzris_core::{Config, Vec3};

fn labeling(c: &mut Criterion) {
    let labeler = Config::desk().labeler().unwrap();
    c.bench_function("label_grid desk 40x25x4", |b| b.iter(|| black_box(labeler.label_grid().unwrap())));
    let p = Vec3::new(30.0, 4.0, 41.0);
    c.bench_function("label_position shadowed", |b| b.iter(|| black_box(labeler.label_position(black_box(p)).unwrap())));
}

fn channel(c: &mut Criterion) {
    let spec = OfdmSpec::new(512, 1e9, 512, 0.8).unwrap();
    let arr = ArraySpec::ula_x(256);
    let ps = PathSet::single(Path {
        delay: 137.4e-9,
        azimuth: 0.3,
        elevation: 0.9,
        gain: Complex64::new(1e-6, 2e-6),
    });
    let taps = delay_taps(&ps, &arr, &spec);
    c.bench_function("freq_channel K=512 N=256", |b| b.iter(|| black_box(freq_channel(&taps, &spec).unwrap())));
}

fn training(c: &mut Criterion) {
    let shape = ModelShape {
        vocab: 96,
        embed_dim: 50,
        hidden: 20,
        layers: 2,
        classes: 64,
        window: 7,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let data: Vec<Example> = (0..256)
        .map(|i| Example {
            seq_id: i,
            positions: (0..7)
                .map(|_| Vec3::new(rng.random_range(0.0..32.0), rng.random_range(0.0..20.0), rng.random_range(40.0..43.0)))
                .collect(),
            beams: (0..7).map(|_| rng.random_range(0..96)).collect(),
            beam_label: rng.random_range(0..64),
            link_label: rng.random_range(0..2),
            target_position: Vec3::ZERO,
        })
        .collect();
    let refs: Vec<&Example> = data.iter().collect();
    let norm = PositionNormalizer::fit(data.iter().flat_map(|e| &e.positions)).unwrap();
    let model = ModelParams::init(shape, Task::Beam, 0.2, norm, 1).unwrap();
    c.bench_function("loss_and_grad batch 256", |b| {
        b.iter(|| black_box(model.loss_and_grad(&refs, Mode::Train { seed: 3 }).unwrap()))
    });
    c.bench_function("predict_all 256", |b| b.iter(|| black_box(model.predict_all(&data).unwrap())));
}

criterion_group!(benches, labeling, channel, training);
criterion_main!(benches);
