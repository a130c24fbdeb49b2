use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thzris_core::beams::{beam_gain, cascade_channel, cascade_taps, dft_codebook, taps_beam_gain};
use thzris_core::channel::{array_response, freq_channel, sparse_delay_taps, ArraySpec, OfdmSpec, Path, PathSet};
use thzris_core::harness::{per_beam_stats, topk_accuracy};
use thzris_core::scene::{generate_trajectory, sample_start};
use thzris_core::{Aabb, GridSpec, Scene, StepPolicy, Vec3};

fn vec3(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, lo..hi, lo..hi).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn boxes() -> impl Strategy<Value = Vec<Aabb>> {
    prop::collection::vec(
        (vec3(-20.0, 20.0), (0.5f64..10.0, 0.5f64..10.0, 0.5f64..10.0))
            .prop_map(|(lo, (dx, dy, dz))| Aabb::new(lo, lo + Vec3::new(dx, dy, dz))),
        0..5,
    )
}

fn path() -> impl Strategy<Value = Path> {
    (0.0f64..30.0, -3.1f64..3.1, -1.5f64..1.5, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(d, az, el, re, im)| Path {
        delay: d * 1e-9,
        azimuth: az,
        elevation: el,
        gain: Complex64::new(re, im),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn line_of_sight_is_symmetric(buildings in boxes(), a in vec3(-30.0, 30.0), b in vec3(-30.0, 30.0)) {
        let scene = Scene { buildings, ..Scene::default() };
        prop_assert_eq!(scene.line_of_sight(a, b), scene.line_of_sight(b, a));
    }

    #[test]
    fn trajectories_stay_on_grid(seed in any::<u64>(), ny in 1usize..6, nz in 1usize..4, wx in 0.0f64..1.0, wy in 0.0f64..1.0, wz in 0.0f64..1.0) {
        prop_assume!(wx + wy + wz > 1e-3);
        let grid = GridSpec { origin: Vec3::ZERO, spacing: [1.0; 3], counts: [12, ny, nz] };
        let policy = StepPolicy { weights: [wx, wy, wz] };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = sample_start(&mut rng, &grid, 10).unwrap();
        let t = generate_trajectory(&grid, &policy, &mut rng, start, 10).unwrap();
        prop_assert_eq!(t.len(), 10);
        prop_assert_eq!(t[0], start);
        for w in t.windows(2) {
            prop_assert!(grid.contains(w[1]));
            prop_assert_eq!(w[0].manhattan(w[1]), 1);
            prop_assert!(w[1].ix >= w[0].ix);
        }
    }

    #[test]
    fn array_response_has_unit_modulus_entries(n in 1usize..64, az in -3.2f64..3.2, el in -1.6f64..1.6) {
        let a = array_response(&ArraySpec::ula_x(n), az, el);
        let norm2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm2 - n as f64).abs() < 1e-9 * n as f64);
    }

    #[test]
    fn tap_domain_gain_equals_subcarrier_sum(paths in prop::collection::vec(path(), 1..4), beam in 0usize..8) {
        let spec = OfdmSpec::new(64, 1e9, 48, 0.8).unwrap();
        let arr = ArraySpec::ula_x(8);
        let ps = PathSet { paths, scale: 1.0 };
        let taps = sparse_delay_taps(&ps, &arr, &spec);
        let cb = dft_codebook(&arr, 8).unwrap();
        let dense = freq_channel(&taps.to_dense(), &spec).unwrap();
        let a = beam_gain(&dense, &cb.vectors[beam]).unwrap();
        let b = taps_beam_gain(&taps, spec.n_subcarriers, &cb.vectors[beam]).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
    }

    #[test]
    fn cascade_in_delay_domain_matches_subcarrier_product(p1 in path(), p2 in path()) {
        let spec = OfdmSpec::new(64, 1e9, 32, 0.8).unwrap();
        let arr = ArraySpec::ula_x(4);
        let t = sparse_delay_taps(&PathSet::single(p1), &arr, &spec);
        let r = sparse_delay_taps(&PathSet::single(p2), &arr, &spec);
        let via_taps = freq_channel(&cascade_taps(&t, &r, 64).unwrap().to_dense(), &spec).unwrap();
        let via_freq = cascade_channel(
            &freq_channel(&t.to_dense(), &spec).unwrap(),
            &freq_channel(&r.to_dense(), &spec).unwrap(),
        ).unwrap();
        let scale = via_freq.subcarriers.iter().flatten().map(|z| z.norm()).fold(1e-300, f64::max);
        for (a, b) in via_taps.subcarriers.iter().flatten().zip(via_freq.subcarriers.iter().flatten()) {
            prop_assert!((a - b).norm() <= 1e-9 * scale);
        }
    }

    #[test]
    fn topk_is_nested(logits in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..20), seed in any::<u64>()) {
        let labels: Vec<usize> = (0..logits.len()).map(|i| ((seed >> (i % 60)) as usize + i) % 6).collect();
        let t: Vec<f64> = (1..=6).map(|k| topk_accuracy(&logits, &labels, k).unwrap()).collect();
        for w in t.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        prop_assert_eq!(t[5], 1.0);
    }

    #[test]
    fn per_beam_means_within_range(pairs in prop::collection::vec((0usize..10, 0usize..10), 1..50)) {
        let (pred, gt): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        for s in per_beam_stats(&pred, &gt).unwrap() {
            prop_assert!((0.0..=9.0).contains(&s.mean_pred));
            prop_assert!(s.stderr >= 0.0);
        }
    }
}
