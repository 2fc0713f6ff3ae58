//! Implementation vs brute-force oracle on randomized inputs.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uvsam_core::classify::{classify_multi, sam_map, threshold_region};
use uvsam_core::cube::{BandDescriptor, SpectralCube};
use uvsam_core::geometry::{rasterize_occupancy, rasterize_occupancy_with};
use uvsam_core::{Mask, Modality, ReferenceSpectrum, TexelGrid};

#[test]
fn occupancy_matches_brute_force_on_random_soups() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..60 {
        let mesh = common::random_soup(&mut rng, 50, 32);
        let got = rasterize_occupancy(&mesh, 32, 32).unwrap();
        assert_eq!(got.ids(), &common::occupancy(&mesh, 32, 32)[..]);
    }
}

#[test]
fn tilings_have_single_owners() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..30 {
        let (n, m) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let mesh = common::random_tiling(&mut rng, n, m, 48);
        let got = rasterize_occupancy(&mesh, 48, 48).unwrap();
        assert_eq!(got.ids(), &common::occupancy(&mesh, 48, 48)[..]);
        let counts = common::containment_counts(&mesh, 48, 48);
        assert!(counts.iter().all(|&c| c <= 1), "a texel center is claimed twice");
        // interior of the tiled square is fully covered
        assert!(got.occupied_count() > 0);
    }
}

#[test]
fn occupancy_independent_of_workers_and_bands() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mesh = common::random_soup(&mut rng, 50, 100);
    let g = TexelGrid::new(100, 77);
    let a = rasterize_occupancy_with(&mesh, &g, 1).unwrap();
    let b = rasterize_occupancy_with(&mesh, &g, 4).unwrap();
    assert_eq!(a, b);
}

fn random_cube(rng: &mut impl Rng, w: usize, h: usize, b: usize) -> SpectralCube {
    let data: Vec<f64> = (0..w * h * b)
        .map(|_| if rng.random_bool(0.02) { 0.0 } else { rng.random::<f64>() })
        .collect();
    let mut bits: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.9)).collect();
    // a few all-zero spectra
    for t in 0..w * h {
        if rng.random_bool(0.01) {
            bits[t] = true;
        }
    }
    let mut data = data;
    for t in (0..w * h).step_by(97) {
        data[t * b..(t + 1) * b].fill(0.0);
    }
    let bands = (0..b)
        .map(|i| BandDescriptor {
            modality: Modality::Other,
            channel: format!("b{i}"),
            source: "random".into(),
        })
        .collect();
    SpectralCube::from_interleaved(w, h, bands, data, Mask::from_bits(w, h, bits).unwrap()).unwrap()
}

fn random_reference(rng: &mut impl Rng, b: usize, label: &str) -> ReferenceSpectrum {
    ReferenceSpectrum::new(label, (0..b).map(|_| rng.random::<f64>() + 0.01).collect()).unwrap()
}

#[test]
fn sam_map_bit_identical_to_scalar_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    for (w, h) in [(16, 16), (64, 64), (37, 5)] {
        let cube = random_cube(&mut rng, w, h, 6);
        let r = random_reference(&mut rng, 6, "r");
        let expected = common::sam(cube.data(), cube.valid().bits(), w, h, r.vector());
        for workers in [1, 3] {
            let got = sam_map(&cube, &r, workers).unwrap();
            let got_bits: Vec<u64> = got.angles().iter().map(|a| a.to_bits()).collect();
            let exp_bits: Vec<u64> = expected.iter().map(|a| a.to_bits()).collect();
            assert_eq!(got_bits, exp_bits);
        }
    }
}

#[test]
fn classify_multi_matches_exhaustive_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for _ in 0..5 {
        let cube = random_cube(&mut rng, 64, 64, 6);
        let refs: Vec<_> = (0..3).map(|i| random_reference(&mut rng, 6, &format!("r{i}"))).collect();
        let theta = rng.random_range(0.05..0.6);
        let vecs: Vec<Vec<f64>> = refs.iter().map(|r| r.vector().to_vec()).collect();
        let expected = common::labels(cube.data(), cube.valid().bits(), &vecs, theta);
        let got = classify_multi(&cube, &refs, theta, 2).unwrap();
        assert_eq!(got.labels(), &expected[..]);
    }
}

#[test]
fn scaled_reference_texels_are_near_zero() {
    // arbitrary positive scale factors are exact only up to arccos conditioning
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let r: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.05).collect();
    let data: Vec<f64> = (0..64)
        .flat_map(|_| {
            let c = rng.random_range(1e-3..1e3);
            r.iter().map(move |x| x * c).collect::<Vec<_>>()
        })
        .collect();
    let bands = (0..6)
        .map(|i| BandDescriptor { modality: Modality::Other, channel: format!("{i}"), source: "s".into() })
        .collect();
    let cube = SpectralCube::from_interleaved(8, 8, bands, data, Mask::filled(8, 8, true)).unwrap();
    let map = sam_map(&cube, &ReferenceSpectrum::new("r", r).unwrap(), 1).unwrap();
    assert!(map.angles().iter().all(|&a| (0.0..1e-7).contains(&a)));
    assert_eq!(threshold_region(&map, 1e-7).unwrap().count(), 64);
}
