mod common;

use blurmm::calib::lv_sigma_curve;
use blurmm::imgcore::{decode_pnm, encode_pnm, gaussian_blur, gaussian_kernel_1d, laplacian, laplacian_variance, Raster};
use blurmm::rng::RngSpec;
use blurmm::synth::{synthetic_corpus, CorpusSpec};
use proptest::prelude::*;

use common::{interior_max_abs, stream, textured};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kernel_is_normalized_and_symmetric(sigma in 0.0f64..=10.0) {
        let k = gaussian_kernel_1d(sigma).unwrap();
        let w = k.weights();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert_eq!(w.len(), 2 * k.radius() + 1);
        for i in 0..w.len() {
            prop_assert_eq!(w[i], w[w.len() - 1 - i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_sigma_is_bit_identical(
        w in 1usize..12,
        h in 1usize..12,
        rgb in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let c = if rgb { 3 } else { 1 };
        let mut s = stream(seed, 0);
        let px: Vec<f64> = (0..w * h * c).map(|_| 255.0 * s.next_f64()).collect();
        let r = Raster::new(w, h, c, px).unwrap();
        prop_assert_eq!(gaussian_blur(&r, 0.0).unwrap(), r);
    }

    #[test]
    fn pnm_decode_encode_round_trips(
        w in 1usize..10,
        h in 1usize..10,
        rgb in any::<bool>(),
        bytes in proptest::collection::vec(any::<u8>(), 300),
    ) {
        let c = if rgb { 3 } else { 1 };
        let px: Vec<f64> = bytes[..w * h * c].iter().map(|&b| f64::from(b)).collect();
        let r = Raster::new(w, h, c, px).unwrap();
        let encoded = encode_pnm(&r);
        let decoded = decode_pnm(&encoded).unwrap();
        prop_assert_eq!(&decoded, &r);
        prop_assert_eq!(encode_pnm(&decoded), encoded);
    }

    #[test]
    fn blur_preserves_interior_mean_of_constant_patches(value in 0.0f64..255.0, sigma in 0.1f64..4.0) {
        let r = Raster::filled(24, 24, value);
        let b = gaussian_blur(&r, sigma).unwrap();
        prop_assert!(b.pixels().iter().all(|&v| (v - value).abs() <= 1e-9 * value.max(1.0)));
    }
}

#[test]
fn blur_preserves_mean_when_texture_stays_off_the_border() {
    let mut s = stream(1, 1);
    for sigma in [0.5, 1.0, 2.5] {
        let m = gaussian_kernel_1d(sigma).unwrap().radius();
        let size = 64;
        let px: Vec<f64> = (0..size * size)
            .map(|i| {
                let (x, y) = (i % size, i / size);
                let inside = (m + 1..size - m - 1).contains(&x) && (m + 1..size - m - 1).contains(&y);
                if inside { 255.0 * s.next_f64() } else { 100.0 }
            })
            .collect();
        let r = Raster::new(size, size, 1, px).unwrap();
        let b = gaussian_blur(&r, sigma).unwrap();
        let (before, after) = (r.channel_means()[0], b.channel_means()[0]);
        assert!((before - after).abs() <= 1e-9 * before, "σ {sigma}: {before} vs {after}");
    }
}

#[test]
fn semigroup_on_interior_pixels() {
    let mut s = stream(2, 2);
    for _ in 0..20 {
        let r = textured(96, &mut s);
        for (s1, s2) in [(1.0f64, 1.0f64), (2.0, 1.5), (3.0, 4.0)] {
            let twice = gaussian_blur(&gaussian_blur(&r, s1).unwrap(), s2).unwrap();
            let once = gaussian_blur(&r, s1.hypot(s2)).unwrap();
            let margin = (3.0 * (s1 + s2)).ceil() as usize;
            let diff = interior_max_abs(&twice, &once, margin);
            assert!(diff <= 1.0, "σ ({s1}, {s2}): {diff}");
        }
    }
}

#[test]
fn laplacian_and_lv_hand_values() {
    let mut px = vec![0.0; 9];
    px[4] = 90.0;
    let r = Raster::new(3, 3, 1, px).unwrap();
    let l = laplacian(&r).unwrap();
    assert_eq!(l.pixels(), &[0.0, 180.0, 0.0, 180.0, -360.0, 180.0, 0.0, 180.0, 0.0]);
    assert_eq!(laplacian_variance(&r).unwrap(), 27200.0);
}

#[test]
fn median_lv_decreases_through_sigma_seven() {
    let spec = CorpusSpec { n_slides: 20, tiles_per_slide: 10, ..CorpusSpec::default() };
    let rng = RngSpec::new(5);
    let corpus = synthetic_corpus(&spec, &rng).unwrap();
    let sigmas: Vec<f64> = (0..=20).map(|i| 0.5 * f64::from(i)).collect();
    let curve = lv_sigma_curve(&corpus, &sigmas, 200, &rng).unwrap();
    assert_eq!(curve.rows[0].n, 200);
    let through_seven: Vec<f64> = curve.rows.iter().filter(|r| r.sigma <= 7.0).map(|r| r.p50).collect();
    assert_eq!(through_seven.len(), 15);
    assert!(through_seven.windows(2).all(|w| w[1] < w[0]), "{through_seven:?}");
    for row in &curve.rows {
        assert!(row.p05 <= row.p25 && row.p25 <= row.p50 && row.p50 <= row.p75 && row.p75 <= row.p95);
    }
}

#[test]
fn lv_never_increases_with_blur_on_a_textured_tile() {
    let mut s = stream(3, 3);
    let r = textured(64, &mut s);
    let lvs: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|&sigma| laplacian_variance(&gaussian_blur(&r, sigma).unwrap()).unwrap())
        .collect();
    assert!(lvs.windows(2).all(|w| w[1] <= w[0]), "{lvs:?}");
}
