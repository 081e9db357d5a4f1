//! Property tests for the spectral and degradation invariants.

use convdiff::degradation::fractional_power;
use convdiff::io::pnm::{decode_pnm, encode_pnm};
use convdiff::{
    degrade_unclamped, fft2_plane, ifft2, kernel_to_transfer, make_gaussian_kernel, psnr, ssim,
    DegradationStrength, GaussianSpec, Image, Plane,
};
use proptest::prelude::*;

fn plane(h: usize, w: usize) -> impl Strategy<Value = Plane> {
    prop::collection::vec(-1.0f64..1.0, h * w).prop_map(move |d| Plane::new(h, w, d).unwrap())
}

fn image(h: usize, w: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0.0f64..=1.0, h * w).prop_map(move |d| Image::new(h, w, 1, d).unwrap())
}

fn strength(b: f64) -> DegradationStrength {
    DegradationStrength::new(b).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dft_round_trip(p in (8usize..24, 8usize..24).prop_flat_map(|(h, w)| plane(h, w))) {
        let back = ifft2(&fft2_plane(&p).unwrap());
        for (a, b) in p.data().iter().zip(back.plane.data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(back.imag_residue < 1e-12);
    }

    #[test]
    fn parseval(p in plane(16, 20)) {
        let spatial: f64 = p.data().iter().map(|v| v * v).sum();
        let spectral: f64 = fft2_plane(&p).unwrap().values().iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((spatial - spectral / (16.0 * 20.0)).abs() <= 1e-9 * spatial.max(1.0));
    }

    #[test]
    fn exponent_additivity(sigma in 2.0f64..4.0, a in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let b = (1.0 - a) * t;
        let h = kernel_to_transfer(&make_gaussian_kernel(&GaussianSpec::untruncated(sigma).unwrap()), 64, 64).unwrap();
        let lhs = fractional_power(&h, strength(a)).multiply(&fractional_power(&h, strength(b))).unwrap();
        let rhs = fractional_power(&h, strength((a + b).min(1.0)));
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
    }

    #[test]
    fn monotone_attenuation(sigma in 2.0f64..4.0, a in 0.0f64..=1.0, t in 0.0f64..=1.0) {
        let b = a + (1.0 - a) * t;
        let h = kernel_to_transfer(&make_gaussian_kernel(&GaussianSpec::with_sigma(sigma).unwrap()), 32, 32).unwrap();
        let ha = fractional_power(&h, strength(a));
        let hb = fractional_power(&h, strength(b));
        for (x, y) in ha.values().iter().zip(hb.values()) {
            prop_assert!(x.norm() + 1e-12 >= y.norm());
            prop_assert!(x.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn mean_preserved(x in image(16, 16), sigma in 2.0f64..4.0, beta in 0.0f64..=1.0) {
        let h = kernel_to_transfer(&make_gaussian_kernel(&GaussianSpec::with_sigma(sigma).unwrap()), 16, 16).unwrap();
        let y = degrade_unclamped(&x, &h, strength(beta)).unwrap();
        prop_assert!((y.mean() - x.mean()).abs() < 1e-6);
    }

    #[test]
    fn metrics_are_symmetric_and_bounded(a in image(16, 16), b in image(16, 16)) {
        let (ab, ba) = (ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert!(psnr(&a, &b).unwrap() <= 100.0);
    }

    #[test]
    fn pnm_16bit_round_trip(x in image(12, 9)) {
        let back = decode_pnm(&encode_pnm(&x, 65535).unwrap(), None).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 1.0 / 131070.0 + 1e-15);
        }
    }
}

#[test]
fn trajectory_elements_have_valid_cumulative_kernels() {
    use convdiff::{
        estimate_from_images, make_test_image, trajectory, validate_kernel, TestImageKind,
        WienerConfig,
    };
    let x0 = make_test_image(TestImageKind::Broadband, 128, 128, 9).unwrap();
    for sigma in [2.0, 3.0, 4.0] {
        let spec = GaussianSpec::untruncated(sigma).unwrap();
        let h = kernel_to_transfer(&make_gaussian_kernel(&spec), 128, 128).unwrap();
        for (t, xt) in trajectory(&x0, &h, 4).unwrap().iter().enumerate() {
            let est = estimate_from_images(&x0, xt, &WienerConfig::default()).unwrap();
            let report = validate_kernel(&est.transfer, spec.size).unwrap();
            assert!(report.is_valid, "sigma={sigma} t={t}: {report:?}");
        }
    }
}
