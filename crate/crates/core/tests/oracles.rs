//! Checks against independent references: brute-force DFTs, closed-form transforms and
//! Gaussian moment integrals.

use std::f64::consts::PI;

use num_complex::Complex64;
use stov_core::entangled::{realize, EntangledStateSpec};
use stov_core::instruments::{
    estimate_charge, phase_scan, spectrometer, spectrometer_vector, spectrometer_with,
};
use stov_core::polarization::time_averaged_stokes_profile;
use stov_core::{inner_product, make_grid, synthesize_mode, GridSpec, StovParams};

fn default_grid() -> GridSpec {
    make_grid(256, 256, 4.0, 4.0).unwrap()
}

fn mode(q: i32, eta: f64, grid: &GridSpec) -> stov_core::ScalarField {
    let params = StovParams {
        eta,
        ..StovParams::with_charge(q)
    };
    synthesize_mode(&params, grid).unwrap()
}

#[test]
fn spectrometer_matches_brute_force_dft() {
    let grid = make_grid(24, 32, 3.0, 3.5).unwrap();
    let f = mode(2, 1.3, &grid);
    for oversample in [1, 3] {
        let sp = spectrometer_with(&f, oversample);
        let dw = grid.dw();
        let mut worst: f64 = 0.0;
        for i in 0..grid.n_u {
            for (k, &omega) in sp.omega_axis.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..grid.n_w {
                    acc += f.values[[i, j]] * Complex64::from_polar(dw, -omega * grid.w(j));
                }
                let want = acc.norm_sqr() / (2.0 * PI);
                worst = worst.max((sp.intensity[[i, k]] - want).abs());
            }
        }
        assert!(
            worst <= 1e-12 * sp.peak(),
            "oversample {oversample}: {worst:e}"
        );
    }
}

#[test]
fn q_plus_one_spectrum_follows_closed_form() {
    // (u + i w) e^{-u^2 - w^2} transforms to sqrt(pi) (u + Omega/2) e^{-u^2 - Omega^2/4}.
    let grid = default_grid();
    let sp = spectrometer(&mode(1, 1.0, &grid)).crop_omega(12.0);
    let model = |u: f64, o: f64| {
        let a = (u + 0.5 * o) * (-u * u - 0.25 * o * o).exp();
        a * a
    };
    let (mut num, mut den) = (0.0, 0.0);
    for ((i, k), v) in sp.intensity.indexed_iter() {
        let m = model(sp.u_axis[i], sp.omega_axis[k]);
        num += v * m;
        den += m * m;
    }
    let scale = num / den;
    let worst = sp
        .intensity
        .indexed_iter()
        .map(|((i, k), v)| (v - scale * model(sp.u_axis[i], sp.omega_axis[k])).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6 * sp.peak(), "{worst:e}");
}

#[test]
fn parseval_for_all_charges() {
    let grid = default_grid();
    for q in -3..=3 {
        let f = mode(q, 1.0, &grid);
        let rel = (spectrometer(&f).total_power() - f.total_power()).abs() / f.total_power();
        assert!(rel <= 1e-9, "q={q}: {rel:e}");
    }
}

#[test]
fn charge_estimator_is_exact_on_default_grid() {
    let grid = default_grid();
    for q in -3..=3 {
        let est = estimate_charge(&spectrometer(&mode(q, 1.0, &grid))).unwrap();
        assert_eq!(est.magnitude, q.unsigned_abs(), "q={q}: {est:?}");
        assert_eq!(est.dark_regions, q.unsigned_abs(), "q={q}");
        assert_eq!(est.sign, q.signum(), "q={q}: {est:?}");
        if q != 0 {
            assert!(est.confidence >= 0.9, "q={q}: {est:?}");
        } else {
            assert!(est.confidence < 0.5, "{est:?}");
        }
    }
}

#[test]
fn entangled_spectrograms_hide_helicity() {
    let grid = default_grid();
    for q in 1..=3 {
        for delta in [0.0, PI] {
            let spec = EntangledStateSpec::circular_pair(q, delta, StovParams::default());
            let vf = realize(&spec, &grid).unwrap();
            let est = estimate_charge(&spectrometer_vector(&vf).unwrap()).unwrap();
            assert_eq!(est.magnitude, q as u32, "q={q} delta={delta}: {est:?}");
            assert_eq!(est.sign, 0, "q={q} delta={delta}: {est:?}");
        }
    }
}

#[test]
fn overlap_of_opposite_charges_at_eta_two() {
    // <+1|-1> = (<u^2> - <w^2>) / (<u^2> + <w^2>) under e^{-2u^2 - 8w^2}: (1/4 - 1/16) / (1/4 + 1/16).
    let grid = default_grid();
    let c = inner_product(&mode(1, 2.0, &grid), &mode(-1, 2.0, &grid)).unwrap();
    assert!((c.re - 0.6).abs() <= 1e-9 && c.im.abs() <= 1e-12, "{c}");
    let scan = phase_scan(&mode(1, 2.0, &grid), &mode(-1, 2.0, &grid), 16).unwrap();
    assert!((scan.v - 0.6).abs() <= 1e-9);
}

#[test]
fn overlap_matches_gaussian_moments_for_mixed_pairs() {
    // <0|2> for canonical modes: (u + i w)^2 has mean <u^2> - <w^2> = 0 at eta = 1,
    // and (1/4 - 1/(4 eta^2)) / norms otherwise.
    let grid = default_grid();
    for eta in [1.0, 1.5, 2.0] {
        let (a, b): (f64, f64) = (0.25, 0.25 / (eta * eta));
        // Norms: E[1] = 1, E[|u + i w|^4] = 3a^2 + 2ab + 3b^2.
        let want = (a - b) / (3.0 * a * a + 2.0 * a * b + 3.0 * b * b).sqrt();
        let c = inner_product(&mode(0, eta, &grid), &mode(2, eta, &grid)).unwrap();
        assert!(
            (c.re - want).abs() <= 1e-9 && c.im.abs() <= 1e-12,
            "eta={eta}: {c} vs {want}"
        );
    }
}

#[test]
fn stokes_s1_profile_matches_moment_integral() {
    // In phase: s ~ -w g, p ~ u g, so the row-integrated s1 ~ (u^2 - 1/4) e^{-2u^2}.
    let grid = default_grid();
    let u = grid.u_coords();
    for (delta, sign) in [(0.0, 1.0), (PI, -1.0)] {
        let spec = EntangledStateSpec::circular_pair(1, delta, StovParams::default());
        let profile = time_averaged_stokes_profile(&realize(&spec, &grid).unwrap());
        let s0_peak = profile.iter().map(|s| s.s0).fold(0.0, f64::max);
        let model: Vec<f64> = u
            .iter()
            .map(|&x| sign * (x * x - 0.25) * (-2.0 * x * x).exp())
            .collect();
        let scale = profile
            .iter()
            .zip(&model)
            .map(|(s, m)| s.s1 * m)
            .sum::<f64>()
            / model.iter().map(|m| m * m).sum::<f64>();
        assert!(scale > 0.0);
        for (s, m) in profile.iter().zip(&model) {
            assert!((s.s1 - scale * m).abs() <= 1e-9 * s0_peak);
            assert!(s.s2.abs() <= 1e-10 * s0_peak && s.s3.abs() <= 1e-10 * s0_peak);
        }
        let crossing = (grid.n_u / 2..grid.n_u - 1)
            .find(|&k| profile[k].s1.signum() != profile[k + 1].s1.signum())
            .map(|k| {
                let (a, b) = (profile[k].s1, profile[k + 1].s1);
                u[k] + (u[k + 1] - u[k]) * a / (a - b)
            })
            .unwrap();
        assert!((crossing - 0.5).abs() <= 0.02, "{crossing}");
    }
}

#[test]
fn entangled_fields_match_closed_form_at_random_points() {
    use rand::{Rng, SeedableRng};
    use stov_core::entangled::oracle_check;

    let grid = make_grid(257, 257, 4.0, 4.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5707);
    let mut samples = Vec::new();
    while samples.len() < 64 {
        let (i, j) = (rng.random_range(8..249), rng.random_range(8..249));
        // Stay off the singular axis point.
        if (i, j) != (128, 128) {
            samples.push((i, j));
        }
    }
    for delta in [0.0, PI] {
        let spec = EntangledStateSpec::circular_pair(1, delta, StovParams::default());
        let report = oracle_check(&spec, &grid, &samples).unwrap();
        assert_eq!(report.checked, 64);
        assert!(
            report.min_alignment >= 1.0 - 1e-9,
            "{}",
            report.min_alignment
        );
    }
}
