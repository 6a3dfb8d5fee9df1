mod common;

use common::{silica, LAMBDA};
use fiber_pldos::beam::BeamConfig;
use fiber_pldos::curve::{argmax, peak_location};
use fiber_pldos::experiment::{
    add_shot_noise, cross_scan_profile, diameter_sweep_points, fit_lorentzian, fit_scan,
    lorentzian, simulate_cross_scan, simulate_diameter_sweep, Axis, Provenance, Sample,
    ScanCurve, ScanModel,
};
use fiber_pldos::pldos::{default_s_grid, linspace, pldos_at};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const A: f64 = 200e-9;

fn beam(delta: f64) -> BeamConfig {
    BeamConfig::from_delta(delta).unwrap()
}

fn diameters_for(grid: &[f64]) -> Vec<f64> {
    let k = 2.0 * std::f64::consts::PI / LAMBDA;
    grid.iter().map(|s| 2.0 * s / k).collect()
}

fn scan_data(model: &ScanModel, amp: f64, offset: f64) -> ScanCurve {
    let ys = linspace(-300e-9, 300e-9, 61);
    let v: Vec<f64> = ys.iter().map(|&y| model.eval_shifted(y, amp, offset)).collect();
    ScanCurve::from_xy(Axis::YPosition, "counts", &ys, &v).unwrap()
}

#[test]
fn cross_scan_is_symmetric() {
    for delta in [10e-9, 175e-9] {
        let scan = simulate_cross_scan(&silica(A), &beam(delta), &linspace(-250e-9, 250e-9, 201)).unwrap();
        let v = scan.values();
        for i in 0..v.len() {
            assert!((v[i] - v[v.len() - 1 - i]).abs() < 1e-9);
        }
        assert_eq!(v.iter().copied().fold(0.0, f64::max), 1.0);
    }
}

#[test]
fn shallow_scan_varies_slowly_across_the_center() {
    let ys = linspace(-250e-9, 250e-9, 201);
    let scan = simulate_cross_scan(&silica(A), &beam(10e-9), &ys).unwrap();
    let central: Vec<f64> = scan
        .samples
        .iter()
        .filter(|s| s.x.abs() <= 0.6 * A)
        .map(|s| s.value)
        .collect();
    let max = central.iter().copied().fold(0.0, f64::max);
    let min = central.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(max / min < 1.5, "max/min {}", max / min);
}

#[test]
fn surface_emission_limit_is_flat() {
    let b = beam(0.0).with_sigma(0.0).unwrap();
    let ys = linspace(-A, A, 81);
    let scan = simulate_cross_scan(&silica(A), &b, &ys).unwrap();
    for s in &scan.samples {
        assert!((s.value - 1.0).abs() < 1e-9, "y={}", s.x);
    }
}

#[test]
fn unblurred_scan_is_pointwise_pldos() {
    let b = beam(10e-9).with_sigma(0.0).unwrap();
    let ys = linspace(-A, A, 41);
    let raw = cross_scan_profile(&silica(A), &b, &ys).unwrap();
    for (&y, &v) in ys.iter().zip(&raw) {
        let stop = fiber_pldos::beam::stopping_point(A, y, 10e-9).unwrap();
        let want = match stop.emission_radius() {
            Some(r) => pldos_at(&silica(A), r.min(A)).unwrap().rho_g,
            None => 0.0,
        };
        assert!((v - want).abs() <= 1e-12 * want.max(1.0), "y={y}");
    }
}

#[test]
fn cross_scan_grid_requirements() {
    let b = beam(10e-9);
    assert!(simulate_cross_scan(&silica(A), &b, &linspace(-150e-9, 250e-9, 101)).is_err());
    assert!(simulate_cross_scan(&silica(A), &b, &linspace(-250e-9, 250e-9, 21)).is_err());
}

#[test]
fn simulations_are_deterministic() {
    let ys = linspace(-250e-9, 250e-9, 101);
    let a = simulate_cross_scan(&silica(A), &beam(10e-9), &ys).unwrap();
    let b = simulate_cross_scan(&silica(A), &beam(10e-9), &ys).unwrap();
    assert_eq!(a, b);
    let d = diameters_for(&linspace(0.8, 3.0, 30));
    assert_eq!(
        simulate_diameter_sweep(&d, &beam(10e-9), &silica(A)).unwrap(),
        simulate_diameter_sweep(&d, &beam(10e-9), &silica(A)).unwrap()
    );
}

#[test]
fn diameter_sweep_peaks() {
    let grid = default_s_grid();
    let d = diameters_for(&grid);
    let shallow = simulate_diameter_sweep(&d, &beam(10e-9), &silica(A)).unwrap();
    let deep = simulate_diameter_sweep(&d, &beam(175e-9), &silica(A)).unwrap();
    assert_eq!(shallow.axis, Axis::SizeParam);
    for (s, g) in shallow.samples.iter().zip(&grid) {
        assert!((s.x - g).abs() < 1e-12 * g);
    }
    let p10 = peak_location(&shallow.xs(), &shallow.values()).unwrap();
    let p175 = peak_location(&deep.xs(), &deep.values()).unwrap();
    assert!((p10 - 1.4).abs() <= 0.15, "{p10}");
    assert!((p175 - 1.9).abs() <= 0.15, "{p175}");
    assert!(p10 < p175);
}

#[test]
fn four_hundred_nm_is_brightest() {
    let d: Vec<f64> = [200.0, 400.0, 600.0, 800.0, 1000.0].iter().map(|v| v * 1e-9).collect();
    let points = diameter_sweep_points(&d, &beam(10e-9), &silica(A)).unwrap();
    let raw: Vec<f64> = points.iter().map(|p| p.rho_g).collect();
    assert_eq!(argmax(&raw), Some(1));
}

#[test]
fn diameter_sweep_validation() {
    let b = beam(10e-9);
    assert!(simulate_diameter_sweep(&[], &b, &silica(A)).is_err());
    assert!(simulate_diameter_sweep(&[400e-9, 200e-9], &b, &silica(A)).is_err());
    assert!(simulate_diameter_sweep(&[-1e-9, 200e-9], &b, &silica(A)).is_err());
}

fn unit_curve() -> ScanCurve {
    let ys = linspace(-250e-9, 250e-9, 101);
    simulate_cross_scan(&silica(A), &beam(10e-9), &ys).unwrap()
}

#[test]
fn shot_noise_determinism_and_large_counts() {
    let c = unit_curve();
    assert_eq!(add_shot_noise(&c, 1000, 7).unwrap(), add_shot_noise(&c, 1000, 7).unwrap());
    assert_ne!(add_shot_noise(&c, 1000, 7).unwrap(), add_shot_noise(&c, 1000, 8).unwrap());
    let i = argmax(&c.values()).unwrap();
    let big = add_shot_noise(&c, 100_000_000, 1).unwrap();
    assert!((big.samples[i].value - 1.0).abs() < 1e-3);
    assert!(add_shot_noise(&c, 0, 1).is_err());
}

#[test]
fn shot_noise_variance() {
    let c = unit_curve();
    let i = argmax(&c.values()).unwrap();
    let n = 400u64;
    let draws: Vec<f64> = (0..1000)
        .map(|seed| add_shot_noise(&c, n, seed).unwrap().samples[i].value)
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    // value = k/N with k ~ Poisson(N): variance 1/N
    let want = 1.0 / n as f64;
    assert!((var - want).abs() < 0.1 * want, "variance {var} vs {want}");
    let unc = add_shot_noise(&c, n, 0).unwrap().samples[i].uncertainty.unwrap();
    assert!((unc - want.sqrt()).abs() < 1e-15);
}

#[test]
fn scan_fit_round_trip_and_linearity() {
    let model = ScanModel::simulate(&silica(A), &beam(10e-9)).unwrap();
    let data = scan_data(&model, 1.7, 23e-9);
    let fit = fit_scan(&data, &model).unwrap();
    assert!(fit.converged);
    assert!((fit.param("amplitude").unwrap() - 1.7).abs() < 1e-6);
    assert!((fit.param("offset_nm").unwrap() - 23.0).abs() < 1e-6);
    assert!(fit.residual_history.windows(2).all(|w| w[1] <= w[0]));

    let c = 3.25;
    let scaled = ScanCurve::from_xy(
        Axis::YPosition,
        "counts",
        &data.xs(),
        &data.values().iter().map(|v| v * c).collect::<Vec<_>>(),
    )
    .unwrap();
    let fit2 = fit_scan(&scaled, &model).unwrap();
    let ratio = fit2.param("amplitude").unwrap() / fit.param("amplitude").unwrap();
    assert!((ratio - c).abs() < 1e-9 * c);
    assert!((fit2.param("offset_nm").unwrap() - fit.param("offset_nm").unwrap()).abs() < 1e-9);
}

#[test]
fn scan_fit_offsets_within_bounds() {
    let model = ScanModel::simulate(&silica(A), &beam(10e-9)).unwrap();
    for offset in [-150e-9, -40e-9, 0.0, 75e-9, 150e-9] {
        let fit = fit_scan(&scan_data(&model, 0.8, offset), &model).unwrap();
        let o = fit.param("offset_nm").unwrap();
        assert!((o - offset * 1e9).abs() < 1e-6, "{offset}: {o}");
        assert!(o.abs() <= 200.0);
    }
}

#[test]
fn scan_fit_coverage() {
    let model = ScanModel::simulate(&silica(A), &beam(10e-9)).unwrap();
    let clean = scan_data(&model, 1.7, 23e-9);
    let mut covered = 0;
    for seed in 0..200 {
        let noisy = add_shot_noise(&clean, 10_000, seed).unwrap();
        let fit = fit_scan(&noisy, &model).unwrap();
        let se = fit.std_error("offset_nm").unwrap();
        if (fit.param("offset_nm").unwrap() - 23.0).abs() <= 3.0 * se {
            covered += 1;
        }
    }
    assert!(covered >= 190, "covered {covered}/200");
}

fn spectrum(center: f64) -> ScanCurve {
    let xs = linspace(600e-9, 720e-9, 121);
    let v: Vec<f64> = xs.iter().map(|x| lorentzian(x * 1e9, 1.0, center, 28.0)).collect();
    ScanCurve::from_xy(Axis::Wavelength, "counts", &xs, &v).unwrap()
}

#[test]
fn lorentzian_round_trip_and_shift() {
    let fit = fit_lorentzian(&spectrum(659.0)).unwrap();
    assert!(fit.converged);
    assert!((fit.param("amplitude").unwrap() - 1.0).abs() < 1e-8);
    assert!((fit.param("center_nm").unwrap() - 659.0).abs() < 1e-8);
    assert!((fit.param("fwhm_nm").unwrap() - 28.0).abs() < 1e-8);

    let base = spectrum(659.0);
    let shifted_x: Vec<f64> = base.xs().iter().map(|x| x + 5e-9).collect();
    let shifted = ScanCurve::from_xy(Axis::Wavelength, "counts", &shifted_x, &base.values()).unwrap();
    let fit2 = fit_lorentzian(&shifted).unwrap();
    let shift = fit2.param("center_nm").unwrap() - fit.param("center_nm").unwrap();
    assert!((shift - 5.0).abs() < 1e-8, "shift {shift}");
}

#[test]
fn lorentzian_with_multiplicative_noise() {
    let clean = spectrum(659.0);
    let normal = Normal::new(0.0, 0.05).unwrap();
    let mut good = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = clean
            .samples
            .iter()
            .map(|s| Sample {
                value: s.value * (1.0 + normal.sample(&mut rng)),
                ..*s
            })
            .collect();
        let noisy = ScanCurve::new(Axis::Wavelength, "counts", samples, Provenance::default()).unwrap();
        let fit = fit_lorentzian(&noisy).unwrap();
        if (fit.param("center_nm").unwrap() - 659.0).abs() <= 1.0
            && (fit.param("fwhm_nm").unwrap() - 28.0).abs() <= 3.0
        {
            good += 1;
        }
    }
    assert!(good >= 180, "{good}/200");
}

#[test]
fn fit_preconditions() {
    let model = ScanModel::simulate(&silica(A), &beam(10e-9)).unwrap();
    let four = ScanCurve::from_xy(Axis::YPosition, "v", &[0.0, 1e-9, 2e-9, 3e-9], &[1.0; 4]).unwrap();
    assert!(fit_scan(&four, &model).is_err());
    let xs = linspace(655e-9, 663e-9, 9);
    let v: Vec<f64> = xs.iter().map(|x| lorentzian(x * 1e9, 1.0, 659.0, 28.0)).collect();
    let narrow = ScanCurve::from_xy(Axis::Wavelength, "v", &xs, &v).unwrap();
    assert!(fit_lorentzian(&narrow).is_err());
}
