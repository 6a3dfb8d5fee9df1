//! HE11 solver checks against independent oracles: the textbook form of the
//! hybrid-mode eigenvalue equation with its own bisection, dense residual
//! scans, boundary conditions, and a separate transcription of the core
//! intensity.

use std::f64::consts::PI;

use fiber_pldos::fiber::{
    af_decomposition, dispersion_residual, field_components, normalize_mode, solve_he11,
    v_number, FiberSpec,
};
use fiber_pldos::pldos::linspace;
use fiber_pldos::special::{bessel_j, bessel_j_prime, bessel_k, bessel_k_prime, BesselOrder};
use proptest::prelude::*;

const LAMBDA: f64 = 659e-9;

fn spec(a: f64) -> FiberSpec {
    FiberSpec::new(a, 1.46, 1.0, LAMBDA).unwrap()
}

fn from_s(s: f64) -> FiberSpec {
    FiberSpec::from_size_parameter(s, 1.46, 1.0, LAMBDA).unwrap()
}

fn j(m: u8, x: f64) -> f64 {
    bessel_j(BesselOrder::new(m).unwrap(), x).unwrap()
}

fn k(m: u8, x: f64) -> f64 {
    bessel_k(BesselOrder::new(m).unwrap(), x).unwrap()
}

/// (J1'/(u J1) + K1'/(w K1)) (J1'/(u J1) + (n2/n1)^2 K1'/(w K1))
///   - (n_eff/n1)^2 (1/u^2 + 1/w^2)^2
fn textbook_residual(spec: &FiberSpec, n_eff: f64) -> f64 {
    let k0 = 2.0 * PI / spec.wavelength;
    let (n1, n2) = (spec.n_core, spec.n_clad);
    let u = spec.radius * k0 * (n1 * n1 - n_eff * n_eff).sqrt();
    let w = spec.radius * k0 * (n_eff * n_eff - n2 * n2).sqrt();
    let one = BesselOrder::new(1).unwrap();
    let jj = bessel_j_prime(one, u).unwrap() / (u * j(1, u));
    let kk = bessel_k_prime(one, w).unwrap() / (w * k(1, w));
    let rhs = (n_eff / n1).powi(2) * (1.0 / (u * u) + 1.0 / (w * w)).powi(2);
    (jj + kk) * (jj + (n2 / n1).powi(2) * kk) - rhs
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn v_number_by_definition() {
    let want = 2.0 * PI * 200e-9 / 659e-9 * (1.46f64 * 1.46 - 1.0).sqrt();
    assert!((v_number(&spec(200e-9)) - want).abs() < 1e-14 * want);
    let doubled = FiberSpec::new(400e-9, 1.46, 1.0, 2.0 * LAMBDA).unwrap();
    assert!((v_number(&doubled) - want).abs() < 1e-14 * want);
    let weak = FiberSpec::new(200e-9, 1.46, 1.46 - 1e-12, LAMBDA).unwrap();
    assert!(v_number(&weak) < 1e-4);
}

#[test]
fn root_against_textbook_equation() {
    for a in [150e-9, 200e-9, 250e-9] {
        let sp = spec(a);
        let mode = solve_he11(&sp).unwrap();
        // dense scan for the largest sign change, then bisection
        let grid = linspace(1.0 + 1e-3, 1.46 - 1e-9, 100_000);
        let vals: Vec<f64> = grid.iter().map(|&n| textbook_residual(&sp, n)).collect();
        let i = (0..grid.len() - 1)
            .rev()
            .find(|&i| vals[i].signum() != vals[i + 1].signum())
            .expect("sign change");
        let n_oracle = bisect(|n| textbook_residual(&sp, n), grid[i], grid[i + 1]);
        assert!(
            (mode.n_eff - n_oracle).abs() < 1e-10,
            "a={a}: solver {} oracle {n_oracle}",
            mode.n_eff
        );
    }
}

#[test]
fn residual_vanishes_at_root() {
    for s in linspace(0.5, 5.0, 50) {
        let sp = from_s(s);
        let mode = solve_he11(&sp).unwrap();
        assert!(dispersion_residual(&sp, mode.n_eff).unwrap().abs() < 1e-10, "s={s}");
    }
}

#[test]
fn single_sign_change_below_v2() {
    let sp = spec(150e-9);
    assert!(v_number(&sp) < 2.0);
    let grid = linspace(1.0 + 1e-6, 1.46 - 1e-9, 100_000);
    let vals: Vec<f64> = grid
        .iter()
        .map(|&n| dispersion_residual(&sp, n).unwrap())
        .collect();
    let changes = vals.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    assert_eq!(changes, 1);
    let root = solve_he11(&sp).unwrap().n_eff;
    assert!(vals[0].signum() != dispersion_residual(&sp, 1.46 - 1e-9).unwrap().signum());
    assert!(root > grid[0]);
}

#[test]
fn residual_is_scale_free() {
    let sp = spec(200e-9);
    let big = FiberSpec::new(400e-9, 1.46, 1.0, 2.0 * LAMBDA).unwrap();
    for n in linspace(1.01, 1.45, 45) {
        let d = dispersion_residual(&sp, n).unwrap() - dispersion_residual(&big, n).unwrap();
        assert!(d.abs() < 1e-12, "n={n}: {d}");
    }
}

#[test]
fn residual_domain() {
    let sp = spec(200e-9);
    assert!(dispersion_residual(&sp, 1.0).is_err());
    assert!(dispersion_residual(&sp, 1.46).is_err());
    assert!(dispersion_residual(&sp, f64::NAN).is_err());
}

#[test]
fn limits() {
    // n_co - n_eff ~ u^2 / (2 s^2 n_co) with u -> j_{0,1} = 2.405: about
    // 4.5e-3 at s = 20, below 1e-3 only beyond s ~ 45
    let bulk = solve_he11(&from_s(20.0)).unwrap();
    let gap = 1.46 - bulk.n_eff;
    let estimate = bulk.u * bulk.u / (2.0 * 400.0 * 1.46);
    assert!(bulk.u < 2.404_825_557_695_773 && bulk.u > 2.2);
    assert!((gap - estimate).abs() < 0.02 * estimate, "gap {gap} vs {estimate}");
    assert!(1.46 - solve_he11(&from_s(50.0)).unwrap().n_eff < 1e-3);
    let thin = solve_he11(&from_s(0.3)).unwrap();
    // n_eff - n_cl ~ (w/s)^2 / 2 is far below f64 resolution here; the
    // cladding decay constant shows the mode is still bound
    assert!(thin.w > 0.0 && thin.n_eff >= 1.0 && thin.n_eff - 1.0 < 1e-6);
}

#[test]
fn monotone_and_bracketed_over_s() {
    let modes: Vec<_> = linspace(0.5, 5.0, 60)
        .into_iter()
        .map(|s| solve_he11(&from_s(s)).unwrap())
        .collect();
    for m in &modes {
        assert!(m.n_eff > 1.0 && m.n_eff < 1.46);
    }
    assert!(modes.windows(2).all(|w| w[1].n_eff > w[0].n_eff));
    assert!(modes.windows(2).all(|w| w[1].u > w[0].u));
}

#[test]
fn tangential_fields_continuous() {
    for s in linspace(0.5, 5.0, 10) {
        let mode = solve_he11(&from_s(s)).unwrap();
        let a = mode.spec.radius;
        let inner = field_components(&mode, a - 1e-9 * a);
        let outer = field_components(&mode, a + 1e-9 * a);
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs());
        assert!(rel(inner.e_z.norm(), outer.e_z.norm()) < 1e-6, "e_z at s={s}");
        assert!(rel(inner.e_phi.norm(), outer.e_phi.norm()) < 1e-6, "e_phi at s={s}");
        // normal displacement n^2 e_r
        let d_in = 1.46f64.powi(2) * inner.e_r.norm();
        let d_out = outer.e_r.norm();
        assert!(rel(d_in, d_out) < 1e-6, "n^2 e_r at s={s}");
    }
}

/// Core intensity written out component by component.
fn closed_form_core(mode: &fiber_pldos::ModeSolution, r: f64) -> f64 {
    let (u, w, sm) = (mode.u, mode.w, mode.s_mode);
    let (h, q, beta, amp) = (mode.h, mode.q, mode.beta, mode.amp);
    let c = (w / u) * k(1, w) / j(1, u);
    let x = h * r;
    let e_r = amp * c * ((1.0 - sm) * j(0, x) - (1.0 + sm) * j(2, x));
    let e_phi = amp * c * ((1.0 - sm) * j(0, x) + (1.0 + sm) * j(2, x));
    let e_z = amp * (2.0 * q / beta) * (k(1, w) / j(1, u)) * j(1, x);
    e_r * e_r + e_phi * e_phi + e_z * e_z
}

#[test]
fn intensity_matches_closed_form_and_decays_outside() {
    let mode = solve_he11(&spec(200e-9)).unwrap();
    let a = mode.spec.radius;
    for r in linspace(0.0, a, 101) {
        let want = closed_form_core(&mode, r);
        let got = mode.intensity(r);
        assert!((got - want).abs() < 1e-10 * want, "r={r}: {got} vs {want}");
        assert!((field_components(&mode, r).intensity - got).abs() < 1e-12 * got);
    }
    let clad: Vec<f64> = linspace(a * (1.0 + 1e-9), 3.0 * a, 200)
        .into_iter()
        .map(|r| mode.intensity(r))
        .collect();
    assert!(clad.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn normalization() {
    for s in [0.5, 0.8, 1.4, 2.0, 3.0, 5.0] {
        let mode = solve_he11(&from_s(s)).unwrap();
        let r_max = mode.truncation_radius();
        let one = mode.normalization_integral(r_max).unwrap();
        assert!((one - 1.0).abs() < 1e-6, "s={s}: {one}");
        let far = mode.normalization_integral(mode.spec.radius + 2.0 * (r_max - mode.spec.radius)).unwrap();
        assert!((far - one).abs() < 1e-9, "s={s}: tail {}", far - one);
        let mut doubled = mode;
        doubled.amp *= 2.0;
        let four = doubled.normalization_integral(r_max).unwrap();
        assert!((four - 4.0 * one).abs() < 1e-12 * four);
        assert!((normalize_mode(&doubled).unwrap() - mode.amp).abs() < 1e-12 * mode.amp);
    }
}

#[test]
fn af_identity_and_shape() {
    let mode = solve_he11(&spec(200e-9)).unwrap();
    let a = mode.spec.radius;
    let af = af_decomposition(&mode, 0.5 * a).unwrap();
    let i = mode.intensity(0.5 * a);
    assert!((af.a_factor.powi(2) * af.f_factor - i).abs() < 1e-10 * i);
    assert!(af_decomposition(&mode, 1.01 * a).is_err());
    assert!(af_decomposition(&mode, -1e-12).is_err());

    let large = solve_he11(&from_s(3.0)).unwrap();
    let f0 = af_decomposition(&large, 0.0).unwrap().f_factor;
    let fa = af_decomposition(&large, large.spec.radius).unwrap().f_factor;
    assert!(f0 > fa);
}

#[test]
fn a_factor_single_peak() {
    let grid = linspace(0.8, 3.0, 221);
    let values: Vec<f64> = grid
        .iter()
        .map(|&s| af_decomposition(&solve_he11(&from_s(s)).unwrap(), 0.0).unwrap().a_factor)
        .collect();
    let peak = fiber_pldos::curve::argmax(&values).unwrap();
    assert!(peak > 0 && peak < grid.len() - 1, "peak at grid edge");
    assert!(values[..=peak].windows(2).all(|w| w[1] > w[0]));
    assert!(values[peak..].windows(2).all(|w| w[1] < w[0]));
    // pinned on this grid; dense-grid argmax
    assert!((grid[peak] - 1.87).abs() < 0.15, "A-factor peak at s={}", grid[peak]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scale_invariance(s in 0.5f64..5.0, c in 0.25f64..8.0) {
        let small = solve_he11(&from_s(s)).unwrap();
        let big_spec = small.spec.scaled(c).unwrap();
        let big = solve_he11(&big_spec).unwrap();
        let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(1e-300);
        prop_assert!(rel(small.n_eff, big.n_eff) < 1e-9);
        prop_assert!(rel(small.u, big.u) < 1e-9);
        prop_assert!(rel(small.w, big.w) < 1e-9);
        prop_assert!(rel(small.s_mode, big.s_mode) < 1e-9);
        for frac in [0.0, 0.5, 1.0, 1.5] {
            let i_small = small.intensity(frac * small.spec.radius);
            let i_big = big.intensity(frac * big.spec.radius);
            prop_assert!(rel(i_small, c * c * i_big) < 1e-9);
        }
    }
}
