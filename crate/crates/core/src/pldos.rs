//! Guided-mode photonic local density of states, `rho_g = |e(r)|^2 / v_g`,
//! the polarization-averaged decay rate it implies, and sweeps over the size
//! parameter.

use std::f64::consts::PI;

use crate::beam::{stopping_point, Stop};
use crate::curve::{normalize_curve, Curve};
use crate::error::{Error, Result};
use crate::fiber::{solve_he11, solve_unnormalized, FiberSpec, ModeSolution};
use crate::par::{self, Execution};
use crate::{EPSILON_0, HBAR, SPEED_OF_LIGHT};

/// Relative frequency step of the central difference for `d omega / d beta`.
pub const GROUP_VELOCITY_STEP: f64 = 1e-5;
/// Allowed relative disagreement between steps `h` and `h/2`.
pub const GROUP_VELOCITY_CHECK: f64 = 1e-6;
/// The "just inside the surface" point is `r = a (1 - SURFACE_INSET)`.
pub const SURFACE_INSET: f64 = 1e-6;
/// Sweeps must stay inside this size-parameter range.
pub const SWEEP_RANGE: (f64, f64) = (0.5, 5.0);

/// Group velocity (m/s) by a central difference of `beta(omega)` at fixed
/// radius with relative step `rel_step`.
pub fn group_velocity_with_step(spec: &FiberSpec, rel_step: f64) -> Result<f64> {
    if !(rel_step > 0.0 && rel_step < 0.1) {
        return Err(Error::domain(format!(
            "relative frequency step must be in (0, 0.1), got {rel_step}"
        )));
    }
    let perturbed = |sign: f64| -> Result<(f64, f64)> {
        let sp = spec.with_wavelength(spec.wavelength / (1.0 + sign * rel_step))?;
        let mode = solve_unnormalized(&sp).map_err(|e| {
            Error::Numerical(format!(
                "group velocity: mode solve failed at perturbed frequency: {e}"
            ))
        })?;
        Ok((sp.wavenumber(), mode.beta))
    };
    let (k_plus, b_plus) = perturbed(1.0)?;
    let (k_minus, b_minus) = perturbed(-1.0)?;
    let dbeta_dk = (b_plus - b_minus) / (k_plus - k_minus);
    if !(dbeta_dk.is_finite() && dbeta_dk > 0.0) {
        return Err(Error::Numerical(format!(
            "group velocity: non-positive d beta / d k = {dbeta_dk}"
        )));
    }
    Ok(SPEED_OF_LIGHT / dbeta_dk)
}

/// Group velocity (m/s) with step [`GROUP_VELOCITY_STEP`], checked against
/// the half step.
pub fn group_velocity(spec: &FiberSpec) -> Result<f64> {
    let coarse = group_velocity_with_step(spec, GROUP_VELOCITY_STEP)?;
    let fine = group_velocity_with_step(spec, 0.5 * GROUP_VELOCITY_STEP)?;
    let rel = (coarse - fine).abs() / fine;
    if rel > GROUP_VELOCITY_CHECK {
        return Err(Error::Numerical(format!(
            "group velocity did not converge under step halving at s={}: relative change {rel:e}",
            spec.size_parameter()
        )));
    }
    Ok(coarse)
}

/// Where in the cross-section the PLDOS is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialRule {
    /// Fiber axis.
    Center,
    /// `r = a (1 - SURFACE_INSET)`.
    SurfaceInside,
    /// On-axis beam stopping at depth `delta`: `r = |a - delta|`.
    FixedDepth { delta: f64 },
    /// Beam at transverse offset `y` stopping at depth `delta`.
    FixedPoint { delta: f64, y: f64 },
}

impl RadialRule {
    /// Evaluation radius for a fiber of radius `a`. Points outside the core
    /// are rejected.
    pub fn radius(&self, a: f64) -> Result<f64> {
        match self.emission(a)? {
            Emission::Core(r) => Ok(r),
            Emission::Outside { r } => Err(Error::domain(format!(
                "stopping point r={r:e} m lies outside the core of radius {a:e} m ({self:?})"
            ))),
            Emission::Miss => Err(Error::domain(format!(
                "beam misses the fiber of radius {a:e} m ({self:?})"
            ))),
        }
    }

    /// Evaluation point, distinguishing beam stops that leave the core.
    pub fn emission(&self, a: f64) -> Result<Emission> {
        let (delta, y) = match *self {
            RadialRule::Center => return Ok(Emission::Core(0.0)),
            RadialRule::SurfaceInside => return Ok(Emission::Core(a * (1.0 - SURFACE_INSET))),
            RadialRule::FixedDepth { delta } => (delta, 0.0),
            RadialRule::FixedPoint { delta, y } => (delta, y),
        };
        Ok(match stopping_point(a, y, delta)? {
            Stop::Hit(p) if p.inside => Emission::Core(p.r.min(a)),
            Stop::Hit(p) => Emission::Outside { r: p.r },
            Stop::Miss => Emission::Miss,
        })
    }
}

/// Outcome of locating the emission point for a rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Emission {
    /// Emission at radius `r <= a`.
    Core(f64),
    /// The electron stops (formally) outside the core; no emission.
    Outside { r: f64 },
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PldosPoint {
    pub size_param: f64,
    pub wavelength: f64,
    /// Evaluation radius (m).
    pub r_eval: f64,
    /// `|e|^2 / v_g` (s/m^3).
    pub rho_g: f64,
    /// `rho_g` relative to the maximum of the sweep it belongs to. A single
    /// point is its own maximum.
    pub rho_bar: f64,
    pub n_eff: f64,
    pub v_g_over_c: f64,
}

/// PLDOS of an already solved mode with known group velocity.
pub fn pldos_for_mode(mode: &ModeSolution, v_g: f64, r_eval: f64) -> Result<PldosPoint> {
    let a = mode.spec.radius;
    if !(r_eval >= 0.0 && r_eval <= a) {
        return Err(Error::domain(format!(
            "PLDOS is evaluated inside the core only: r={r_eval:e} m, a={a:e} m"
        )));
    }
    Ok(PldosPoint {
        size_param: mode.size_param,
        wavelength: mode.spec.wavelength,
        r_eval,
        rho_g: mode.intensity(r_eval) / v_g,
        rho_bar: 1.0,
        n_eff: mode.n_eff,
        v_g_over_c: v_g / SPEED_OF_LIGHT,
    })
}

/// `rho_g(r) = |e(r)|^2 / v_g` using the normalized HE11 mode.
pub fn pldos_at(spec: &FiberSpec, r_eval: f64) -> Result<PldosPoint> {
    if !(r_eval >= 0.0 && r_eval <= spec.radius) {
        return Err(Error::domain(format!(
            "PLDOS is evaluated inside the core only: r={r_eval:e} m, a={:e} m",
            spec.radius
        )));
    }
    let mode = solve_he11(spec)?;
    let v_g = group_velocity(spec)?;
    pldos_for_mode(&mode, v_g, r_eval)
}

/// Polarization-averaged decay rate into the fundamental modes,
/// `gamma = pi omega_0 p^2 rho_g / (3 hbar epsilon_0)` (1/s), for a dipole
/// moment `p` (C m).
pub fn decay_rate(p_dipole: f64, point: &PldosPoint) -> Result<f64> {
    if !(p_dipole.is_finite() && p_dipole > 0.0) {
        return Err(Error::domain(format!(
            "dipole moment must be > 0, got {p_dipole}"
        )));
    }
    let omega = 2.0 * PI * SPEED_OF_LIGHT / point.wavelength;
    Ok(PI * omega / (3.0 * HBAR * EPSILON_0) * p_dipole * p_dipole * point.rho_g)
}

/// `n` uniformly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Default sweep grid: 200 points on `[0.8, 3.0]`.
pub fn default_s_grid() -> Vec<f64> {
    linspace(0.8, 3.0, 200)
}

pub(crate) fn check_s_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() {
        return Err(Error::domain("size-parameter grid is empty"));
    }
    let (lo, hi) = SWEEP_RANGE;
    if let Some(s) = s_grid.iter().find(|s| !(**s >= lo && **s <= hi)) {
        return Err(Error::domain(format!(
            "size parameter {s} outside the sweep range [{lo}, {hi}]"
        )));
    }
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("size-parameter grid must be strictly increasing"));
    }
    Ok(())
}

/// Column layout of [`pldos_sweep`] output.
pub const SWEEP_COLUMNS: [(&str, &str); 5] = [
    ("s", "1"),
    ("rho_g", "s/m^3"),
    ("rho_bar", "1"),
    ("n_eff", "1"),
    ("v_g_over_c", "1"),
];

/// PLDOS over a size-parameter grid at fixed wavelength and indices taken
/// from `base` (its radius is ignored), normalized so the sweep maximum of
/// `rho_bar` is 1. For beam-derived rules, grid points where the electron
/// stops outside the core contribute zero.
pub fn pldos_sweep(base: &FiberSpec, s_grid: &[f64], rule: RadialRule) -> Result<Curve> {
    pldos_sweep_with(Execution::default(), base, s_grid, rule)
}

pub fn pldos_sweep_with(
    exec: Execution,
    base: &FiberSpec,
    s_grid: &[f64],
    rule: RadialRule,
) -> Result<Curve> {
    let points = sweep_points(exec, base, s_grid, rule)?;
    let mut curve = Curve::with_columns(&SWEEP_COLUMNS);
    for p in points {
        curve.push_row(&[p.size_param, p.rho_g, p.rho_bar, p.n_eff, p.v_g_over_c])?;
    }
    Ok(curve)
}

/// Same as [`pldos_sweep`], returning the points themselves.
pub fn sweep_points(
    exec: Execution,
    base: &FiberSpec,
    s_grid: &[f64],
    rule: RadialRule,
) -> Result<Vec<PldosPoint>> {
    base.validate()?;
    check_s_grid(s_grid)?;
    let specs = s_grid
        .iter()
        .map(|&s| FiberSpec::from_size_parameter(s, base.n_core, base.n_clad, base.wavelength))
        .collect::<Result<Vec<_>>>()?;
    points_for_specs(exec, &specs, rule)
}

/// PLDOS for each fiber, normalized over the batch. Beam-derived rules that
/// stop outside the core give `rho_g = 0`.
pub(crate) fn points_for_specs(
    exec: Execution,
    specs: &[FiberSpec],
    rule: RadialRule,
) -> Result<Vec<PldosPoint>> {
    let mut points = par::try_map(exec, specs, |spec| {
        let at = || -> Result<PldosPoint> {
            let mode = solve_he11(spec)?;
            let v_g = group_velocity(spec)?;
            match rule.emission(spec.radius)? {
                Emission::Core(r) => pldos_for_mode(&mode, v_g, r),
                Emission::Outside { r } => Ok(PldosPoint {
                    rho_g: 0.0,
                    r_eval: r,
                    ..pldos_for_mode(&mode, v_g, 0.0)?
                }),
                Emission::Miss => Ok(PldosPoint {
                    rho_g: 0.0,
                    r_eval: f64::NAN,
                    ..pldos_for_mode(&mode, v_g, 0.0)?
                }),
            }
        };
        at().map_err(|e| annotate(e, spec.size_parameter()))
    })?;
    let rho: Vec<f64> = points.iter().map(|p| p.rho_g).collect();
    let rho_bar = normalize_curve(&rho)?;
    for (p, v) in points.iter_mut().zip(rho_bar) {
        p.rho_bar = v;
    }
    Ok(points)
}

fn annotate(e: Error, s: f64) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("at s={s}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("at s={s}: {m}")),
        Error::Solver(m) => Error::Solver(format!("at s={s}: {m}")),
        other => other,
    }
}
