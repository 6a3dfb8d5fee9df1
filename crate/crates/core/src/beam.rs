//! Electron-beam geometry: where a primary electron stops inside the fiber
//! cross-section, and the Gaussian blur standing in for the secondary
//! electron cascade.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Default cascade blur (standard deviation, m).
pub const DEFAULT_SIGMA: f64 = 10e-9;
/// Gaussian kernels are truncated at this many standard deviations.
pub const KERNEL_HALF_WIDTH_SIGMAS: f64 = 5.0;

/// Built-in penetration depths: (energy keV, depth m).
pub const DEFAULT_DEPTHS: [(f64, f64); 2] = [(0.5, 10e-9), (2.0, 175e-9)];

const ENERGY_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    /// Beam energy (keV) when the depth came from an energy lookup.
    pub energy_kev: Option<f64>,
    /// Penetration depth `delta` (m).
    pub delta: f64,
    /// Cascade standard deviation (m).
    pub sigma: f64,
    /// Transverse spot position (m).
    pub y: f64,
}

impl BeamConfig {
    pub fn from_delta(delta: f64) -> Result<Self> {
        let beam = BeamConfig {
            energy_kev: None,
            delta,
            sigma: DEFAULT_SIGMA,
            y: 0.0,
        };
        beam.validate()?;
        Ok(beam)
    }

    pub fn from_energy(energy_kev: f64, table: Option<&DepthTable>) -> Result<Self> {
        let delta = penetration_depth(energy_kev, table)?;
        Ok(BeamConfig {
            energy_kev: Some(energy_kev),
            ..BeamConfig::from_delta(delta)?
        })
    }

    pub fn with_sigma(self, sigma: f64) -> Result<Self> {
        let beam = BeamConfig { sigma, ..self };
        beam.validate()?;
        Ok(beam)
    }

    pub fn with_y(self, y: f64) -> Result<Self> {
        let beam = BeamConfig { y, ..self };
        beam.validate()?;
        Ok(beam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::domain(format!(
                "penetration depth must be >= 0, got {}",
                self.delta
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::domain(format!(
                "cascade sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if !self.y.is_finite() {
            return Err(Error::domain("beam position y must be finite"));
        }
        Ok(())
    }
}

/// User-supplied energy to penetration depth table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DepthTable {
    /// (energy keV, depth m)
    pub rows: Vec<(f64, f64)>,
}

impl DepthTable {
    /// Parses two whitespace- or comma-separated columns: energy (keV) and
    /// depth (nm). Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
            match parsed.as_deref() {
                Some(&[kev, nm]) if kev > 0.0 && nm >= 0.0 => rows.push((kev, nm / 1e9)),
                _ => {
                    return Err(Error::Format(format!(
                        "depth table line {}: expected `<keV> <nm>` with keV > 0 and nm >= 0, got `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        Ok(DepthTable { rows })
    }

    pub fn lookup(&self, energy_kev: f64) -> Option<f64> {
        lookup(&self.rows, energy_kev)
    }
}

fn lookup(rows: &[(f64, f64)], energy_kev: f64) -> Option<f64> {
    rows.iter()
        .find(|(e, _)| (e - energy_kev).abs() <= ENERGY_MATCH_TOL * e.abs().max(1.0))
        .map(|&(_, d)| d)
}

/// Penetration depth (m) for a beam energy. The user table takes precedence
/// over the built-in values; no interpolation is done between rows.
pub fn penetration_depth(energy_kev: f64, table: Option<&DepthTable>) -> Result<f64> {
    if !(energy_kev.is_finite() && energy_kev > 0.0) {
        return Err(Error::domain(format!(
            "beam energy must be > 0 keV, got {energy_kev}"
        )));
    }
    table
        .and_then(|t| t.lookup(energy_kev))
        .or_else(|| lookup(&DEFAULT_DEPTHS, energy_kev))
        .ok_or(Error::UnsupportedEnergy { energy_kev })
}

/// Where the primary electron stops, in polar coordinates of the fiber
/// cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingPoint {
    /// Radial distance from the axis (m).
    pub r: f64,
    /// Polar angle of the stopping point (rad).
    pub theta: f64,
    /// Entry angle `phi = asin(y / a)` (rad).
    pub phi: f64,
    /// The stopping point lies in the core.
    pub inside: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Hit(StoppingPoint),
    /// `|y| > a`: the beam passes beside the fiber.
    Miss,
}

impl Stop {
    /// Radius of an emission point inside the core, if any.
    pub fn emission_radius(&self) -> Option<f64> {
        match self {
            Stop::Hit(p) if p.inside => Some(p.r),
            _ => None,
        }
    }
}

/// Stopping point of an electron entering at transverse offset `y` and
/// travelling a depth `delta` along the beam direction.
pub fn stopping_point(a: f64, y: f64, delta: f64) -> Result<Stop> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::domain(format!("fiber radius must be > 0, got {a}")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::domain(format!(
            "penetration depth must be >= 0, got {delta}"
        )));
    }
    if !y.is_finite() {
        return Err(Error::domain("beam position y must be finite"));
    }
    if y.abs() > a {
        return Ok(Stop::Miss);
    }
    let phi = (y / a).asin();
    // a cos(phi), without the rounding of cos(asin(.))
    let chord_half = ((a - y) * (a + y)).sqrt();
    let r = if delta == 0.0 {
        a
    } else {
        y.hypot(chord_half - delta)
    };
    let theta = if r > 0.0 {
        FRAC_PI_2 - (y / r).clamp(-1.0, 1.0).acos()
    } else {
        0.0
    };
    let inside = delta <= 2.0 * chord_half && r <= a;
    Ok(Stop::Hit(StoppingPoint {
        r,
        theta,
        phi,
        inside,
    }))
}

/// Normalized, truncated Gaussian weights for grid spacing `step`.
pub fn gaussian_kernel(sigma: f64, step: f64) -> Vec<f64> {
    let half = (KERNEL_HALF_WIDTH_SIGMAS * sigma / step).floor() as usize;
    let raw: Vec<f64> = (0..=2 * half)
        .map(|i| {
            let x = (i as f64 - half as f64) * step / sigma;
            (-0.5 * x * x).exp()
        })
        .collect();
    let mass: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / mass).collect()
}

/// Checks that `xs` is strictly increasing with constant spacing and
/// returns the spacing.
pub fn uniform_spacing(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::domain("grid needs at least two points"));
    }
    let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    for (i, pair) in xs.windows(2).enumerate() {
        let d = pair[1] - pair[0];
        if (d - step).abs() > 1e-6 * step {
            return Err(Error::domain(format!(
                "grid is not uniform: spacing {d:e} at index {i} vs mean {step:e}"
            )));
        }
    }
    Ok(step)
}

/// Convolves a profile sampled on a uniform grid with a unit-mass Gaussian
/// of standard deviation `sigma`, truncated at five sigma. Samples beyond the
/// grid are taken as zero. `sigma = 0` returns the profile unchanged.
pub fn cascade_convolve(xs: &[f64], values: &[f64], sigma: f64) -> Result<Vec<f64>> {
    cascade_convolve_with(Execution::default(), xs, values, sigma)
}

pub fn cascade_convolve_with(
    exec: Execution,
    xs: &[f64],
    values: &[f64],
    sigma: f64,
) -> Result<Vec<f64>> {
    if xs.len() != values.len() {
        return Err(Error::domain(format!(
            "profile has {} abscissas and {} values",
            xs.len(),
            values.len()
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 || values.len() < 2 {
        if values.len() >= 2 {
            uniform_spacing(xs)?;
        }
        return Ok(values.to_vec());
    }
    let step = uniform_spacing(xs)?;
    if step > 0.5 * sigma * (1.0 + 1e-9) {
        return Err(Error::domain(format!(
            "grid spacing {step:e} exceeds sigma/2 = {:e}",
            0.5 * sigma
        )));
    }
    let kernel = gaussian_kernel(sigma, step);
    let half = (kernel.len() / 2) as isize;
    let n = values.len() as isize;
    let idx: Vec<isize> = (0..n).collect();
    Ok(par::map(exec, &idx, |&i| {
        let mut acc = 0.0;
        for (k, w) in kernel.iter().enumerate() {
            let j = i + k as isize - half;
            if (0..n).contains(&j) {
                acc += w * values[j as usize];
            }
        }
        acc
    }))
}
