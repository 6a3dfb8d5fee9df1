//! Fundamental (HE11) guided mode of a two-layer step-index fiber.
//!
//! All lengths are SI meters and wavenumbers rad/m. The mode is solved in
//! dimensionless form: the characteristic equation depends only on the size
//! parameter `s = k a` and the two indices, so `(lambda, a)` and
//! `(c lambda, c a)` share one solution.
//!
//! The root search is parametrized by the angle `theta` with
//! `u = V cos(theta)` and `w = V sin(theta)`. This keeps both transverse
//! parameters accurate at the weak-guidance end, where `n_eff - n_cl` falls
//! below the resolution of `f64` near `n_cl`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{j_orders, k_orders};

/// Number of uniformly spaced `n_eff` samples in the bracketing scan.
pub const SCAN_POINTS: usize = 400;
/// Distance of the scan end points from `n_cl` and `n_co`.
pub const SCAN_EDGE: f64 = 1e-9;
/// Cladding integration extends to `r = a + CLADDING_DECAY_LENGTHS / q`.
/// The neglected tail is below `exp(-2 * CLADDING_DECAY_LENGTHS)` relative.
pub const CLADDING_DECAY_LENGTHS: f64 = 25.0;

const QUAD_REL_TOL: f64 = 1e-13;

/// Geometry and optics of a vacuum- or dielectric-clad step-index fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    /// Core radius `a` (m).
    pub radius: f64,
    pub n_core: f64,
    pub n_clad: f64,
    /// Vacuum wavelength (m).
    pub wavelength: f64,
}

impl FiberSpec {
    pub fn new(radius: f64, n_core: f64, n_clad: f64, wavelength: f64) -> Result<Self> {
        let spec = FiberSpec {
            radius,
            n_core,
            n_clad,
            wavelength,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Fiber whose radius gives size parameter `s` at `wavelength`.
    pub fn from_size_parameter(s: f64, n_core: f64, n_clad: f64, wavelength: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::domain(format!("size parameter must be positive, got {s}")));
        }
        FiberSpec::new(s * wavelength / (2.0 * PI), n_core, n_clad, wavelength)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.radius, self.n_core, self.n_clad, self.wavelength]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain(format!("fiber parameters must be finite: {self:?}")));
        }
        if self.radius <= 0.0 {
            return Err(Error::domain(format!("radius must be > 0, got {}", self.radius)));
        }
        if self.wavelength <= 0.0 {
            return Err(Error::domain(format!(
                "wavelength must be > 0, got {}",
                self.wavelength
            )));
        }
        if self.n_clad < 1.0 || self.n_core <= self.n_clad {
            return Err(Error::domain(format!(
                "indices must satisfy n_core > n_clad >= 1, got n_core={} n_clad={}",
                self.n_core, self.n_clad
            )));
        }
        Ok(())
    }

    /// Free-space wavenumber `k = 2 pi / lambda`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Size parameter `s = k a`.
    pub fn size_parameter(&self) -> f64 {
        2.0 * PI * self.radius / self.wavelength
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        FiberSpec::new(radius, self.n_core, self.n_clad, self.wavelength)
    }

    pub fn with_wavelength(&self, wavelength: f64) -> Result<Self> {
        FiberSpec::new(self.radius, self.n_core, self.n_clad, wavelength)
    }

    /// Both radius and wavelength multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        FiberSpec::new(
            self.radius * factor,
            self.n_core,
            self.n_clad,
            self.wavelength * factor,
        )
    }

    fn index_contrast(&self) -> f64 {
        (self.n_core - self.n_clad) * (self.n_core + self.n_clad)
    }

    /// Refractive index at radial position `r`.
    pub fn index_at(&self, r: f64) -> f64 {
        if r <= self.radius {
            self.n_core
        } else {
            self.n_clad
        }
    }
}

/// Normalized frequency `V = k a sqrt(n_co^2 - n_cl^2)`.
pub fn v_number(spec: &FiberSpec) -> f64 {
    spec.size_parameter() * spec.index_contrast().sqrt()
}

/// Solved HE11 mode. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub spec: FiberSpec,
    /// Propagation constant (rad/m).
    pub beta: f64,
    pub n_eff: f64,
    /// Core transverse wavenumber (rad/m).
    pub h: f64,
    /// Cladding decay constant (rad/m).
    pub q: f64,
    /// `u = a h`.
    pub u: f64,
    /// `w = a q`.
    pub w: f64,
    /// Hybrid-mode parameter of the HE11 field expressions.
    pub s_mode: f64,
    /// Normalization amplitude (1/m) fixing `integral n^2 |e|^2 d^2r = 1`.
    pub amp: f64,
    /// `k a`.
    pub size_param: f64,
}

/// Mode-function components at one radius, for the circularly polarized mode.
/// The azimuthal phase factor `exp(i phi)` is dropped; it does not affect
/// `intensity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub r: f64,
    pub e_r: Complex64,
    pub e_phi: Complex64,
    pub e_z: Complex64,
    /// `|e_r|^2 + |e_phi|^2 + |e_z|^2` (1/m^2).
    pub intensity: f64,
}

/// `|e|^2 = a_factor^2 * f_factor` inside the core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfFactors {
    /// Radius-independent amplitude (1/m).
    pub a_factor: f64,
    /// Radial shape, a function of `u r / a` only.
    pub f_factor: f64,
}

/// Transverse parameters of a trial solution in dimensionless form.
#[derive(Debug, Clone, Copy)]
struct Trial {
    u: f64,
    w: f64,
    n_eff: f64,
}

impl Trial {
    fn from_theta(s: f64, v: f64, n_clad: f64, theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        let u = v * cos;
        let w = v * sin;
        let n_eff = (n_clad * n_clad + (w / s) * (w / s)).sqrt();
        Trial { u, w, n_eff }
    }

    fn from_n_eff(spec: &FiberSpec, n_eff: f64) -> Self {
        let s = spec.size_parameter();
        let u = s * ((spec.n_core - n_eff) * (spec.n_core + n_eff)).sqrt();
        let w = s * ((n_eff - spec.n_clad) * (n_eff + spec.n_clad)).sqrt();
        Trial { u, w, n_eff }
    }
}

/// Characteristic function of hybrid HE/EH modes with azimuthal order 1,
/// multiplied through by `u^4 w^4 / (n_co^2 V^4)` and rearranged so that no
/// O(1) terms cancel as `w -> 0`. Also returns `J_1(u)` for pole detection.
fn characteristic(n_core: f64, n_clad: f64, t: Trial) -> (f64, f64) {
    let Trial { u, w, n_eff: _ } = t;
    let j = j_orders(u);
    let k = k_orders(w);
    let ratio = (n_clad / n_core).powi(2);
    let u2 = u * u;
    let w2 = w * w;
    let v2 = u2 + w2;
    // u J1'(u)/J1(u) = u J0/J1 - 1 ; w K1'(w)/K1(w) = -1 + g with g = -w K0/K1
    let ju = u * j[0] / j[1] - 1.0;
    let g = -w * k[0] / k[1];
    let x = w2 * ju;
    let y = u2 * (g - 1.0);
    // n_eff^2 / n_co^2 = ratio + w^2 / (s^2 n_co^2), and v2 = s^2 (n_co^2 - n_cl^2)
    let excess = w2 * v2 * (1.0 - ratio);
    let num = x * (x + (1.0 + ratio) * y) + ratio * (u2 * g + w2) * (u2 * g - 2.0 * u2 - w2)
        - excess;
    (num / (v2 * v2), j[1])
}

/// Signed residual of the exact HE11 characteristic equation at a trial
/// effective index, in dimensionless form. Zero at guided hybrid modes.
pub fn dispersion_residual(spec: &FiberSpec, n_eff_trial: f64) -> Result<f64> {
    spec.validate()?;
    if !(n_eff_trial > spec.n_clad && n_eff_trial < spec.n_core) {
        return Err(Error::domain(format!(
            "trial effective index {n_eff_trial} outside ({}, {})",
            spec.n_clad, spec.n_core
        )));
    }
    let t = Trial::from_n_eff(spec, n_eff_trial);
    Ok(characteristic(spec.n_core, spec.n_clad, t).0)
}

/// Hybrid-mode parameter `s = (1/u^2 + 1/w^2) / (J1'(u)/(u J1(u)) + K1'(w)/(w K1(w)))`.
fn hybrid_parameter(u: f64, w: f64) -> f64 {
    let j = j_orders(u);
    let k = k_orders(w);
    let ju = u * j[0] / j[1] - 1.0;
    let kw = -1.0 - w * k[0] / k[1];
    let u2 = u * u;
    let w2 = w * w;
    // multiply numerator and denominator by u^2 w^2
    (u2 + w2) / (w2 * ju + u2 * kw)
}

/// Finds the fundamental HE11 mode and normalizes it.
///
/// The scan samples `SCAN_POINTS` effective indices uniformly in
/// `(n_cl + SCAN_EDGE, n_co - SCAN_EDGE)` and takes the sign change with the
/// largest `n_eff` whose bracket does not contain a zero of `J_1(u)` (a pole).
/// When the mode is so weakly guided that `n_eff < n_cl + SCAN_EDGE`, the scan
/// continues geometrically toward `w = 0`. The bracket is bisected until it
/// collapses to adjacent floating point values.
pub fn solve_he11(spec: &FiberSpec) -> Result<ModeSolution> {
    let mut mode = solve_unnormalized(spec)?;
    mode.amp = normalize_mode(&mode)?;
    Ok(mode)
}

pub(crate) fn solve_unnormalized(spec: &FiberSpec) -> Result<ModeSolution> {
    spec.validate()?;
    let s = spec.size_parameter();
    let v = v_number(spec);
    let (nco, ncl) = (spec.n_core, spec.n_clad);
    let eval = |theta: f64| {
        let t = Trial::from_theta(s, v, ncl, theta);
        characteristic(nco, ncl, t)
    };
    let theta_of = |n: f64| {
        let t = Trial::from_n_eff(spec, n);
        t.w.atan2(t.u)
    };

    let lo_n = ncl + SCAN_EDGE;
    let hi_n = nco - SCAN_EDGE;
    if hi_n <= lo_n {
        return Err(Error::Solver(format!(
            "index contrast too small to scan: n_co={nco} n_cl={ncl}"
        )));
    }
    // Descending n_eff, hence descending theta.
    let mut thetas: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            let frac = i as f64 / (SCAN_POINTS - 1) as f64;
            theta_of(hi_n - frac * (hi_n - lo_n))
        })
        .collect();

    let mut bracket = find_bracket(&thetas, &eval);
    if bracket.is_none() {
        let last = *thetas.last().unwrap();
        let mut tail = vec![last];
        let mut theta = last;
        while theta > 1e-250 {
            theta *= 0.5;
            tail.push(theta);
        }
        bracket = find_bracket(&tail, &eval);
        thetas.extend_from_slice(&tail[1..]);
    }
    let (mut hi, mut lo) = bracket.ok_or_else(|| {
        Error::Solver(format!(
            "no HE11 sign change found for s={s:.6} V={v:.6} n_co={nco} n_cl={ncl} \
             over {} scan points",
            thetas.len()
        ))
    })?;

    let mut f_hi = eval(hi).0;
    for _ in 0..2000 {
        let mid = 0.5 * (hi + lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval(mid).0;
        if f_mid == 0.0 {
            hi = mid;
            lo = mid;
            break;
        }
        if (f_mid > 0.0) == (f_hi > 0.0) {
            hi = mid;
            f_hi = f_mid;
        } else {
            lo = mid;
        }
    }
    let (f_lo, f_hi) = (eval(lo).0, eval(hi).0);
    let theta = if f_lo.abs() < f_hi.abs() { lo } else { hi };
    let t = Trial::from_theta(s, v, ncl, theta);
    let k = spec.wavenumber();
    let a = spec.radius;
    Ok(ModeSolution {
        spec: *spec,
        beta: k * t.n_eff,
        n_eff: t.n_eff,
        h: t.u / a,
        q: t.w / a,
        u: t.u,
        w: t.w,
        s_mode: hybrid_parameter(t.u, t.w),
        amp: 1.0,
        size_param: s,
    })
}

/// First valid sign change walking along `thetas` (ordered by decreasing
/// `n_eff`). Brackets across which `J_1(u)` flips sign straddle a pole.
fn find_bracket<F>(thetas: &[f64], eval: &F) -> Option<(f64, f64)>
where
    F: Fn(f64) -> (f64, f64),
{
    let mut prev = eval(*thetas.first()?);
    let mut prev_theta = thetas[0];
    for &theta in &thetas[1..] {
        let cur = eval(theta);
        let sign_change = (prev.0 > 0.0) != (cur.0 > 0.0) || cur.0 == 0.0;
        let pole = (prev.1 > 0.0) != (cur.1 > 0.0);
        if sign_change && !pole && prev.0.is_finite() && cur.0.is_finite() {
            return Some((prev_theta, theta));
        }
        prev = cur;
        prev_theta = theta;
    }
    None
}

/// Unit-amplitude field expressed on the dimensionless radius `x = r / a`.
/// Returns `(e_r / i, -e_phi, e_z)` as real numbers.
fn unit_field(mode: &ModeSolution, x: f64) -> (f64, f64, f64) {
    let ModeSolution {
        u, w, s_mode: sm, n_eff, size_param: s, ..
    } = *mode;
    // q / beta = w / (s n_eff)
    let q_over_beta = w / (s * n_eff);
    let k1a = k_orders(w)[1];
    if x <= 1.0 {
        let j1a = j_orders(u)[1];
        let j = j_orders(u * x);
        let c = (w / u) * k1a / j1a;
        let radial = c * ((1.0 - sm) * j[0] - (1.0 + sm) * j[2]);
        let azimuthal = c * ((1.0 - sm) * j[0] + (1.0 + sm) * j[2]);
        let axial = 2.0 * q_over_beta * k1a / j1a * j[1];
        (radial, azimuthal, axial)
    } else {
        let kk = k_orders(w * x);
        let radial = (1.0 - sm) * kk[0] + (1.0 + sm) * kk[2];
        let azimuthal = (1.0 - sm) * kk[0] - (1.0 + sm) * kk[2];
        let axial = 2.0 * q_over_beta * kk[1];
        (radial, azimuthal, axial)
    }
}

fn unit_intensity(mode: &ModeSolution, x: f64) -> f64 {
    let (a, b, c) = unit_field(mode, x);
    a * a + b * b + c * c
}

/// Mode-function components of the circularly polarized HE11 mode at `r`.
pub fn field_components(mode: &ModeSolution, r: f64) -> FieldSample {
    let x = r / mode.spec.radius;
    let (radial, azimuthal, axial) = unit_field(mode, x);
    let amp = mode.amp;
    let e_r = Complex64::new(0.0, amp * radial);
    let e_phi = Complex64::new(-amp * azimuthal, 0.0);
    let e_z = Complex64::new(amp * axial, 0.0);
    FieldSample {
        r,
        e_r,
        e_phi,
        e_z,
        intensity: e_r.norm_sqr() + e_phi.norm_sqr() + e_z.norm_sqr(),
    }
}

impl ModeSolution {
    pub fn field(&self, r: f64) -> FieldSample {
        field_components(self, r)
    }

    /// `|e(r)|^2` (1/m^2).
    pub fn intensity(&self, r: f64) -> f64 {
        self.amp * self.amp * unit_intensity(self, r / self.spec.radius)
    }

    /// `2 pi integral_0^r_max n(r)^2 |e(r)|^2 r dr` with the current amplitude.
    pub fn normalization_integral(&self, r_max: f64) -> Result<f64> {
        let (core, clad) = unit_norm_parts(self, r_max / self.spec.radius)?;
        let a = self.spec.radius;
        let n1 = self.spec.n_core;
        let n2 = self.spec.n_clad;
        Ok(2.0 * PI * a * a * self.amp * self.amp * (n1 * n1 * core + n2 * n2 * clad))
    }

    /// Default cladding truncation radius `a + CLADDING_DECAY_LENGTHS / q`.
    pub fn truncation_radius(&self) -> f64 {
        self.spec.radius + CLADDING_DECAY_LENGTHS / self.q
    }
}

/// Core and cladding integrals of `|e|^2 x dx` for unit amplitude, with the
/// cladding truncated at `x_max`.
fn unit_norm_parts(mode: &ModeSolution, x_max: f64) -> Result<(f64, f64)> {
    let core = quad::integrate(
        |x| unit_intensity(mode, x) * x,
        0.0,
        1.0,
        0.0,
        QUAD_REL_TOL,
    )?
    .value;
    if x_max <= 1.0 {
        return Ok((core, 0.0));
    }
    // Cladding in t = w x: integral_1^x_max f(w x) x dx = w^-2 integral_w^{w x_max} f(t) t dt.
    // Breakpoints grow geometrically from t = w so the K_2 singularity scale
    // is resolved for weakly guided modes.
    let w = mode.w;
    let t_end = w * x_max;
    let mut edges = vec![w];
    let mut t = w;
    while t * 2.0 < t_end.min(1.0) {
        t *= 2.0;
        edges.push(t);
    }
    let mut t = edges.last().copied().unwrap().max(1.0);
    while t < t_end {
        edges.push(t);
        t += 2.0;
    }
    edges.push(t_end);
    edges.dedup_by(|a, b| (*a - *b).abs() <= f64::EPSILON * b.abs());
    let mut clad = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let piece = quad::integrate(
            |t| unit_intensity(mode, t / w) * t,
            lo,
            hi,
            0.0,
            QUAD_REL_TOL,
        )
        .map_err(|e| Error::Numerical(format!("normalization (cladding) failed: {e}")))?;
        clad += piece.value;
    }
    Ok((core, clad / (w * w)))
}

/// Amplitude `A` such that `2 pi integral n^2 |e|^2 r dr = 1`, computed by
/// adaptive quadrature with the cladding truncated at
/// `a + CLADDING_DECAY_LENGTHS / q`.
pub fn normalize_mode(mode: &ModeSolution) -> Result<f64> {
    let mut unit = *mode;
    unit.amp = 1.0;
    let integral = unit.normalization_integral(unit.truncation_radius())?;
    if !(integral.is_finite() && integral > 0.0) {
        return Err(Error::Numerical(format!(
            "normalization integral is {integral} for s={}",
            mode.size_param
        )));
    }
    Ok(1.0 / integral.sqrt())
}

/// Splits the core intensity into a radius-independent amplitude and a
/// radial shape: `|e|^2 = a_factor^2 * f_factor` with
/// `a_factor^2 = 2 A^2 q^2 K1(qa)^2 / (h^2 J1(ha)^2)` and
/// `f_factor = (1-s)^2 J0(ur/a)^2 + 2 (h/beta)^2 J1(ur/a)^2 + (1+s)^2 J2(ur/a)^2`.
pub fn af_decomposition(mode: &ModeSolution, r: f64) -> Result<AfFactors> {
    let a = mode.spec.radius;
    if !(r >= 0.0 && r <= a) {
        return Err(Error::domain(format!(
            "A/F decomposition holds in the core only: r={r} a={a}"
        )));
    }
    let ModeSolution { u, w, s_mode: sm, n_eff, size_param: s, amp, .. } = *mode;
    let k1a = k_orders(w)[1];
    let j1a = j_orders(u)[1];
    let a_factor = std::f64::consts::SQRT_2 * amp * (w / u) * (k1a / j1a).abs();
    let h_over_beta = u / (s * n_eff);
    let j = j_orders(u * r / a);
    let f_factor = (1.0 - sm).powi(2) * j[0] * j[0]
        + 2.0 * h_over_beta * h_over_beta * j[1] * j[1]
        + (1.0 + sm).powi(2) * j[2] * j[2];
    Ok(AfFactors { a_factor, f_factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(a_nm: f64) -> FiberSpec {
        FiberSpec::new(a_nm * 1e-9, 1.46, 1.0, 659e-9).unwrap()
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(FiberSpec::new(0.0, 1.46, 1.0, 659e-9).is_err());
        assert!(FiberSpec::new(1e-7, 1.46, 1.0, -1.0).is_err());
        assert!(FiberSpec::new(1e-7, 1.0, 1.46, 659e-9).is_err());
        assert!(FiberSpec::new(1e-7, 1.46, 0.9, 659e-9).is_err());
        assert!(FiberSpec::new(f64::NAN, 1.46, 1.0, 659e-9).is_err());
    }

    #[test]
    fn v_number_vanishes_with_contrast() {
        let mut prev = f64::INFINITY;
        for eps in [1e-1, 1e-3, 1e-6, 1e-9] {
            let v = v_number(&FiberSpec::new(2e-7, 1.46, 1.46 - eps, 659e-9).unwrap());
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn residual_rejects_out_of_range_trial() {
        let sp = spec(200.0);
        assert!(dispersion_residual(&sp, 1.0).is_err());
        assert!(dispersion_residual(&sp, 1.46).is_err());
        assert!(dispersion_residual(&sp, 1.2).is_ok());
    }

    #[test]
    fn solution_invariants() {
        let m = solve_he11(&spec(200.0)).unwrap();
        let k = m.spec.wavenumber();
        assert!(m.beta > k * m.spec.n_clad && m.beta < k * m.spec.n_core);
        let v = v_number(&m.spec);
        assert!(((m.u * m.u + m.w * m.w) - v * v).abs() < 1e-12 * v * v);
        assert!(m.amp > 0.0);
        assert!(dispersion_residual(&m.spec, m.n_eff).unwrap().abs() < 1e-10);
    }

    #[test]
    fn af_rejects_cladding_radius() {
        let m = solve_he11(&spec(200.0)).unwrap();
        assert!(af_decomposition(&m, 2.01e-7).is_err());
        assert!(af_decomposition(&m, -1e-9).is_err());
    }

    #[test]
    fn doubling_amplitude_quadruples_integral() {
        let m = solve_he11(&spec(300.0)).unwrap();
        let mut doubled = m;
        doubled.amp *= 2.0;
        let r_max = m.truncation_radius();
        let base = m.normalization_integral(r_max).unwrap();
        let twice = doubled.normalization_integral(r_max).unwrap();
        assert!((twice / base - 4.0).abs() < 1e-12);
    }
}
