//! Simulated cathodoluminescence measurements: cross-section spot scans,
//! diameter sweeps, shot noise, and the least-squares fits used to compare
//! them with data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::beam::{cascade_convolve, stopping_point, uniform_spacing, BeamConfig};
use crate::curve::{full_width_half_max, normalize_curve};
use crate::error::{Error, Result};
use crate::fiber::{solve_he11, FiberSpec};
use crate::lm::{levenberg_marquardt, FitResult, LmOptions, Param};
use crate::par::Execution;
use crate::pldos::{group_velocity, points_for_specs, PldosPoint, RadialRule};

/// Abscissa of a scan curve. Lengths are stored in meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    YPosition,
    SizeParam,
    Wavelength,
}

impl Axis {
    pub fn column_name(self) -> &'static str {
        match self {
            Axis::YPosition => "y",
            Axis::SizeParam => "s",
            Axis::Wavelength => "wavelength",
        }
    }

    /// Unit used in files, and the factor from internal units to it.
    pub fn file_unit(self) -> (&'static str, f64) {
        match self {
            Axis::YPosition | Axis::Wavelength => ("nm", 1e9),
            Axis::SizeParam => ("1", 1.0),
        }
    }

    pub fn from_column_name(name: &str) -> Option<Axis> {
        match name {
            "y" => Some(Axis::YPosition),
            "s" => Some(Axis::SizeParam),
            "wavelength" => Some(Axis::Wavelength),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: f64,
    pub value: f64,
    pub uncertainty: Option<f64>,
}

/// Fiber and beam a curve was produced with, when known.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Provenance {
    pub fiber: Option<FiberSpec>,
    pub beam: Option<BeamConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCurve {
    pub axis: Axis,
    /// Name of the value column, e.g. `rho_bar` or `counts`.
    pub quantity: String,
    pub samples: Vec<Sample>,
    pub provenance: Provenance,
}

impl ScanCurve {
    /// Builds a curve, checking that abscissas strictly increase, values are
    /// finite and uncertainties are either all present and non-negative or
    /// all absent.
    pub fn new(
        axis: Axis,
        quantity: &str,
        samples: Vec<Sample>,
        provenance: Provenance,
    ) -> Result<Self> {
        if samples.windows(2).any(|w| !(w[1].x > w[0].x)) {
            return Err(Error::domain("scan abscissas must be strictly increasing"));
        }
        if samples.iter().any(|s| !(s.x.is_finite() && s.value.is_finite())) {
            return Err(Error::domain("scan samples must be finite"));
        }
        let with_unc = samples.iter().filter(|s| s.uncertainty.is_some()).count();
        if with_unc != 0 && with_unc != samples.len() {
            return Err(Error::domain(
                "uncertainties must be given for all samples or for none",
            ));
        }
        if samples
            .iter()
            .filter_map(|s| s.uncertainty)
            .any(|u| !(u.is_finite() && u >= 0.0))
        {
            return Err(Error::domain("uncertainties must be finite and >= 0"));
        }
        Ok(ScanCurve {
            axis,
            quantity: quantity.to_string(),
            samples,
            provenance,
        })
    }

    pub fn from_xy(axis: Axis, quantity: &str, xs: &[f64], ys: &[f64]) -> Result<Self> {
        let samples = xs
            .iter()
            .zip(ys)
            .map(|(&x, &value)| Sample {
                x,
                value,
                uncertainty: None,
            })
            .collect();
        ScanCurve::new(axis, quantity, samples, Provenance::default())
    }

    pub fn xs(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn has_uncertainty(&self) -> bool {
        self.samples.first().is_some_and(|s| s.uncertainty.is_some())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Unnormalized, cascade-blurred PLDOS along a transverse scan at fixed
/// penetration depth. Spots missing the fiber or stopping outside the core
/// contribute zero before the blur.
pub fn cross_scan_profile(spec: &FiberSpec, beam: &BeamConfig, y_grid: &[f64]) -> Result<Vec<f64>> {
    beam.validate()?;
    let mode = solve_he11(spec)?;
    let v_g = group_velocity(spec)?;
    let a = spec.radius;
    let raw = y_grid
        .iter()
        .map(|&y| -> Result<f64> {
            let stop = stopping_point(a, y, beam.delta)
                .map_err(|e| Error::Domain(format!("at y={y:e} m: {e}")))?;
            Ok(match stop.emission_radius() {
                Some(r) => mode.intensity(r.min(a)) / v_g,
                None => 0.0,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    cascade_convolve(y_grid, &raw, beam.sigma)
}

/// Transverse spot scan across the fiber, normalized to unit maximum.
/// `y_grid` must be uniform and cover `[-a, a]`.
pub fn simulate_cross_scan(spec: &FiberSpec, beam: &BeamConfig, y_grid: &[f64]) -> Result<ScanCurve> {
    uniform_spacing(y_grid)?;
    let a = spec.radius;
    let slack = 1e-9 * a;
    if y_grid[0] > -a + slack || y_grid[y_grid.len() - 1] < a - slack {
        return Err(Error::domain(format!(
            "scan grid [{:e}, {:e}] m does not cover [-a, a] with a={a:e} m",
            y_grid[0],
            y_grid[y_grid.len() - 1]
        )));
    }
    let profile = cross_scan_profile(spec, beam, y_grid)?;
    let norm = normalize_curve(&profile)?;
    let mut curve = ScanCurve::from_xy(Axis::YPosition, "rho_bar", y_grid, &norm)?;
    curve.provenance = Provenance {
        fiber: Some(*spec),
        beam: Some(*beam),
    };
    Ok(curve)
}

/// Raw on-spot PLDOS for each diameter, beam at `beam.y`.
pub fn diameter_sweep_points(
    diameters: &[f64],
    beam: &BeamConfig,
    base: &FiberSpec,
) -> Result<Vec<PldosPoint>> {
    beam.validate()?;
    base.validate()?;
    if diameters.is_empty() {
        return Err(Error::domain("diameter list is empty"));
    }
    if diameters.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::domain("diameters must be positive"));
    }
    if diameters.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("diameters must be strictly increasing"));
    }
    let specs = diameters
        .iter()
        .map(|d| base.with_radius(0.5 * d))
        .collect::<Result<Vec<_>>>()?;
    let rule = RadialRule::FixedPoint {
        delta: beam.delta,
        y: beam.y,
    };
    points_for_specs(Execution::default(), &specs, rule)
}

/// Normalized PLDOS at the beam stopping point versus size parameter
/// `s = k d / 2`, one point per diameter.
pub fn simulate_diameter_sweep(
    diameters: &[f64],
    beam: &BeamConfig,
    base: &FiberSpec,
) -> Result<ScanCurve> {
    let points = diameter_sweep_points(diameters, beam, base)?;
    let xs: Vec<f64> = points.iter().map(|p| p.size_param).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rho_bar).collect();
    let mut curve = ScanCurve::from_xy(Axis::SizeParam, "rho_bar", &xs, &ys)?;
    curve.provenance = Provenance {
        fiber: Some(*base),
        beam: Some(*beam),
    };
    Ok(curve)
}

/// Replaces each value `v` by `k / N`, `k ~ Poisson(v N / max v)`, with
/// uncertainty `sqrt(mean) / N`. Deterministic for a fixed seed.
pub fn add_shot_noise(curve: &ScanCurve, counts_at_max: u64, seed: u64) -> Result<ScanCurve> {
    if counts_at_max == 0 {
        return Err(Error::domain("counts_at_max must be positive"));
    }
    if curve.samples.iter().any(|s| s.value < 0.0) {
        return Err(Error::domain("shot noise needs non-negative values"));
    }
    let max = curve.samples.iter().map(|s| s.value).fold(0.0, f64::max);
    let n = counts_at_max as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(curve.len());
    for s in &curve.samples {
        let mean = if max > 0.0 { s.value * n / max } else { 0.0 };
        let k = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::Numerical(format!("Poisson mean {mean}: {e}")))?
                .sample(&mut rng)
        } else {
            0.0
        };
        samples.push(Sample {
            x: s.x,
            value: k / n,
            uncertainty: Some(mean.sqrt() / n),
        });
    }
    ScanCurve::new(curve.axis, &curve.quantity, samples, curve.provenance)
}

/// Residual weights: `1 / sigma` when the data carry uncertainties, with
/// zero uncertainties raised to the smallest positive one; otherwise 1.
fn weights(data: &ScanCurve) -> (Vec<f64>, bool) {
    if !data.has_uncertainty() {
        return (vec![1.0; data.len()], false);
    }
    let floor = data
        .samples
        .iter()
        .filter_map(|s| s.uncertainty)
        .filter(|u| *u > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return (vec![1.0; data.len()], false);
    }
    let w = data
        .samples
        .iter()
        .map(|s| 1.0 / s.uncertainty.unwrap_or(floor).max(floor))
        .collect();
    (w, true)
}

/// Cross-scan model sampled on a fine uniform grid, evaluated by linear
/// interpolation and taken as zero beyond the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanModel {
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl ScanModel {
    /// Simulates the normalized cross scan on a grid reaching a full radius
    /// beyond each fiber edge plus the blur width.
    pub fn simulate(spec: &FiberSpec, beam: &BeamConfig) -> Result<Self> {
        let a = spec.radius;
        let step = if beam.sigma > 0.0 {
            (0.5 * beam.sigma).min(a / 200.0)
        } else {
            a / 400.0
        };
        let half_span = 2.0 * a + 5.0 * beam.sigma;
        let half_points = (half_span / step).ceil() as usize;
        let ys: Vec<f64> = (0..=2 * half_points)
            .map(|i| (i as f64 - half_points as f64) * step)
            .collect();
        let scan = simulate_cross_scan(spec, beam, &ys)?;
        Ok(ScanModel {
            values: scan.values(),
            ys,
            provenance: scan.provenance,
        })
    }

    pub fn eval(&self, y: f64) -> f64 {
        let n = self.ys.len();
        let (lo, hi) = (self.ys[0], self.ys[n - 1]);
        if !(y >= lo && y <= hi) {
            return 0.0;
        }
        let step = (hi - lo) / (n - 1) as f64;
        let t = (y - lo) / step;
        let i = (t.floor() as usize).min(n - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// `amplitude * model(y - offset)`.
    pub fn eval_shifted(&self, y: f64, amplitude: f64, offset: f64) -> f64 {
        amplitude * self.eval(y - offset)
    }
}

/// Fits `amplitude * model(y - y0)` to a transverse scan; the fiber diameter
/// stays fixed at the model's. Parameters are `amplitude` and `offset_nm`.
pub fn fit_scan(data: &ScanCurve, model: &ScanModel) -> Result<FitResult> {
    if data.axis != Axis::YPosition {
        return Err(Error::domain("fit_scan needs a curve over y position"));
    }
    if data.len() < 5 {
        return Err(Error::domain(format!(
            "fit_scan needs at least 5 points, got {}",
            data.len()
        )));
    }
    let xs = data.xs();
    let ys = data.values();
    let (w, weighted) = weights(data);
    let a = model
        .provenance
        .fiber
        .map(|f| f.radius)
        .unwrap_or_else(|| 0.25 * (model.ys[model.ys.len() - 1] - model.ys[0]));

    let model_max = model.values.iter().copied().fold(0.0, f64::max);
    let data_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amp0 = if model_max > 0.0 { data_max / model_max } else { 1.0 };
    let mass: f64 = ys.iter().map(|v| v.max(0.0)).sum();
    let centroid = if mass > 0.0 {
        xs.iter().zip(&ys).map(|(x, v)| x * v.max(0.0)).sum::<f64>() / mass
    } else {
        0.0
    };
    let a_nm = a * 1e9;
    let params = [
        Param::free("amplitude", amp0, amp0.abs().max(1e-12)),
        Param::bounded("offset_nm", centroid * 1e9, -a_nm, a_nm, 1.0),
    ];
    let fit = levenberg_marquardt(
        |p, out| {
            let offset = p[1] * 1e-9;
            for i in 0..xs.len() {
                out[i] = (model.eval_shifted(xs[i], p[0], offset) - ys[i]) * w[i];
            }
        },
        xs.len(),
        &params,
        LmOptions::default(),
        !weighted,
    );
    Ok(fit)
}

/// `A (G/2)^2 / ((x - x0)^2 + (G/2)^2)`.
pub fn lorentzian(x: f64, amplitude: f64, center: f64, fwhm: f64) -> f64 {
    let g = 0.5 * fwhm;
    amplitude * g * g / ((x - center) * (x - center) + g * g)
}

/// Three-parameter Lorentzian fit to a spectrum over wavelength. Parameters
/// are `amplitude`, `center_nm` and `fwhm_nm`.
pub fn fit_lorentzian(spectrum: &ScanCurve) -> Result<FitResult> {
    if spectrum.axis != Axis::Wavelength {
        return Err(Error::domain("fit_lorentzian needs a curve over wavelength"));
    }
    if spectrum.len() < 7 {
        return Err(Error::domain(format!(
            "fit_lorentzian needs at least 7 points, got {}",
            spectrum.len()
        )));
    }
    let xs: Vec<f64> = spectrum.xs().iter().map(|x| x * 1e9).collect();
    let ys = spectrum.values();
    let (w, weighted) = weights(spectrum);
    let span = xs[xs.len() - 1] - xs[0];
    let peak = crate::curve::argmax(&ys).unwrap();
    let fwhm0 = full_width_half_max(&xs, &ys).ok_or_else(|| {
        Error::domain("spectrum does not fall to half maximum on both sides of its peak")
    })?;
    if !(span > fwhm0) {
        return Err(Error::domain(format!(
            "spectrum spans {span} nm, not more than the estimated FWHM {fwhm0} nm"
        )));
    }
    let params = [
        Param::free("amplitude", ys[peak], ys[peak].abs().max(1e-12)),
        Param::free("center_nm", xs[peak], 1.0),
        Param::bounded("fwhm_nm", fwhm0, 1e-6, f64::INFINITY, 1.0),
    ];
    Ok(levenberg_marquardt(
        |p, out| {
            for i in 0..xs.len() {
                out[i] = (lorentzian(xs[i], p[0], p[1], p[2]) - ys[i]) * w[i];
            }
        },
        xs.len(),
        &params,
        LmOptions::default(),
        !weighted,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pldos::linspace;

    fn spec() -> FiberSpec {
        FiberSpec::new(200e-9, 1.46, 1.0, 659e-9).unwrap()
    }

    #[test]
    fn scan_curve_invariants() {
        assert!(ScanCurve::from_xy(Axis::YPosition, "v", &[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(ScanCurve::from_xy(Axis::YPosition, "v", &[0.0, 1.0], &[1.0, f64::NAN]).is_err());
        let mixed = vec![
            Sample { x: 0.0, value: 1.0, uncertainty: Some(0.1) },
            Sample { x: 1.0, value: 1.0, uncertainty: None },
        ];
        assert!(ScanCurve::new(Axis::YPosition, "v", mixed, Provenance::default()).is_err());
        let negative = vec![Sample { x: 0.0, value: 1.0, uncertainty: Some(-0.1) }];
        assert!(ScanCurve::new(Axis::YPosition, "v", negative, Provenance::default()).is_err());
    }

    #[test]
    fn cross_scan_needs_coverage() {
        let beam = BeamConfig::from_delta(10e-9).unwrap();
        let ys = linspace(-150e-9, 150e-9, 61);
        assert!(simulate_cross_scan(&spec(), &beam, &ys).is_err());
    }

    #[test]
    fn shot_noise_validation() {
        let c = ScanCurve::from_xy(Axis::YPosition, "v", &[0.0, 1.0], &[0.5, 1.0]).unwrap();
        assert!(add_shot_noise(&c, 0, 1).is_err());
        let neg = ScanCurve::from_xy(Axis::YPosition, "v", &[0.0, 1.0], &[-0.5, 1.0]).unwrap();
        assert!(add_shot_noise(&neg, 10, 1).is_err());
        let noisy = add_shot_noise(&c, 100, 3).unwrap();
        assert!(noisy.has_uncertainty());
    }

    #[test]
    fn fits_validate_input() {
        let few = ScanCurve::from_xy(Axis::Wavelength, "v", &[1.0, 2.0, 3.0], &[1.0, 2.0, 1.0]).unwrap();
        assert!(fit_lorentzian(&few).is_err());
        let wrong_axis = ScanCurve::from_xy(Axis::YPosition, "v", &[1.0; 0], &[]).unwrap();
        assert!(fit_lorentzian(&wrong_axis).is_err());
        let beam = BeamConfig::from_delta(10e-9).unwrap();
        let model = ScanModel::simulate(&spec(), &beam).unwrap();
        let short = ScanCurve::from_xy(Axis::YPosition, "v", &[0.0, 1e-9], &[1.0, 1.0]).unwrap();
        assert!(fit_scan(&short, &model).is_err());
    }

    #[test]
    fn zero_uncertainties_are_floored() {
        let samples = vec![
            Sample { x: 0.0, value: 0.0, uncertainty: Some(0.0) },
            Sample { x: 1.0, value: 1.0, uncertainty: Some(0.5) },
            Sample { x: 2.0, value: 1.0, uncertainty: Some(0.25) },
        ];
        let c = ScanCurve::new(Axis::YPosition, "v", samples, Provenance::default()).unwrap();
        let (w, weighted) = weights(&c);
        assert!(weighted);
        assert_eq!(w, vec![4.0, 2.0, 4.0]);
    }
}
