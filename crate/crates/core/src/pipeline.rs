//! Command execution behind the `fiber-pldos` binary. Each verb turns a
//! [`RunConfig`] (plus a data file for fits) into the text of its output.

use std::fmt::Write as _;
use std::path::Path;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::experiment::{
    diameter_sweep_points, fit_lorentzian, fit_scan, simulate_cross_scan, Axis, ScanModel,
};
use crate::fiber::{solve_he11, v_number};
use crate::io::{curve_to_scan, format_curve, read_curve, scan_to_curve, Header, RunConfig};
use crate::lm::FitResult;
use crate::pldos::{group_velocity, pldos_sweep};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Mode,
    PldosSweep,
    CrossScan,
    DiameterSweep,
    FitScan,
    FitSpectrum,
}

impl Verb {
    pub const ALL: [Verb; 6] = [
        Verb::Mode,
        Verb::PldosSweep,
        Verb::CrossScan,
        Verb::DiameterSweep,
        Verb::FitScan,
        Verb::FitSpectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Verb::Mode => "mode",
            Verb::PldosSweep => "pldos-sweep",
            Verb::CrossScan => "cross-scan",
            Verb::DiameterSweep => "diameter-sweep",
            Verb::FitScan => "fit-scan",
            Verb::FitSpectrum => "fit-spectrum",
        }
    }

    pub fn needs_data(self) -> bool {
        matches!(self, Verb::FitScan | Verb::FitSpectrum)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a> {
    /// Input data file for the fit verbs.
    pub data: Option<&'a Path>,
    /// Add a `generated <time>` line to file headers.
    pub timestamp: bool,
}

/// Runs `verb` and returns the output text (CSV for curves, `key=value`
/// lines for `mode` and fits).
pub fn run_command(verb: Verb, config: &RunConfig, options: &RunOptions) -> Result<String> {
    let mut provenance = vec![format!("command = {}", verb.name())];
    let data = match (verb.needs_data(), options.data) {
        (true, None) => {
            return Err(Error::Config(format!("{} needs a data file (--data)", verb.name())))
        }
        (true, Some(p)) => {
            provenance.push(format!("data = {}", p.display()));
            Some(p)
        }
        (false, _) => None,
    };
    provenance.extend(config.echo());
    let header = Header::new(options.timestamp, &provenance);

    match verb {
        Verb::Mode => mode_report(config),
        Verb::PldosSweep => {
            let base = config.fiber.base_spec()?;
            let grid = config.sweep.s_grid(base.wavelength);
            format_curve(&pldos_sweep(&base, &grid, config.radial_rule()?)?, &header)
        }
        Verb::CrossScan => {
            let spec = config.fiber.spec()?;
            let scan = simulate_cross_scan(&spec, &config.beam_config()?, &config.scan_grid()?)?;
            format_curve(&scan_to_curve(&scan), &header)
        }
        Verb::DiameterSweep => {
            let base = config.fiber.base_spec()?;
            let diameters = config.sweep.diameters(base.wavelength);
            let points = diameter_sweep_points(&diameters, &config.beam_config()?, &base)?;
            let mut curve = Curve::with_columns(&[
                ("s", "1"),
                ("diameter", "nm"),
                ("rho_g", "s/m^3"),
                ("rho_bar", "1"),
            ]);
            for (p, d) in points.iter().zip(&diameters) {
                curve.push_row(&[p.size_param, d * 1e9, p.rho_g, p.rho_bar])?;
            }
            format_curve(&curve, &header)
        }
        Verb::FitScan => {
            let (curve, _) = read_curve(data.expect("checked above"))?;
            let scan = curve_to_scan(&curve)?;
            if scan.axis != Axis::YPosition {
                return Err(Error::Format("fit-scan data must have a y[nm] first column".into()));
            }
            let model = ScanModel::simulate(&config.fiber.spec()?, &config.beam_config()?)?;
            Ok(fit_report(&fit_scan(&scan, &model)?, &header))
        }
        Verb::FitSpectrum => {
            let (curve, _) = read_curve(data.expect("checked above"))?;
            let scan = curve_to_scan(&curve)?;
            if scan.axis != Axis::Wavelength {
                return Err(Error::Format(
                    "fit-spectrum data must have a wavelength[nm] first column".into(),
                ));
            }
            Ok(fit_report(&fit_lorentzian(&scan)?, &header))
        }
    }
}

fn mode_report(config: &RunConfig) -> Result<String> {
    let spec = config.fiber.spec()?;
    let mode = solve_he11(&spec)?;
    let v_g = group_velocity(&spec)?;
    let mut out = String::new();
    let mut kv = |k: &str, v: f64| {
        let _ = writeln!(out, "{k}={v:.16e}");
    };
    kv("radius_nm", spec.radius * 1e9);
    kv("wavelength_nm", spec.wavelength * 1e9);
    kv("n_co", spec.n_core);
    kv("n_cl", spec.n_clad);
    kv("s", mode.size_param);
    kv("V", v_number(&spec));
    kv("u", mode.u);
    kv("w", mode.w);
    kv("n_eff", mode.n_eff);
    kv("beta_per_m", mode.beta);
    kv("hybrid_s", mode.s_mode);
    kv("v_g_over_c", v_g / SPEED_OF_LIGHT);
    Ok(out)
}

/// `key=value` lines after `#` provenance comments; standard errors are
/// listed as `<name>_stderr` when available.
pub fn fit_report(fit: &FitResult, header: &Header) -> String {
    let mut out = String::new();
    for line in &header.lines {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "converged={}", fit.converged);
    let _ = writeln!(out, "iterations={}", fit.iterations);
    let _ = writeln!(out, "residual_norm={:.16e}", fit.residual_norm);
    for (name, value) in &fit.params {
        let _ = writeln!(out, "{name}={value:.16e}");
    }
    for (name, _) in &fit.params {
        if let Some(se) = fit.std_error(name) {
            let _ = writeln!(out, "{name}_stderr={se:.16e}");
        }
    }
    out
}

/// One-line machine-parsable error report.
pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    format!("error: code={} kind={} msg=\"{msg}\"", e.exit_code(), e.kind())
}
