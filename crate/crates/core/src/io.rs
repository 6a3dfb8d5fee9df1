//! Run configuration (TOML) and the CSV curve file format.
//!
//! User-facing lengths are nanometers; everything returned from here is in
//! meters.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::beam::{BeamConfig, DepthTable, DEFAULT_SIGMA};
use crate::curve::{Column, Curve};
use crate::error::{Error, Result};
use crate::experiment::{Axis, Provenance, Sample, ScanCurve};
use crate::fiber::FiberSpec;
use crate::pldos::{linspace, RadialRule, SWEEP_RANGE};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_WAVELENGTH_NM: f64 = 659.0;
pub const DEFAULT_N_CORE: f64 = 1.46;
pub const DEFAULT_N_CLAD: f64 = 1.0;
pub const DEFAULT_S_RANGE: (f64, f64, usize) = (0.8, 3.0, 200);
/// Default cross-scan half width, in fiber radii.
pub const DEFAULT_SCAN_HALF_WIDTH: f64 = 1.25;

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("fiber", &["radius_nm", "n_co", "n_cl", "wavelength_nm"]),
    ("beam", &["energy_kev", "delta_nm", "sigma_nm", "y_nm", "depth_table"]),
    ("sweep", &["s_min", "s_max", "points", "diameters_nm"]),
    ("scan", &["half_width_nm", "points"]),
    ("rule", &["kind"]),
    ("output", &["path", "format"]),
];

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    #[serde(default)]
    fiber: RawFiber,
    beam: Option<RawBeam>,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    scan: RawScan,
    #[serde(default)]
    rule: RawRule,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
struct RawFiber {
    radius_nm: Option<f64>,
    n_co: Option<f64>,
    n_cl: Option<f64>,
    wavelength_nm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawBeam {
    energy_kev: Option<f64>,
    delta_nm: Option<f64>,
    sigma_nm: Option<f64>,
    y_nm: Option<f64>,
    depth_table: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct RawSweep {
    s_min: Option<f64>,
    s_max: Option<f64>,
    points: Option<usize>,
    diameters_nm: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
struct RawScan {
    half_width_nm: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
struct RawRule {
    kind: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct RawOutput {
    path: Option<PathBuf>,
    format: Option<String>,
}

/// Fiber geometry and material; the radius is optional because sweeps over
/// size parameter do not need one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberConfig {
    pub radius: Option<f64>,
    pub n_core: f64,
    pub n_clad: f64,
    pub wavelength: f64,
}

impl FiberConfig {
    /// Spec with the configured radius, or an error naming the missing field.
    pub fn spec(&self) -> Result<FiberSpec> {
        let radius = self
            .radius
            .ok_or_else(|| Error::Config("fiber.radius_nm is required for this command".into()))?;
        FiberSpec::new(radius, self.n_core, self.n_clad, self.wavelength)
    }

    /// Spec for sweeps; the radius is a placeholder when not configured.
    pub fn base_spec(&self) -> Result<FiberSpec> {
        let radius = self.radius.unwrap_or(self.wavelength);
        FiberSpec::new(radius, self.n_core, self.n_clad, self.wavelength)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepConfig {
    Range { s_min: f64, s_max: f64, points: usize },
    /// Fiber diameters (m).
    Diameters(Vec<f64>),
}

impl SweepConfig {
    pub fn s_grid(&self, wavelength: f64) -> Vec<f64> {
        match self {
            SweepConfig::Range { s_min, s_max, points } => linspace(*s_min, *s_max, *points),
            SweepConfig::Diameters(d) => {
                let k = 2.0 * std::f64::consts::PI / wavelength;
                d.iter().map(|d| 0.5 * k * d).collect()
            }
        }
    }

    /// Diameters (m) at the given wavelength.
    pub fn diameters(&self, wavelength: f64) -> Vec<f64> {
        match self {
            SweepConfig::Diameters(d) => d.clone(),
            SweepConfig::Range { .. } => {
                let k = 2.0 * std::f64::consts::PI / wavelength;
                self.s_grid(wavelength).iter().map(|s| 2.0 * s / k).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Center,
    Surface,
    /// Beam stopping point from `[beam]`.
    Beam,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Center => "center",
            RuleKind::Surface => "surface",
            RuleKind::Beam => "beam",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    /// Half width of the scan (m); defaults to 1.25 radii.
    pub half_width: Option<f64>,
    /// Point count; defaults to the coarsest grid with spacing <= sigma/2.
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fiber: FiberConfig,
    pub beam: Option<BeamConfig>,
    pub depth_table: Option<PathBuf>,
    pub sweep: SweepConfig,
    pub scan: ScanConfig,
    pub rule: RuleKind,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("", None, None).expect("empty config is valid")
    }
}

fn unknown_keys(table: &toml::Table) -> Vec<String> {
    let mut unknown = Vec::new();
    for (section, value) in table {
        let Some((_, keys)) = KNOWN_KEYS.iter().find(|(s, _)| s == section) else {
            unknown.push(section.clone());
            continue;
        };
        match value.as_table() {
            Some(t) => unknown.extend(
                t.keys()
                    .filter(|k| !keys.contains(&k.as_str()))
                    .map(|k| format!("{section}.{k}")),
            ),
            None => unknown.push(section.clone()),
        }
    }
    unknown
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Config(format!("{field} must be > 0, got {v}")))
    }
}

/// Parses configuration text. Relative depth-table paths resolve against
/// `base_dir`; `depth_table`, when given, replaces the one in the file.
pub fn parse_config(
    text: &str,
    base_dir: Option<&Path>,
    depth_table: Option<&Path>,
) -> Result<RunConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let unknown = unknown_keys(&table);
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;

    let f = raw.fiber;
    let n_core = f.n_co.unwrap_or(DEFAULT_N_CORE);
    let n_clad = f.n_cl.unwrap_or(DEFAULT_N_CLAD);
    if !(n_clad >= 1.0 && n_core > n_clad && n_core.is_finite()) {
        return Err(Error::Config(format!(
            "fiber indices need 1 <= n_cl < n_co, got n_co={n_core}, n_cl={n_clad}"
        )));
    }
    let fiber = FiberConfig {
        radius: f.radius_nm.map(|r| positive("fiber.radius_nm", r)).transpose()?.map(|r| r / 1e9),
        n_core,
        n_clad,
        wavelength: positive("fiber.wavelength_nm", f.wavelength_nm.unwrap_or(DEFAULT_WAVELENGTH_NM))?
            / 1e9,
    };

    let mut depth_table = depth_table.map(Path::to_path_buf);
    let beam = match raw.beam {
        None => None,
        Some(b) => {
            if depth_table.is_none() {
                depth_table = b.depth_table.map(|p| match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                });
            }
            let sigma = b.sigma_nm.map_or(DEFAULT_SIGMA, |s| s / 1e9);
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::Config(format!("beam.sigma_nm must be >= 0, got {}", sigma * 1e9)));
            }
            let y = b.y_nm.unwrap_or(0.0) / 1e9;
            let beam = match (b.energy_kev, b.delta_nm) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "beam: give exactly one of energy_kev and delta_nm, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::Config(
                        "beam: one of energy_kev or delta_nm is required".into(),
                    ))
                }
                (None, Some(d)) => {
                    if !(d.is_finite() && d >= 0.0) {
                        return Err(Error::Config(format!("beam.delta_nm must be >= 0, got {d}")));
                    }
                    BeamConfig::from_delta(d / 1e9)?
                }
                (Some(e), None) => {
                    positive("beam.energy_kev", e)?;
                    let table = depth_table.as_deref().map(load_depth_table).transpose()?;
                    BeamConfig::from_energy(e, table.as_ref())?
                }
            };
            Some(BeamConfig { sigma, y, ..beam })
        }
    };

    let s = raw.sweep;
    let sweep = match s.diameters_nm {
        Some(d) => {
            if s.s_min.is_some() || s.s_max.is_some() || s.points.is_some() {
                return Err(Error::Config(
                    "sweep: diameters_nm excludes s_min/s_max/points".into(),
                ));
            }
            if d.is_empty() || d.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Config("sweep.diameters_nm must be non-empty and positive".into()));
            }
            if d.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Config("sweep.diameters_nm must be strictly increasing".into()));
            }
            SweepConfig::Diameters(d.iter().map(|v| v / 1e9).collect())
        }
        None => {
            let (lo, hi, n) = DEFAULT_S_RANGE;
            let (s_min, s_max, points) = (s.s_min.unwrap_or(lo), s.s_max.unwrap_or(hi), s.points.unwrap_or(n));
            for (name, v) in [("sweep.s_min", s_min), ("sweep.s_max", s_max)] {
                if !(v >= SWEEP_RANGE.0 && v <= SWEEP_RANGE.1) {
                    return Err(Error::Config(format!(
                        "{name} must lie in [{}, {}], got {v}",
                        SWEEP_RANGE.0, SWEEP_RANGE.1
                    )));
                }
            }
            if points < 2 || s_max <= s_min {
                return Err(Error::Config(format!(
                    "sweep needs s_min < s_max and points >= 2, got [{s_min}, {s_max}] with {points}"
                )));
            }
            SweepConfig::Range { s_min, s_max, points }
        }
    };
    if let SweepConfig::Diameters(_) = sweep {
        let grid = sweep.s_grid(fiber.wavelength);
        if let Some(bad) = grid.iter().find(|v| !(**v >= SWEEP_RANGE.0 && **v <= SWEEP_RANGE.1)) {
            return Err(Error::Config(format!(
                "sweep.diameters_nm gives s={bad}, outside [{}, {}]",
                SWEEP_RANGE.0, SWEEP_RANGE.1
            )));
        }
    }

    let scan = ScanConfig {
        half_width: raw
            .scan
            .half_width_nm
            .map(|h| positive("scan.half_width_nm", h))
            .transpose()?
            .map(|h| h / 1e9),
        points: match raw.scan.points {
            Some(n) if n < 3 => {
                return Err(Error::Config(format!("scan.points must be >= 3, got {n}")))
            }
            p => p,
        },
    };

    let rule = match raw.rule.kind.as_deref() {
        None | Some("surface") => RuleKind::Surface,
        Some("center") => RuleKind::Center,
        Some("beam") => RuleKind::Beam,
        Some(other) => {
            return Err(Error::Config(format!(
                "rule.kind must be one of center, surface, beam; got `{other}`"
            )))
        }
    };
    if rule == RuleKind::Beam && beam.is_none() {
        return Err(Error::Config("rule.kind = \"beam\" needs a [beam] section".into()));
    }

    match raw.output.format.as_deref() {
        None | Some("csv") => {}
        Some(other) => {
            return Err(Error::Config(format!("output.format must be \"csv\", got `{other}`")))
        }
    }

    Ok(RunConfig {
        fiber,
        beam,
        depth_table,
        sweep,
        scan,
        rule,
        output: raw.output.path,
    })
}

pub fn load_config(path: &Path, depth_table: Option<&Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path.parent(), depth_table)
        .map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
}

pub fn load_depth_table(path: &Path) -> Result<DepthTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DepthTable::parse(&text)
}

impl RunConfig {
    /// Radial rule for `pldos-sweep`.
    pub fn radial_rule(&self) -> Result<RadialRule> {
        Ok(match self.rule {
            RuleKind::Center => RadialRule::Center,
            RuleKind::Surface => RadialRule::SurfaceInside,
            RuleKind::Beam => {
                let b = self.beam_config()?;
                RadialRule::FixedPoint { delta: b.delta, y: b.y }
            }
        })
    }

    pub fn beam_config(&self) -> Result<BeamConfig> {
        self.beam
            .ok_or_else(|| Error::Config("a [beam] section is required for this command".into()))
    }

    /// Uniform scan grid covering `[-a, a]` with spacing at most sigma/2.
    pub fn scan_grid(&self) -> Result<Vec<f64>> {
        let a = self.fiber.spec()?.radius;
        let sigma = self.beam_config()?.sigma;
        let half = self.scan.half_width.unwrap_or(DEFAULT_SCAN_HALF_WIDTH * a);
        if half < a {
            return Err(Error::Config(format!(
                "scan.half_width_nm = {} does not cover the fiber radius {}",
                half * 1e9,
                a * 1e9
            )));
        }
        let points = match self.scan.points {
            Some(n) => n,
            None => {
                let max_step = if sigma > 0.0 { 0.5 * sigma } else { a / 100.0 };
                let intervals = (2.0 * half / max_step).ceil() as usize;
                intervals + 1 + intervals % 2
            }
        };
        Ok(linspace(-half, half, points))
    }

    /// Resolved configuration as `key = value` lines, defaults included.
    pub fn echo(&self) -> Vec<String> {
        let nm = |v: f64| v * 1e9;
        let mut out = Vec::new();
        let f = &self.fiber;
        match f.radius {
            Some(r) => out.push(format!("fiber.radius_nm = {}", nm(r))),
            None => out.push("fiber.radius_nm = (unset)".to_string()),
        }
        out.push(format!("fiber.n_co = {}", f.n_core));
        out.push(format!("fiber.n_cl = {}", f.n_clad));
        out.push(format!("fiber.wavelength_nm = {}", nm(f.wavelength)));
        if let Some(b) = &self.beam {
            if let Some(e) = b.energy_kev {
                out.push(format!("beam.energy_kev = {e}"));
            }
            out.push(format!("beam.delta_nm = {}", nm(b.delta)));
            out.push(format!("beam.sigma_nm = {}", nm(b.sigma)));
            out.push(format!("beam.y_nm = {}", nm(b.y)));
        }
        if let Some(p) = &self.depth_table {
            out.push(format!("beam.depth_table = {}", p.display()));
        }
        match &self.sweep {
            SweepConfig::Range { s_min, s_max, points } => {
                out.push(format!("sweep.s_min = {s_min}"));
                out.push(format!("sweep.s_max = {s_max}"));
                out.push(format!("sweep.points = {points}"));
            }
            SweepConfig::Diameters(d) => {
                let list: Vec<String> = d.iter().map(|v| nm(*v).to_string()).collect();
                out.push(format!("sweep.diameters_nm = [{}]", list.join(", ")));
            }
        }
        if let Some(h) = self.scan.half_width {
            out.push(format!("scan.half_width_nm = {}", nm(h)));
        }
        if let Some(n) = self.scan.points {
            out.push(format!("scan.points = {n}"));
        }
        out.push(format!("rule.kind = {}", self.rule.name()));
        out.push("output.format = csv".to_string());
        out
    }
}

/// Comment lines placed above the column header of a curve file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub lines: Vec<String>,
}

impl Header {
    /// Version line, optional timestamp, then the given provenance lines.
    pub fn new(timestamp: bool, provenance: &[String]) -> Self {
        let mut lines = vec![format!("fiber-pldos {VERSION}")];
        if timestamp {
            lines.push(format!(
                "generated {}",
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            ));
        }
        lines.extend(provenance.iter().cloned());
        Header { lines }
    }
}

/// Renders a curve as CSV: `#` header lines, a `name[unit]` column header,
/// then rows of `{:.16e}` values. LF line endings throughout.
pub fn format_curve(curve: &Curve, header: &Header) -> Result<String> {
    let n = curve.len();
    if curve.columns.iter().any(|c| c.values.len() != n) {
        return Err(Error::Format("curve columns have different lengths".into()));
    }
    for c in &curve.columns {
        if c.name.is_empty() || c.name.contains([',', '[', ']', '\n', '#']) || c.unit.contains([',', ']', '\n']) {
            return Err(Error::Format(format!("invalid column label `{}[{}]`", c.name, c.unit)));
        }
    }
    let mut out = String::new();
    for line in &header.lines {
        for part in line.lines() {
            let _ = writeln!(out, "# {part}");
        }
    }
    let labels: Vec<String> = curve
        .columns
        .iter()
        .map(|c| format!("{}[{}]", c.name, c.unit))
        .collect();
    out.push_str(&labels.join(","));
    out.push('\n');
    for i in 0..n {
        for (j, c) in curve.columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", c.values[i]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.flush())
        .map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_curve(curve: &Curve, header: &Header, path: &Path) -> Result<()> {
    write_atomic(path, &format_curve(curve, header)?)
}

/// Parses CSV written by [`format_curve`] (or by hand in the same layout).
/// Returns the curve and the header comment lines.
pub fn parse_curve(text: &str) -> Result<(Curve, Header)> {
    let mut header = Header::default();
    let mut curve: Option<Curve> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(comment) = line.strip_prefix('#') {
            if curve.is_none() {
                header.lines.push(comment.strip_prefix(' ').unwrap_or(comment).to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match curve.as_mut() {
            None => {
                let mut columns = Vec::new();
                for label in line.split(',') {
                    let label = label.trim();
                    let (name, unit) = match label.split_once('[') {
                        Some((n, rest)) => match rest.strip_suffix(']') {
                            Some(u) => (n.trim(), u.trim()),
                            None => {
                                return Err(Error::Format(format!(
                                    "line {}: bad column label `{label}`",
                                    lineno + 1
                                )))
                            }
                        },
                        None => (label, "1"),
                    };
                    if name.is_empty() {
                        return Err(Error::Format(format!("line {}: empty column name", lineno + 1)));
                    }
                    columns.push(Column {
                        name: name.to_string(),
                        unit: unit.to_string(),
                        values: Vec::new(),
                    });
                }
                curve = Some(Curve { columns });
            }
            Some(c) => {
                let row = line
                    .split(',')
                    .map(|f| f.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
                c.push_row(&row)
                    .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            }
        }
    }
    let curve = curve.ok_or_else(|| Error::Format("no column header found".into()))?;
    Ok((curve, header))
}

pub fn read_curve(path: &Path) -> Result<(Curve, Header)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn length_factor(unit: &str) -> Option<f64> {
    match unit {
        "m" => Some(1.0),
        "um" => Some(1e-6),
        "nm" => Some(1e-9),
        _ => None,
    }
}

/// Scan curve as file columns: abscissa in file units, the value, and an
/// `uncertainty` column when present.
pub fn scan_to_curve(scan: &ScanCurve) -> Curve {
    let (unit, factor) = scan.axis.file_unit();
    let mut labels = vec![(scan.axis.column_name(), unit), (scan.quantity.as_str(), "1")];
    if scan.has_uncertainty() {
        labels.push(("uncertainty", "1"));
    }
    let mut curve = Curve::with_columns(&labels);
    for s in &scan.samples {
        let mut row = vec![s.x * factor, s.value];
        row.extend(s.uncertainty);
        curve.push_row(&row).expect("row width matches");
    }
    curve
}

/// Interprets a curve file as a scan: first column is the axis (`y`,
/// `wavelength` with a length unit, or `s`), second the value, and an
/// optional column named `uncertainty`.
pub fn curve_to_scan(curve: &Curve) -> Result<ScanCurve> {
    if curve.columns.len() < 2 {
        return Err(Error::Format("a scan needs at least an abscissa and a value column".into()));
    }
    let x = &curve.columns[0];
    let axis = Axis::from_column_name(&x.name).ok_or_else(|| {
        Error::Format(format!(
            "first column `{}` is not a scan axis (expected y, s or wavelength)",
            x.name
        ))
    })?;
    let factor = match axis {
        Axis::SizeParam => 1.0,
        _ => length_factor(&x.unit).ok_or_else(|| {
            Error::Format(format!("unit `{}` of column `{}` is not a length (m, um, nm)", x.unit, x.name))
        })?,
    };
    let value = &curve.columns[1];
    let unc = curve.column("uncertainty");
    let samples = (0..curve.len())
        .map(|i| Sample {
            x: x.values[i] * factor,
            value: value.values[i],
            uncertainty: unc.map(|u| u[i]),
        })
        .collect();
    ScanCurve::new(axis, &value.name, samples, Provenance::default())
        .map_err(|e| Error::Format(e.to_string()))
}
