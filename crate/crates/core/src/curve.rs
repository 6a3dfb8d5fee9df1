//! Column-oriented curves and peak analysis helpers.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    /// Unit label; `1` for dimensionless quantities.
    pub unit: String,
    pub values: Vec<f64>,
}

/// Ordered rows of named columns. The first column is the abscissa.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Curve {
    pub columns: Vec<Column>,
}

impl Curve {
    pub fn with_columns(spec: &[(&str, &str)]) -> Self {
        Curve {
            columns: spec
                .iter()
                .map(|(name, unit)| Column {
                    name: name.to_string(),
                    unit: unit.to_string(),
                    values: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Format(format!(
                "row has {} values, curve has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.values.push(v);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn abscissa(&self) -> &[f64] {
        self.columns.first().map_or(&[], |c| c.values.as_slice())
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[i]).collect()
    }
}

/// Divides `values` by their maximum. The maximum maps to exactly `1`.
pub fn normalize_curve(values: &[f64]) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("cannot normalize a curve with non-finite values"));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::domain(format!(
            "cannot normalize a curve without a positive value (max = {max})"
        )));
    }
    Ok(values.iter().map(|v| v / max).collect())
}

/// Index of the largest value (first one on ties).
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if values[b] >= *v => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Peak abscissa by a parabola through the grid maximum and its two
/// neighbours. Falls back to the grid point at the ends of the range.
pub fn peak_location(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let i = argmax(ys)?;
    if i == 0 || i + 1 >= ys.len() {
        return Some(xs[i]);
    }
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature >= 0.0 {
        return Some(x1);
    }
    // vertex of y0 + d01 (x - x0) + curvature (x - x0)(x - x1)
    Some(0.5 * (x0 + x1) - d01 / (2.0 * curvature))
}

/// Full width at half of the maximum, with linear interpolation of both
/// crossings. `None` when the curve does not fall below half maximum on
/// both sides of the peak.
pub fn full_width_half_max(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let i = argmax(ys)?;
    let half = 0.5 * ys[i];
    let left = (1..=i).rev().find(|&j| ys[j - 1] < half).map(|j| {
        let (xa, xb, ya, yb) = (xs[j - 1], xs[j], ys[j - 1], ys[j]);
        xa + (half - ya) * (xb - xa) / (yb - ya)
    })?;
    let right = (i..ys.len() - 1).find(|&j| ys[j + 1] < half).map(|j| {
        let (xa, xb, ya, yb) = (xs[j], xs[j + 1], ys[j], ys[j + 1]);
        xa + (half - ya) * (xb - xa) / (yb - ya)
    })?;
    Some(right - left)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_curve(&[2.5; 4]).unwrap(), vec![1.0; 4]);
        let once = normalize_curve(&[0.1, 0.7, 0.3]).unwrap();
        assert_eq!(normalize_curve(&once).unwrap(), once);
        let scaled: Vec<f64> = [0.1, 0.7, 0.3].iter().map(|v| v * 7.3).collect();
        let again = normalize_curve(&scaled).unwrap();
        for (a, b) in once.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(normalize_curve(&[0.0, 0.0]).is_err());
        assert!(normalize_curve(&[-1.0, -2.0]).is_err());
        assert!(normalize_curve(&[]).is_err());
    }

    #[test]
    fn parabolic_peak_is_exact_for_parabola() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - (x - 0.437).powi(2)).collect();
        assert!((peak_location(&xs, &ys).unwrap() - 0.437).abs() < 1e-12);
    }

    #[test]
    fn fwhm_of_triangle() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (10.0 - (x - 10.0f64).abs()).max(0.0)).collect();
        assert!((full_width_half_max(&xs, &ys).unwrap() - 10.0).abs() < 1e-12);
        assert!(full_width_half_max(&xs[..5], &ys[..5]).is_none());
    }

    #[test]
    fn rows_must_match_columns() {
        let mut c = Curve::with_columns(&[("x", "1"), ("y", "1")]);
        assert!(c.push_row(&[1.0]).is_err());
        c.push_row(&[1.0, 2.0]).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.column("y"), Some(&[2.0][..]));
    }
}
