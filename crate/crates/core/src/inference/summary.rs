use std::fmt;

use serde::{Deserialize, Serialize};

use super::posterior::PosteriorSamples;
use crate::error::{DolError, Result};
use crate::shape::DegradationParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub median: f64,
    pub q025: f64,
    pub q975: f64,
    pub mean: f64,
}

/// Posterior quantiles and means, one row per parameter plus `v/u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub rows: Vec<SummaryRow>,
}

impl PosteriorSummary {
    pub fn row(&self, name: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Whether `[q025, q975]` of `name` contains `value`.
    pub fn covers(&self, name: &str, value: f64) -> bool {
        self.row(name)
            .is_some_and(|r| r.q025 <= value && value <= r.q975)
    }
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_column(name: &str, values: &[f64]) -> Result<SummaryRow> {
    if values.is_empty() {
        return Err(DolError::domain("cannot summarize an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(SummaryRow {
        name: name.to_string(),
        median: quantile_sorted(&sorted, 0.5),
        q025: quantile_sorted(&sorted, 0.025),
        q975: quantile_sorted(&sorted, 0.975),
        mean: values.iter().sum::<f64>() / values.len() as f64,
    })
}

pub fn summarize_draws(draws: &[DegradationParams]) -> Result<PosteriorSummary> {
    let mut rows = Vec::with_capacity(7);
    for (j, name) in DegradationParams::NAMES.iter().enumerate() {
        let col: Vec<f64> = draws.iter().map(|d| d.to_array()[j]).collect();
        rows.push(summarize_column(name, &col)?);
    }
    let threshold: Vec<f64> = draws.iter().map(|d| d.threshold()).collect();
    rows.push(summarize_column("v/u", &threshold)?);
    Ok(PosteriorSummary { rows })
}

pub fn summarize(samples: &PosteriorSamples) -> Result<PosteriorSummary> {
    summarize_draws(&samples.draws)
}

impl fmt::Display for PosteriorSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<10}{:>14}{:>14}{:>14}{:>14}",
            "parameter", "50%", "2.5%", "97.5%", "mean"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<10}{:>14}{:>14}{:>14}{:>14}",
                r.name,
                sig(r.median),
                sig(r.q025),
                sig(r.q975),
                sig(r.mean)
            )?;
        }
        Ok(())
    }
}

fn sig(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e5) {
        format!("{x:.4e}")
    } else {
        format!("{:.5}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_draws() {
        let d = vec![DegradationParams::HEMLOCK_MEANS; 10];
        let s = summarize_draws(&d).unwrap();
        let r = s.row("a").unwrap();
        assert_eq!((r.median, r.q025, r.q975), (0.019, 0.019, 0.019));
        assert!((r.mean - 0.019).abs() < 1e-15);
        assert!((s.row("v/u").unwrap().median - 0.359 / 0.00088).abs() < 1e-9);
        assert!(s.to_string().contains("v/u"));
    }

    #[test]
    fn type7_quantiles() {
        let v: Vec<f64> = (1..=5).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.025), 1.1);
        assert!((quantile_sorted(&v, 0.975) - 4.9).abs() < 1e-12);
    }

    #[test]
    fn empty_is_error() {
        assert!(summarize_draws(&[]).is_err());
    }
}
