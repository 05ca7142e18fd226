use cubeshadow_core::stats::fit_line;
use serde::Serialize;

use crate::error::{ExpError, Result};

/// `mean ≈ exp(log_constant) · n^exponent`, fitted on log-log means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_constant: f64,
    pub r_squared: f64,
    pub points: Vec<(usize, f64)>,
}

impl PowerLawFit {
    pub fn fit(points: &[(usize, f64)]) -> Result<Self> {
        if let Some(&(n, m)) = points.iter().find(|(n, m)| *n == 0 || !(*m > 0.0)) {
            return Err(ExpError::Invariant(format!(
                "power-law fit needs positive data, got n={n} mean={m}"
            )));
        }
        let x: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
        let y: Vec<f64> = points.iter().map(|(_, m)| m.ln()).collect();
        let line = fit_line(&x, &y)?;
        Ok(Self {
            exponent: line.slope,
            log_constant: line.intercept,
            r_squared: line.r_squared,
            points: points.to_vec(),
        })
    }

    pub fn predict(&self, n: f64) -> f64 {
        (self.log_constant + self.exponent * n.ln()).exp()
    }

    /// Largest `|ln(mean) - ln(prediction)|` over the fitted points.
    pub fn max_log_residual(&self) -> f64 {
        self.points
            .iter()
            .map(|&(n, m)| (m.ln() - self.predict(n as f64).ln()).abs())
            .fold(0.0, f64::max)
    }
}
