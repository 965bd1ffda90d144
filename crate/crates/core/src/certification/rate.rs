use serde::{Deserialize, Serialize};

use super::{CertError, Result};

/// Values at or below this are excluded from the log-linear fit.
pub const RATE_FLOOR: f64 = 1e-14;

/// Minimum number of tail points for a fit.
pub const MIN_TAIL_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `exp(slope)` of `log(value)` against the iteration index.
    pub rate: f64,
    pub r_squared: f64,
    /// The tail is constant in log scale; `r_squared` is reported as 0.
    pub flat: bool,
    pub points: usize,
}

/// Least-squares fit of `log(values[k])` against `k` over the last
/// `tail_fraction` of the series.
pub fn fit_linear_rate(values: &[f64], tail_fraction: f64) -> Result<RateFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(CertError::InvalidInput(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let tail_len = ((values.len() as f64) * tail_fraction).ceil() as usize;
    let start = values.len() - tail_len.min(values.len());
    let pts: Vec<(f64, f64)> = values[start..]
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite() && **v > RATE_FLOOR)
        .map(|(i, v)| ((start + i) as f64, v.ln()))
        .collect();
    if pts.len() < MIN_TAIL_POINTS {
        return Err(CertError::InsufficientData {
            points: pts.len(),
            required: MIN_TAIL_POINTS,
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let flat = syy <= 1e-24 * n * (1.0 + my * my);
    let r_squared = if flat { 0.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(RateFit {
        rate: if flat { 1.0 } else { slope.exp() },
        r_squared,
        flat,
        points: pts.len(),
    })
}
