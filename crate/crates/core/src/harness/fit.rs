use serde::Serialize;

use super::HarnessError;

/// Power-law fit `y ≈ e^intercept · x^slope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_exponent(pairs: &[(f64, f64)]) -> Result<Fit, HarnessError> {
    if pairs.len() < 3 {
        return Err(HarnessError::Fit(format!("need at least 3 points, got {}", pairs.len())));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(HarnessError::Fit(format!("point ({x}, {y}) is not positive and finite")));
    }
    let n = pairs.len() as f64;
    let logs: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::Fit("all abscissae coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ssr: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(Fit {
        slope,
        stderr: (ssr / (n - 2.0) / sxx).sqrt(),
        intercept,
        points: pairs.len(),
    })
}
