use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("power-law fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("point ({0}, {1}) is not strictly positive")]
    NonPositive(f64, f64),
    #[error("all rates are equal; slope undefined")]
    Degenerate,
}

/// `size ≈ k · rate^m`, fitted by least squares in log-log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub k: f64,
    pub m: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn predict(&self, rate: f64) -> f64 {
        self.k * rate.powf(self.m)
    }
}

pub fn power_law_fit(points: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(FitError::NonPositive(x, y));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let m = sxy / sxx;
    let b = my - m * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - (b + m * x)).powi(2)).sum();
    // Constant sizes are fitted perfectly by m = 0.
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(FitResult {
        k: b.exp(),
        m,
        r2,
        points: points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_law_recovered() {
        let pts: Vec<(f64, f64)> = [1e3, 1e4, 1e5, 1e6, 1e7]
            .iter()
            .map(|&r: &f64| (r, 0.0007 * r.powf(0.66)))
            .collect();
        let f = power_law_fit(&pts).unwrap();
        assert!((f.m - 0.66).abs() < 1e-9);
        assert!((f.k - 0.0007).abs() / 0.0007 < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_sizes_give_zero_slope() {
        let f = power_law_fit(&[(1.0, 5.0), (10.0, 5.0), (100.0, 5.0)]).unwrap();
        assert!(f.m.abs() < 1e-12);
        assert!((f.k - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(power_law_fit(&[(1.0, 1.0), (2.0, 2.0)]), Err(FitError::TooFewPoints(2)));
        assert!(matches!(
            power_law_fit(&[(1.0, 1.0), (0.0, 2.0), (3.0, 3.0)]),
            Err(FitError::NonPositive(..))
        ));
        assert_eq!(power_law_fit(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)]), Err(FitError::Degenerate));
    }
}
