//! Ordinary least squares with an intercept and t-based prediction intervals.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which the design is treated as singular.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first, then one slope per predictor.
    pub coefficients: Vec<f64>,
    pub residual_variance: f64,
    pub residual_sum_squares: f64,
    /// n − p − 1.
    pub df: usize,
    xtx_inv: DMatrix<f64>,
}

/// Fits `y = b₀ + Σ bᵢ xᵢ + ε`. `rows[r]` holds the predictors of observation `r`.
pub fn ols_fit(rows: &[Vec<f64>], y: &[f64]) -> Result<OlsFit> {
    let n = rows.len();
    if n != y.len() {
        return Err(Error::invalid("regression", "design and response lengths differ"));
    }
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::invalid("regression", "ragged design rows"));
    }
    if n <= p + 1 {
        return Err(Error::invalid(
            "regression",
            format!("need more than {} observations, got {n}", p + 1),
        ));
    }
    let x = DMatrix::from_fn(n, p + 1, |r, c| if c == 0 { 1.0 } else { rows[r][c - 1] });
    let svd = x.clone().svd(false, false);
    let s = &svd.singular_values;
    let s_max = s.max();
    if !(s_max > 0.0) || s.min() <= RANK_TOL * s_max {
        return Err(Error::SingularDesign);
    }
    let xtx = x.transpose() * &x;
    let xtx_inv = xtx.cholesky().ok_or(Error::SingularDesign)?.inverse();
    let yv = DVector::from_column_slice(y);
    let beta = &xtx_inv * (x.transpose() * &yv);
    let resid = &yv - &x * &beta;
    let rss = resid.norm_squared();
    let df = n - p - 1;
    Ok(OlsFit {
        coefficients: beta.iter().copied().collect(),
        residual_variance: rss / df as f64,
        residual_sum_squares: rss,
        df,
        xtx_inv,
    })
}

impl OlsFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.coefficients[0] + self.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// (ŷ, lower, upper) of the `level` prediction interval
/// `ŷ ± t_{df} · s · sqrt(1 + x₀ᵀ(XᵀX)⁻¹x₀)`.
pub fn ols_predict_interval(fit: &OlsFit, x: &[f64], level: f64) -> Result<(f64, f64, f64)> {
    if x.len() + 1 != fit.coefficients.len() {
        return Err(Error::invalid("regression", "predictor count mismatch"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("regression", "level must lie in (0, 1)"));
    }
    let mean = fit.predict(x);
    let x0 = DVector::from_iterator(x.len() + 1, std::iter::once(1.0).chain(x.iter().copied()));
    let leverage = (x0.transpose() * &fit.xtx_inv * &x0)[(0, 0)];
    let t = StudentsT::new(0.0, 1.0, fit.df as f64)
        .map_err(|e| Error::invalid("regression", e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * fit.residual_variance.sqrt() * (1.0 + leverage).sqrt();
    Ok((mean, mean - half, mean + half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_point_line() {
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let fit = ols_fit(&rows, &[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(fit.coefficients[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 1.0, epsilon = 1e-12);
        let (mean, lo, hi) = ols_predict_interval(&fit, &[4.0], 0.95).unwrap();
        assert_relative_eq!(mean, 4.0, epsilon = 1e-12);
        // exact fit: zero-width interval
        assert!((hi - lo).abs() < 1e-6);
    }

    #[test]
    fn interval_matches_hand_computation() {
        // x = 0,1,2,3; y = 1,3,2,5 -> b1 = 1.1, b0 = 1.1, RSS = 2.7, df = 2
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let fit = ols_fit(&rows, &[1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_relative_eq!(fit.coefficients[1], 1.1, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[0], 1.1, epsilon = 1e-12);
        assert_relative_eq!(fit.residual_sum_squares, 2.7, epsilon = 1e-12);
        let (mean, lo, hi) = ols_predict_interval(&fit, &[1.5], 0.95).unwrap();
        assert_relative_eq!(mean, 2.75, epsilon = 1e-12);
        // t_{2,0.975} = 4.302652729..., leverage at the mean x = 1/4
        let half = 4.302_652_729_749_464 * (2.7f64 / 2.0).sqrt() * (1.25f64).sqrt();
        assert_relative_eq!(hi - mean, half, max_relative = 1e-9);
        assert_relative_eq!(mean - lo, half, max_relative = 1e-9);
    }

    #[test]
    fn singular_design_is_an_error() {
        let rows = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![3.0, 0.0], vec![4.0, 0.0]];
        assert!(matches!(
            ols_fit(&rows, &[1.0, 2.0, 3.0, 4.0]),
            Err(Error::SingularDesign)
        ));
        let collinear = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![4.0, 8.0]];
        assert!(matches!(
            ols_fit(&collinear, &[1.0, 2.0, 3.0, 5.0]),
            Err(Error::SingularDesign)
        ));
    }

    #[test]
    fn too_few_observations() {
        assert!(ols_fit(&[vec![1.0], vec![2.0]], &[1.0, 2.0]).is_err());
    }
}
