//! Least squares on a lag matrix.

use nalgebra::{DMatrix, DVector};

/// Lag-regression fit: `y_t = intercept + sum_i coefficients[i] * y_{t-1-i}`.
#[derive(Debug, Clone)]
pub(crate) struct LagFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub residual_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LagFitError {
    TooShort {
        needed: usize,
        got: usize,
    },
    /// Lag column with zero variance; the intercept absorbs it completely.
    ConstantRegressor {
        lag: usize,
    },
    Solver,
}

/// Ordinary least squares with an intercept, solved on the centred design
/// through its normal equations. Rank-deficient but non-constant designs
/// (e.g. a straight line, where all lags are collinear) get the
/// minimum-norm solution.
pub(crate) fn fit_lags(values: &[f64], order: usize) -> Result<LagFit, LagFitError> {
    let rows = values.len().saturating_sub(order);
    if order == 0 || rows < order + 1 {
        return Err(LagFitError::TooShort {
            needed: 2 * order + 1,
            got: values.len(),
        });
    }
    let target = &values[order..];
    let y_mean = target.iter().sum::<f64>() / rows as f64;
    let lag_means: Vec<f64> = (1..=order)
        .map(|lag| values[order - lag..values.len() - lag].iter().sum::<f64>() / rows as f64)
        .collect();

    let x = DMatrix::from_fn(rows, order, |r, c| values[order + r - (c + 1)] - lag_means[c]);
    let y = DVector::from_iterator(rows, target.iter().map(|v| v - y_mean));

    for (c, col) in x.column_iter().enumerate() {
        if col.iter().all(|&v| v == 0.0) {
            return Err(LagFitError::ConstantRegressor { lag: c + 1 });
        }
    }

    // Pseudo-inverse of the normal equations through a symmetric eigen
    // decomposition; directions with negligible variance are dropped.
    let gram = x.transpose() * &x;
    let xty = x.transpose() * &y;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.max();
    let mut beta = DVector::zeros(order);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > top * 1e-12 {
            let v = eig.eigenvectors.column(k);
            beta += v * (v.dot(&xty) / lambda);
        }
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(LagFitError::Solver);
    }

    let intercept = y_mean - beta.iter().zip(&lag_means).map(|(b, m)| b * m).sum::<f64>();
    let resid = &y - &x * &beta;
    Ok(LagFit {
        coefficients: beta.iter().copied().collect(),
        intercept,
        residual_variance: resid.norm_squared() / rows as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_recurrence() {
        // y_t = 1 + 0.5 y_{t-1} - 0.2 y_{t-2}, started away from its fixed point
        let mut v = vec![3.0, -1.0];
        for t in 2..20 {
            v.push(1.0 + 0.5 * v[t - 1] - 0.2 * v[t - 2]);
        }
        let fit = fit_lags(&v, 2).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-9, "{fit:?}");
        assert!((fit.coefficients[1] + 0.2).abs() < 1e-9);
        assert!((fit.intercept - 1.0).abs() < 1e-9);
        assert!(fit.residual_variance < 1e-18);
    }

    #[test]
    fn line_is_min_norm_exact() {
        let v: Vec<f64> = (0..50).map(|t| t as f64).collect();
        let fit = fit_lags(&v, 2).unwrap();
        let pred = fit.intercept + fit.coefficients[0] * 60.0 + fit.coefficients[1] * 59.0;
        assert!((pred - 61.0).abs() < 1e-9, "{fit:?}");
    }

    #[test]
    fn constant_is_singular() {
        assert_eq!(
            fit_lags(&[4.0; 20], 1).unwrap_err(),
            LagFitError::ConstantRegressor { lag: 1 }
        );
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            fit_lags(&[1.0, 2.0, 3.0], 2),
            Err(LagFitError::TooShort { .. })
        ));
    }
}
