//! Smoothing and covariate detrending.

use nalgebra::{DMatrix, DVector};

use crate::dataset::SpatialDataset;
use crate::error::{Error, Result};

fn second_difference_penalty(n: usize) -> DMatrix<f64> {
    let mut d2 = DMatrix::zeros(n - 2, n);
    for r in 0..n - 2 {
        d2[(r, r)] = 1.0;
        d2[(r, r + 1)] = -2.0;
        d2[(r, r + 2)] = 1.0;
    }
    d2.transpose() * d2
}

/// Penalized least-squares smoothing with a second-difference roughness
/// penalty: each function solves `(I + ι/Δt⁴ · D₂ᵀD₂) z = y`.
pub fn smooth_dataset(data: &SpatialDataset, iota: f64) -> Result<SpatialDataset> {
    if !(iota >= 0.0) || !iota.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "smoothing parameter {iota} must be nonnegative"
        )));
    }
    if iota == 0.0 || data.is_empty() {
        return Ok(data.clone());
    }
    let grid = data.grid();
    let n = grid.len();
    if n < 3 {
        return Ok(data.clone());
    }
    let weight = iota / grid.step().powi(4);
    let system = DMatrix::identity(n, n) + second_difference_penalty(n) * weight;
    let chol = system
        .cholesky()
        .ok_or_else(|| Error::Degenerate("smoothing system is not positive definite".into()))?;
    let functions = data
        .functions()
        .iter()
        .map(|f| {
            let z = chol.solve(&DVector::from_column_slice(f.values()));
            f.with_values(z.iter().cloned().collect())
        })
        .collect::<Result<Vec<_>>>()?;
    data.with_functions(functions)
}

/// Residuals of a per-node least-squares regression on an intercept and the
/// named covariates.
pub fn detrend_spatial(data: &SpatialDataset, names: &[String]) -> Result<SpatialDataset> {
    let n = data.len();
    let p = names.len() + 1;
    if n <= p {
        return Err(Error::InsufficientData {
            needed: p + 1,
            got: n,
        });
    }
    let columns: Vec<Vec<f64>> = if names.is_empty() {
        Vec::new()
    } else {
        let cov = data
            .covariates()
            .ok_or_else(|| Error::InvalidArgument("dataset has no covariates".into()))?;
        names
            .iter()
            .map(|name| {
                cov.column(name)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown covariate {name}")))
            })
            .collect::<Result<_>>()?
    };
    // Centering the covariates leaves the residuals unchanged and keeps the
    // design well conditioned for coordinates far from the origin.
    let mut x = DMatrix::from_element(n, p, 1.0);
    for (c, col) in columns.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        for (r, v) in col.iter().enumerate() {
            x[(r, c + 1)] = v - mean;
        }
    }
    let svd = x.clone().svd(true, true);
    let t = data.grid().len();
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::DegenerateCovariates(format!(
            "design matrix of {} is rank deficient",
            names.join(", ")
        )));
    }
    let y = DMatrix::from_fn(n, t, |i, k| data.functions()[i].values()[k]);
    let beta = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::DegenerateCovariates(format!("least-squares solve failed: {e}")))?;
    let resid = &y - &x * beta;
    let functions = data
        .functions()
        .iter()
        .enumerate()
        .map(|(i, f)| f.with_values(resid.row(i).iter().cloned().collect()))
        .collect::<Result<Vec<_>>>()?;
    data.with_functions(functions)
}
