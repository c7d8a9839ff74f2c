//! Weighted least squares and the asymptotic-law fits built on it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Result of a weighted linear least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Weighted residual sum of squares.
    pub chi2: f64,
    pub dof: usize,
    /// Row `k` maps the observation vector to coefficient `k`.
    pub estimator: Vec<Vec<f64>>,
}

impl LinearFit {
    /// Applies the fitted linear estimator to another observation vector,
    /// e.g. a single replica's curve.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.estimator
            .iter()
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Minimizes `sum ((y_i - X_i c) / sigma_i)^2` over `c`.
///
/// `design[i]` is the basis row for observation `i`.
pub fn weighted_least_squares(design: &[Vec<f64>], y: &[f64], sigma: &[f64]) -> Result<LinearFit> {
    let n = design.len();
    if n == 0 || y.len() != n || sigma.len() != n {
        return Err(LabError::Mismatch(format!(
            "design has {n} rows, y {} entries, sigma {} entries",
            y.len(),
            sigma.len()
        )));
    }
    let p = design[0].len();
    if p == 0 || design.iter().any(|r| r.len() != p) {
        return Err(LabError::Mismatch("ragged design matrix".into()));
    }
    if n < p {
        return Err(LabError::Degenerate(format!("{n} observations for {p} parameters")));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(LabError::InvalidParameter(format!("standard errors must be positive, got {s}")));
    }
    if p == 1 && design.iter().all(|r| r[0] == 1.0) {
        return Ok(weighted_mean(y, sigma));
    }
    let x = DMatrix::from_fn(n, p, |i, j| design[i][j] / sigma[i]);
    let b = DVector::from_fn(n, |i, _| y[i] / sigma[i]);
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-12) {
        return Err(LabError::Degenerate(format!(
            "singular values span {smin:e}..{smax:e}"
        )));
    }
    let normal = x.transpose() * &x;
    let cov = normal
        .try_inverse()
        .ok_or_else(|| LabError::Degenerate("normal matrix is singular".into()))?;
    // Estimator in original units: cov * X^T W.
    let xt_w = DMatrix::from_fn(p, n, |j, i| design[i][j] / (sigma[i] * sigma[i]));
    let est = &cov * xt_w;
    let yv = DVector::from_column_slice(y);
    let coef = &est * &yv;
    let resid = &x * &coef - b;
    Ok(LinearFit {
        coefficients: coef.iter().copied().collect(),
        std_errors: (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect(),
        chi2: resid.norm_squared(),
        dof: n - p,
        estimator: (0..p).map(|j| est.row(j).iter().copied().collect()).collect(),
    })
}

fn weighted_mean(y: &[f64], sigma: &[f64]) -> LinearFit {
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let total: f64 = w.iter().sum();
    let mean = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / total;
    LinearFit {
        coefficients: vec![mean],
        std_errors: vec![total.recip().sqrt()],
        chi2: y.iter().zip(&w).map(|(a, b)| (a - mean).powi(2) * b).sum(),
        dof: y.len() - 1,
        estimator: vec![w.iter().map(|b| b / total).collect()],
    }
}

/// Models for the asymptotic-law fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitModel {
    /// `y = C`.
    Constant,
    /// `y = a x^b`, fitted in log-log coordinates.
    Power,
    /// `y = C (ln x / x)^p`; `y (x / ln x)^p` is levelled and averaged.
    PowerLog { exponent: f64 },
    /// `ln y = a + b x`.
    LogLinear,
    /// `y = L + c / ln(1/x)`, the logarithmic extrapolation for small `x`.
    InverseLog,
}

impl FitModel {
    pub fn name(&self) -> &'static str {
        match self {
            FitModel::Constant => "constant",
            FitModel::Power => "power",
            FitModel::PowerLog { .. } => "power+log",
            FitModel::LogLinear => "log-linear",
            FitModel::InverseLog => "inverse-log",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
}

/// A fitted law, optionally compared with a theorem's limit constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub coefficients: Vec<Coefficient>,
    /// Weighted residual sum of squares.
    pub residual: f64,
    pub dof: usize,
    pub theory: Option<f64>,
    pub relative_deviation: Option<f64>,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// Attaches a theorem-backed limit for the coefficient `name`.
    pub fn with_theory(mut self, name: &str, theory: f64) -> Self {
        if let Some(c) = self.coefficient(name) {
            self.relative_deviation = Some((c.value - theory) / theory);
            self.theory = Some(theory);
        }
        self
    }
}

/// A data point `(x, y, sigma_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: f64,
}

/// Weighted fit of `points` under `model`, in the model's linearizing
/// coordinates.
pub fn fit_power_law(points: &[DataPoint], model: FitModel) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(LabError::InvalidParameter(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.sigma > 0.0)) {
        return Err(LabError::InvalidParameter(format!("sigma must be positive, got {}", p.sigma)));
    }
    let positive = |what: &str| -> Result<()> {
        if points.iter().any(|p| !(p.y > 0.0)) {
            return Err(LabError::InvalidParameter(format!("{what} model needs positive y")));
        }
        Ok(())
    };
    let (design, y, sigma, names): (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<&str>) = match model {
        FitModel::Constant => (
            points.iter().map(|_| vec![1.0]).collect(),
            points.iter().map(|p| p.y).collect(),
            points.iter().map(|p| p.sigma).collect(),
            vec!["C"],
        ),
        FitModel::Power => {
            positive("power")?;
            if points.iter().any(|p| !(p.x > 0.0)) {
                return Err(LabError::InvalidParameter("power model needs positive x".into()));
            }
            (
                points.iter().map(|p| vec![1.0, p.x.ln()]).collect(),
                points.iter().map(|p| p.y.ln()).collect(),
                points.iter().map(|p| p.sigma / p.y).collect(),
                vec!["log_a", "b"],
            )
        }
        FitModel::PowerLog { exponent } => {
            if points.iter().any(|p| !(p.x > 1.0)) {
                return Err(LabError::InvalidParameter("power+log model needs x > 1".into()));
            }
            let level = |x: f64| (x / x.ln()).powf(exponent);
            (
                points.iter().map(|_| vec![1.0]).collect(),
                points.iter().map(|p| p.y * level(p.x)).collect(),
                points.iter().map(|p| p.sigma * level(p.x)).collect(),
                vec!["C"],
            )
        }
        FitModel::LogLinear => {
            positive("log-linear")?;
            (
                points.iter().map(|p| vec![1.0, p.x]).collect(),
                points.iter().map(|p| p.y.ln()).collect(),
                points.iter().map(|p| p.sigma / p.y).collect(),
                vec!["a", "b"],
            )
        }
        FitModel::InverseLog => {
            if points.iter().any(|p| !(p.x > 0.0 && p.x < 1.0)) {
                return Err(LabError::InvalidParameter("inverse-log model needs 0 < x < 1".into()));
            }
            (
                points.iter().map(|p| vec![1.0, 1.0 / (1.0 / p.x).ln()]).collect(),
                points.iter().map(|p| p.y).collect(),
                points.iter().map(|p| p.sigma).collect(),
                vec!["L", "c"],
            )
        }
    };
    let fit = weighted_least_squares(&design, &y, &sigma)?;
    Ok(FitResult {
        model: model.name().to_string(),
        coefficients: names
            .iter()
            .zip(fit.coefficients.iter().zip(&fit.std_errors))
            .map(|(n, (&v, &se))| Coefficient {
                name: n.to_string(),
                value: v,
                std_error: se,
            })
            .collect(),
        residual: fit.chi2,
        dof: fit.dof,
        theory: None,
        relative_deviation: None,
    })
}
