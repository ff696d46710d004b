//! Standardisation and a one-vs-rest ridge classifier solved in closed form,
//! with the penalty picked by leave-one-out error over a fixed grid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ten log-spaced penalties from 1e-3 to 1e3.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0)).collect()
}

/// Per-column centring and population-std scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::invalid("standardizer needs at least two rows"));
        }
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            means.push(mean);
            stds.push(var.sqrt());
        }
        Ok(Self { means, stds })
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    /// Zero-std columns map to zeros.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.width() {
            return Err(Error::Shape(format!(
                "{} columns, standardizer fitted on {}",
                x.ncols(),
                self.width()
            )));
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            if self.stds[j] > 0.0 {
                (x[(i, j)] - self.means[j]) / self.stds[j]
            } else {
                0.0
            }
        }))
    }
}

pub fn fit_standardizer(x: &DMatrix<f64>) -> Result<Standardizer> {
    Standardizer::fit(x)
}

/// One-vs-rest targets: +1 in the label's column, -1 elsewhere.
pub fn one_vs_rest_targets(labels: &[usize], n_classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(labels.len(), n_classes, |i, k| if labels[i] == k { 1.0 } else { -1.0 })
}

/// Thin SVD of the design matrix, reused across penalties.
pub struct RidgeSolver {
    u: DMatrix<f64>,
    s: DVector<f64>,
    v: DMatrix<f64>,
    uty: DMatrix<f64>,
    targets: DMatrix<f64>,
}

impl RidgeSolver {
    pub fn new(x: &DMatrix<f64>, targets: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != targets.nrows() {
            return Err(Error::Shape(format!(
                "{} rows but {} target rows",
                x.nrows(),
                targets.nrows()
            )));
        }
        if x.nrows() < 2 {
            return Err(Error::invalid("ridge fit needs at least two rows"));
        }
        if x.iter().chain(targets.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite value in ridge inputs"));
        }
        let svd = x.clone().svd(true, true);
        let u = svd.u.ok_or_else(|| Error::invalid("SVD did not produce U"))?;
        let v = svd
            .v_t
            .ok_or_else(|| Error::invalid("SVD did not produce V"))?
            .transpose();
        let uty = u.transpose() * targets;
        Ok(Self {
            u,
            s: svd.singular_values,
            v,
            uty,
            targets: targets.clone(),
        })
    }

    /// Solution of `(X'X + alpha I) W = X'Y`.
    pub fn weights(&self, alpha: f64) -> DMatrix<f64> {
        let mut scaled = self.uty.clone();
        for (r, mut row) in scaled.row_iter_mut().enumerate() {
            let s = self.s[r];
            row *= s / (s * s + alpha);
        }
        &self.v * scaled
    }

    fn shrink(&self, alpha: f64) -> Vec<f64> {
        self.s.iter().map(|s| s * s / (s * s + alpha)).collect()
    }

    /// Leave-one-out residuals `(y_i - yhat_i) / (1 - h_ii)`, rows x classes.
    pub fn loo_residuals(&self, alpha: f64) -> DMatrix<f64> {
        let shrink = self.shrink(alpha);
        let mut scaled = self.uty.clone();
        for (r, mut row) in scaled.row_iter_mut().enumerate() {
            row *= shrink[r];
        }
        let fitted = &self.u * scaled;
        let mut out = &self.targets - fitted;
        for (i, mut row) in out.row_iter_mut().enumerate() {
            let h: f64 = self
                .u
                .row(i)
                .iter()
                .zip(&shrink)
                .map(|(u, g)| u * u * g)
                .sum();
            row /= 1.0 - h;
        }
        out
    }

    pub fn loo_sse(&self, alpha: f64) -> f64 {
        let sse = self.loo_residuals(alpha).norm_squared();
        if sse.is_finite() {
            sse
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    /// Features x classes.
    pub weights: DMatrix<f64>,
    pub alpha: f64,
}

impl RidgeModel {
    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.weights.ncols()
    }

    pub fn decision_function(&self, x_std: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x_std.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "{} features, model expects {}",
                x_std.ncols(),
                self.n_features()
            )));
        }
        Ok(x_std * &self.weights)
    }
}

/// Fits one-vs-rest ridge for each penalty and keeps the one with the
/// smallest leave-one-out squared error (earliest on ties).
pub fn ridge_fit(
    x_std: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    alpha_grid: &[f64],
) -> Result<RidgeModel> {
    if n_classes < 2 {
        return Err(Error::invalid("ridge classifier needs at least two classes"));
    }
    if alpha_grid.is_empty() || alpha_grid.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::invalid("alpha grid must be nonempty and positive"));
    }
    if labels.len() != x_std.nrows() {
        return Err(Error::Shape(format!("{} labels for {} rows", labels.len(), x_std.nrows())));
    }
    let mut present = vec![false; n_classes];
    for &y in labels {
        *present
            .get_mut(y)
            .ok_or_else(|| Error::invalid(format!("label {y} >= class count {n_classes}")))? = true;
    }
    if let Some(absent) = present.iter().position(|p| !p) {
        return Err(Error::invalid(format!("class {absent} has no training rows")));
    }
    let solver = RidgeSolver::new(x_std, &one_vs_rest_targets(labels, n_classes))?;
    let mut best = (alpha_grid[0], solver.loo_sse(alpha_grid[0]));
    for &alpha in &alpha_grid[1..] {
        let sse = solver.loo_sse(alpha);
        if sse < best.1 {
            best = (alpha, sse);
        }
    }
    Ok(RidgeModel {
        weights: solver.weights(best.0),
        alpha: best.0,
    })
}

/// Index of the largest score per row; the lowest index wins ties.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub fn predict(model: &RidgeModel, standardizer: &Standardizer, rows: &DMatrix<f64>) -> Result<Vec<usize>> {
    let x = standardizer.apply(rows)?;
    Ok(argmax_rows(&model.decision_function(&x)?))
}
