//! Channel-reduced inference from a saved model.

use nalgebra::{DMatrix, RowDVector};
use rayon::prelude::*;

use crate::classifier::argmax_rows;
use crate::error::{Error, Result};
use crate::io::{ModelArtifact, TimeSeriesDataset};
use crate::kernels::KernelBank;
use crate::scattering::SelectivePlan;

/// Everything needed to classify raw samples: the selective transform plan,
/// standardisation and ridge weights.
pub struct Predictor {
    bank: KernelBank,
    plan: SelectivePlan,
    means: Vec<f64>,
    stds: Vec<f64>,
    weights: DMatrix<f64>,
    normalize: bool,
    channels_used: Vec<usize>,
}

impl Predictor {
    /// `n_channels` is the channel count of the data that will be fed in; it
    /// must match the training data when the model records it.
    pub fn new(model: &ModelArtifact, n_channels: usize) -> Result<Self> {
        model.validate()?;
        if let Some(trained) = model.n_channels() {
            if trained != n_channels {
                return Err(Error::Shape(format!(
                    "model trained on {trained} channels, data has {n_channels}"
                )));
            }
        }
        Ok(Self {
            bank: KernelBank::generate(),
            plan: SelectivePlan::new(&model.descriptors, n_channels)?,
            means: model.feature_means.clone(),
            stds: model.feature_stds.clone(),
            weights: model.ridge().weights,
            normalize: model.normalize(),
            channels_used: model.channels_used.clone(),
        })
    }

    pub fn plan(&self) -> &SelectivePlan {
        &self.plan
    }

    /// Raw (unstandardised) selected features for one `C * L` sample.
    pub fn features(&self, sample: &[f64], parallel: bool) -> Result<Vec<f64>> {
        let normalized;
        let sample = if self.normalize {
            normalized = self.normalize_used(sample)?;
            &normalized[..]
        } else {
            sample
        };
        if parallel {
            self.plan.apply_par(&self.bank, sample)
        } else {
            self.plan.apply(&self.bank, sample)
        }
    }

    fn normalize_used(&self, sample: &[f64]) -> Result<Vec<f64>> {
        let c = self.plan.n_channels();
        if !sample.len().is_multiple_of(c) {
            return Err(Error::Shape("sample is not a whole number of channels".into()));
        }
        let len = sample.len() / c;
        let mut out = sample.to_vec();
        for &ch in &self.channels_used {
            let series = &mut out[ch * len..(ch + 1) * len];
            let mean = series.iter().sum::<f64>() / len as f64;
            let sd = (series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64).sqrt();
            for v in series.iter_mut() {
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
        Ok(out)
    }

    fn scores(&self, features: &[f64]) -> RowDVector<f64> {
        let z = RowDVector::from_iterator(
            features.len(),
            features
                .iter()
                .zip(self.means.iter().zip(&self.stds))
                .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 }),
        );
        z * &self.weights
    }

    pub fn predict_sample(&self, sample: &[f64], parallel: bool) -> Result<usize> {
        let f = self.features(sample, parallel)?;
        let scores = self.scores(&f);
        Ok(argmax_rows(&DMatrix::from_row_slice(1, scores.len(), scores.as_slice()))[0])
    }

    /// Class index per sample, rows evaluated in parallel.
    pub fn predict_dataset(&self, data: &TimeSeriesDataset) -> Result<Vec<usize>> {
        if data.n_channels() != self.plan.n_channels() {
            return Err(Error::Shape(format!(
                "data has {} channels, predictor expects {}",
                data.n_channels(),
                self.plan.n_channels()
            )));
        }
        (0..data.n_samples())
            .into_par_iter()
            .map(|i| self.predict_sample(data.sample(i), false))
            .collect()
    }
}

/// Fraction of samples whose predicted class name equals the true one.
pub fn accuracy(model: &ModelArtifact, data: &TimeSeriesDataset, predicted: &[usize]) -> Result<f64> {
    let labels = data.require_labels()?;
    let correct = labels
        .iter()
        .zip(predicted)
        .filter(|(&y, &p)| data.class_names()[y] == model.class_names[p])
        .count();
    Ok(correct as f64 / labels.len() as f64)
}
