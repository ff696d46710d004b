use std::collections::HashSet;
use std::ops::Range;

use crate::error::{Error, Result};

/// Equal-length multivariate series stored sample-major, channel-major,
/// time-minor in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub name: String,
    n_samples: usize,
    n_channels: usize,
    series_length: usize,
    values: Vec<f64>,
    labels: Option<Vec<usize>>,
    class_names: Vec<String>,
}

impl TimeSeriesDataset {
    pub fn new(
        name: impl Into<String>,
        shape: (usize, usize, usize),
        values: Vec<f64>,
        labels: Option<Vec<usize>>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let (n, c, l) = shape;
        if n == 0 {
            return Err(Error::invalid("empty dataset"));
        }
        if c == 0 {
            return Err(Error::invalid("dataset has no channels"));
        }
        if l < 2 {
            return Err(Error::invalid(format!("series length {l} < 2")));
        }
        if values.len() != n * c * l {
            return Err(Error::Shape(format!(
                "{} values for {n}x{c}x{l} dataset",
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &class_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate class name {name:?}")));
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::Shape(format!("{} labels for {n} samples", labels.len())));
            }
            if let Some(&bad) = labels.iter().find(|&&y| y >= class_names.len()) {
                return Err(Error::invalid(format!(
                    "label index {bad} >= class count {}",
                    class_names.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            n_samples: n,
            n_channels: c,
            series_length: l,
            values,
            labels,
            class_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn series_length(&self) -> usize {
        self.series_length
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[usize]> {
        self.labels.as_deref().ok_or(Error::LabelsRequired)
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// All channels of one sample, `C * L` values.
    pub fn sample(&self, i: usize) -> &[f64] {
        let stride = self.n_channels * self.series_length;
        &self.values[i * stride..(i + 1) * stride]
    }

    pub fn series(&self, i: usize, channel: usize) -> &[f64] {
        let start = (i * self.n_channels + channel) * self.series_length;
        &self.values[start..start + self.series_length]
    }

    /// Copy of the given rows restricted to a channel range. Row order follows
    /// `rows`; labels and class names are carried along.
    pub fn slice(&self, rows: &[usize], channels: Range<usize>) -> Result<Self> {
        if channels.end > self.n_channels || channels.start >= channels.end {
            return Err(Error::invalid(format!(
                "channel range {channels:?} invalid for {} channels",
                self.n_channels
            )));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_samples) {
            return Err(Error::invalid(format!(
                "sample index {bad} out of range for {} samples",
                self.n_samples
            )));
        }
        let width = channels.len();
        let l = self.series_length;
        let mut values = Vec::with_capacity(rows.len() * width * l);
        for &r in rows {
            for c in channels.clone() {
                values.extend_from_slice(self.series(r, c));
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|ys| rows.iter().map(|&r| ys[r]).collect());
        Self::new(
            self.name.clone(),
            (rows.len(), width, l),
            values,
            labels,
            self.class_names.clone(),
        )
    }

    /// Per-sample, per-channel z-normalization. Constant series become zeros.
    pub fn z_normalize(&mut self) {
        let l = self.series_length;
        for series in self.values.chunks_mut(l) {
            let mean = series.iter().sum::<f64>() / l as f64;
            let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / l as f64;
            let sd = var.sqrt();
            for v in series.iter_mut() {
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
    }
}
