use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classifier::{RidgeModel, Standardizer};
use crate::error::{Error, Result};
use crate::scattering::{FeatureDescriptor, Level, Variant};

pub const MODEL_FORMAT_VERSION: u64 = 1;

/// Everything needed for inference. Serialised as one JSON object; reals
/// use shortest round-trip decimal so save/load/save is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u64,
    pub variant: Variant,
    pub descriptors: Vec<FeatureDescriptor>,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    /// Row-major, one row per descriptor, one column per class.
    pub weights: Vec<Vec<f64>>,
    pub alpha: f64,
    pub class_names: Vec<String>,
    pub channels_used: Vec<usize>,
    pub metadata: BTreeMap<String, String>,
}

/// Keys written to [`ModelArtifact::metadata`] by training.
pub mod meta {
    pub const DATASET: &str = "dataset";
    pub const SEED: &str = "seed";
    pub const N_CHANNELS: &str = "n_channels";
    pub const SERIES_LENGTH: &str = "series_length";
    pub const NORMALIZE: &str = "normalize";
    pub const STANDARDIZED: &str = "standardized";
    pub const TRAIN_SAMPLES: &str = "train_samples";
}

impl ModelArtifact {
    pub fn new(
        variant: Variant,
        descriptors: Vec<FeatureDescriptor>,
        standardizer: &Standardizer,
        ridge: &RidgeModel,
        class_names: Vec<String>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let weights = ridge
            .weights
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect();
        let channels_used = channels_of(&descriptors);
        let model = Self {
            format_version: MODEL_FORMAT_VERSION,
            variant,
            descriptors,
            feature_means: standardizer.means.clone(),
            feature_stds: standardizer.stds.clone(),
            weights,
            alpha: ridge.alpha,
            class_names,
            channels_used,
            metadata,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(self.format_version));
        }
        let f = self.descriptors.len();
        if f == 0 {
            return Err(Error::InvalidModel("no descriptors".into()));
        }
        if self.weights.len() != f || self.feature_means.len() != f || self.feature_stds.len() != f {
            return Err(Error::Shape(format!(
                "{f} descriptors, {} weight rows, {} means, {} stds",
                self.weights.len(),
                self.feature_means.len(),
                self.feature_stds.len()
            )));
        }
        let k = self.class_names.len();
        if k < 2 {
            return Err(Error::InvalidModel("fewer than two classes".into()));
        }
        if let Some(row) = self.weights.iter().find(|r| r.len() != k) {
            return Err(Error::Shape(format!("weight row of {} for {k} classes", row.len())));
        }
        for d in &self.descriptors {
            d.validate()?;
            if !self.variant.includes(d.level) {
                return Err(Error::InvalidModel(format!(
                    "descriptor {d} not allowed under variant {}",
                    self.variant
                )));
            }
        }
        if self.feature_stds.iter().any(|&s| s.is_nan() || s < 0.0) {
            return Err(Error::InvalidModel("negative feature std".into()));
        }
        let finite = self
            .feature_means
            .iter()
            .chain(&self.feature_stds)
            .chain(self.weights.iter().flatten())
            .chain(std::iter::once(&self.alpha))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }
        if self.alpha < 0.0 {
            return Err(Error::InvalidModel("negative alpha".into()));
        }
        if self.channels_used != channels_of(&self.descriptors) {
            return Err(Error::InvalidModel(
                "channels_used does not match descriptor channels".into(),
            ));
        }
        Ok(())
    }

    pub fn standardizer(&self) -> Standardizer {
        Standardizer {
            means: self.feature_means.clone(),
            stds: self.feature_stds.clone(),
        }
    }

    pub fn ridge(&self) -> RidgeModel {
        let f = self.weights.len();
        let k = self.class_names.len();
        RidgeModel {
            weights: DMatrix::from_fn(f, k, |i, j| self.weights[i][j]),
            alpha: self.alpha,
        }
    }

    pub fn has_level(&self, level: Level) -> bool {
        self.descriptors.iter().any(|d| d.level == level)
    }

    /// Channel count of the training data, when recorded.
    pub fn n_channels(&self) -> Option<usize> {
        self.metadata.get(meta::N_CHANNELS)?.parse().ok()
    }

    pub fn series_length(&self) -> Option<usize> {
        self.metadata.get(meta::SERIES_LENGTH)?.parse().ok()
    }

    pub fn train_samples(&self) -> Option<usize> {
        self.metadata.get(meta::TRAIN_SAMPLES)?.parse().ok()
    }

    pub fn normalize(&self) -> bool {
        self.metadata.get(meta::NORMALIZE).is_some_and(|v| v == "true")
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        // Check the version before the full schema so old/new files fail clearly.
        let raw: serde_json::Value = serde_json::from_str(text)?;
        match raw.get("format_version").and_then(|v| v.as_u64()) {
            Some(MODEL_FORMAT_VERSION) => {}
            Some(v) => return Err(Error::UnsupportedVersion(v)),
            None => return Err(Error::InvalidModel("missing format_version".into())),
        }
        let model: Self = serde_json::from_value(raw)?;
        model.validate()?;
        Ok(model)
    }
}

/// Sorted distinct channels referenced by `descriptors`.
pub fn channels_of(descriptors: &[FeatureDescriptor]) -> Vec<usize> {
    descriptors
        .iter()
        .map(|d| d.channel)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

pub fn save_model(model: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()?).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    ModelArtifact::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::Stat;

    pub(crate) fn sample_model() -> ModelArtifact {
        let descriptors = vec![
            FeatureDescriptor::new(2, 5, 1, Level::One, Stat::Max),
            FeatureDescriptor::new(0, 83, 5, Level::Two, Stat::Ls),
            FeatureDescriptor::new(2, 5, 1, Level::Two, Stat::Ppv),
        ];
        let standardizer = Standardizer {
            means: vec![0.1, 1.0 / 3.0, -2.5e-17],
            stds: vec![1.0, 0.0, std::f64::consts::PI],
        };
        let ridge = RidgeModel {
            weights: DMatrix::from_row_slice(3, 2, &[0.1, -0.1, 1e-300, 7.0, -0.3333333333333333, 2.0]),
            alpha: 0.004641588833612777,
        };
        let mut metadata = BTreeMap::new();
        metadata.insert(meta::SEED.into(), "7".into());
        ModelArtifact::new(
            Variant::L1L2,
            descriptors,
            &standardizer,
            &ridge,
            vec!["a".into(), "b".into()],
            metadata,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip_is_exact_and_byte_stable() {
        let m = sample_model();
        assert_eq!(m.channels_used, vec![0, 2]);
        let text = m.to_json().unwrap();
        let back = ModelArtifact::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn version_mismatch() {
        let text = sample_model().to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 999");
        let err = ModelArtifact::from_json(&text).unwrap_err();
        assert_eq!(err.to_string(), "unsupported version 999");
    }

    #[test]
    fn shape_mismatch_on_load() {
        let mut m = sample_model();
        m.weights.pop();
        let text = serde_json::to_string(&m).unwrap();
        let err = ModelArtifact::from_json(&text).unwrap_err();
        assert!(err.to_string().starts_with("shape mismatch"), "{err}");
    }

    #[test]
    fn channels_used_must_match() {
        let mut m = sample_model();
        m.channels_used = vec![0, 1, 2];
        assert!(matches!(m.validate(), Err(Error::InvalidModel(_))));
        let mut m = sample_model();
        m.variant = Variant::L1;
        assert!(m.validate().is_err());
        let mut m = sample_model();
        m.feature_stds[0] = -1.0;
        assert!(m.validate().is_err());
    }
}
