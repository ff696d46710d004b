//! Dataset ingestion (`.ts` text, `LWDS` binary) and model persistence.

mod binary;
pub(crate) mod bytes;
mod dataset;
mod model;
mod ts;

use std::path::Path;

pub use binary::{read_binary_dataset, write_binary_dataset};
pub use dataset::TimeSeriesDataset;
pub use model::{channels_of, load_model, meta, save_model, ModelArtifact, MODEL_FORMAT_VERSION};
pub use ts::{parse_ts, parse_ts_str};

use crate::error::{Error, Result};

/// Load a dataset, choosing the format by content: files starting with the
/// `LWDS` magic are binary, anything else is parsed as `.ts` text. Binary
/// files take their name from the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.starts_with(binary::MAGIC) {
        let mut ds = read_binary_dataset(&bytes)?;
        ds.name = stem(path);
        Ok(ds)
    } else {
        let mut ds = parse_ts(bytes.as_slice())?;
        if ds.name.is_empty() {
            ds.name = stem(path);
        }
        Ok(ds)
    }
}

pub fn save_binary_dataset(ds: &TimeSeriesDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_binary_dataset(ds)?).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}
