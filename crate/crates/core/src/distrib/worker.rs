use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::distrib::protocol::{read_message, write_message, Message};
use crate::distrib::WorkerAssignment;
use crate::error::{Error, Result};
use crate::io::{load_dataset, TimeSeriesDataset};
use crate::kernels::KernelBank;
use crate::scattering::transform_full;
use crate::selection::{local_topk, merge_topk, ScoredFeature};

/// Source of the dataset named in an assignment.
pub trait DatasetLoader: Send + Sync {
    fn load(&self, path: &Path) -> Result<Arc<TimeSeriesDataset>>;
}

/// Reads the dataset from shared storage.
#[derive(Debug, Default, Clone, Copy)]
pub struct FileLoader;

impl DatasetLoader for FileLoader {
    fn load(&self, path: &Path) -> Result<Arc<TimeSeriesDataset>> {
        load_dataset(path).map(Arc::new)
    }
}

/// Hands out an already loaded dataset regardless of path (in-process workers).
#[derive(Debug, Clone)]
pub struct Preloaded(pub Arc<TimeSeriesDataset>);

impl DatasetLoader for Preloaded {
    fn load(&self, _path: &Path) -> Result<Arc<TimeSeriesDataset>> {
        Ok(Arc::clone(&self.0))
    }
}

/// Phase one on a worker's slice: transform one channel at a time, keep the
/// running top `quota` features. Channels in the returned descriptors are
/// global indices.
pub fn run_assignment(assign: &WorkerAssignment, loader: &dyn DatasetLoader) -> Result<Vec<ScoredFeature>> {
    let range = assign.channel_range.clone();
    if range.is_empty() {
        return Ok(Vec::new());
    }
    if assign.labels.len() != assign.sample_indices.len() {
        return Err(Error::protocol("assignment labels and rows differ in length"));
    }
    let dataset = loader.load(&assign.config.dataset_path)?;
    if range.end > dataset.n_channels() {
        return Err(Error::Shape(format!(
            "channels {range:?} out of range for {} channels",
            dataset.n_channels()
        )));
    }
    let quota = assign.config.worker_quota(range.len(), dataset.n_channels());
    let bank = KernelBank::generate();
    let mut pool: Vec<ScoredFeature> = Vec::new();
    for channel in range {
        let mut slice = dataset.slice(&assign.sample_indices, channel..channel + 1)?;
        if assign.config.normalize {
            slice.z_normalize();
        }
        let mut features = transform_full(&slice, &bank, assign.config.variant)?;
        for d in features.descriptors_mut() {
            d.channel = channel;
        }
        let top = local_topk(&features, &assign.labels, assign.n_classes, quota)?;
        pool = merge_topk(pool, top, quota);
    }
    Ok(pool)
}

/// Worker side of one training run: HELLO, wait for ASSIGN, send RESULT
/// (or ERROR), then wait for DONE.
pub fn worker_run<C: Read + Write + ?Sized>(conn: &mut C, worker_id: u32, loader: &dyn DatasetLoader) -> Result<()> {
    write_message(conn, &Message::Hello { worker_id })?;
    let assign = match read_message(conn)? {
        Message::Assign(a) => a,
        Message::Done => return Ok(()),
        other => return Err(Error::protocol(format!("expected ASSIGN, got {}", other.name()))),
    };
    if assign.worker_id != worker_id {
        return Err(Error::protocol(format!(
            "ASSIGN for worker {} sent to worker {worker_id}",
            assign.worker_id
        )));
    }
    match run_assignment(&assign, loader) {
        Ok(features) => write_message(conn, &Message::Result { worker_id, features })?,
        Err(e) => {
            // best effort: the coordinator may already be gone
            let _ = write_message(conn, &Message::Error(e.to_string()));
            return Err(e);
        }
    }
    match read_message(conn)? {
        Message::Done => Ok(()),
        other => Err(Error::protocol(format!("expected DONE, got {}", other.name()))),
    }
}
