use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::classifier::{ridge_fit, Standardizer};
use crate::distrib::pipe::duplex;
use crate::distrib::protocol::{read_message, write_message, Message};
use crate::distrib::worker::{worker_run, FileLoader, Preloaded};
use crate::distrib::{partition_channels, subsample, DatasetLoader, TrainConfig, WorkerAssignment};
use crate::error::{Error, Result};
use crate::io::{meta, ModelArtifact, TimeSeriesDataset};
use crate::kernels::KernelBank;
use crate::scattering::SelectivePlan;
use crate::selection::{mrmr_select, rank_order, ScoredFeature};

trait Stream: Read + Write + Send {}
impl<T: Read + Write + Send> Stream for T {}

type Conn = Box<dyn Stream>;

/// How the coordinator reaches its workers.
#[derive(Debug)]
pub enum Transport {
    /// Workers run as threads of this process over in-memory pipes.
    InProcess,
    /// Wait for `worker_count` workers to connect.
    Listen { listener: TcpListener, timeout: Duration },
    /// Connect to workers that are listening at these addresses.
    Connect { addrs: Vec<String>, timeout: Duration },
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelArtifact,
    /// Features gathered from all workers before the final selection.
    pub pool_size: usize,
    /// Rows used for phase-one selection.
    pub selection_rows: usize,
    /// Protocol messages exchanged (both directions).
    pub messages: usize,
}

/// Train from `config.dataset_path`.
pub fn coordinator_run(config: &TrainConfig, transport: Transport) -> Result<TrainOutcome> {
    let dataset = FileLoader.load(&config.dataset_path)?;
    coordinator_run_with(config, dataset, transport)
}

/// Single-process training on an in-memory dataset.
pub fn train_in_process(config: &TrainConfig, dataset: &TimeSeriesDataset) -> Result<TrainOutcome> {
    coordinator_run_with(config, Arc::new(dataset.clone()), Transport::InProcess)
}

pub fn coordinator_run_with(
    config: &TrainConfig,
    dataset: Arc<TimeSeriesDataset>,
    transport: Transport,
) -> Result<TrainOutcome> {
    config.validate()?;
    let labels = dataset.require_labels()?.to_vec();
    let n_classes = dataset.n_classes();
    if n_classes < 2 {
        return Err(Error::invalid("training needs at least two classes"));
    }
    let rows = subsample(&labels, n_classes, config.max_train_samples, config.seed)?;
    let ranges = partition_channels(dataset.n_channels(), config.worker_count);
    let assignments: Vec<WorkerAssignment> = ranges
        .into_iter()
        .enumerate()
        .map(|(w, channel_range)| WorkerAssignment {
            worker_id: w as u32,
            channel_range,
            sample_indices: rows.clone(),
            labels: rows.iter().map(|&i| labels[i]).collect(),
            n_classes,
            config: config.clone(),
        })
        .collect();

    let mut handles = Vec::new();
    let conns: Vec<Conn> = match transport {
        Transport::InProcess => {
            let mut conns: Vec<Conn> = Vec::with_capacity(config.worker_count);
            for w in 0..config.worker_count {
                let (ours, mut theirs) = duplex();
                let loader = Preloaded(Arc::clone(&dataset));
                handles.push(thread::spawn(move || worker_run(&mut theirs, w as u32, &loader)));
                conns.push(Box::new(ours));
            }
            conns
        }
        Transport::Listen { listener, timeout } => accept_workers(&listener, config.worker_count, timeout)?
            .into_iter()
            .map(|s| Box::new(s) as Conn)
            .collect(),
        Transport::Connect { addrs, timeout } => {
            if addrs.len() != config.worker_count {
                return Err(Error::invalid(format!(
                    "{} worker addresses for {} workers",
                    addrs.len(),
                    config.worker_count
                )));
            }
            addrs
                .iter()
                .map(|a| connect_with_retry(a, timeout).map(|s| Box::new(s) as Conn))
                .collect::<Result<_>>()?
        }
    };

    let gathered = gather(conns, &assignments, dataset.n_channels());
    for h in handles {
        // worker-side failures already reached us as ERROR or a closed pipe
        let _ = h.join();
    }
    let (mut pool, messages) = gathered?;

    pool.sort_by(rank_order);
    let pool_size = pool.len();
    if pool.is_empty() {
        return Err(Error::invalid("no non-constant features to select from"));
    }
    let selected = mrmr_select(&pool, config.final_features)?;
    drop(pool);

    let mut full = (*dataset).clone();
    if config.normalize {
        full.z_normalize();
    }
    let bank = KernelBank::generate();
    let plan = SelectivePlan::new(&selected, full.n_channels())?;
    let feature_rows = plan.apply_dataset(&bank, &full)?;
    let x = DMatrix::from_fn(full.n_samples(), selected.len(), |i, j| feature_rows[i][j]);
    let standardizer = Standardizer::fit(&x)?;
    let ridge = ridge_fit(&standardizer.apply(&x)?, &labels, n_classes, &config.alpha_grid)?;

    let mut metadata = BTreeMap::new();
    metadata.insert(meta::DATASET.to_string(), dataset.name.clone());
    metadata.insert(meta::SEED.to_string(), config.seed.to_string());
    metadata.insert(meta::N_CHANNELS.to_string(), dataset.n_channels().to_string());
    metadata.insert(meta::SERIES_LENGTH.to_string(), dataset.series_length().to_string());
    metadata.insert(meta::NORMALIZE.to_string(), config.normalize.to_string());
    metadata.insert(meta::STANDARDIZED.to_string(), "true".to_string());
    metadata.insert(meta::TRAIN_SAMPLES.to_string(), dataset.n_samples().to_string());
    let model = ModelArtifact::new(
        config.variant,
        selected,
        &standardizer,
        &ridge,
        dataset.class_names().to_vec(),
        metadata,
    )?;
    Ok(TrainOutcome {
        model,
        pool_size,
        selection_rows: rows.len(),
        messages,
    })
}

/// Handshake, assignment and result collection for every worker; returns the
/// concatenated RESULT features (worker-id order) and the message count.
fn gather(
    conns: Vec<Conn>,
    assignments: &[WorkerAssignment],
    n_channels: usize,
) -> Result<(Vec<ScoredFeature>, usize)> {
    let w = assignments.len();
    let mut by_id: Vec<Option<Conn>> = (0..w).map(|_| None).collect();
    for mut conn in conns {
        let id = match read_message(&mut conn)? {
            Message::Hello { worker_id } => worker_id as usize,
            other => return Err(Error::protocol(format!("expected HELLO, got {}", other.name()))),
        };
        match by_id.get_mut(id) {
            None => return Err(Error::protocol(format!("worker id {id} outside 0..{w}"))),
            Some(Some(_)) => return Err(Error::protocol(format!("duplicate worker id {id}"))),
            Some(slot) => *slot = Some(conn),
        }
    }
    let mut conns: Vec<Conn> = by_id
        .into_iter()
        .enumerate()
        .map(|(id, c)| c.ok_or_else(|| Error::protocol(format!("worker {id} never said HELLO"))))
        .collect::<Result<_>>()?;

    let results: Vec<Result<Vec<ScoredFeature>>> = thread::scope(|s| {
        let jobs: Vec<_> = conns
            .iter_mut()
            .zip(assignments)
            .map(|(conn, assign)| s.spawn(move || exchange(conn, assign, n_channels)))
            .collect();
        jobs.into_iter()
            .map(|j| j.join().unwrap_or_else(|_| Err(Error::protocol("worker handler panicked"))))
            .collect()
    });
    let mut pool = Vec::new();
    for r in results {
        pool.extend(r?);
    }
    for conn in &mut conns {
        write_message(conn, &Message::Done)?;
    }
    Ok((pool, 4 * w))
}

fn exchange(conn: &mut Conn, assign: &WorkerAssignment, n_channels: usize) -> Result<Vec<ScoredFeature>> {
    let id = assign.worker_id;
    write_message(conn, &Message::Assign(assign.clone()))?;
    match read_message(conn)? {
        Message::Result { worker_id, features } => {
            if worker_id != id {
                return Err(Error::protocol(format!("RESULT from {worker_id} on worker {id}'s connection")));
            }
            let quota = assign.config.worker_quota(assign.channel_range.len(), n_channels);
            if features.len() > quota {
                return Err(Error::protocol(format!(
                    "worker {id} sent {} features, quota {quota}",
                    features.len()
                )));
            }
            for f in &features {
                if !assign.channel_range.contains(&f.descriptor.channel) {
                    return Err(Error::protocol(format!(
                        "worker {id} returned channel {} outside {:?}",
                        f.descriptor.channel, assign.channel_range
                    )));
                }
                if f.values.len() != assign.sample_indices.len() {
                    return Err(Error::protocol(format!("worker {id} returned a short value column")));
                }
            }
            Ok(features)
        }
        Message::Error(reason) => Err(Error::Worker { worker_id: id, reason }),
        other => Err(Error::protocol(format!("expected RESULT from worker {id}, got {}", other.name()))),
    }
}

pub(crate) fn accept_workers(listener: &TcpListener, count: usize, timeout: Duration) -> Result<Vec<TcpStream>> {
    let deadline = Instant::now() + timeout;
    listener.set_nonblocking(true)?;
    let mut streams = Vec::with_capacity(count);
    while streams.len() < count {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                stream.set_nodelay(true)?;
                streams.push(stream);
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(Error::Timeout(timeout));
                }
                thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(e.into()),
        }
    }
    listener.set_nonblocking(false)?;
    Ok(streams)
}

/// Retries until `timeout` elapses; the peer may still be starting.
pub(crate) fn connect_with_retry(addr: &str, timeout: Duration) -> Result<TcpStream> {
    let deadline = Instant::now() + timeout;
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(e) => {
                if Instant::now() >= deadline {
                    return Err(Error::protocol(format!("cannot connect to {addr}: {e}")));
                }
                thread::sleep(Duration::from_millis(50));
            }
        }
    }
}
