//! `lightwaves` command-line surface.
//!
//! Every command writes machine-readable CSV to stdout with a fixed header
//! (predictions are one class name per line). Diagnostics go to stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 protocol error.

mod bench;

use std::io::Write;
use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::distrib::{accept_workers, connect_with_retry, coordinator_run, worker_run, FileLoader, TrainConfig, Transport};
use crate::error::{Error, Result};
use crate::inference::{accuracy, Predictor};
use crate::io::{load_dataset, load_model, save_binary_dataset, save_model, ModelArtifact};
use crate::macs::{estimate_macs, BaselineParams, MacReport};
use crate::scattering::Variant;

pub use bench::{bench, BenchReport, BENCH_HEADER};

pub const TRAIN_HEADER: &str = "dataset,n,C,L,variant,features_selected,channels_used,train_seconds";
pub const EVALUATE_HEADER: &str = "dataset,n,accuracy";

#[derive(Debug, Parser)]
#[command(name = "lightwaves", version, about = "Multivariate time-series classification with a reduced scattering transform")]
pub struct Cli {
    /// Worker threads for the transform (default: all cores).
    #[arg(long, global = true, env = "LIGHTWAVES_THREADS", value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select features and fit the classifier.
    Train(TrainArgs),
    /// Print one predicted class name per sample.
    Predict(PredictArgs),
    /// Accuracy of a model on labelled data.
    Evaluate(ModelDataArgs),
    /// Channel usage of a model.
    Inspect(InspectArgs),
    /// Multiply-accumulate estimate against a dense baseline.
    Macs(MacsArgs),
    /// Per-sample inference latency.
    Bench(BenchArgs),
    /// Serve one training run as a remote worker.
    Worker(WorkerArgs),
    /// Convert a .ts file to the binary dataset format.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    L1,
    L2,
    L1l2,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::L1 => Variant::L1,
            VariantArg::L2 => Variant::L2,
            VariantArg::L1l2 => Variant::L1L2,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "l1l2")]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 500)]
    pub features: usize,
    #[arg(long, default_value_t = 2500)]
    pub pool: usize,
    #[arg(long = "max-samples", default_value_t = 2048)]
    pub max_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Z-normalise every series before the transform.
    #[arg(long)]
    pub normalize: bool,
    /// Wait for remote workers to connect here.
    #[arg(long, conflicts_with = "worker_addrs")]
    pub listen: Option<SocketAddr>,
    /// Connect to listening workers, in worker-id order.
    #[arg(long = "worker-addrs", value_delimiter = ',')]
    pub worker_addrs: Option<Vec<String>>,
    /// Seconds to wait for remote workers.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct ModelDataArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub io: ModelDataArgs,
    /// Also print `accuracy,<value>`; needs labelled data.
    #[arg(long)]
    pub score: bool,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long = "baseline-kernels", default_value_t = 10_000)]
    pub kernels: u64,
    #[arg(long = "baseline-kernel-length", default_value_t = 9.0)]
    pub kernel_length: f64,
    /// Mean input channels per baseline kernel; no default on purpose.
    #[arg(long = "baseline-channels")]
    pub channels: f64,
}

impl From<&BaselineArgs> for BaselineParams {
    fn from(a: &BaselineArgs) -> Self {
        BaselineParams {
            kernel_count: a.kernels,
            mean_kernel_length: a.kernel_length,
            mean_channels_per_kernel: a.channels,
        }
    }
}

#[derive(Debug, Args)]
pub struct MacsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Series length; defaults to the training length recorded in the model.
    #[arg(long)]
    pub length: Option<usize>,
    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub io: ModelDataArgs,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[command(flatten)]
    pub baseline: BaselineArgs,
}

#[derive(Debug, Args)]
pub struct WorkerArgs {
    /// Coordinator address to connect to.
    #[arg(long, required_unless_present = "listen", conflicts_with = "listen")]
    pub connect: Option<String>,
    /// Address to accept the coordinator on; prints `listening,<addr>`.
    #[arg(long)]
    pub listen: Option<SocketAddr>,
    #[arg(long, default_value_t = 0)]
    pub id: u32,
    /// Seconds to wait for the coordinator.
    #[arg(long, default_value_t = 60)]
    pub timeout: u64,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| execute(cli.command, n, out, err)),
        None => execute(cli.command, rayon::current_num_threads(), out, err),
    }
}

pub fn execute(command: Command, threads: usize, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(&a, out, err),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Evaluate(a) => cmd_evaluate(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
        Command::Macs(a) => cmd_macs(&a, out),
        Command::Bench(a) => cmd_bench(&a, threads, out),
        Command::Worker(a) => cmd_worker(&a, out),
        Command::Convert(a) => {
            let ds = load_dataset(&a.input)?;
            save_binary_dataset(&ds, &a.output)
        }
    }
}

fn csv_field(s: &str) -> String {
    s.replace([',', '\n', '\r'], "_")
}

pub fn cmd_train(a: &TrainArgs, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let config = TrainConfig {
        variant: a.variant.into(),
        final_features: a.features,
        pool_size: a.pool,
        max_train_samples: a.max_samples,
        seed: a.seed,
        dataset_path: a.data.clone(),
        worker_count: a.workers,
        normalize: a.normalize,
        ..TrainConfig::default()
    };
    let timeout = Duration::from_secs(a.timeout);
    let transport = if let Some(addr) = a.listen {
        let listener = TcpListener::bind(addr)?;
        writeln!(err, "listening,{}", listener.local_addr()?)?;
        err.flush()?;
        Transport::Listen { listener, timeout }
    } else if let Some(addrs) = &a.worker_addrs {
        Transport::Connect { addrs: addrs.clone(), timeout }
    } else {
        Transport::InProcess
    };
    let start = Instant::now();
    let outcome = coordinator_run(&config, transport)?;
    let seconds = start.elapsed().as_secs_f64();
    save_model(&outcome.model, &a.out)?;
    let m = &outcome.model;
    writeln!(out, "{TRAIN_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{:.3}",
        csv_field(m.metadata.get(crate::io::meta::DATASET).map(String::as_str).unwrap_or("")),
        m.train_samples().unwrap_or(0),
        m.n_channels().unwrap_or(0),
        m.series_length().unwrap_or(0),
        m.variant,
        m.descriptors.len(),
        m.channels_used.len(),
        seconds
    )?;
    Ok(())
}

fn load_for_inference(a: &ModelDataArgs) -> Result<(ModelArtifact, crate::io::TimeSeriesDataset, Predictor)> {
    let model = load_model(&a.model)?;
    let data = load_dataset(&a.data)?;
    let predictor = Predictor::new(&model, data.n_channels())?;
    Ok((model, data, predictor))
}

pub fn cmd_predict(a: &PredictArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let (model, data, predictor) = load_for_inference(&a.io)?;
    if a.score {
        data.require_labels()?;
    }
    let predicted = predictor.predict_dataset(&data)?;
    for &p in &predicted {
        writeln!(out, "{}", model.class_names[p])?;
    }
    if a.score {
        writeln!(out, "accuracy,{}", accuracy(&model, &data, &predicted)?)?;
    }
    Ok(())
}

pub fn cmd_evaluate(a: &ModelDataArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let (model, data, predictor) = load_for_inference(a)?;
    data.require_labels()?;
    let predicted = predictor.predict_dataset(&data)?;
    writeln!(out, "{EVALUATE_HEADER}")?;
    writeln!(
        out,
        "{},{},{}",
        csv_field(&data.name),
        data.n_samples(),
        accuracy(&model, &data, &predicted)?
    )?;
    Ok(())
}

pub fn cmd_inspect(a: &InspectArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let model = load_model(&a.model)?;
    model.validate()?;
    let total = model
        .n_channels()
        .map(|c| c.to_string())
        .unwrap_or_else(|| "?".into());
    writeln!(out, "{} of {} channels used", model.channels_used.len(), total)?;
    let list: Vec<String> = model.channels_used.iter().map(usize::to_string).collect();
    writeln!(out, "channels: {}", list.join(","))?;
    writeln!(out, "channel,features")?;
    for &c in &model.channels_used {
        let n = model.descriptors.iter().filter(|d| d.channel == c).count();
        writeln!(out, "{c},{n}")?;
    }
    Ok(())
}

pub fn cmd_macs(a: &MacsArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let model = load_model(&a.model)?;
    model.validate()?;
    let length = match a.length.or(model.series_length()) {
        Some(l) => l,
        None => return Err(Error::invalid("--length is required: the model does not record a series length")),
    };
    let report = estimate_macs(&model.descriptors, length, &(&a.baseline).into())?;
    writeln!(out, "{}", MacReport::CSV_HEADER)?;
    writeln!(out, "{}", report.csv_row(length))?;
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs, threads: usize, out: &mut (dyn Write + Send)) -> Result<()> {
    let (model, data, predictor) = load_for_inference(&a.io)?;
    let report = bench(&predictor, &data, a.repeats, threads > 1)?;
    let macs = estimate_macs(&model.descriptors, data.series_length(), &(&a.baseline).into())?;
    report.write_csv(&macs, out)
}

pub fn cmd_worker(a: &WorkerArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let timeout = Duration::from_secs(a.timeout);
    let mut stream = if let Some(addr) = a.listen {
        let listener = TcpListener::bind(addr)?;
        writeln!(out, "listening,{}", listener.local_addr()?)?;
        out.flush()?;
        accept_workers(&listener, 1, timeout)?.remove(0)
    } else {
        let addr = a.connect.as_deref().expect("clap requires --connect or --listen");
        connect_with_retry(addr, timeout)?
    };
    worker_run(&mut stream, a.id, &FileLoader)
}
