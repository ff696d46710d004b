use std::hint::black_box;
use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::inference::Predictor;
use crate::io::TimeSeriesDataset;
use crate::macs::MacReport;

pub const BENCH_HEADER: &str = "row,repeat,samples,min_us,mean_us,p95_us,lightwaves_macs,baseline_macs,mac_ratio";

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyStats {
    pub samples: usize,
    pub min_us: f64,
    pub mean_us: f64,
    pub p95_us: f64,
}

impl LatencyStats {
    /// Nearest-rank p95. `latencies` must be non-empty.
    pub fn from_latencies(latencies: &[f64]) -> Self {
        let mut sorted = latencies.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
        Self {
            samples: n,
            min_us: sorted[0],
            mean_us: sorted.iter().sum::<f64>() / n as f64,
            p95_us: sorted[rank - 1],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Per-sample latencies in microseconds, one vector per repeat.
    pub repeats: Vec<Vec<f64>>,
}

impl BenchReport {
    pub fn per_repeat(&self) -> Vec<LatencyStats> {
        self.repeats.iter().map(|r| LatencyStats::from_latencies(r)).collect()
    }

    pub fn summary(&self) -> LatencyStats {
        let all: Vec<f64> = self.repeats.iter().flatten().copied().collect();
        LatencyStats::from_latencies(&all)
    }

    pub fn write_csv(&self, macs: &MacReport, out: &mut dyn Write) -> Result<()> {
        let mac_cols = format!("{},{},{}", macs.lightwaves_macs, macs.baseline_macs, macs.ratio);
        writeln!(out, "{BENCH_HEADER}")?;
        for (i, s) in self.per_repeat().iter().enumerate() {
            writeln!(
                out,
                "repeat,{i},{},{:.3},{:.3},{:.3},{mac_cols}",
                s.samples, s.min_us, s.mean_us, s.p95_us
            )?;
        }
        let s = self.summary();
        writeln!(
            out,
            "summary,all,{},{:.3},{:.3},{:.3},{mac_cols}",
            s.samples, s.min_us, s.mean_us, s.p95_us
        )?;
        Ok(())
    }
}

/// Times transform + classification of every sample, `repeats` times after
/// one untimed warm-up pass. Loading is not timed.
pub fn bench(predictor: &Predictor, data: &TimeSeriesDataset, repeats: usize, parallel: bool) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::invalid("--repeats must be >= 1"));
    }
    if data.n_channels() != predictor.plan().n_channels() {
        return Err(Error::Shape(format!(
            "data has {} channels, model expects {}",
            data.n_channels(),
            predictor.plan().n_channels()
        )));
    }
    for i in 0..data.n_samples() {
        black_box(predictor.predict_sample(data.sample(i), parallel)?);
    }
    let mut all = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut lat = Vec::with_capacity(data.n_samples());
        for i in 0..data.n_samples() {
            let sample = data.sample(i);
            let t = Instant::now();
            black_box(predictor.predict_sample(black_box(sample), parallel)?);
            lat.push(t.elapsed().as_secs_f64() * 1e6);
        }
        all.push(lat);
    }
    Ok(BenchReport { repeats: all })
}
