#![allow(dead_code)]

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lightwaves::distrib::SplitMix64;
use lightwaves::io::TimeSeriesDataset;

pub fn uniform(r: &mut SplitMix64) -> f64 {
    (r.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

pub fn normal(r: &mut SplitMix64) -> f64 {
    let u1 = uniform(r).max(1e-300);
    let u2 = uniform(r);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Two classes alternating by row. `informative` channels carry a sinusoid
/// whose frequency depends on the class; all others are white noise.
pub fn sinusoids(n: usize, c: usize, l: usize, informative: &[usize], seed: u64) -> TimeSeriesDataset {
    let mut r = SplitMix64::new(seed);
    let mut values = Vec::with_capacity(n * c * l);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    for &y in &labels {
        for ch in 0..c {
            let phase = 2.0 * PI * uniform(&mut r);
            let cycles = if y == 0 { 4.0 } else { 9.0 };
            for t in 0..l {
                let noise = normal(&mut r);
                if informative.contains(&ch) {
                    values.push((2.0 * PI * cycles * t as f64 / l as f64 + phase).sin() + 0.3 * noise);
                } else {
                    values.push(noise);
                }
            }
        }
    }
    TimeSeriesDataset::new(
        "sinusoids",
        (n, c, l),
        values,
        Some(labels),
        vec!["low".into(), "high".into()],
    )
    .unwrap()
}

/// White noise with random labels over `k` classes (every class present).
pub fn noise(n: usize, c: usize, l: usize, k: usize, seed: u64) -> TimeSeriesDataset {
    let mut r = SplitMix64::new(seed);
    let values = (0..n * c * l).map(|_| normal(&mut r)).collect();
    let labels = (0..n).map(|i| if i < k { i } else { r.below(k as u64) as usize }).collect();
    let names = (0..k).map(|i| format!("class{i}")).collect();
    TimeSeriesDataset::new("noise", (n, c, l), values, Some(labels), names).unwrap()
}

pub fn to_ts(ds: &TimeSeriesDataset) -> String {
    let mut s = String::new();
    writeln!(s, "@problemName {}", ds.name).unwrap();
    writeln!(s, "@timeStamps false").unwrap();
    writeln!(s, "@missing false").unwrap();
    writeln!(s, "@univariate {}", ds.n_channels() == 1).unwrap();
    writeln!(s, "@dimensions {}", ds.n_channels()).unwrap();
    writeln!(s, "@equalLength true").unwrap();
    writeln!(s, "@seriesLength {}", ds.series_length()).unwrap();
    if ds.labels().is_some() {
        writeln!(s, "@classLabel true {}", ds.class_names().join(" ")).unwrap();
    } else {
        writeln!(s, "@classLabel false").unwrap();
    }
    writeln!(s, "@data").unwrap();
    for i in 0..ds.n_samples() {
        let mut fields: Vec<String> = (0..ds.n_channels())
            .map(|c| {
                ds.series(i, c)
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        if let Some(labels) = ds.labels() {
            fields.push(ds.class_names()[labels[i]].clone());
        }
        writeln!(s, "{}", fields.join(":")).unwrap();
    }
    s
}

pub fn write_ts(ds: &TimeSeriesDataset, path: &Path) -> PathBuf {
    std::fs::write(path, to_ts(ds)).unwrap();
    path.to_path_buf()
}

pub fn basic_motions(split: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/BasicMotions")
        .join(format!("BasicMotions_{split}.ts"))
}

/// Direct sliding-window reference: centred taps, zeros outside the input.
pub fn naive_xcorr(x: &[f64], w: &[f64], d: usize) -> Vec<f64> {
    let half = (w.len() as i64 - 1) / 2;
    (0..x.len() as i64)
        .map(|i| {
            let mut acc = 0.0;
            for (j, wj) in w.iter().enumerate() {
                let t = i + (j as i64 - half) * d as i64;
                if t >= 0 && t < x.len() as i64 {
                    acc += wj * x[t as usize];
                }
            }
            acc
        })
        .collect()
}

fn naive_stats(y: &[f64]) -> [f64; 4] {
    let abs: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    let max = abs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = abs.iter().cloned().fold(f64::INFINITY, f64::min);
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    let mut best = 0;
    let mut run = 0;
    for &v in y {
        run = if v > 0.0 { run + 1 } else { 0 };
        best = best.max(run);
    }
    [max, min, pos as f64 / y.len() as f64, best as f64 / y.len() as f64]
}

/// Eight path statistics recomputed from scratch: level one on the raw
/// response, level two on the response to the downsampled modulus.
pub fn naive_path(x: &[f64], w: &[f64], d: usize) -> [f64; 8] {
    let y1 = naive_xcorr(x, w, d);
    let v: Vec<f64> = y1.iter().step_by(2).map(|v| v.abs()).collect();
    let y2 = naive_xcorr(&v, w, d);
    let a = naive_stats(&y1);
    let b = naive_stats(&y2);
    [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]
}
