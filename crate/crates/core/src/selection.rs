//! Filter-based feature selection: one-way ANOVA relevance per worker, then
//! greedy relevance/redundancy (mRMR quotient form) on the coordinator.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scattering::{FeatureDescriptor, FeatureMatrix};

/// Score assigned to perfectly separating features (zero within-class spread).
pub const F_MAX: f64 = 1e12;
/// Floor on the mean absolute correlation used as mRMR denominator.
pub const MRMR_EPS: f64 = 1e-6;

/// A candidate feature with its relevance score and training values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFeature {
    pub descriptor: FeatureDescriptor,
    pub f_score: f64,
    pub values: Vec<f64>,
}

/// Ranking order: higher score first, then the smaller descriptor.
pub fn rank_order(a: &ScoredFeature, b: &ScoredFeature) -> Ordering {
    b.f_score
        .total_cmp(&a.f_score)
        .then_with(|| a.descriptor.cmp(&b.descriptor))
}

/// One-way ANOVA F statistic of `values` grouped by `labels`.
pub fn anova_f(values: &[f64], labels: &[usize], n_classes: usize) -> Result<f64> {
    let m = values.len();
    if labels.len() != m {
        return Err(Error::Shape(format!("{m} values but {} labels", labels.len())));
    }
    if m < 2 {
        return Err(Error::invalid("ANOVA needs at least two samples"));
    }
    if n_classes < 2 {
        return Err(Error::invalid("ANOVA needs at least two classes"));
    }
    let mut sums = vec![0.0; n_classes];
    let mut counts = vec![0usize; n_classes];
    for (&v, &y) in values.iter().zip(labels) {
        if y >= n_classes {
            return Err(Error::invalid(format!("label {y} >= class count {n_classes}")));
        }
        sums[y] += v;
        counts[y] += 1;
    }
    if let Some(absent) = counts.iter().position(|&c| c == 0) {
        return Err(Error::invalid(format!("class {absent} absent from labels")));
    }
    let grand = values.iter().sum::<f64>() / m as f64;
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let ssb: f64 = means
        .iter()
        .zip(&counts)
        .map(|(mu, &c)| c as f64 * (mu - grand) * (mu - grand))
        .sum();
    let ssw: f64 = values
        .iter()
        .zip(labels)
        .map(|(v, &y)| (v - means[y]) * (v - means[y]))
        .sum();
    if ssb == 0.0 {
        return Ok(0.0);
    }
    if ssw == 0.0 {
        return Ok(F_MAX);
    }
    let df_within = m - n_classes;
    if df_within == 0 {
        return Err(Error::invalid("no within-class degrees of freedom"));
    }
    let f = (ssb / (n_classes - 1) as f64) / (ssw / df_within as f64);
    Ok(f.min(F_MAX))
}

/// Mean-centred copy of a column with its Euclidean norm, so correlations
/// reduce to one dot product.
#[derive(Debug, Clone)]
pub(crate) struct Centered {
    dev: Vec<f64>,
    norm: f64,
}

impl Centered {
    pub fn new(x: &[f64]) -> Self {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let norm = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
        Self { dev, norm }
    }

    pub fn corr(&self, other: &Centered) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let dot: f64 = self.dev.iter().zip(&other.dev).map(|(a, b)| a * b).sum();
        (dot / (self.norm * other.norm)).clamp(-1.0, 1.0)
    }
}

/// Sample Pearson correlation; zero when either input has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("length mismatch {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least two samples"));
    }
    Ok(Centered::new(x).corr(&Centered::new(y)))
}

fn is_constant(col: &[f64]) -> bool {
    col.iter().all(|&v| v == col[0])
}

/// Scores every non-constant column and keeps the `k` best, sorted by
/// [`rank_order`].
pub fn local_topk(
    features: &FeatureMatrix,
    labels: &[usize],
    n_classes: usize,
    k: usize,
) -> Result<Vec<ScoredFeature>> {
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    if labels.len() != features.n_rows() {
        return Err(Error::Shape(format!(
            "{} labels for {} rows",
            labels.len(),
            features.n_rows()
        )));
    }
    let scored: Vec<(usize, f64)> = (0..features.n_cols())
        .into_par_iter()
        .filter(|&j| !is_constant(features.column(j)))
        .map(|j| anova_f(features.column(j), labels, n_classes).map(|f| (j, f)))
        .collect::<Result<_>>()?;
    let descriptors = features.descriptors();
    let mut scored = scored;
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| descriptors[a.0].cmp(&descriptors[b.0]))
    });
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(j, f_score)| ScoredFeature {
            descriptor: descriptors[j],
            f_score,
            values: features.column(j).to_vec(),
        })
        .collect())
}

/// Merge ranked lists into one ranked list truncated to `k`.
pub fn merge_topk(mut a: Vec<ScoredFeature>, b: Vec<ScoredFeature>, k: usize) -> Vec<ScoredFeature> {
    a.extend(b);
    a.sort_by(rank_order);
    a.truncate(k);
    a
}

/// Candidate `a` beats `b`: higher score, or equal score and smaller descriptor.
fn beats(a: (f64, &FeatureDescriptor), b: (f64, &FeatureDescriptor)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.1 < b.1,
    }
}

/// Greedy mRMR: first the most relevant feature, then repeatedly the feature
/// maximising `f / max(eps, mean |r| to the selected set)`.
pub fn mrmr_select(pool: &[ScoredFeature], k: usize) -> Result<Vec<FeatureDescriptor>> {
    if pool.is_empty() {
        return Err(Error::invalid("empty feature pool"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    let m = pool[0].values.len();
    if pool.iter().any(|f| f.values.len() != m) {
        return Err(Error::Shape("pool value columns differ in length".into()));
    }
    let mut seen = HashSet::new();
    let pool: Vec<&ScoredFeature> = pool.iter().filter(|f| seen.insert(f.descriptor)).collect();
    let k = k.min(pool.len());
    let centered: Vec<Centered> = pool.par_iter().map(|f| Centered::new(&f.values)).collect();

    let mut available = vec![true; pool.len()];
    let mut corr_sum = vec![0.0; pool.len()];
    let mut selected: Vec<usize> = Vec::with_capacity(k);

    let first = (0..pool.len())
        .reduce(|best, j| {
            if beats(
                (pool[j].f_score, &pool[j].descriptor),
                (pool[best].f_score, &pool[best].descriptor),
            ) {
                j
            } else {
                best
            }
        })
        .expect("pool is nonempty");
    available[first] = false;
    selected.push(first);

    while selected.len() < k {
        let last = &centered[*selected.last().expect("at least one pick")];
        let n_sel = selected.len() as f64;
        let scores: Vec<Option<f64>> = corr_sum
            .par_iter_mut()
            .zip(centered.par_iter())
            .enumerate()
            .map(|(j, (sum, col))| {
                if !available[j] {
                    return None;
                }
                *sum += col.corr(last).abs();
                Some(pool[j].f_score / (*sum / n_sel).max(MRMR_EPS))
            })
            .collect();
        let mut best: Option<(usize, f64)> = None;
        for (j, score) in scores.iter().enumerate() {
            let Some(score) = *score else { continue };
            best = match best {
                Some((b, bs)) if !beats((score, &pool[j].descriptor), (bs, &pool[b].descriptor)) => {
                    Some((b, bs))
                }
                _ => Some((j, score)),
            };
        }
        let (pick, _) = best.expect("candidates remain while selected < k");
        available[pick] = false;
        selected.push(pick);
    }
    Ok(selected.into_iter().map(|j| pool[j].descriptor).collect())
}
