//! Analysis of study results: distribution summaries, grouped medians,
//! variance-stabilizing transform selection and correlation.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::study::StudyRecord;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StatsError {
    #[error("InsufficientData: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("LengthMismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("ZeroVariance")]
    ZeroVariance,
    #[error("DomainError: {kind} undefined for value at index {index}")]
    DomainError { kind: TransformKind, index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub max: f64,
    pub median: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub stddev: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(Summary {
        count: values.len(),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median: median(values),
        stddev: (ss / (n - 1.0)).sqrt(),
    })
}

/// Median with the midpoint convention for even counts. NaN when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 0 {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::InsufficientData {
            needed: 2,
            got: xs.len(),
        });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    pearson(&ranks(xs), &ranks(ys))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Log,
    Sqrt,
    Reciprocal,
}

impl TransformKind {
    /// Candidate order, which is also the tie-break order.
    pub const ALL: [TransformKind; 3] = [TransformKind::Log, TransformKind::Sqrt, TransformKind::Reciprocal];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Log => "log",
            TransformKind::Sqrt => "sqrt",
            TransformKind::Reciprocal => "reciprocal",
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn transform(values: &[f64], kind: TransformKind) -> Result<Vec<f64>, StatsError> {
    values
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            let ok = match kind {
                TransformKind::Log => v > 0.0,
                TransformKind::Sqrt => v >= 0.0,
                TransformKind::Reciprocal => v != 0.0,
            };
            if !ok {
                return Err(StatsError::DomainError { kind, index });
            }
            Ok(match kind {
                TransformKind::Log => v.ln(),
                TransformKind::Sqrt => v.sqrt(),
                TransformKind::Reciprocal => 1.0 / v,
            })
        })
        .collect()
}

pub const DEFAULT_BINS: usize = 10;
const MIN_BIN_SIZE: usize = 5;

/// Ratio of the largest to the smallest within-bin variance of `ys`, with
/// points binned by `xs` into roughly equal-count bins. Points sharing an x
/// value always land in the same bin. Lower is more homoscedastic; 1 means
/// every bin has the same spread.
pub fn variance_consistency(xs: &[f64], ys: &[f64], bins: usize) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    let needed = bins.max(1) * MIN_BIN_SIZE;
    if n < needed {
        return Err(StatsError::InsufficientData { needed, got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(ys[a].total_cmp(&ys[b])));

    let mut groups: Vec<Vec<f64>> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    let mut closed = 0usize;
    let mut i = 0;
    while i < n {
        let x = xs[order[i]];
        while i < n && xs[order[i]] == x {
            current.push(ys[order[i]]);
            i += 1;
        }
        let per_bin = n as f64 / bins as f64;
        let boundary = ((closed as f64 / per_bin + 1e-9).floor() + 1.0) * per_bin;
        if (closed + current.len()) as f64 >= boundary - 1e-9 {
            closed += current.len();
            groups.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }

    // fold undersized bins into a neighbour
    let mut merged: Vec<Vec<f64>> = Vec::new();
    for g in groups {
        match merged.last_mut() {
            Some(last) if last.len() < MIN_BIN_SIZE => last.extend(g),
            _ => merged.push(g),
        }
    }
    if merged.len() > 1 && merged.last().is_some_and(|g| g.len() < MIN_BIN_SIZE) {
        let tail = merged.pop().expect("nonempty");
        merged.last_mut().expect("nonempty").extend(tail);
    }

    let variances: Vec<f64> = merged
        .iter()
        .map(|g| {
            let m = mean(g);
            g.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / g.len() as f64
        })
        .collect();
    let max = variances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = variances.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        return Ok(1.0);
    }
    if min == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((max / min).max(1.0))
}

/// Per-transform variance-consistency scores; `None` where the transform
/// is undefined on the data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceScores {
    pub log: Option<f64>,
    pub sqrt: Option<f64>,
    pub reciprocal: Option<f64>,
}

impl VarianceScores {
    pub fn get(&self, kind: TransformKind) -> Option<f64> {
        match kind {
            TransformKind::Log => self.log,
            TransformKind::Sqrt => self.sqrt,
            TransformKind::Reciprocal => self.reciprocal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformSelection {
    pub y_kind: TransformKind,
    pub x_kind: TransformKind,
    pub transformed_pearson: f64,
    pub scores: VarianceScores,
}

/// Picks the y transform that best equalizes variance across x, then the x
/// transform that best restores linearity against the transformed y.
pub fn select_transforms(xs: &[f64], ys: &[f64]) -> Result<TransformSelection, StatsError> {
    let mut scores = VarianceScores {
        log: None,
        sqrt: None,
        reciprocal: None,
    };
    let mut best_y: Option<(TransformKind, f64, Vec<f64>)> = None;
    let mut first_err = None;
    for kind in TransformKind::ALL {
        let ty = match transform(ys, kind) {
            Ok(t) => t,
            Err(e) => {
                first_err.get_or_insert(e);
                continue;
            }
        };
        let score = variance_consistency(xs, &ty, DEFAULT_BINS)?;
        match kind {
            TransformKind::Log => scores.log = Some(score),
            TransformKind::Sqrt => scores.sqrt = Some(score),
            TransformKind::Reciprocal => scores.reciprocal = Some(score),
        }
        if best_y.as_ref().map_or(true, |(_, s, _)| score < *s) {
            best_y = Some((kind, score, ty));
        }
    }
    let Some((y_kind, _, ty)) = best_y else {
        return Err(first_err.expect("a transform failed"));
    };

    let mut best_x: Option<(TransformKind, f64)> = None;
    for kind in TransformKind::ALL {
        let Ok(tx) = transform(xs, kind) else {
            continue;
        };
        let r = pearson(&tx, &ty)?;
        if best_x.map_or(true, |(_, b)| r.abs() > b.abs()) {
            best_x = Some((kind, r));
        }
    }
    let Some((x_kind, transformed_pearson)) = best_x else {
        return Err(transform(xs, TransformKind::Log).expect_err("every x transform failed"));
    };
    Ok(TransformSelection {
        y_kind,
        x_kind,
        transformed_pearson,
        scores,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepsMedian {
    pub steps: u32,
    pub median: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CellMedian {
    pub steps: u32,
    pub total_cases: u32,
    pub median: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridCell {
    pub steps: u32,
    pub total_cases: u32,
    pub mean: f64,
    pub count: usize,
}

fn group<K: Ord>(records: &[StudyRecord], key: impl Fn(&StudyRecord) -> K) -> BTreeMap<K, Vec<f64>> {
    let mut groups: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(key(r)).or_default().push(r.size_bytes as f64);
    }
    groups
}

/// Median size per step count, ascending.
pub fn median_by_steps(records: &[StudyRecord]) -> Vec<StepsMedian> {
    group(records, |r| r.steps)
        .into_iter()
        .map(|(steps, sizes)| StepsMedian {
            steps,
            median: median(&sizes),
            count: sizes.len(),
        })
        .collect()
}

/// Median size per (steps, total cases) cell.
pub fn median_by_cell(records: &[StudyRecord]) -> Vec<CellMedian> {
    group(records, |r| (r.steps, r.total_cases))
        .into_iter()
        .map(|((steps, total_cases), sizes)| CellMedian {
            steps,
            total_cases,
            median: median(&sizes),
            count: sizes.len(),
        })
        .collect()
}

/// Mean size per (steps, total cases) cell, each record weighing one.
pub fn weighted_mean_grid(records: &[StudyRecord]) -> Vec<GridCell> {
    group(records, |r| (r.steps, r.total_cases))
        .into_iter()
        .map(|((steps, total_cases), sizes)| GridCell {
            steps,
            total_cases,
            mean: mean(&sizes),
            count: sizes.len(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairAnalysis {
    pub pearson_raw: f64,
    pub y_transform: TransformKind,
    pub x_transform: TransformKind,
    pub pearson_transformed: f64,
    /// Pearson with the square root applied to both axes.
    pub pearson_sqrt_sqrt: f64,
    pub variance_scores: VarianceScores,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pairs {
    pub size_vs_cases: PairAnalysis,
    pub size_vs_steps: PairAnalysis,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counts {
    pub records: usize,
    pub step_levels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupedMedians {
    pub by_steps: Vec<StepsMedian>,
    pub by_steps_and_cases: Vec<CellMedian>,
}

/// Everything the analysis reports, serialized as the report JSON.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub counts: Counts,
    pub summary: Summary,
    pub pairs: Pairs,
    pub grouped_medians: GroupedMedians,
    pub grid: Vec<GridCell>,
}

fn analyze_pair(xs: &[f64], ys: &[f64]) -> Result<PairAnalysis, StatsError> {
    let selection = select_transforms(xs, ys)?;
    Ok(PairAnalysis {
        pearson_raw: pearson(xs, ys)?,
        y_transform: selection.y_kind,
        x_transform: selection.x_kind,
        pearson_transformed: selection.transformed_pearson,
        pearson_sqrt_sqrt: pearson(
            &transform(xs, TransformKind::Sqrt)?,
            &transform(ys, TransformKind::Sqrt)?,
        )?,
        variance_scores: selection.scores,
    })
}

pub fn analyze(records: &[StudyRecord]) -> Result<AnalysisReport, StatsError> {
    let sizes: Vec<f64> = records.iter().map(|r| r.size_bytes as f64).collect();
    let cases: Vec<f64> = records.iter().map(|r| f64::from(r.total_cases)).collect();
    let steps: Vec<f64> = records.iter().map(|r| f64::from(r.steps)).collect();
    let summary = summarize(&sizes)?;
    let by_steps = median_by_steps(records);
    Ok(AnalysisReport {
        counts: Counts {
            records: records.len(),
            step_levels: by_steps.len(),
        },
        summary,
        pairs: Pairs {
            size_vs_cases: analyze_pair(&cases, &sizes)?,
            size_vs_steps: analyze_pair(&steps, &sizes)?,
        },
        grouped_medians: GroupedMedians {
            by_steps,
            by_steps_and_cases: median_by_cell(records),
        },
        grid: weighted_mean_grid(records),
    })
}
