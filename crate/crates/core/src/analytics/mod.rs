//! Cross-run statistics: best-so-far curves, normalized ranks, Spearman
//! correlation between rankings and median/IQR summaries.
//!
//! Conventions used throughout:
//! - ties share the average of the ranks they span;
//! - quantiles interpolate linearly between order statistics (type 7);
//! - a ranking with no spread has undefined correlation and is skipped.

mod runs;

use indexmap::IndexMap;

pub use runs::{
    compare, load_runs, Cell, Comparison, Flag, Grouping, RankTable, RunRecord, RunSet, DEFAULT_FRACTIONS,
};

use crate::problems::Sense;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("fraction {0} outside (0, 1]")]
    BadFraction(f64),
    #[error("no values given")]
    NoValues,
    #[error("{0} value is not finite")]
    NonFinite(String),
    #[error("no pair of rankings shares at least three methods with spread")]
    NoUsablePairs,
    #[error("{0}")]
    Inconsistent(String),
    #[error("{0}")]
    Load(String),
}

/// Number of evaluations in the first `fraction` of `budget`.
///
/// `fraction · budget` is snapped to the nearest integer when it is within
/// 1e-9 of one, so 0.6 · 5 gives 3 rather than 4.
pub fn prefix_len(budget: usize, fraction: f64) -> usize {
    let x = fraction * budget as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Best reward among the first `⌈fraction · budget⌉` evaluations. A
/// trajectory that stopped early keeps its last best.
pub fn best_so_far_at(rewards: &[f64], budget: usize, fraction: f64) -> Result<f64, AnalyticsError> {
    if rewards.is_empty() {
        return Err(AnalyticsError::EmptyTrajectory);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(AnalyticsError::BadFraction(fraction));
    }
    let k = prefix_len(budget, fraction).clamp(1, rewards.len());
    Ok(rewards[..k].iter().copied().filter(|r| !r.is_nan()).fold(f64::NEG_INFINITY, f64::max))
}

/// Ranks `1..=n` in ascending order of `values`; ties get the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share the mean of ranks i+1..=j+1
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Maps each method to `[0, 1]`, best to 0 and worst to 1, via average
/// ranks. When every value ties (one method included) all get 0.5.
pub fn normalized_rank(values: &IndexMap<String, f64>, sense: Sense) -> Result<IndexMap<String, f64>, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::NoValues);
    }
    if let Some((k, _)) = values.iter().find(|(_, v)| v.is_nan()) {
        return Err(AnalyticsError::NonFinite(k.clone()));
    }
    // rank 1 is the best
    let keyed: Vec<f64> = values.values().map(|v| -sense.sign() * v).collect();
    let ranks = average_ranks(&keyed);
    let lo = ranks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(values
        .keys()
        .zip(ranks)
        .map(|(k, r)| (k.clone(), if hi > lo { (r - lo) / (hi - lo) } else { 0.5 }))
        .collect())
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's ρ: the Pearson correlation of average ranks. `None` for
/// fewer than three entries, mismatched lengths or a ranking with no
/// spread.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 3 {
        return None;
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

/// ρ over the methods two rankings share.
pub fn spearman_shared(a: &IndexMap<String, f64>, b: &IndexMap<String, f64>) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(k, x)| b.get(k).map(|y| (*x, *y))).unzip();
    spearman_rho(&xs, &ys)
}

/// Mean ρ over all unordered pairs of rankings. A pair counts only if it
/// shares at least three methods and both sides have spread.
pub fn mean_pairwise_spearman(rankings: &[IndexMap<String, f64>]) -> Result<f64, AnalyticsError> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..rankings.len() {
        for j in i + 1..rankings.len() {
            if let Some(r) = spearman_shared(&rankings[i], &rankings[j]) {
                sum += r;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(AnalyticsError::NoUsablePairs);
    }
    Ok(sum / n as f64)
}

/// Type-7 quantile of sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `q`-quantile by linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::NoValues);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&v, q.clamp(0.0, 1.0)))
}

/// `(median, q25, q75)`.
pub fn median_iqr(values: &[f64]) -> Result<(f64, f64, f64), AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::NoValues);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok((quantile_sorted(&v, 0.5), quantile_sorted(&v, 0.25), quantile_sorted(&v, 0.75)))
}
