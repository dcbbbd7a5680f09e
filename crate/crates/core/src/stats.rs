//! Weighted order statistics shared by the stretch and measurement reports.

use crate::error::{Error, Result};

/// Cumulative comparisons tolerate this much relative rounding in the running sum.
const CUMULATIVE_EPS: f64 = 1e-12;

/// Lower weighted quantile: the smallest value `v` such that the total weight
/// of samples `<= v` is at least `p` times the total weight.
pub fn weighted_percentile(samples: &[(f64, f64)], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyStats("percentile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("percentile fraction {p} outside [0, 1]")));
    }
    let mut sorted: Vec<(f64, f64)> = samples.to_vec();
    if sorted.iter().any(|&(v, w)| !v.is_finite() || !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("percentile samples must be finite with non-negative weights"));
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Err(Error::EmptyStats("total weight is zero".into()));
    }
    let threshold = p * total - CUMULATIVE_EPS * total;
    let mut cumulative = 0.0;
    for &(v, w) in &sorted {
        cumulative += w;
        if w > 0.0 && cumulative >= threshold {
            return Ok(v);
        }
    }
    // Rounding can leave the last positive-weight sample as the answer.
    Ok(sorted.iter().rev().find(|s| s.1 > 0.0).map(|s| s.0).unwrap_or(sorted[0].0))
}

/// Unweighted lower quantile.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    let samples: Vec<(f64, f64)> = values.iter().map(|&v| (v, 1.0)).collect();
    weighted_percentile(&samples, p)
}

pub fn weighted_mean(samples: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if samples.is_empty() || !(total > 0.0) {
        return Err(Error::EmptyStats("mean of an empty or zero-weight sample".into()));
    }
    Ok(samples.iter().map(|(v, w)| v * w).sum::<f64>() / total)
}

/// Summary used throughout the reports.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Summary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub p95: f64,
    pub max: f64,
    pub count: usize,
}

pub fn summarize(samples: &[(f64, f64)]) -> Result<Summary> {
    let median = weighted_percentile(samples, 0.5)?;
    let p95 = weighted_percentile(samples, 0.95)?;
    let mean = weighted_mean(samples)?;
    let min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(Summary { min, median, mean, p95, max, count: samples.len() })
}

/// Step CDF: one row per distinct value with the cumulative weight fraction
/// of samples at or below it.
pub fn cdf_table(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<(f64, f64)> = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = sorted.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Vec::new();
    }
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut cumulative = 0.0;
    for (v, w) in sorted {
        cumulative += w;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = cumulative / total,
            _ => out.push((v, cumulative / total)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zip(v: &[f64], w: &[f64]) -> Vec<(f64, f64)> {
        v.iter().copied().zip(w.iter().copied()).collect()
    }

    #[test]
    fn lower_quantile_examples() {
        assert_eq!(weighted_percentile(&zip(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]), 0.5).unwrap(), 2.0);
        // cumulative weights 1, 2, 4 against threshold 2
        assert_eq!(weighted_percentile(&zip(&[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0]), 0.5).unwrap(), 2.0);
        for p in [0.0, 0.3, 0.95, 1.0] {
            assert_eq!(weighted_percentile(&[(7.5, 3.0)], p).unwrap(), 7.5);
        }
        assert!(matches!(weighted_percentile(&[], 0.5), Err(Error::EmptyStats(_))));
    }

    #[test]
    fn order_does_not_matter() {
        let a = zip(&[3.0, 1.0, 2.0, 5.0], &[0.1, 0.2, 0.3, 0.4]);
        let mut b = a.clone();
        b.reverse();
        for p in [0.1, 0.5, 0.95] {
            assert_eq!(weighted_percentile(&a, p).unwrap(), weighted_percentile(&b, p).unwrap());
        }
    }

    #[test]
    fn tenths_do_not_trip_rounding() {
        // 0.1 * 5 accumulates to slightly less than 0.5
        let s: Vec<(f64, f64)> = (1..=10).map(|i| (i as f64, 0.1)).collect();
        assert_eq!(weighted_percentile(&s, 0.5).unwrap(), 5.0);
    }

    #[test]
    fn cdf_merges_ties() {
        let cdf = cdf_table(&zip(&[1.0, 1.0, 2.0], &[1.0, 1.0, 2.0]));
        assert_eq!(cdf, vec![(1.0, 0.5), (2.0, 1.0)]);
    }
}
