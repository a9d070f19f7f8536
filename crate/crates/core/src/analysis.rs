//! Agreement between two rank orders.
//!
//! A [`RankPairing`] lists, for positions 1..n of order A, where the same
//! result sits in order B. Positions in B may exceed n when only the top of
//! order A is compared; the true position is kept.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rerank::ScoredResult;

pub const DEFAULT_OUTLIER_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("pairing has {n} pairs; at least {min} required")]
    DegeneratePairing { n: usize, min: usize },
    #[error("result id sets differ: {0}")]
    IdMismatch(String),
    #[error("invalid pairing: {0}")]
    InvalidPairing(String),
    #[error("outlier factor must be positive and finite, got {0}")]
    InvalidFactor(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPairing {
    pairs: Vec<(u32, u32)>,
}

impl RankPairing {
    /// Build from order-B positions listed in order-A order.
    pub fn from_positions(positions_b: impl IntoIterator<Item = u32>) -> Result<Self, AnalysisError> {
        let pairs: Vec<(u32, u32)> = positions_b
            .into_iter()
            .enumerate()
            .map(|(i, b)| (i as u32 + 1, b))
            .collect();
        Self::new(pairs)
    }

    pub fn new(pairs: Vec<(u32, u32)>) -> Result<Self, AnalysisError> {
        let mut seen = std::collections::HashSet::with_capacity(pairs.len());
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if a as usize != i + 1 {
                return Err(AnalysisError::InvalidPairing(format!(
                    "position_a at index {i} is {a}, expected {}",
                    i + 1
                )));
            }
            if b == 0 {
                return Err(AnalysisError::InvalidPairing(format!("position_b at index {i} is 0")));
            }
            if !seen.insert(b) {
                return Err(AnalysisError::InvalidPairing(format!("position_b {b} repeats")));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn displacements(&self) -> impl Iterator<Item = u64> + '_ {
        self.pairs.iter().map(|&(a, b)| u64::from(a.abs_diff(b)))
    }

    pub fn reversed_b(&self) -> Self {
        let n = self.pairs.len();
        let pairs = (0..n).map(|i| (i as u32 + 1, self.pairs[n - 1 - i].1)).collect();
        Self { pairs }
    }
}

/// Spearman's footrule: Σ |a − b|.
pub fn footrule(p: &RankPairing) -> u64 {
    p.displacements().sum()
}

pub fn mean_displacement(p: &RankPairing) -> f64 {
    if p.is_empty() {
        return 0.0;
    }
    footrule(p) as f64 / p.len() as f64
}

/// Number of index pairs i < j with b_i > b_j, by merge sort.
pub fn inversions(values: &[u32]) -> u64 {
    fn sort_count(v: &mut [u32], buf: &mut Vec<u32>) -> u64 {
        let n = v.len();
        if n < 2 {
            return 0;
        }
        let mid = n / 2;
        let mut count = sort_count(&mut v[..mid], buf) + sort_count(&mut v[mid..], buf);
        buf.clear();
        let (mut i, mut j) = (0, mid);
        while i < mid && j < n {
            if v[i] <= v[j] {
                buf.push(v[i]);
                i += 1;
            } else {
                // every remaining left element exceeds v[j]
                count += (mid - i) as u64;
                buf.push(v[j]);
                j += 1;
            }
        }
        buf.extend_from_slice(&v[i..mid]);
        buf.extend_from_slice(&v[j..n]);
        v.copy_from_slice(buf);
        count
    }
    let mut v = values.to_vec();
    let mut buf = Vec::with_capacity(v.len());
    sort_count(&mut v, &mut buf)
}

/// Kendall tau: `1 − 2·inversions / C(n, 2)`.
pub fn kendall_tau(p: &RankPairing) -> Result<f64, AnalysisError> {
    let n = p.len();
    if n < 2 {
        return Err(AnalysisError::DegeneratePairing { n, min: 2 });
    }
    let b: Vec<u32> = p.pairs.iter().map(|&(_, b)| b).collect();
    let inv = inversions(&b) as f64;
    let total_pairs = (n as f64) * (n as f64 - 1.0) / 2.0;
    Ok(1.0 - 2.0 * inv / total_pairs)
}

fn median(sorted: &[u64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// 1-based indices of pairs whose displacement exceeds `factor` times the
/// median displacement. A zero median uses `factor` itself as threshold.
pub fn flag_outliers(p: &RankPairing, factor: f64) -> Result<Vec<usize>, AnalysisError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(AnalysisError::InvalidFactor(factor));
    }
    let n = p.len();
    if n < 3 {
        return Err(AnalysisError::DegeneratePairing { n, min: 3 });
    }
    let disp: Vec<u64> = p.displacements().collect();
    let mut sorted = disp.clone();
    sorted.sort_unstable();
    let med = median(&sorted);
    let threshold = if med == 0.0 { factor } else { factor * med };
    Ok(disp
        .iter()
        .enumerate()
        .filter(|&(_, &d)| d as f64 > threshold)
        .map(|(i, _)| i + 1)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub pairing: RankPairing,
    pub mean_displacement: f64,
    pub kendall_tau: f64,
    pub footrule: u64,
    /// 1-based pair indices.
    pub outliers: Vec<usize>,
}

/// The JSON summary block of a comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub n: usize,
    pub mean_displacement: f64,
    pub kendall_tau: f64,
    pub footrule: u64,
    pub outlier_indices: Vec<usize>,
}

impl RankComparison {
    /// Metrics for a pairing. Outlier flagging needs three pairs; shorter
    /// pairings report no outliers.
    pub fn from_pairing(pairing: RankPairing, outlier_factor: f64) -> Result<Self, AnalysisError> {
        let kendall_tau = kendall_tau(&pairing)?;
        let outliers = if pairing.len() >= 3 {
            flag_outliers(&pairing, outlier_factor)?
        } else {
            Vec::new()
        };
        Ok(Self {
            mean_displacement: mean_displacement(&pairing),
            footrule: footrule(&pairing),
            kendall_tau,
            outliers,
            pairing,
        })
    }

    pub fn summary(&self) -> ComparisonSummary {
        ComparisonSummary {
            n: self.pairing.len(),
            mean_displacement: self.mean_displacement,
            kendall_tau: self.kendall_tau,
            footrule: self.footrule,
            outlier_indices: self.outliers.clone(),
        }
    }

    /// Pairing table: `rank_a,rank_b,displacement,outlier_flag`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["rank_a", "rank_b", "displacement", "outlier_flag"])
            .expect("in-memory csv");
        for (i, &(a, b)) in self.pairing.pairs().iter().enumerate() {
            let flagged = self.outliers.contains(&(i + 1));
            w.write_record([
                a.to_string(),
                b.to_string(),
                a.abs_diff(b).to_string(),
                u8::from(flagged).to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
    }
}

/// Compare two rankings of the same id set.
///
/// Walks `a` in `new_rank` order; with `top_k` only its first `k` entries are
/// paired, each with its full position in `b`.
pub fn compare_orders(
    a: &[ScoredResult],
    b: &[ScoredResult],
    top_k: Option<usize>,
    outlier_factor: f64,
) -> Result<RankComparison, AnalysisError> {
    let b_pos: HashMap<&str, u32> = b.iter().map(|r| (r.result_id.as_str(), r.new_rank)).collect();
    if b_pos.len() != b.len() {
        return Err(AnalysisError::IdMismatch("duplicate id in second order".into()));
    }
    let mut a_sorted: Vec<&ScoredResult> = a.iter().collect();
    a_sorted.sort_by_key(|r| r.new_rank);
    if a_sorted.len() != b.len() {
        return Err(AnalysisError::IdMismatch(format!("{} ids vs {} ids", a.len(), b.len())));
    }
    let mut positions = Vec::with_capacity(a_sorted.len());
    for r in &a_sorted {
        match b_pos.get(r.result_id.as_str()) {
            Some(&pos) => positions.push(pos),
            None => {
                return Err(AnalysisError::IdMismatch(format!(
                    "{:?} missing from second order",
                    r.result_id
                )))
            }
        }
    }
    if let Some(k) = top_k {
        positions.truncate(k);
    }
    let pairing = RankPairing::from_positions(positions)?;
    RankComparison::from_pairing(pairing, outlier_factor)
}
