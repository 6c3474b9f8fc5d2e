//! Spearman rank correlation, a seeded permutation test for it, and model ranking.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::solver::CompatibilityReport;

/// Permuted correlations within this distance of the observed one count as ties.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CorrelationMethod {
    PermutationTest { n_perm: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n: usize,
    /// Two-sided permutation p-value.
    pub p_value: f64,
    pub method: CorrelationMethod,
    /// Fewer distinct permutations exist than were drawn, so the p-value is coarse.
    pub low_resolution: bool,
}

/// Fractional ranks starting at 1; tied values share the mean of their ranks.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

fn check_inputs(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: a.len() });
    }
    for v in [a, b] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value in correlation input".into()));
        }
        if v.iter().all(|x| *x == v[0]) {
            return Err(Error::ConstantInput);
        }
    }
    Ok(())
}

pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    check_inputs(a, b)?;
    Ok(pearson(&mid_ranks(a), &mid_ranks(b)))
}

/// Two-sided permutation test of Spearman's rho.
///
/// `b` is shuffled `n_perm` times by a generator seeded with `seed`, and
/// `p = (1 + #{|rho_perm| >= |rho_obs|}) / (1 + n_perm)`.
pub fn permutation_pvalue(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<CorrelationResult> {
    check_inputs(a, b)?;
    if n_perm < 100 {
        return Err(Error::InvalidArgument(format!("n_perm must be at least 100, got {n_perm}")));
    }
    let ra = mid_ranks(a);
    let rb = mid_ranks(b);
    let rho = pearson(&ra, &rb);
    let threshold = rho.abs() - TIE_EPS;

    let mut rng = seeded(seed);
    let mut shuffled = rb.clone();
    let mut extreme = 0usize;
    for _ in 0..n_perm {
        shuffled.copy_from_slice(&rb);
        shuffled.shuffle(&mut rng);
        if pearson(&ra, &shuffled).abs() >= threshold {
            extreme += 1;
        }
    }
    let n = a.len();
    let distinct_perms = (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k));
    Ok(CorrelationResult {
        rho,
        n,
        p_value: (1 + extreme) as f64 / (1 + n_perm) as f64,
        method: CorrelationMethod::PermutationTest { n_perm, seed },
        low_resolution: distinct_perms.is_some_and(|p| p <= n_perm as u64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedModel {
    pub model_name: String,
    pub dim: usize,
    pub score: f64,
}

/// Orders models by their score on one level pair, best first.
///
/// Ties are broken by model name so the output does not depend on input order.
pub fn rank_models(reports: &[CompatibilityReport], level_pair: (usize, usize)) -> Result<Vec<RankedModel>> {
    let mut ranked = reports
        .iter()
        .map(|r| {
            r.entry(level_pair)
                .map(|e| RankedModel { model_name: r.model_name.clone(), dim: r.dim, score: e.score })
                .ok_or_else(|| {
                    let name = |rank: usize| r.level_names.get(rank).cloned().unwrap_or_else(|| rank.to_string());
                    Error::MissingPair(name(level_pair.0), name(level_pair.1), r.model_name.clone())
                })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|x, y| {
        y.score.partial_cmp(&x.score).unwrap_or(Ordering::Equal).then_with(|| x.model_name.cmp(&y.model_name))
    });
    Ok(ranked)
}
