//! The difficulty direction and the scores derived from it.
//!
//! Given order pairs `(i, j)` meaning item `i` is easier than item `j`, the
//! direction `w` maximizes the total margin `Σ_k w·(x_j − x_i)` subject to
//! `‖w‖ = 1`. The objective is linear in `w`, so the maximizer is the
//! normalized sum of difference vectors and the optimal objective equals the
//! norm of that sum. For a two-level dataset the sum factorizes into level
//! centroids, which is what [`compatibility_score`] exploits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, normalize_in_place};
use crate::model::{build_constraints, ConstraintMode, ConstraintSet, EmbeddingSet, LabeledDataset};
use crate::rng::GaussianStream;

/// Below this norm of the summed difference vectors no direction is reported.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifficultyDirection {
    /// Unit-norm direction of increasing difficulty.
    pub w: Vec<f64>,
    /// `Σ_k (x_j − x_i)` before normalization.
    pub raw_sum: Vec<f64>,
    /// Total margin `Σ_k ξ_k` at the optimum.
    pub objective: f64,
    /// `objective / K`.
    pub mean_margin: f64,
    /// Per-constraint margins `ξ_k = w·(x_j − x_i)`, in constraint order.
    pub margins: Vec<f64>,
}

impl DifficultyDirection {
    /// The apex of the cone, where the easiest items sit: `−w`.
    pub fn simplest_point(&self) -> Vec<f64> {
        self.w.iter().map(|x| -x).collect()
    }

    pub fn num_constraints(&self) -> usize {
        self.margins.len()
    }
}

fn check_indices(embeddings: &EmbeddingSet, constraints: &ConstraintSet) -> Result<()> {
    if constraints.is_empty() {
        return Err(Error::EmptyConstraintSet);
    }
    let len = embeddings.len();
    for &(i, j) in constraints.pairs() {
        for index in [i, j] {
            if index >= len {
                return Err(Error::IndexOutOfBounds { index, len });
            }
        }
    }
    Ok(())
}

/// Closed-form maximizer of the total margin on the unit sphere.
pub fn fit_direction(embeddings: &EmbeddingSet, constraints: &ConstraintSet) -> Result<DifficultyDirection> {
    check_indices(embeddings, constraints)?;
    let dim = embeddings.dim();
    let mut raw_sum = vec![0.0; dim];
    for &(i, j) in constraints.pairs() {
        let (xi, xj) = (embeddings.vector(i), embeddings.vector(j));
        for d in 0..dim {
            raw_sum[d] += xj[d] - xi[d];
        }
    }
    let len = norm(&raw_sum);
    if !(len >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateDirection { norm: len });
    }
    let w: Vec<f64> = raw_sum.iter().map(|x| x / len).collect();
    let margins: Vec<f64> =
        constraints.pairs().iter().map(|&(i, j)| margin(&w, embeddings.vector(i), embeddings.vector(j))).collect();
    let objective: f64 = margins.iter().sum();
    let mean_margin = objective / margins.len() as f64;
    Ok(DifficultyDirection { w, raw_sum, objective, mean_margin, margins })
}

/// `ξ = −w·(x_easier − x_harder)`.
fn margin(w: &[f64], easier: &[f64], harder: &[f64]) -> f64 {
    -w.iter().zip(easier.iter().zip(harder)).map(|(wd, (e, h))| wd * (e - h)).sum::<f64>()
}

/// Total margin `Σ_k −w·(x_i − x_j)` of an arbitrary direction.
pub fn objective_at(embeddings: &EmbeddingSet, constraints: &ConstraintSet, w: &[f64]) -> f64 {
    constraints.pairs().iter().map(|&(i, j)| margin(w, embeddings.vector(i), embeddings.vector(j))).sum()
}

/// Difficulty coordinate of `x` along `w`; larger is harder.
pub fn project(w: &[f64], x: &[f64]) -> Result<f64> {
    if w.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), found: x.len() });
    }
    Ok(dot(w, x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityEntry {
    /// Level ranks `(easier, harder)`.
    pub level_pair: (usize, usize),
    pub score: f64,
    /// Number of order pairs the score summarizes, `n_a · n_b`.
    pub k: usize,
    /// The two level centroids coincide; the score is reported as 0.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub model_name: String,
    pub dim: usize,
    /// Level names indexed by rank, for display.
    pub level_names: Vec<String>,
    pub entries: Vec<CompatibilityEntry>,
}

impl CompatibilityReport {
    pub fn entry(&self, level_pair: (usize, usize)) -> Option<&CompatibilityEntry> {
        self.entries.iter().find(|e| e.level_pair == level_pair)
    }
}

struct LevelCentroids {
    a: Vec<f64>,
    b: Vec<f64>,
    n_a: usize,
    n_b: usize,
}

fn level_centroids(
    embeddings: &EmbeddingSet,
    dataset: &LabeledDataset,
    (a, b): (usize, usize),
) -> Result<LevelCentroids> {
    let levels = dataset.level_names().len();
    for r in [a, b] {
        if r >= levels {
            return Err(Error::UnknownLevel(format!("rank {r}")));
        }
    }
    if a >= b {
        return Err(Error::InvalidLevelPair(a, b));
    }
    let dim = embeddings.dim();
    let mut c = LevelCentroids { a: vec![0.0; dim], b: vec![0.0; dim], n_a: 0, n_b: 0 };
    for (id, rank) in dataset.labels() {
        let (acc, n) = match *rank {
            r if r == a => (&mut c.a, &mut c.n_a),
            r if r == b => (&mut c.b, &mut c.n_b),
            _ => continue,
        };
        let v = embeddings.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        acc.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        *n += 1;
    }
    for (n, r) in [(c.n_a, a), (c.n_b, b)] {
        if n == 0 {
            return Err(Error::EmptyLevel(dataset.level_name(r).to_string()));
        }
    }
    c.a.iter_mut().for_each(|x| *x /= c.n_a as f64);
    c.b.iter_mut().for_each(|x| *x /= c.n_b as f64);
    Ok(c)
}

/// Mean margin of the optimal direction over all pairs of levels `a < b`,
/// computed as `‖μ_b − μ_a‖` from the level centroids in `O(N·D)`.
pub fn compatibility_score(
    embeddings: &EmbeddingSet,
    dataset: &LabeledDataset,
    level_pair: (usize, usize),
) -> Result<CompatibilityEntry> {
    let c = level_centroids(embeddings, dataset, level_pair)?;
    let diff: Vec<f64> = c.b.iter().zip(&c.a).map(|(b, a)| b - a).collect();
    let score = norm(&diff);
    let degenerate = !(score >= DEGENERACY_THRESHOLD);
    Ok(CompatibilityEntry { level_pair, score: if degenerate { 0.0 } else { score }, k: c.n_a * c.n_b, degenerate })
}

/// `(μ_b − μ_a) / ‖μ_b − μ_a‖`, the level-pair direction without enumerating pairs.
pub fn centroid_direction(
    embeddings: &EmbeddingSet,
    dataset: &LabeledDataset,
    level_pair: (usize, usize),
) -> Result<Vec<f64>> {
    let c = level_centroids(embeddings, dataset, level_pair)?;
    let mut diff: Vec<f64> = c.b.iter().zip(&c.a).map(|(b, a)| b - a).collect();
    let len = norm(&diff);
    if !(len >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateDirection { norm: len });
    }
    diff.iter_mut().for_each(|x| *x /= len);
    Ok(diff)
}

/// All pairs of present levels `(a, b)` with `a < b`, in lexicographic order.
pub fn all_level_pairs(dataset: &LabeledDataset) -> Vec<(usize, usize)> {
    let levels = dataset.present_levels();
    let mut out = Vec::new();
    for (n, &a) in levels.iter().enumerate() {
        for &b in &levels[n + 1..] {
            out.push((a, b));
        }
    }
    out
}

pub fn compatibility_report(
    model_name: &str,
    embeddings: &EmbeddingSet,
    dataset: &LabeledDataset,
    level_pairs: &[(usize, usize)],
) -> Result<CompatibilityReport> {
    let entries = level_pairs.iter().map(|&p| compatibility_score(embeddings, dataset, p)).collect::<Result<_>>()?;
    Ok(CompatibilityReport {
        model_name: model_name.to_string(),
        dim: embeddings.dim(),
        level_names: dataset.level_names().to_vec(),
        entries,
    })
}

/// Which other items an anchor is compared against in [`item_consistency`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnchorScope {
    /// Items of strictly easier levels only.
    #[default]
    Lower,
    /// Items of strictly easier and strictly harder levels.
    Both,
}

/// Mean margin of the direction fit on the pairs anchoring one item.
///
/// With [`AnchorScope::Lower`] this is the distance from the anchor to the
/// centroid of all easier items; larger values mean the anchor sits further
/// along the difficulty axis than its easier references. Coinciding
/// references give 0.
pub fn item_consistency(
    embeddings: &EmbeddingSet,
    dataset: &LabeledDataset,
    anchor_id: &str,
    scope: AnchorScope,
) -> Result<f64> {
    if dataset.level_of(anchor_id).is_none() || embeddings.index_of(anchor_id).is_none() {
        return Err(Error::UnknownId(anchor_id.to_string()));
    }
    let mode = match scope {
        AnchorScope::Lower => ConstraintMode::PerItemLower(anchor_id.to_string()),
        AnchorScope::Both => ConstraintMode::PerItem(anchor_id.to_string()),
    };
    let constraints = match build_constraints(dataset, embeddings, mode) {
        Err(Error::SingleLevel) => return Err(Error::NoReferenceItems(anchor_id.to_string())),
        other => other?,
    };
    match fit_direction(embeddings, &constraints) {
        Ok(dir) => Ok(dir.mean_margin),
        Err(Error::DegenerateDirection { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Projected gradient ascent on the same program, for checking the closed form.
///
/// The gradient is taken by central differences of [`objective_at`] (exact up
/// to rounding, since the objective is linear), then the iterate moves along it
/// with a fixed step and is pulled back onto the unit sphere after every step.
/// The start point is a seeded uniform direction.
pub fn oracle_fit_direction(
    embeddings: &EmbeddingSet,
    constraints: &ConstraintSet,
    steps: usize,
    step_size: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_indices(embeddings, constraints)?;
    let dim = embeddings.dim();
    let mut probe = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    for d in 0..dim {
        probe[d] = 1.0;
        let up = objective_at(embeddings, constraints, &probe);
        probe[d] = -1.0;
        let down = objective_at(embeddings, constraints, &probe);
        probe[d] = 0.0;
        grad[d] = (up - down) / 2.0;
    }
    let len = norm(&grad);
    if !(len >= DEGENERACY_THRESHOLD) {
        return Err(Error::DegenerateDirection { norm: len });
    }
    let mut w = GaussianStream::new(seed).unit_vector(dim);
    for _ in 0..steps {
        let mut next: Vec<f64> = w.iter().zip(&grad).map(|(wd, g)| wd + step_size * g).collect();
        if !normalize_in_place(&mut next) {
            // Landed on the origin from the antipode; restart from the gradient side.
            next = grad.clone();
            normalize_in_place(&mut next);
        }
        w = next;
    }
    Ok(w)
}
