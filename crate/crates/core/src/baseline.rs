//! Linear SVM transfer baseline: train on one level pair, test on another.
//!
//! The classifier minimizes `(λ/2)‖w‖² + (1/n) Σ max(0, 1 − y(w·x + b))` with
//! `λ = 1/(C·n)` by Pegasos-style stochastic subgradient steps of size
//! `1/(λt)`. The bias is learned as the weight of a constant feature, so it is
//! regularized along with `w`.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{EmbeddingSet, LabeledDataset};
use crate::rng::seeded;

pub const DEFAULT_GRID: [f64; 3] = [0.1, 1.0, 10.0];
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

/// Vectors with binary labels in {-1, +1}; `ids` tie them back to items.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledVectors {
    pub ids: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

impl LabeledVectors {
    pub fn push(&mut self, id: impl Into<String>, vector: Vec<f64>, label: i8) {
        self.ids.push(id.into());
        self.vectors.push(vector);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn concat(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.ids.extend(other.ids.iter().cloned());
        out.vectors.extend(other.vectors.iter().cloned());
        out.labels.extend(&other.labels);
        out
    }

    fn select(&self, idx: &[usize]) -> Self {
        let mut out = Self::default();
        for &i in idx {
            out.push(self.ids[i].clone(), self.vectors[i].clone(), self.labels[i]);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c_used: f64,
    pub epochs: usize,
    pub seed: u64,
    pub val_accuracy: Option<f64>,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// Fraction of correctly classified examples; 0 for an empty set.
    pub fn accuracy(&self, data: &LabeledVectors) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let correct = data.vectors.iter().zip(&data.labels).filter(|(x, &y)| self.predict(x) == y).count();
        correct as f64 / data.len() as f64
    }
}

fn check_training_input(vectors: &[Vec<f64>], labels: &[i8], c: f64) -> Result<usize> {
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch(vectors.len(), labels.len()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    let dim = vectors.first().map(Vec::len).ok_or(Error::SingleClass)?;
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
    }
    let mut counts = [0usize; 2];
    for &y in labels {
        match y {
            -1 => counts[0] += 1,
            1 => counts[1] += 1,
            _ => return Err(Error::InvalidArgument(format!("labels must be -1 or +1, got {y}"))),
        }
    }
    if counts.iter().any(|&n| n < 2) {
        return Err(Error::SingleClass);
    }
    Ok(dim)
}

/// Trains a linear SVM; identical inputs and seed give bit-identical weights.
pub fn train_linear_svm(vectors: &[Vec<f64>], labels: &[i8], c: f64, epochs: usize, seed: u64) -> Result<LinearModel> {
    let dim = check_training_input(vectors, labels, c)?;
    let n = vectors.len();
    let lambda = 1.0 / (c * n as f64);
    let radius_sq = 1.0 / lambda;

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut rng = seeded(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let y = f64::from(labels[i]);
            let x = &vectors[i];
            let violated = y * (dot(&w, x) + b) < 1.0;
            let shrink = 1.0 - 1.0 / t as f64;
            w.iter_mut().for_each(|wd| *wd *= shrink);
            b *= shrink;
            if violated {
                w.iter_mut().zip(x).for_each(|(wd, xd)| *wd += eta * y * xd);
                b += eta * y;
            }
            // Project onto the ball that contains the optimum.
            let sq = dot(&w, &w) + b * b;
            if sq > radius_sq {
                let s = (radius_sq / sq).sqrt();
                w.iter_mut().for_each(|wd| *wd *= s);
                b *= s;
            }
        }
    }
    Ok(LinearModel { weights: w, bias: b, c_used: c, epochs, seed, val_accuracy: None })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneOutcome {
    pub test_accuracy: f64,
    pub model: LinearModel,
    /// Validation accuracy for each grid value, in grid order.
    pub val_scores: Vec<(f64, f64)>,
}

/// Picks `C` by validation accuracy (ties go to the smaller `C`), retrains on
/// train + validation, and reports test accuracy.
pub fn tune_and_evaluate(
    train: &LabeledVectors,
    val: &LabeledVectors,
    test: &LabeledVectors,
    grid: &[f64],
    epochs: usize,
    seed: u64,
) -> Result<TuneOutcome> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("C grid is empty".into()));
    }
    if val.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument("validation and test sets must be non-empty".into()));
    }
    let mut seen = HashSet::new();
    for id in train.ids.iter().chain(&val.ids).chain(&test.ids) {
        if !seen.insert(id.as_str()) {
            return Err(Error::OverlappingSplits(id.clone()));
        }
    }

    let mut val_scores = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &c in grid {
        let model = train_linear_svm(&train.vectors, &train.labels, c, epochs, seed)?;
        let acc = model.accuracy(val);
        val_scores.push((c, acc));
        best = match best {
            Some((bc, bacc)) if bacc > acc || (bacc == acc && bc <= c) => Some((bc, bacc)),
            _ => Some((c, acc)),
        };
    }
    let (c, val_acc) = best.expect("grid is non-empty");
    let full = train.concat(val);
    let mut model = train_linear_svm(&full.vectors, &full.labels, c, epochs, seed)?;
    model.val_accuracy = Some(val_acc);
    Ok(TuneOutcome { test_accuracy: model.accuracy(test), model, val_scores })
}

/// Splits each class separately, sending `round(val_fraction · n_class)`
/// seeded-random members (at least one) to validation. Order is preserved.
pub fn stratified_split(
    data: &LabeledVectors,
    val_fraction: f64,
    seed: u64,
) -> Result<(LabeledVectors, LabeledVectors)> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::InvalidArgument(format!("validation fraction {val_fraction} not in [0, 1)")));
    }
    let mut rng = seeded(seed);
    let mut in_val = vec![false; data.len()];
    for class in [-1i8, 1] {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
        members.shuffle(&mut rng);
        let take = ((val_fraction * members.len() as f64).round() as usize).max(1).min(members.len());
        for &i in &members[..take] {
            in_val[i] = true;
        }
    }
    let (v, t): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| in_val[i]);
    Ok((data.select(&t), data.select(&v)))
}

/// Items of levels `a` (label -1) and `b` (label +1), in dataset order,
/// keeping only the ids accepted by `keep`.
pub fn level_pair_vectors(
    embeddings: &EmbeddingSet,
    dataset: &LabeledDataset,
    (a, b): (usize, usize),
    mut keep: impl FnMut(&str) -> bool,
) -> Result<LabeledVectors> {
    if a >= b {
        return Err(Error::InvalidLevelPair(a, b));
    }
    let mut out = LabeledVectors::default();
    for (id, rank) in dataset.labels() {
        let label = match *rank {
            r if r == a => -1,
            r if r == b => 1,
            _ => continue,
        };
        if !keep(id) {
            continue;
        }
        let v = embeddings.get(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        out.push(id.clone(), v.to_vec(), label);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferOutcome {
    pub train_pair: (usize, usize),
    pub test_pair: (usize, usize),
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub outcome: TuneOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig<'a> {
    pub grid: &'a [f64],
    pub epochs: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TransferConfig<'_> {
    fn default() -> Self {
        Self { grid: &DEFAULT_GRID, epochs: DEFAULT_EPOCHS, val_fraction: DEFAULT_VAL_FRACTION, seed: 0 }
    }
}

/// Trains on `train_pair` and tests on `test_pair`.
///
/// A level that belongs to both pairs is split in half by a seeded shuffle so
/// that no item is both trained and tested on.
pub fn transfer_experiment(
    embeddings: &EmbeddingSet,
    dataset: &LabeledDataset,
    train_pair: (usize, usize),
    test_pair: (usize, usize),
    config: TransferConfig<'_>,
) -> Result<TransferOutcome> {
    let mut rng = seeded(config.seed);
    let mut test_only: HashSet<String> = HashSet::new();
    for shared in [train_pair.0, train_pair.1] {
        if shared == test_pair.0 || shared == test_pair.1 {
            let mut ids = dataset.ids_at(shared);
            ids.shuffle(&mut rng);
            let half = ids.len() / 2;
            test_only.extend(ids[half..].iter().map(|s| s.to_string()));
        }
    }
    let shared_levels: HashSet<usize> =
        [train_pair.0, train_pair.1].into_iter().filter(|r| *r == test_pair.0 || *r == test_pair.1).collect();
    let is_shared = |id: &str| dataset.level_of(id).is_some_and(|r| shared_levels.contains(&r));

    let train_all = level_pair_vectors(embeddings, dataset, train_pair, |id| !test_only.contains(id))?;
    let test = level_pair_vectors(embeddings, dataset, test_pair, |id| !is_shared(id) || test_only.contains(id))?;
    let (train, val) = stratified_split(&train_all, config.val_fraction, config.seed)?;
    let outcome = tune_and_evaluate(&train, &val, &test, config.grid, config.epochs, config.seed)?;
    Ok(TransferOutcome { train_pair, test_pair, n_train: train.len(), n_val: val.len(), n_test: test.len(), outcome })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(points: &[([f64; 2], i8)]) -> LabeledVectors {
        let mut d = LabeledVectors::default();
        for (n, (x, y)) in points.iter().enumerate() {
            d.push(format!("p{n}"), x.to_vec(), *y);
        }
        d
    }

    #[test]
    fn separable_pair_is_learned() {
        let d = data(&[([1.0, 0.0], 1), ([0.9, 0.1], 1), ([-1.0, 0.0], -1), ([-0.9, -0.1], -1)]);
        for c in DEFAULT_GRID {
            let m = train_linear_svm(&d.vectors, &d.labels, c, 50, 3).unwrap();
            assert_eq!(m.accuracy(&d), 1.0, "C = {c}");
        }
    }

    #[test]
    fn xor_is_not_separable() {
        let d = data(&[([1.0, 1.0], 1), ([-1.0, -1.0], 1), ([1.0, -1.0], -1), ([-1.0, 1.0], -1)]);
        for c in DEFAULT_GRID {
            let m = train_linear_svm(&d.vectors, &d.labels, c, 100, 9).unwrap();
            assert!(m.accuracy(&d) <= 0.75);
        }
    }

    #[test]
    fn accuracy_matches_hand_count() {
        let m =
            LinearModel { weights: vec![1.0, -1.0], bias: 0.5, c_used: 1.0, epochs: 0, seed: 0, val_accuracy: None };
        // decisions: 1.5, -0.5, 0.5, -1.5, 0.5
        let d = data(&[([1.0, 0.0], 1), ([0.0, 1.0], 1), ([0.0, 0.0], -1), ([-1.0, 1.0], -1), ([1.0, 1.0], 1)]);
        assert_eq!(m.accuracy(&d), 3.0 / 5.0);
    }

    #[test]
    fn training_is_bit_identical_for_a_seed() {
        let d = data(&[([1.0, 0.2], 1), ([0.5, 0.8], 1), ([-0.3, 0.9], -1), ([-1.0, 0.1], -1), ([0.2, -0.9], 1)]);
        let a = train_linear_svm(&d.vectors, &d.labels, 1.0, 30, 17).unwrap();
        let b = train_linear_svm(&d.vectors, &d.labels, 1.0, 30, 17).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn training_errors() {
        let one_class = data(&[([1.0, 0.0], 1), ([0.0, 1.0], 1), ([0.5, 0.5], -1)]);
        assert!(matches!(train_linear_svm(&one_class.vectors, &one_class.labels, 1.0, 5, 0), Err(Error::SingleClass)));
        let d = data(&[([1.0, 0.0], 1), ([0.0, 1.0], 1), ([0.5, 0.5], -1), ([0.1, 0.5], -1)]);
        assert!(matches!(train_linear_svm(&d.vectors, &d.labels, 0.0, 5, 0), Err(Error::InvalidArgument(_))));
        let mut bad = d.clone();
        bad.vectors[2] = vec![1.0];
        assert!(matches!(train_linear_svm(&bad.vectors, &bad.labels, 1.0, 5, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tuning_prefers_smaller_c_on_ties_and_rejects_overlap() {
        let train = data(&[([1.0, 0.0], 1), ([0.9, 0.1], 1), ([-1.0, 0.0], -1), ([-0.9, -0.1], -1)]);
        let mut val = LabeledVectors::default();
        val.push("v0", vec![0.8, 0.0], 1);
        val.push("v1", vec![-0.8, 0.0], -1);
        let mut test = LabeledVectors::default();
        test.push("t0", vec![0.7, 0.3], 1);
        test.push("t1", vec![-0.7, -0.3], -1);
        let out = tune_and_evaluate(&train, &val, &test, &[10.0, 1.0, 0.1], 50, 1).unwrap();
        assert_eq!(out.model.c_used, 0.1);
        assert_eq!(out.test_accuracy, 1.0);
        assert_eq!(out.model.val_accuracy, Some(1.0));
        assert_eq!(out.val_scores.len(), 3);

        let mut overlap = test.clone();
        overlap.ids[0] = "v0".into();
        assert!(matches!(
            tune_and_evaluate(&train, &val, &overlap, &DEFAULT_GRID, 5, 1),
            Err(Error::OverlappingSplits(id)) if id == "v0"
        ));
        assert!(tune_and_evaluate(&train, &val, &test, &[], 5, 1).is_err());
    }

    #[test]
    fn stratified_split_keeps_both_classes() {
        let mut d = LabeledVectors::default();
        for n in 0..20 {
            d.push(format!("i{n}"), vec![n as f64, 1.0], if n < 10 { -1 } else { 1 });
        }
        let (train, val) = stratified_split(&d, 0.2, 4).unwrap();
        assert_eq!(train.len(), 16);
        assert_eq!(val.len(), 4);
        assert_eq!(val.labels.iter().filter(|&&y| y == 1).count(), 2);
        let (t2, v2) = stratified_split(&d, 0.2, 4).unwrap();
        assert_eq!((train, val), (t2, v2));
    }
}
