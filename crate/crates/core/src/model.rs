//! Embeddings, ordinal annotations, and their conversion into pairwise order
//! constraints.
//!
//! An annotation with ordinal levels is a directed graph: every item points at
//! every item of a harder level. [`build_constraints`] materializes (a subset
//! of) those edges as index pairs into an [`EmbeddingSet`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::algo::toposort;
use petgraph::graphmap::DiGraphMap;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// Deviation from unit norm tolerated by [`NormPolicy::AssertUnit`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormPolicy {
    /// Reject vectors whose norm differs from 1 by more than [`UNIT_NORM_TOLERANCE`].
    AssertUnit,
    /// Rescale every vector to unit length.
    #[default]
    Renormalize,
}

/// Ordered set of unit-norm vectors keyed by item id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(dim: usize, items: Vec<(String, Vec<f64>)>, policy: NormPolicy) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        let mut ids = Vec::with_capacity(items.len());
        let mut data = Vec::with_capacity(items.len() * dim);
        let mut index = HashMap::with_capacity(items.len());
        for (id, mut v) in items {
            if id.is_empty() {
                return Err(Error::EmptyId);
            }
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            if index.contains_key(&id) {
                return Err(Error::DuplicateId(id));
            }
            let n = linalg::norm(&v);
            if policy == NormPolicy::AssertUnit && !((n - 1.0).abs() <= UNIT_NORM_TOLERANCE) {
                return Err(Error::NotUnitNorm { id, norm: n });
            }
            if !linalg::normalize_in_place(&mut v) {
                return Err(Error::ZeroVector(id));
            }
            index.insert(id.clone(), ids.len());
            ids.push(id);
            data.extend_from_slice(&v);
        }
        Ok(Self { dim, ids, data, index })
    }

    /// Infers the dimension from the first item.
    pub fn from_items(items: Vec<(String, Vec<f64>)>, policy: NormPolicy) -> Result<Self> {
        let dim = items
            .first()
            .map(|(_, v)| v.len())
            .ok_or_else(|| Error::InvalidArgument("cannot infer dimension from an empty item list".into()))?;
        Self::new(dim, items, policy)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index_of(id).map(|i| self.vector(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim))
    }

    /// Keeps only the items accepted by `keep`, preserving order.
    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        let items = self.iter().filter(|(id, _)| keep(id)).map(|(id, v)| (id.to_string(), v.to_vec())).collect();
        // Vectors are already unit norm, so this cannot fail.
        Self::new(self.dim, items, NormPolicy::Renormalize).expect("subset of a valid set")
    }

    /// Applies `f` to every vector and renormalizes.
    pub fn map_vectors(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let items: Vec<_> = self.iter().map(|(id, v)| (id.to_string(), f(v))).collect();
        let dim = items.first().map_or(self.dim, |(_, v)| v.len());
        Self::new(dim, items, NormPolicy::Renormalize)
    }
}

/// Item ids annotated with ordinal difficulty levels.
///
/// `level_names[r]` is the name of rank `r`; lower ranks are easier.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    labels: Vec<(String, usize)>,
    level_names: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl LabeledDataset {
    pub fn new(labels: Vec<(String, usize)>, level_names: Vec<String>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for name in &level_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateLevel(name.clone()));
            }
        }
        let mut lookup = HashMap::with_capacity(labels.len());
        for (id, rank) in &labels {
            if id.is_empty() {
                return Err(Error::EmptyId);
            }
            if *rank >= level_names.len() {
                return Err(Error::UnknownLevel(format!("rank {rank}")));
            }
            if lookup.insert(id.clone(), *rank).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { labels, level_names, lookup })
    }

    /// Builds a dataset whose labels are given by level name.
    pub fn from_named<S: AsRef<str>>(labels: &[(S, S)], level_order: &[S]) -> Result<Self> {
        let names: Vec<String> = level_order.iter().map(|s| s.as_ref().to_string()).collect();
        let ranks: HashMap<&str, usize> = names.iter().enumerate().map(|(r, n)| (n.as_str(), r)).collect();
        let labels = labels
            .iter()
            .map(|(id, level)| {
                ranks
                    .get(level.as_ref())
                    .map(|&r| (id.as_ref().to_string(), r))
                    .ok_or_else(|| Error::UnknownLevel(level.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        Self::new(labels, names)
    }

    pub fn labels(&self) -> &[(String, usize)] {
        &self.labels
    }

    pub fn level_names(&self) -> &[String] {
        &self.level_names
    }

    pub fn level_name(&self, rank: usize) -> &str {
        &self.level_names[rank]
    }

    pub fn rank_of_level(&self, name: &str) -> Option<usize> {
        self.level_names.iter().position(|n| n == name)
    }

    pub fn level_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Ranks that have at least one labeled item, ascending.
    pub fn present_levels(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.labels.iter().map(|(_, r)| *r).collect();
        set.into_iter().collect()
    }

    /// Ids of the items at `rank`, in label order.
    pub fn ids_at(&self, rank: usize) -> Vec<&str> {
        self.labels.iter().filter(|(_, r)| *r == rank).map(|(id, _)| id.as_str()).collect()
    }

    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        let labels = self.labels.iter().filter(|(id, _)| keep(id)).cloned().collect();
        Self::new(labels, self.level_names.clone()).expect("subset of a valid dataset")
    }
}

/// How ordinal levels are turned into order pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ConstraintMode {
    /// Every pair of items whose levels differ.
    #[default]
    AllCrossLevel,
    /// Only items whose levels are consecutive among the levels present.
    AdjacentLevels,
    /// Items of level `a` against items of level `b`, `a < b` by rank.
    LevelPair(usize, usize),
    /// One item against every item of a strictly lower and strictly higher level.
    PerItem(String),
    /// One item against every item of a strictly lower level only.
    PerItemLower(String),
    /// Pairs supplied directly rather than derived from levels.
    Explicit,
}

/// Pairwise order constraints `(easier, harder)` as indices into an [`EmbeddingSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pairs: Vec<(usize, usize)>,
    mode: ConstraintMode,
}

impl ConstraintSet {
    /// Wraps raw pairs without checking them; see [`validate`].
    pub fn from_pairs(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs, mode: ConstraintMode::Explicit }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn mode(&self) -> &ConstraintMode {
        &self.mode
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Derives the order pairs implied by `mode`, sorted by `(easier, harder)`.
pub fn build_constraints(
    dataset: &LabeledDataset,
    embeddings: &EmbeddingSet,
    mode: ConstraintMode,
) -> Result<ConstraintSet> {
    let mut by_level: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (id, rank) in dataset.labels() {
        let idx = embeddings.index_of(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
        by_level.entry(*rank).or_default().push(idx);
    }
    if by_level.len() < 2 {
        return Err(Error::SingleLevel);
    }
    let levels: Vec<usize> = by_level.keys().copied().collect();

    let mut pairs = Vec::new();
    let cross = |lo: usize, hi: usize, pairs: &mut Vec<(usize, usize)>| {
        for &i in &by_level[&lo] {
            for &j in &by_level[&hi] {
                pairs.push((i, j));
            }
        }
    };
    match &mode {
        ConstraintMode::AllCrossLevel => {
            for (n, &lo) in levels.iter().enumerate() {
                for &hi in &levels[n + 1..] {
                    cross(lo, hi, &mut pairs);
                }
            }
        }
        ConstraintMode::AdjacentLevels => {
            for w in levels.windows(2) {
                cross(w[0], w[1], &mut pairs);
            }
        }
        ConstraintMode::LevelPair(a, b) => {
            for r in [*a, *b] {
                if r >= dataset.level_names().len() {
                    return Err(Error::UnknownLevel(format!("rank {r}")));
                }
            }
            if a >= b {
                return Err(Error::InvalidLevelPair(*a, *b));
            }
            for r in [*a, *b] {
                if !by_level.contains_key(&r) {
                    return Err(Error::EmptyLevel(dataset.level_name(r).to_string()));
                }
            }
            cross(*a, *b, &mut pairs);
        }
        ConstraintMode::PerItem(anchor) | ConstraintMode::PerItemLower(anchor) => {
            let a_level = dataset.level_of(anchor).ok_or_else(|| Error::UnknownId(anchor.clone()))?;
            let a_idx = embeddings.index_of(anchor).ok_or_else(|| Error::UnknownId(anchor.clone()))?;
            let with_higher = matches!(mode, ConstraintMode::PerItem(_));
            for (&rank, members) in &by_level {
                if rank < a_level {
                    pairs.extend(members.iter().map(|&i| (i, a_idx)));
                } else if rank > a_level && with_higher {
                    pairs.extend(members.iter().map(|&j| (a_idx, j)));
                }
            }
        }
        ConstraintMode::Explicit => {
            return Err(Error::InvalidArgument(
                "explicit constraint sets are built with ConstraintSet::from_pairs".into(),
            ))
        }
    }
    if pairs.is_empty() {
        return Err(match mode {
            ConstraintMode::PerItem(a) | ConstraintMode::PerItemLower(a) => Error::NoReferenceItems(a),
            _ => Error::EmptyConstraintSet,
        });
    }
    pairs.sort_unstable();
    pairs.dedup();
    Ok(ConstraintSet { pairs, mode })
}

/// Findings of [`validate`]; an empty report means the set is usable as-is.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub out_of_bounds: Vec<(usize, usize)>,
    pub self_loops: Vec<usize>,
    pub duplicates: Vec<(usize, usize)>,
    /// An item on a cycle of the pair graph, i.e. contradictory annotations.
    pub cycle_through: Option<usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.out_of_bounds.is_empty()
            && self.self_loops.is_empty()
            && self.duplicates.is_empty()
            && self.cycle_through.is_none()
    }

    pub fn has_cycle(&self) -> bool {
        self.cycle_through.is_some()
    }
}

pub fn validate(constraints: &ConstraintSet, embeddings: &EmbeddingSet) -> ValidationReport {
    let n = embeddings.len();
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    let mut graph = DiGraphMap::<usize, ()>::new();
    for &(i, j) in constraints.pairs() {
        if i >= n || j >= n {
            report.out_of_bounds.push((i, j));
        }
        if i == j {
            report.self_loops.push(i);
            continue;
        }
        if !seen.insert((i, j)) {
            report.duplicates.push((i, j));
        }
        graph.add_edge(i, j, ());
    }
    if let Err(cycle) = toposort(&graph, None) {
        report.cycle_through = Some(cycle.node_id());
    }
    report
}
