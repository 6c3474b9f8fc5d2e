//! Synthetic cone-shaped datasets with a known difficulty direction.
//!
//! A level-`ℓ` item is `normalize(offset_ℓ · d + spread_ℓ · z)` where `d` is the
//! true direction and `z` is isotropic standard Gaussian noise. Offsets grow
//! with difficulty and so do spreads, so easy items crowd around `−d` while hard
//! items scatter further out.
//!
//! Random streams (see [`crate::rng`]):
//! - the true direction is `D` Gaussians from `direction_seed`, normalized;
//! - the noise stream is seeded with `noise_seed` and consumed item by item in
//!   level order, `D` Gaussians per item;
//! - [`generate_graded`] additionally draws one uniform per item, in the same
//!   order, from a generator seeded with `noise_seed ^ GRADE_STREAM`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{norm, normalize_in_place};
use crate::model::{EmbeddingSet, LabeledDataset, NormPolicy};
use crate::rng::{seeded, GaussianStream};

const GRADE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSpec {
    pub dim: usize,
    /// Items per level, easiest level first.
    pub per_level: Vec<usize>,
    pub true_direction: Vec<f64>,
    /// Position of each level's center along the true direction.
    pub offsets: Vec<f64>,
    /// Standard deviation of the per-coordinate noise at each level.
    pub spreads: Vec<f64>,
    pub noise_seed: u64,
}

impl ConeSpec {
    /// Offsets evenly spaced on `[-1, 1]` and a direction drawn from `direction_seed`.
    pub fn new(dim: usize, per_level: Vec<usize>, spreads: Vec<f64>, direction_seed: u64, noise_seed: u64) -> Self {
        let levels = per_level.len();
        let offsets = even_offsets(levels);
        let true_direction = if dim > 0 { GaussianStream::new(direction_seed).unit_vector(dim) } else { Vec::new() };
        Self { dim, per_level, true_direction, offsets, spreads, noise_seed }
    }

    /// D = 16, four levels of 50 items, spreads 0.1, 0.2, 0.3, 0.4.
    pub fn standard(seed: u64) -> Self {
        Self::new(16, vec![50; 4], vec![0.1, 0.2, 0.3, 0.4], seed, seed.wrapping_add(1))
    }

    pub fn levels(&self) -> usize {
        self.per_level.len()
    }

    pub fn with_spread_scale(&self, factor: f64) -> Self {
        let mut spec = self.clone();
        spec.spreads.iter_mut().for_each(|s| *s *= factor);
        spec
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        let levels = self.levels();
        if self.dim == 0 {
            return bad("dimension must be at least 1".into());
        }
        if levels < 2 {
            return bad("at least two levels are required".into());
        }
        if self.per_level.contains(&0) {
            return bad("every level needs at least one item".into());
        }
        if self.offsets.len() != levels || self.spreads.len() != levels {
            return bad(format!(
                "{levels} levels but {} offsets and {} spreads",
                self.offsets.len(),
                self.spreads.len()
            ));
        }
        if self.true_direction.len() != self.dim || (norm(&self.true_direction) - 1.0).abs() > 1e-9 {
            return bad("true direction must be a unit vector of the given dimension".into());
        }
        if self.offsets.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("offsets must be strictly increasing".into());
        }
        if self.spreads.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("spreads must be finite and non-negative".into());
        }
        if self.spreads.windows(2).any(|w| w[0] > w[1]) {
            return bad("spreads must be non-decreasing".into());
        }
        Ok(())
    }
}

fn even_offsets(levels: usize) -> Vec<f64> {
    match levels {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..levels).map(|l| -1.0 + 2.0 * l as f64 / (levels - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub embeddings: EmbeddingSet,
    pub dataset: LabeledDataset,
    pub true_direction: Vec<f64>,
    /// Hidden difficulty of each item, in embedding order. Equals the level
    /// rank for [`generate`]; continuous for [`generate_graded`].
    pub latent: Vec<f64>,
}

pub fn level_names(levels: usize) -> Vec<String> {
    (1..=levels).map(|l| format!("L{l}")).collect()
}

/// Generates items with level-exact offsets and spreads.
pub fn generate(spec: &ConeSpec) -> Result<SyntheticData> {
    build(spec, |level, _| (spec.offsets[level], spec.spreads[level], level as f64))
}

/// Like [`generate`], but each item also gets a hidden position `p` drawn
/// uniformly from `[ℓ − 0.5, ℓ + 0.5)` for its level `ℓ`; offset and spread are
/// piecewise-linear in `p` through the per-level values. The level label only
/// records `ℓ`, so `p` is a finer difficulty grade that the labels hide.
pub fn generate_graded(spec: &ConeSpec) -> Result<SyntheticData> {
    let mut grades = seeded(spec.noise_seed ^ GRADE_STREAM);
    build(spec, |level, _| {
        let p = level as f64 - 0.5 + grades.gen::<f64>();
        let offset = interpolate(&spec.offsets, p);
        let spread = interpolate(&spec.spreads, p).max(0.0);
        (offset, spread, p)
    })
}

/// Linear interpolation through `(k, knots[k])`, extended linearly past both ends.
fn interpolate(knots: &[f64], p: f64) -> f64 {
    let last = knots.len() - 1;
    let seg = (p.floor().max(0.0) as usize).min(last - 1);
    let t = p - seg as f64;
    knots[seg] + t * (knots[seg + 1] - knots[seg])
}

fn build(spec: &ConeSpec, mut place: impl FnMut(usize, usize) -> (f64, f64, f64)) -> Result<SyntheticData> {
    spec.validate()?;
    let mut noise = GaussianStream::new(spec.noise_seed);
    let d = &spec.true_direction;
    let total: usize = spec.per_level.iter().sum();
    let mut items = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut latent = Vec::with_capacity(total);
    for (level, &count) in spec.per_level.iter().enumerate() {
        for n in 0..count {
            let (offset, spread, hidden) = place(level, n);
            let z = noise.gaussian_vec(spec.dim);
            let mut v: Vec<f64> = d.iter().zip(&z).map(|(dd, zz)| offset * dd + spread * zz).collect();
            let id = format!("item{:05}", items.len());
            if !normalize_in_place(&mut v) {
                return Err(Error::InvalidSpec(format!("{id} has a zero vector; offset and spread are both 0")));
            }
            labels.push((id.clone(), level));
            items.push((id, v));
            latent.push(hidden);
        }
    }
    Ok(SyntheticData {
        embeddings: EmbeddingSet::new(spec.dim, items, NormPolicy::Renormalize)?,
        dataset: LabeledDataset::new(labels, level_names(spec.levels()))?,
        true_direction: d.clone(),
        latent,
    })
}
