//! WebAssembly bindings for the browser demo.
//!
//! Each export takes plain numbers or a JSON string and returns a JSON
//! string, so the page needs no generated type glue beyond `wasm-bindgen`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use edcone::linalg::{cosine, dot, normalize_in_place};
use edcone::model::{build_constraints, ConstraintMode, EmbeddingSet, LabeledDataset, NormPolicy};
use edcone::rng::GaussianStream;
use edcone::solver::{all_level_pairs, compatibility_score, fit_direction};
use edcone::synth::{generate, level_names, ConeSpec};

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct PairScore {
    pub pair: String,
    pub score: f64,
    pub degenerate: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub id: String,
    pub level: usize,
    /// Coordinate along the fitted direction.
    pub along: f64,
    /// Coordinate along a fixed axis orthogonal to it.
    pub across: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ConeView {
    pub levels: Vec<String>,
    pub points: Vec<ScatterPoint>,
    /// |cos| between the fitted and the generating direction.
    pub recovery: f64,
    pub mean_margin: f64,
    pub scores: Vec<PairScore>,
}

fn pair_scores(emb: &EmbeddingSet, ds: &LabeledDataset) -> Result<Vec<PairScore>, String> {
    all_level_pairs(ds)
        .into_iter()
        .map(|p| {
            let e = compatibility_score(emb, ds, p).map_err(|e| e.to_string())?;
            Ok(PairScore {
                pair: format!("({},{})", ds.level_name(p.0), ds.level_name(p.1)),
                score: e.score,
                degenerate: e.degenerate,
            })
        })
        .collect()
}

fn check_sizes(dim: usize, levels: usize, per_level: usize) -> Result<(), String> {
    if !(2..=256).contains(&dim) || !(2..=8).contains(&levels) || !(1..=500).contains(&per_level) {
        return Err("dim must be 2..=256, levels 2..=8 and items per level 1..=500".into());
    }
    Ok(())
}

fn cone_spec(seed: u64, dim: usize, levels: usize, per_level: usize, spread_scale: f64) -> ConeSpec {
    let spreads = (1..=levels).map(|l| 0.1 * l as f64).collect();
    ConeSpec::new(dim, vec![per_level; levels], spreads, seed, seed.wrapping_add(1)).with_spread_scale(spread_scale)
}

/// A synthetic cone projected onto its fitted direction and one orthogonal axis.
pub fn cone_view(
    seed: u64,
    dim: usize,
    levels: usize,
    per_level: usize,
    spread_scale: f64,
) -> Result<ConeView, String> {
    check_sizes(dim, levels, per_level)?;
    let data = generate(&cone_spec(seed, dim, levels, per_level, spread_scale)).map_err(|e| e.to_string())?;
    let (emb, ds) = (&data.embeddings, &data.dataset);
    let cons = build_constraints(ds, emb, ConstraintMode::AllCrossLevel).map_err(|e| e.to_string())?;
    let dir = fit_direction(emb, &cons).map_err(|e| e.to_string())?;

    // Gram-Schmidt a seeded random axis against w.
    let mut axis = GaussianStream::new(seed ^ 0x5eed).unit_vector(dim);
    let along = dot(&axis, &dir.w);
    axis.iter_mut().zip(&dir.w).for_each(|(a, w)| *a -= along * w);
    normalize_in_place(&mut axis);

    let points = emb
        .iter()
        .map(|(id, v)| ScatterPoint {
            id: id.to_string(),
            level: ds.level_of(id).unwrap_or(0),
            along: dot(v, &dir.w),
            across: dot(v, &axis),
        })
        .collect();
    Ok(ConeView {
        levels: ds.level_names().to_vec(),
        points,
        recovery: cosine(&dir.w, &data.true_direction).abs(),
        mean_margin: dir.mean_margin,
        scores: pair_scores(emb, ds)?,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub spread_scale: f64,
    pub recovery: f64,
    pub scores: Vec<PairScore>,
}

/// Compatibility of every level pair as the noise is scaled up.
pub fn spread_sweep(
    seed: u64,
    dim: usize,
    levels: usize,
    per_level: usize,
    scales: &[f64],
) -> Result<Vec<SweepRow>, String> {
    check_sizes(dim, levels, per_level)?;
    if scales.is_empty() || scales.len() > 50 {
        return Err("give between 1 and 50 spread scales".into());
    }
    scales
        .iter()
        .map(|&s| {
            let view = cone_view(seed, dim, levels, per_level, s)?;
            Ok(SweepRow { spread_scale: s, recovery: view.recovery, scores: view.scores })
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlacedPoint {
    pub x: f64,
    pub y: f64,
    /// Level rank, 0 = easiest.
    pub level: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlacedFit {
    /// Points after projection onto the unit circle.
    pub unit: Vec<[f64; 2]>,
    pub w: [f64; 2],
    pub mean_margin: f64,
    pub pairs: usize,
    pub violated: usize,
    pub scores: Vec<PairScore>,
}

/// Fits the direction for points placed by hand in the plane.
pub fn fit_placed(points: &[PlacedPoint]) -> Result<PlacedFit, String> {
    let levels = points.iter().map(|p| p.level).max().map_or(0, |m| m + 1);
    if levels > 8 {
        return Err("at most 8 levels".into());
    }
    let items: Vec<(String, Vec<f64>)> =
        points.iter().enumerate().map(|(i, p)| (format!("p{i}"), vec![p.x, p.y])).collect();
    let emb = EmbeddingSet::new(2, items, NormPolicy::Renormalize).map_err(|e| e.to_string())?;
    let labels = points.iter().enumerate().map(|(i, p)| (format!("p{i}"), p.level)).collect();
    let ds = LabeledDataset::new(labels, level_names(levels)).map_err(|e| e.to_string())?;
    let cons = build_constraints(&ds, &emb, ConstraintMode::AllCrossLevel).map_err(|e| e.to_string())?;
    let dir = fit_direction(&emb, &cons).map_err(|e| e.to_string())?;
    Ok(PlacedFit {
        unit: emb.iter().map(|(_, v)| [v[0], v[1]]).collect(),
        w: [dir.w[0], dir.w[1]],
        mean_margin: dir.mean_margin,
        pairs: dir.num_constraints(),
        violated: dir.margins.iter().filter(|m| **m < 0.0).count(),
        scores: pair_scores(&emb, &ds)?,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = coneView)]
pub fn cone_view_js(seed: u32, dim: u32, levels: u32, per_level: u32, spread_scale: f64) -> Result<String, JsError> {
    to_js(cone_view(seed.into(), dim as usize, levels as usize, per_level as usize, spread_scale))
}

#[wasm_bindgen(js_name = spreadSweep)]
pub fn spread_sweep_js(seed: u32, dim: u32, levels: u32, per_level: u32, scales: Vec<f64>) -> Result<String, JsError> {
    to_js(spread_sweep(seed.into(), dim as usize, levels as usize, per_level as usize, &scales))
}

/// `points_json` is an array of `{x, y, level}` objects.
#[wasm_bindgen(js_name = fitPlaced)]
pub fn fit_placed_js(points_json: &str) -> Result<String, JsError> {
    let points: Vec<PlacedPoint> = serde_json::from_str(points_json).map_err(|e| JsError::new(&e.to_string()))?;
    to_js(fit_placed(&points))
}
