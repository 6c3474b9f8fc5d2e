//! Subcommand bodies. Each returns the text to print; warnings go to stderr.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use edcone::baseline::{transfer_experiment, TransferConfig};
use edcone::io::{self, EmbeddingFormat, Joined, OnMissing, RawEmbeddingFile};
use edcone::model::{build_constraints, validate, ConstraintMode, LabeledDataset, NormPolicy};
use edcone::rng::seeded;
use edcone::solver::{self, all_level_pairs, compatibility_report, fit_direction, AnchorScope};
use edcone::stats::{permutation_pvalue, rank_models};
use edcone::synth::{generate, generate_graded, ConeSpec};
use edcone::Error;

use crate::output::{fixed, render_all, Table};
use crate::{CliError, Ctx};

pub struct DataSpec {
    pub embeddings: PathBuf,
    pub format: EmbeddingFormat,
    pub policy: NormPolicy,
    pub labels: PathBuf,
    pub level_order: PathBuf,
    pub on_missing: OnMissing,
}

fn warn(msg: impl AsRef<str>) {
    eprintln!("edcone: warning: {}", msg.as_ref());
}

fn report_join(joined: &Joined, source: &str) {
    if let Some(first) = joined.missing_vectors.first() {
        warn(format!(
            "{source}: dropped {} labeled item(s) with no embedding (first: `{first}`)",
            joined.missing_vectors.len()
        ));
    }
}

fn load_embeddings(
    ctx: &Ctx,
    path: &Path,
    format: EmbeddingFormat,
    policy: NormPolicy,
) -> Result<edcone::EmbeddingSet, Error> {
    let emb = io::read_embeddings(&RawEmbeddingFile::new(path, format), policy)?;
    ctx.log(format!("read {} vectors of dimension {} from {}", emb.len(), emb.dim(), path.display()));
    Ok(emb)
}

fn load(ctx: &Ctx, spec: &DataSpec) -> Result<Joined, CliError> {
    let emb = load_embeddings(ctx, &spec.embeddings, spec.format, spec.policy)?;
    let labels = io::read_labels(&spec.labels, &spec.level_order)?;
    ctx.log(format!("read {} labels over {} levels", labels.len(), labels.level_names().len()));
    let joined = io::join(&emb, &labels, spec.on_missing)?;
    report_join(&joined, &spec.embeddings.display().to_string());
    ctx.log(format!("{} items have both a vector and a label", joined.embeddings.len()));
    Ok(joined)
}

fn rank_of(dataset: &LabeledDataset, name: &str) -> Result<usize, CliError> {
    dataset.rank_of_level(name).ok_or_else(|| Error::UnknownLevel(name.to_string()).into())
}

/// Parses `A:B` into level ranks.
fn parse_pair(dataset: &LabeledDataset, text: &str) -> Result<(usize, usize), CliError> {
    let (a, b) =
        text.split_once(':').ok_or_else(|| CliError::Usage(format!("level pair must look like A:B, got `{text}`")))?;
    let pair = (rank_of(dataset, a.trim())?, rank_of(dataset, b.trim())?);
    if pair.0 >= pair.1 {
        return Err(CliError::Data(format!("level pair {a}:{b}: `{a}` must be strictly easier than `{b}`")));
    }
    Ok(pair)
}

fn parse_pairs(dataset: &LabeledDataset, text: &str) -> Result<Vec<(usize, usize)>, CliError> {
    if text.trim() == "all" {
        let pairs = all_level_pairs(dataset);
        if pairs.is_empty() {
            return Err(Error::SingleLevel.into());
        }
        return Ok(pairs);
    }
    let pairs: Vec<_> =
        text.split(',').filter(|s| !s.trim().is_empty()).map(|p| parse_pair(dataset, p)).collect::<Result<_, _>>()?;
    if pairs.is_empty() {
        return Err(CliError::Usage("no level pairs given".into()));
    }
    Ok(pairs)
}

fn pair_label(dataset: &LabeledDataset, (a, b): (usize, usize)) -> String {
    format!("({},{})", dataset.level_name(a), dataset.level_name(b))
}

pub fn fit(ctx: &Ctx, spec: &DataSpec, mode: &str, bins: usize) -> Result<String, CliError> {
    let data = load(ctx, spec)?;
    let (emb, ds) = (&data.embeddings, &data.dataset);
    let constraint_mode = match mode {
        "all" => ConstraintMode::AllCrossLevel,
        "adjacent" => ConstraintMode::AdjacentLevels,
        m if m.starts_with("pair:") => {
            let (a, b) = parse_pair(ds, &m["pair:".len()..])?;
            ConstraintMode::LevelPair(a, b)
        }
        m if m.starts_with("item:") => ConstraintMode::PerItem(m["item:".len()..].to_string()),
        m => return Err(CliError::Usage(format!("unknown mode `{m}`; expected all, adjacent, pair:A:B or item:ID"))),
    };
    let constraints = build_constraints(ds, emb, constraint_mode)?;
    ctx.log(format!("built {} order pairs", constraints.len()));
    let report = validate(&constraints, emb);
    if let Some(i) = report.cycle_through {
        warn(format!("order pairs contain a cycle through `{}`; annotations contradict each other", emb.id(i)));
    }
    let dir = fit_direction(emb, &constraints)?;

    let n = &ctx.numbers;
    let mut summary = Table::new(["field", "value"]).titled("Fit");
    summary.push(["mode".to_string(), mode.to_string()]);
    summary.push(["items".to_string(), emb.len().to_string()]);
    summary.push(["levels".to_string(), ds.present_levels().len().to_string()]);
    summary.push(["dim".to_string(), emb.dim().to_string()]);
    summary.push(["pairs".to_string(), dir.num_constraints().to_string()]);
    summary.push(["objective".to_string(), n.fmt(dir.objective)]);
    summary.push(["mean_margin".to_string(), n.fmt(dir.mean_margin)]);
    let violated = dir.margins.iter().filter(|m| **m < 0.0).count();
    summary.push(["violated".to_string(), violated.to_string()]);

    let mut hist = Table::new(["from", "to", "count"]).titled("Margin histogram");
    for (lo, hi, count) in histogram(&dir.margins, bins.max(1)) {
        hist.push([n.fmt(lo), n.fmt(hi), count.to_string()]);
    }

    let mut direction = Table::new(["coord", "w", "e"]).titled("Direction (w: towards harder, e: simplest point)");
    for (d, (w, e)) in dir.w.iter().zip(dir.simplest_point()).enumerate() {
        direction.push([d.to_string(), fixed(*w, 8), fixed(e, 8)]);
    }
    Ok(render_all(&[summary, hist, direction], ctx.format))
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return vec![(lo, hi, values.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| {
            let to = if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 };
            (lo + width * b as f64, to, c)
        })
        .collect()
}

fn score_table(ctx: &Ctx, report: &edcone::CompatibilityReport, ds: &LabeledDataset) -> Table {
    let mut t = Table::new(["pair", "easier", "harder", "score", "k", "degenerate"])
        .titled(format!("Compatibility: {} (dim {})", report.model_name, report.dim));
    for e in &report.entries {
        t.push([
            pair_label(ds, e.level_pair),
            ds.level_name(e.level_pair.0).to_string(),
            ds.level_name(e.level_pair.1).to_string(),
            ctx.numbers.fmt(e.score),
            e.k.to_string(),
            e.degenerate.to_string(),
        ]);
    }
    t
}

fn warn_degenerate(report: &edcone::CompatibilityReport, ds: &LabeledDataset) {
    for e in report.entries.iter().filter(|e| e.degenerate) {
        warn(format!(
            "{}: level centroids of {} coincide; score reported as 0",
            report.model_name,
            pair_label(ds, e.level_pair)
        ));
    }
}

pub fn score(ctx: &Ctx, spec: &DataSpec, name: &str, pairs: &str) -> Result<String, CliError> {
    let data = load(ctx, spec)?;
    let pairs = parse_pairs(&data.dataset, pairs)?;
    let report = compatibility_report(name, &data.embeddings, &data.dataset, &pairs)?;
    warn_degenerate(&report, &data.dataset);
    Ok(render_all(&[score_table(ctx, &report, &data.dataset)], ctx.format))
}

pub struct RankSpec {
    pub models: Vec<(String, PathBuf)>,
    pub format: EmbeddingFormat,
    pub policy: NormPolicy,
    pub labels: PathBuf,
    pub level_order: PathBuf,
    pub on_missing: OnMissing,
}

pub fn rank(ctx: &Ctx, spec: &RankSpec, pairs: &str) -> Result<String, CliError> {
    let mut names = HashSet::new();
    for (name, _) in &spec.models {
        if !names.insert(name.as_str()) {
            return Err(CliError::Usage(format!("model name `{name}` given twice")));
        }
    }
    let labels = io::read_labels(&spec.labels, &spec.level_order)?;
    let pairs = parse_pairs(&labels, pairs)?;
    let reports = spec
        .models
        .par_iter()
        .map(|(name, path)| {
            let emb = load_embeddings(ctx, path, spec.format, spec.policy)?;
            let joined = io::join(&emb, &labels, spec.on_missing)?;
            report_join(&joined, name);
            compatibility_report(name, &joined.embeddings, &joined.dataset, &pairs)
        })
        .collect::<Result<Vec<_>, Error>>()?;
    for r in &reports {
        warn_degenerate(r, &labels);
    }

    let mut headers = vec!["Model".to_string(), "Dim".to_string()];
    headers.extend(pairs.iter().map(|&p| pair_label(&labels, p)));
    let mut matrix = Table::new(headers).titled("Compatibility by level pair");
    for r in &reports {
        let mut row = vec![r.model_name.clone(), r.dim.to_string()];
        row.extend(pairs.iter().map(|&p| ctx.numbers.fmt(r.entry(p).expect("pair scored").score)));
        matrix.push(row);
    }

    let mut ranking = Table::new(["pair", "rank", "model", "dim", "score"]).titled("Rankings (best first)");
    for &p in &pairs {
        for (n, m) in rank_models(&reports, p)?.iter().enumerate() {
            ranking.push([
                pair_label(&labels, p),
                (n + 1).to_string(),
                m.model_name.clone(),
                m.dim.to_string(),
                ctx.numbers.fmt(m.score),
            ]);
        }
    }
    Ok(render_all(&[matrix, ranking], ctx.format))
}

pub enum Anchors {
    Level { level: String, sample: Option<usize>, seed: u64 },
    Single(String),
}

pub fn item_consistency(
    ctx: &Ctx,
    spec: &DataSpec,
    anchors: &Anchors,
    scope: AnchorScope,
    correlate: Option<(PathBuf, usize, u64)>,
) -> Result<String, CliError> {
    let data = load(ctx, spec)?;
    let (emb, ds) = (&data.embeddings, &data.dataset);
    let ids: Vec<String> = match anchors {
        Anchors::Single(id) => vec![id.clone()],
        Anchors::Level { level, sample, seed } => {
            let rank = rank_of(ds, level)?;
            let mut ids: Vec<String> = ds.ids_at(rank).into_iter().map(String::from).collect();
            if ids.is_empty() {
                return Err(Error::EmptyLevel(level.clone()).into());
            }
            if let Some(k) = sample {
                ids.shuffle(&mut seeded(*seed));
                ids.truncate(*k);
                ids.sort();
            }
            ids
        }
    };
    ctx.log(format!("scoring {} anchor(s)", ids.len()));
    let scores =
        ids.par_iter().map(|id| solver::item_consistency(emb, ds, id, scope)).collect::<Result<Vec<f64>, Error>>()?;

    let mut table = Table::new(["id", "level", "consistency"]).titled("Item consistency");
    for (id, s) in ids.iter().zip(&scores) {
        let level = ds.level_of(id).map(|r| ds.level_name(r)).unwrap_or("");
        table.push([id.clone(), level.to_string(), ctx.numbers.fmt(*s)]);
    }
    let mut tables = vec![table];
    if let Some((path, n_perm, seed)) = correlate {
        let values = read_values(&path)?;
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut missing = Vec::new();
        for (id, s) in ids.iter().zip(&scores) {
            match values.get(id) {
                Some(v) => {
                    a.push(*s);
                    b.push(*v);
                }
                None => missing.push(id.as_str()),
            }
        }
        if let Some(first) = missing.first() {
            warn(format!("{} anchor(s) have no value in {} (first: `{first}`)", missing.len(), path.display()));
        }
        tables.push(correlation_table(ctx, &a, &b, n_perm, seed)?);
    }
    Ok(render_all(&tables, ctx.format))
}

fn correlation_table(ctx: &Ctx, a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<Table, CliError> {
    let r = permutation_pvalue(a, b, n_perm, seed)?;
    if r.low_resolution {
        warn(format!("only {} samples: the permutation p-value is coarse", r.n));
    }
    let mut t = Table::new(["n", "rho", "p_value", "n_perm", "seed"]).titled("Spearman correlation");
    t.push([r.n.to_string(), ctx.numbers.fmt(r.rho), ctx.numbers.fmt(r.p_value), n_perm.to_string(), seed.to_string()]);
    Ok(t)
}

/// Reads `id<TAB>...<TAB>value` lines. A first line whose last field is not a
/// number is taken as a header; blank and `#` lines are skipped.
pub fn read_values(path: &Path) -> Result<HashMap<String, f64>, CliError> {
    let file =
        File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut out = HashMap::new();
    let mut first = true;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let is_first = std::mem::replace(&mut first, false);
        if fields.len() < 2 {
            return Err(Error::Parse { line: n + 1, msg: "expected `id<TAB>value`".into() }.into());
        }
        let value = match fields[fields.len() - 1].trim().parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ if is_first => continue,
            _ => {
                return Err(Error::Parse {
                    line: n + 1,
                    msg: format!("`{}` is not a finite number", fields[fields.len() - 1]),
                }
                .into())
            }
        };
        let id = fields[0].to_string();
        if out.insert(id.clone(), value).is_some() {
            return Err(Error::DuplicateId(id).into());
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyFile(path.display().to_string()).into());
    }
    Ok(out)
}

/// Ordered, de-duplicated ids of a values file, for stable output.
fn read_value_ids(path: &Path) -> Result<Vec<String>, CliError> {
    let mut ids: Vec<String> = read_values(path)?.into_keys().collect();
    ids.sort();
    Ok(ids)
}

pub fn correlate(ctx: &Ctx, file_a: &Path, file_b: &Path, n_perm: usize, seed: u64) -> Result<String, CliError> {
    let a = read_values(file_a)?;
    let b = read_values(file_b)?;
    let ids: Vec<String> = read_value_ids(file_a)?.into_iter().filter(|id| b.contains_key(id)).collect();
    let dropped = a.len() + b.len() - 2 * ids.len();
    if dropped > 0 {
        warn(format!("{dropped} id(s) appear in only one file and were ignored"));
    }
    let xs: Vec<f64> = ids.iter().map(|id| a[id]).collect();
    let ys: Vec<f64> = ids.iter().map(|id| b[id]).collect();
    Ok(render_all(&[correlation_table(ctx, &xs, &ys, n_perm, seed)?], ctx.format))
}

pub struct BaselineSpec {
    pub train_pair: String,
    pub test_pair: String,
    pub grid: Vec<f64>,
    pub epochs: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

pub fn baseline(ctx: &Ctx, data_spec: &DataSpec, spec: &BaselineSpec) -> Result<String, CliError> {
    let data = load(ctx, data_spec)?;
    let ds = &data.dataset;
    let train = parse_pair(ds, &spec.train_pair)?;
    let test = parse_pair(ds, &spec.test_pair)?;
    if train == test {
        return Err(CliError::Usage("train and test pairs must differ".into()));
    }
    let config =
        TransferConfig { grid: &spec.grid, epochs: spec.epochs, val_fraction: spec.val_fraction, seed: spec.seed };
    let out = transfer_experiment(&data.embeddings, ds, train, test, config)?;
    let score = edcone::compatibility_score(&data.embeddings, ds, train)?;
    let n = &ctx.numbers;

    let mut summary = Table::new(["field", "value"]).titled("Transfer baseline");
    summary.push(["train_pair".to_string(), pair_label(ds, train)]);
    summary.push(["test_pair".to_string(), pair_label(ds, test)]);
    summary.push(["n_train".to_string(), out.n_train.to_string()]);
    summary.push(["n_val".to_string(), out.n_val.to_string()]);
    summary.push(["n_test".to_string(), out.n_test.to_string()]);
    summary.push(["c_selected".to_string(), n.fmt(out.outcome.model.c_used)]);
    summary.push(["val_accuracy".to_string(), n.fmt(out.outcome.model.val_accuracy.unwrap_or(f64::NAN))]);
    summary.push(["test_accuracy".to_string(), n.fmt(out.outcome.test_accuracy)]);
    summary.push(["train_pair_score".to_string(), n.fmt(score.score)]);

    let mut grid = Table::new(["C", "val_accuracy"]).titled("Validation");
    for (c, acc) in &out.outcome.val_scores {
        grid.push([n.fmt(*c), n.fmt(*acc)]);
    }
    Ok(render_all(&[summary, grid], ctx.format))
}

pub struct SynthSpec {
    pub dim: usize,
    pub levels: usize,
    pub per_level: usize,
    pub spreads: Option<Vec<f64>>,
    pub offsets: Option<Vec<f64>>,
    pub spread_scale: f64,
    pub seed: u64,
    pub graded: bool,
    pub out_dir: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))).into())
}

pub fn synth(ctx: &Ctx, spec: &SynthSpec) -> Result<String, CliError> {
    let spreads = spec.spreads.clone().unwrap_or_else(|| (1..=spec.levels).map(|l| 0.1 * l as f64).collect());
    let mut cone =
        ConeSpec::new(spec.dim, vec![spec.per_level; spec.levels], spreads, spec.seed, spec.seed.wrapping_add(1))
            .with_spread_scale(spec.spread_scale);
    if let Some(offsets) = &spec.offsets {
        cone.offsets = offsets.clone();
    }
    let data = if spec.graded { generate_graded(&cone)? } else { generate(&cone)? };
    std::fs::create_dir_all(&spec.out_dir)?;
    let path = |name: &str| spec.out_dir.join(name);

    let mut out = create(&path("embeddings.jsonl"))?;
    writeln!(out, "# synthetic dim={} levels={} seed={}", spec.dim, spec.levels, spec.seed)?;
    io::write_embeddings_jsonl(&data.embeddings, &mut out)?;
    out.flush()?;
    let mut out = create(&path("labels.tsv"))?;
    io::write_labels(&data.dataset, &mut out)?;
    out.flush()?;
    let mut out = create(&path("levels.txt"))?;
    io::write_level_order(&data.dataset, &mut out)?;
    out.flush()?;
    let mut out = create(&path("direction.tsv"))?;
    for (d, v) in data.true_direction.iter().enumerate() {
        writeln!(out, "{d}\t{v:?}")?;
    }
    out.flush()?;
    let mut out = create(&path("latent.tsv"))?;
    writeln!(out, "id\tlatent")?;
    for (id, p) in data.embeddings.ids().iter().zip(&data.latent) {
        writeln!(out, "{id}\t{p:?}")?;
    }
    out.flush()?;
    ctx.log(format!("wrote {} items to {}", data.embeddings.len(), spec.out_dir.display()));

    let mut t = Table::new(["field", "value"]).titled("Synthetic dataset");
    t.push(["items".to_string(), data.embeddings.len().to_string()]);
    t.push(["dim".to_string(), spec.dim.to_string()]);
    t.push(["levels".to_string(), spec.levels.to_string()]);
    t.push(["spreads".to_string(), cone.spreads.iter().map(|s| ctx.numbers.fmt(*s)).collect::<Vec<_>>().join(",")]);
    t.push(["offsets".to_string(), cone.offsets.iter().map(|s| ctx.numbers.fmt(*s)).collect::<Vec<_>>().join(",")]);
    t.push(["graded".to_string(), spec.graded.to_string()]);
    t.push(["seed".to_string(), spec.seed.to_string()]);
    Ok(render_all(&[t], ctx.format))
}
