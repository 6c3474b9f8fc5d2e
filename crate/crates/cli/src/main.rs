mod commands;
mod output;

use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use edcone::io::{EmbeddingFormat, OnMissing};
use edcone::model::NormPolicy;
use edcone::AnchorScope;
use output::{Format, Numbers};

#[derive(Parser, Debug)]
#[command(name = "edcone", version, about = "Measure how well embedding spaces order items by annotated difficulty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the difficulty direction for a labeled embedding set.
    Fit(FitArgs),
    /// Compatibility score for each level pair.
    Score(ScoreArgs),
    /// Compare several embedding models on the same labels.
    Rank(RankArgs),
    /// Per-item annotation consistency for sampled anchors.
    ItemConsistency(ItemArgs),
    /// Spearman correlation with a permutation p-value between two value files.
    Correlate(CorrelateArgs),
    /// Linear SVM transfer baseline between two level pairs.
    Baseline(BaselineArgs),
    /// Write a synthetic cone-shaped dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmbFormatArg {
    Jsonl,
    Word2vec,
}

impl From<EmbFormatArg> for EmbeddingFormat {
    fn from(f: EmbFormatArg) -> Self {
        match f {
            EmbFormatArg::Jsonl => EmbeddingFormat::JsonLines,
            EmbFormatArg::Word2vec => EmbeddingFormat::Word2VecText,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MissingArg {
    Error,
    Drop,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReferenceArg {
    /// Compare against easier levels only.
    Lower,
    /// Compare against easier and harder levels.
    Both,
}

#[derive(Args, Debug)]
struct LabelArgs {
    /// Labels file: `id<TAB>level` per line.
    #[arg(long)]
    labels: PathBuf,
    /// Level names, one per line, easiest first.
    #[arg(long)]
    level_order: PathBuf,
    /// What to do with labeled items that have no embedding.
    #[arg(long, value_enum, default_value = "drop")]
    on_missing: MissingArg,
}

#[derive(Args, Debug)]
struct EmbeddingArgs {
    #[arg(long, value_enum, default_value = "jsonl")]
    emb_format: EmbFormatArg,
    /// Reject vectors that are not unit length instead of rescaling them.
    #[arg(long)]
    assert_unit: bool,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Embedding file.
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[command(flatten)]
    labels: LabelArgs,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output style; defaults to `table` on a terminal and `tsv` otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Print scalars with this many decimals instead of 6 significant digits.
    #[arg(long)]
    precision: Option<usize>,
    /// Write data here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Log one line per stage to standard error.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `all`, `adjacent`, `pair:<A>:<B>` or `item:<ID>`.
    #[arg(long, default_value = "all")]
    mode: String,
    /// Number of margin histogram bins.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `all`, or comma-separated `A:B` level pairs.
    #[arg(long, default_value = "all")]
    pairs: String,
    /// Model name for the report; defaults to the embedding file stem.
    #[arg(long)]
    model_name: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RankArgs {
    /// `name=path` of an embedding file; repeat once per model.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[command(flatten)]
    emb: EmbeddingArgs,
    #[command(flatten)]
    labels: LabelArgs,
    #[arg(long, default_value = "all")]
    pairs: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("anchor").required(true).args(["anchor_level", "anchor_id"])))]
struct ItemArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Score items of this level.
    #[arg(long)]
    anchor_level: Option<String>,
    /// Score a single item.
    #[arg(long)]
    anchor_id: Option<String>,
    /// Sample this many anchors from the level.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "lower")]
    reference: ReferenceArg,
    /// `id<TAB>value` file to correlate the scores with.
    #[arg(long)]
    correlate_with: Option<PathBuf>,
    #[arg(long, default_value_t = 9999)]
    n_perm: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    /// Tab-separated file; first column is the id, last column the value.
    file_a: PathBuf,
    file_b: PathBuf,
    #[arg(long, default_value_t = 9999)]
    n_perm: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Training level pair `A:B`.
    #[arg(long)]
    train_pair: String,
    /// Test level pair `A:B`.
    #[arg(long)]
    test_pair: String,
    /// Candidate values of C.
    #[arg(long, value_delimiter = ',', default_value = "0.1,1.0,10.0")]
    grid: Vec<f64>,
    #[arg(long, default_value_t = edcone::baseline::DEFAULT_EPOCHS)]
    epochs: usize,
    #[arg(long, default_value_t = edcone::baseline::DEFAULT_VAL_FRACTION)]
    val_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = 50)]
    per_level: usize,
    /// Noise level per difficulty level, non-decreasing; 0.1, 0.2, ... by default.
    #[arg(long, value_delimiter = ',')]
    spreads: Option<Vec<f64>>,
    /// Level centers along the direction; evenly spaced on [-1, 1] by default.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    offsets: Option<Vec<f64>>,
    /// Multiply every spread by this factor.
    #[arg(long, default_value_t = 1.0)]
    spread_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Give each item a hidden continuous grade within its level.
    #[arg(long)]
    graded: bool,
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

pub enum CliError {
    Usage(String),
    /// Input is well-formed but unusable for the request.
    Data(String),
    Core(edcone::Error),
}

impl From<edcone::Error> for CliError {
    fn from(e: edcone::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use edcone::Error::*;
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 6,
            CliError::Core(e) => match e {
                Io(_) | EmptyFile(_) => 3,
                Parse { .. }
                | DimMismatch { .. }
                | ZeroVector(_)
                | NotUnitNorm { .. }
                | DuplicateId(_)
                | DuplicateLevel(_)
                | EmptyId
                | UnknownLevel(_) => 4,
                DegenerateDirection { .. } => 5,
                UnknownId(_)
                | SingleLevel
                | EmptyConstraintSet
                | EmptyLevel(_)
                | InvalidLevelPair(..)
                | NoReferenceItems(_)
                | MissingPair(..)
                | IndexOutOfBounds { .. }
                | DimensionMismatch { .. } => 6,
                LengthMismatch(..) | ConstantInput | TooFewSamples { .. } | SingleClass | OverlappingSplits(_) => 6,
                InvalidArgument(_) | InvalidSpec(_) => 2,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

/// Resolved output settings passed to every command.
pub struct Ctx {
    pub format: Format,
    pub numbers: Numbers,
    pub verbose: bool,
}

impl Ctx {
    pub fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("[edcone] {}", msg.as_ref());
        }
    }
}

fn emit(output: &OutputArgs, body: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Core(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn ctx_for(output: &OutputArgs) -> Ctx {
    let format = output.format.unwrap_or_else(|| {
        if output.out.is_none() && std::io::stdout().is_terminal() {
            Format::Table
        } else {
            Format::Tsv
        }
    });
    Ctx { format, numbers: Numbers { decimals: output.precision }, verbose: output.verbose }
}

fn require_files(paths: &[&PathBuf]) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::Core(
                std::io::Error::new(std::io::ErrorKind::NotFound, format!("{}: no such file", p.display())).into(),
            ));
        }
    }
    Ok(())
}

impl DataArgs {
    fn files(&self) -> Vec<&PathBuf> {
        vec![&self.embeddings, &self.labels.labels, &self.labels.level_order]
    }

    fn spec(&self) -> commands::DataSpec {
        commands::DataSpec {
            embeddings: self.embeddings.clone(),
            format: self.emb.emb_format.into(),
            policy: self.emb.policy(),
            labels: self.labels.labels.clone(),
            level_order: self.labels.level_order.clone(),
            on_missing: self.labels.on_missing(),
        }
    }
}

impl EmbeddingArgs {
    fn policy(&self) -> NormPolicy {
        if self.assert_unit {
            NormPolicy::AssertUnit
        } else {
            NormPolicy::Renormalize
        }
    }
}

impl LabelArgs {
    fn on_missing(&self) -> OnMissing {
        match self.on_missing {
            MissingArg::Error => OnMissing::Error,
            MissingArg::Drop => OnMissing::DropWithWarning,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(a) => {
            require_files(&a.data.files())?;
            let ctx = ctx_for(&a.output);
            let body = commands::fit(&ctx, &a.data.spec(), &a.mode, a.bins)?;
            emit(&a.output, &body)
        }
        Command::Score(a) => {
            require_files(&a.data.files())?;
            let ctx = ctx_for(&a.output);
            let name = a.model_name.clone().unwrap_or_else(|| {
                a.data.embeddings.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned())
            });
            let body = commands::score(&ctx, &a.data.spec(), &name, &a.pairs)?;
            emit(&a.output, &body)
        }
        Command::Rank(a) => {
            let mut models = Vec::new();
            for m in &a.models {
                let (name, path) = m
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("--model expects name=path, got `{m}`")))?;
                models.push((name.to_string(), PathBuf::from(path)));
            }
            let mut files: Vec<&PathBuf> = models.iter().map(|(_, p)| p).collect();
            files.extend([&a.labels.labels, &a.labels.level_order]);
            require_files(&files)?;
            let ctx = ctx_for(&a.output);
            let spec = commands::RankSpec {
                models,
                format: a.emb.emb_format.into(),
                policy: a.emb.policy(),
                labels: a.labels.labels.clone(),
                level_order: a.labels.level_order.clone(),
                on_missing: a.labels.on_missing(),
            };
            let body = commands::rank(&ctx, &spec, &a.pairs)?;
            emit(&a.output, &body)
        }
        Command::ItemConsistency(a) => {
            let mut files = a.data.files();
            if let Some(p) = &a.correlate_with {
                files.push(p);
            }
            require_files(&files)?;
            let ctx = ctx_for(&a.output);
            let anchors = match (&a.anchor_level, &a.anchor_id) {
                (Some(level), _) => commands::Anchors::Level { level: level.clone(), sample: a.sample, seed: a.seed },
                (None, Some(id)) => commands::Anchors::Single(id.clone()),
                (None, None) => return Err(CliError::Usage("one of --anchor-level, --anchor-id is required".into())),
            };
            let scope = match a.reference {
                ReferenceArg::Lower => AnchorScope::Lower,
                ReferenceArg::Both => AnchorScope::Both,
            };
            let correlate = a.correlate_with.as_ref().map(|p| (p.clone(), a.n_perm, a.seed));
            let body = commands::item_consistency(&ctx, &a.data.spec(), &anchors, scope, correlate)?;
            emit(&a.output, &body)
        }
        Command::Correlate(a) => {
            require_files(&[&a.file_a, &a.file_b])?;
            let ctx = ctx_for(&a.output);
            let body = commands::correlate(&ctx, &a.file_a, &a.file_b, a.n_perm, a.seed)?;
            emit(&a.output, &body)
        }
        Command::Baseline(a) => {
            require_files(&a.data.files())?;
            let ctx = ctx_for(&a.output);
            let spec = commands::BaselineSpec {
                train_pair: a.train_pair.clone(),
                test_pair: a.test_pair.clone(),
                grid: a.grid.clone(),
                epochs: a.epochs,
                val_fraction: a.val_frac,
                seed: a.seed,
            };
            let body = commands::baseline(&ctx, &a.data.spec(), &spec)?;
            emit(&a.output, &body)
        }
        Command::Synth(a) => {
            let ctx = ctx_for(&a.output);
            let spec = commands::SynthSpec {
                dim: a.dim,
                levels: a.levels,
                per_level: a.per_level,
                spreads: a.spreads.clone(),
                offsets: a.offsets.clone(),
                spread_scale: a.spread_scale,
                seed: a.seed,
                graded: a.graded,
                out_dir: a.out_dir.clone(),
            };
            let body = commands::synth(&ctx, &spec)?;
            emit(&a.output, &body)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edcone: error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
