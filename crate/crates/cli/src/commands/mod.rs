//! Pipeline stages. Each stage reads its inputs and any upstream outputs,
//! writes under the output directory and records itself in the manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sociopose_core::projection::project_if_wider;
use sociopose_core::ridge::TargetSplit;
use sociopose_core::Matrix;

use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{self, FeatureTable, RatingTable};

pub mod encode;
pub mod features;
pub mod grouped;
pub mod permtest;
pub mod reliability;
pub mod report;
pub mod semipartial;
pub mod synth;

#[derive(Debug, Parser)]
#[command(name = "sociopose", version, about = "Social pose encoding pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config value, e.g. `--set ridge.n_folds=4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-clip joint and social pose features.
    Features(Common),
    /// Ridge encoding of pose features and embedding models.
    Encode(Common),
    /// Grouped ridge fusion of feature groups.
    EncodeGrouped {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: grouped::GroupedOpts,
    },
    /// Unique contribution of a feature set beyond control sets.
    Semipartial {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: semipartial::SemipartialOpts,
    },
    /// Permutation tests on encoding scores.
    Permtest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: permtest::PermtestOpts,
    },
    /// Split-half reliability of the raters.
    Reliability(Common),
    /// Writes a synthetic dataset to the configured input paths.
    Synth(Common),
    /// Figure-ready CSVs from earlier stage outputs.
    Report(Common),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Features(c) | Command::Encode(c) | Command::Reliability(c) | Command::Synth(c) | Command::Report(c) => c,
            Command::EncodeGrouped { common, .. } | Command::Semipartial { common, .. } | Command::Permtest { common, .. } => {
                common
            }
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<Manifest> {
    let common = cmd.common();
    let cfg = LoadedConfig::load(&common.config, &common.overrides)?;
    execute(cmd, cfg)
}

/// Runs a command with an already loaded config.
pub fn execute(cmd: &Command, cfg: LoadedConfig) -> Result<Manifest> {
    match cmd {
        Command::Features(_) => features::run(cfg),
        Command::Encode(_) => encode::run(cfg),
        Command::EncodeGrouped { opts, .. } => grouped::run(cfg, opts),
        Command::Semipartial { opts, .. } => semipartial::run(cfg, opts),
        Command::Permtest { opts, .. } => permtest::run(cfg, opts),
        Command::Reliability(_) => reliability::run(cfg),
        Command::Synth(_) => synth::run(cfg),
        Command::Report(_) => report::run(cfg),
    }
}

/// Every analysis stage in pipeline order, after `synth`.
pub fn run_all(cfg: &LoadedConfig) -> Result<Manifest> {
    features::run(cfg.clone())?;
    encode::run(cfg.clone())?;
    grouped::run(cfg.clone(), &grouped::GroupedOpts::default())?;
    semipartial::run(cfg.clone(), &semipartial::SemipartialOpts::default())?;
    reliability::run(cfg.clone())?;
    permtest::run(cfg.clone(), &permtest::PermtestOpts::default())?;
    report::run(cfg.clone())
}

/// The rating split, minus clips the features stage rejected.
pub fn load_split(stage: &mut Stage) -> Result<TargetSplit> {
    let ratings_path = stage.input(&stage.cfg.config.paths.ratings.clone())?;
    let ratings = RatingTable::read(&ratings_path)?;
    let rejected = rejected_clips(stage)?;
    let mut split = ratings.target_split()?;
    if !rejected.is_empty() {
        let keep = |ids: &[String]| -> Vec<usize> { (0..ids.len()).filter(|&i| !rejected.contains(&ids[i])).collect() };
        let (tr, te) = (keep(&split.train_ids), keep(&split.test_ids));
        log::warn!(
            "dropping {} rejected clips from the rating split",
            split.train_ids.len() + split.test_ids.len() - tr.len() - te.len()
        );
        split = TargetSplit::new(
            tr.iter().map(|&i| split.train_ids[i].clone()).collect(),
            te.iter().map(|&i| split.test_ids[i].clone()).collect(),
            split.y_train.select_rows(&tr),
            split.y_test.select_rows(&te),
            split.dim_names.clone(),
        )?;
    }
    Ok(split)
}

fn rejected_clips(stage: &Stage) -> Result<BTreeSet<String>> {
    let path = stage.output_path(layout::REJECTIONS);
    if !path.exists() {
        return Ok(BTreeSet::new());
    }
    let mut rdr = tables::reader(&path)?;
    let mut out = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        out.insert(rec[0].to_string());
    }
    Ok(out)
}

/// Train and test rows of a feature table, in split order.
pub fn split_rows(table: &FeatureTable, split: &TargetSplit, what: &str) -> Result<(Matrix, Matrix)> {
    Ok((table.align(&split.train_ids, what)?, table.align(&split.test_ids, what)?))
}

/// A pose feature set written by the features stage.
pub fn pose_set(stage: &Stage, name: &str, split: &TargetSplit) -> Result<(Matrix, Matrix)> {
    let rel = layout::feature_file(name).ok_or_else(|| CliError::config(format!("unknown pose feature set {name:?}")))?;
    let table = FeatureTable::read(&stage.upstream(rel, "features")?)?;
    split_rows(&table, split, name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFiles {
    pub id: String,
    /// `(layer id, file)`, sorted by layer id.
    pub layers: Vec<(String, PathBuf)>,
}

/// `<dir>/<model>/<layer>.fmx`, models and layers in lexicographic order.
/// A missing directory means no models.
pub fn discover_models(dir: &Path) -> Result<Vec<ModelFiles>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut models = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if !p.is_dir() {
            continue;
        }
        let mut layers = Vec::new();
        for f in std::fs::read_dir(&p).map_err(|e| CliError::io(&p, e))? {
            let f = f.map_err(|e| CliError::io(&p, e))?.path();
            if f.extension().is_some_and(|e| e == "fmx") {
                let stem = f.file_stem().expect("has stem").to_string_lossy().into_owned();
                layers.push((stem, f));
            }
        }
        if layers.is_empty() {
            continue;
        }
        layers.sort();
        models.push(ModelFiles { id: p.file_name().expect("has name").to_string_lossy().into_owned(), layers });
    }
    models.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(models)
}

/// Loads one layer, projects it when wider than the target dimension, and
/// splits it into train and test rows.
pub fn load_layer(path: &Path, cfg: &LoadedConfig, split: &TargetSplit) -> Result<(Matrix, Matrix)> {
    let table = FeatureTable::read(path)?;
    let projected = project_if_wider(&table.matrix, &cfg.config.srp_config())?;
    if projected.applied {
        log::debug!("{}: projected {} -> {} columns", path.display(), table.matrix.cols(), projected.matrix.cols());
    }
    let table = FeatureTable::new(table.ids, projected.matrix)?;
    split_rows(&table, split, &path.display().to_string())
}
