//! Grouped ridge fusion. By default every model's most frequently selected
//! layer is fused with a pose feature set; explicit `--group` files fuse
//! those files instead.

use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use sociopose_core::grouped::{grouped_evaluate, grouped_search, GroupSpec, GroupedSearchConfig};
use sociopose_core::ridge::TargetSplit;
use sociopose_core::Matrix;

use super::encode::best_layers;
use super::{discover_models, load_layer, load_split, pose_set};
use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{format_gamma, write_scores, ScoreRow};

#[derive(Debug, Clone, Args)]
pub struct GroupedOpts {
    /// Feature file (`.fmx` or CSV) to fuse; give two or more to fuse them
    /// instead of the default model + pose pairs.
    #[arg(long = "group", value_name = "FILE")]
    pub groups: Vec<PathBuf>,
    /// Pose feature set fused with each model.
    #[arg(long, default_value = "social3d")]
    pub pose: String,
}

impl Default for GroupedOpts {
    fn default() -> Self {
        GroupedOpts { groups: Vec::new(), pose: "social3d".into() }
    }
}

struct Job {
    feature_set: String,
    layer: Option<String>,
    group_ids: Vec<String>,
    train: Vec<(String, Matrix)>,
    test: Vec<Matrix>,
}

fn fuse(job: &Job, split: &TargetSplit, cfg: &GroupedSearchConfig) -> Result<Vec<ScoreRow>> {
    let spec = GroupSpec::new(job.train.clone())?;
    let res = grouped_search(&spec, &split.y_train, cfg)?;
    let scores = grouped_evaluate(&job.feature_set, &res.model, &job.test, split)?;
    Ok(scores
        .iter()
        .map(|s| ScoreRow {
            layer: job.layer.clone(),
            gamma: Some(format_gamma(&job.group_ids, &s.gamma)),
            ..ScoreRow::from(&s.score)
        })
        .collect())
}

pub fn run(cfg: LoadedConfig, args: &GroupedOpts) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "encode-grouped");
    let split = load_split(&mut stage)?;
    let gcfg = stage.cfg.config.grouped_config();

    let jobs = if !args.groups.is_empty() {
        if args.groups.len() < 2 {
            return Err(CliError::config("grouped fusion needs at least two --group files"));
        }
        let mut job = Job { feature_set: String::new(), layer: None, group_ids: Vec::new(), train: Vec::new(), test: Vec::new() };
        for g in &args.groups {
            let path = stage.input(g)?;
            let id = g.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let (tr, te) = load_layer(&path, &stage.cfg, &split)?;
            job.group_ids.push(id.clone());
            job.train.push((id, tr));
            job.test.push(te);
        }
        job.feature_set = job.group_ids.join("+");
        vec![job]
    } else {
        let (pose_tr, pose_te) = pose_set(&stage, &args.pose, &split)?;
        let best = best_layers(&stage)?;
        let models = match stage.optional_input(&stage.cfg.config.paths.embeddings.clone())? {
            Some(dir) => discover_models(&dir)?,
            None => Vec::new(),
        };
        let cfg = &stage.cfg;
        best.par_iter()
            .map(|(model, layer)| {
                let files = models
                    .iter()
                    .find(|m| &m.id == model)
                    .and_then(|m| m.layers.iter().find(|(l, _)| l == layer))
                    .ok_or_else(|| CliError::data(format!("selected layer {model}/{layer} not found in embeddings")))?;
                let (tr, te) = load_layer(&files.1, cfg, &split)?;
                let ids = vec![format!("{model}/{layer}"), args.pose.clone()];
                Ok(Job {
                    feature_set: format!("{model}+{}", args.pose),
                    layer: Some(layer.clone()),
                    train: vec![(ids[0].clone(), tr), (ids[1].clone(), pose_tr.clone())],
                    test: vec![te, pose_te.clone()],
                    group_ids: ids,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };
    if jobs.is_empty() {
        log::warn!("no models to fuse; writing a header-only score file");
    }
    let rows: Vec<Vec<ScoreRow>> = jobs.par_iter().map(|j| fuse(j, &split, &gcfg)).collect::<Result<_>>()?;
    let rows = rows.concat();
    write_grouped(&stage.output_path(layout::GROUPED), &rows)?;
    stage.wrote(layout::GROUPED)?;
    stage.finish()
}

fn write_grouped(path: &std::path::Path, rows: &[ScoreRow]) -> Result<()> {
    if rows.is_empty() {
        let mut header = crate::tables::SCORE_HEADER.to_vec();
        header.push("gamma");
        return crate::tables::CsvOut::new(&header).write(path);
    }
    write_scores(path, rows)
}
