//! Ridge encoding of every feature set against the ratings, plus each
//! model's ability to predict the social pose features themselves.

use rayon::prelude::*;
use sociopose_core::ridge::{cv_select, encode_selected, Layer, RidgeConfig, Selection, TargetSplit};
use sociopose_core::Matrix;

use super::{discover_models, load_layer, load_split, pose_set};
use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{fmt_f64, write_scores, CsvOut, ScoreRow};

pub const POSE_SETS: [&str; 3] = ["joints3d", "social3d", "social2d"];
/// Pose sets used as regression targets for the pose-prediction scores.
pub const PREDICTED_SETS: [&str; 2] = ["social3d", "social2d"];

/// A feature set ready for encoding: training layers and matching test rows.
pub struct Unit {
    pub id: String,
    pub layers: Vec<Layer>,
    pub tests: Vec<Matrix>,
}

impl Unit {
    pub fn single(id: &str, (train, test): (Matrix, Matrix)) -> Self {
        Unit { id: id.to_string(), layers: vec![Layer::new(id, train)], tests: vec![test] }
    }
}

pub fn load_models(stage: &mut Stage, split: &TargetSplit) -> Result<Vec<Unit>> {
    let Some(dir) = stage.optional_input(&stage.cfg.config.paths.embeddings.clone())? else {
        log::warn!("no embeddings directory; encoding pose features only");
        return Ok(Vec::new());
    };
    let models = discover_models(&dir)?;
    let cfg = &stage.cfg;
    models
        .par_iter()
        .map(|m| {
            let mut layers = Vec::with_capacity(m.layers.len());
            let mut tests = Vec::with_capacity(m.layers.len());
            for (id, path) in &m.layers {
                let (tr, te) = load_layer(path, cfg, split)?;
                layers.push(Layer::new(id.clone(), tr));
                tests.push(te);
            }
            Ok(Unit { id: m.id.clone(), layers, tests })
        })
        .collect()
}

fn score(unit: &Unit, split: &TargetSplit, cfg: &RidgeConfig) -> Result<(Vec<Selection>, Vec<ScoreRow>)> {
    let sel = cv_select(&unit.layers, &split.y_train, cfg)?;
    let scores = encode_selected(&unit.id, &unit.layers, &unit.tests, split, &sel)?;
    let is_model = !POSE_SETS.contains(&unit.id.as_str());
    let rows = scores
        .iter()
        .zip(&sel)
        .map(|(s, l)| ScoreRow { layer: is_model.then(|| l.layer_id.clone()), ..ScoreRow::from(s) })
        .collect();
    Ok((sel, rows))
}

pub fn run(cfg: LoadedConfig) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "encode");
    let split = load_split(&mut stage)?;
    let rcfg = stage.cfg.config.ridge_config();

    let mut units = Vec::new();
    for name in POSE_SETS {
        units.push(Unit::single(name, pose_set(&stage, name, &split)?));
    }
    let models = load_models(&mut stage, &split)?;
    if models.is_empty() {
        log::warn!("no embedding models found");
    }
    units.extend(models);

    let results: Vec<_> = units.par_iter().map(|u| score(u, &split, &rcfg)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut sel_out = CsvOut::new(&["feature_set", "rating_dim", "layer", "alpha", "cv_r"]);
    for (unit, (sel, scores)) in units.iter().zip(&results) {
        for (s, dim) in sel.iter().zip(&split.dim_names) {
            let layer = if POSE_SETS.contains(&unit.id.as_str()) { "" } else { s.layer_id.as_str() };
            sel_out.row(&[unit.id.as_str(), dim, layer, &fmt_f64(s.alpha), &fmt_f64(s.cv_r)]);
        }
        rows.extend(scores.iter().cloned());
    }
    write_scores(&stage.output_path(layout::ENCODING), &rows)?;
    stage.wrote(layout::ENCODING)?;
    sel_out.write(&stage.output_path(layout::SELECTION))?;
    stage.wrote(layout::SELECTION)?;

    // how well each model's layers predict the pose features
    let mut targets = Vec::new();
    for name in PREDICTED_SETS {
        let (tr, te) = pose_set(&stage, name, &split)?;
        let dims = (0..tr.cols()).map(|c| format!("{name}:f{c}")).collect();
        targets.push(TargetSplit::new(split.train_ids.clone(), split.test_ids.clone(), tr, te, dims)?);
    }
    let n_pose = POSE_SETS.len();
    let jobs: Vec<(&Unit, &TargetSplit)> =
        units[n_pose..].iter().flat_map(|u| targets.iter().map(move |t| (u, t))).collect();
    let pose_rows: Vec<Vec<ScoreRow>> =
        jobs.par_iter().map(|(u, t)| score(u, t, &rcfg).map(|r| r.1)).collect::<Result<_>>()?;
    write_scores(&stage.output_path(layout::POSE_PREDICTION), &pose_rows.concat())?;
    stage.wrote(layout::POSE_PREDICTION)?;
    stage.finish()
}

/// Most frequently selected layer per model across rating dims, ties to
/// the lexicographically smaller layer.
pub fn best_layers(stage: &Stage) -> Result<Vec<(String, String)>> {
    let path = stage.upstream(layout::SELECTION, "encode")?;
    let mut rdr = crate::tables::reader(&path)?;
    let mut counts: std::collections::BTreeMap<String, std::collections::BTreeMap<String, usize>> = Default::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if rec[2].is_empty() {
            continue;
        }
        *counts.entry(rec[0].to_string()).or_default().entry(rec[2].to_string()).or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(model, layers)| {
            let best = layers.iter().fold(None::<(&String, usize)>, |acc, (l, &n)| match acc {
                Some((_, m)) if m >= n => acc,
                _ => Some((l, n)),
            });
            (model, best.expect("nonempty").0.clone())
        })
        .collect())
}
