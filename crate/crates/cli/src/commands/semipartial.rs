use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use sociopose_core::stats::{semipartial, SemiPartialResult};
use sociopose_core::Matrix;

use super::{load_layer, load_split, pose_set};
use crate::config::LoadedConfig;
use crate::error::Result;
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{fmt_f64, CsvOut};

#[derive(Debug, Clone, Default, Args)]
pub struct SemipartialOpts {
    /// Feature file whose unique contribution is measured; defaults to the
    /// joints3d features.
    #[arg(long, value_name = "FILE")]
    pub full: Option<PathBuf>,
    /// Control feature file; repeatable. Defaults to the position, direction
    /// and combined column slices of social3d.
    #[arg(long = "control", value_name = "FILE")]
    pub controls: Vec<PathBuf>,
}

pub const HEADER: [&str; 8] =
    ["feature_set", "control", "rating_dim", "r_semi", "alpha_predictor", "alpha_residualizer", "residual_ratio", "degenerate"];

fn stem(p: &std::path::Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn run(cfg: LoadedConfig, opts: &SemipartialOpts) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "semipartial");
    let split = load_split(&mut stage)?;
    let rcfg = stage.cfg.config.ridge_config();

    let (full_id, full) = match &opts.full {
        Some(p) => {
            let path = stage.input(p)?;
            (stem(p), load_layer(&path, &stage.cfg, &split)?)
        }
        None => ("joints3d".to_string(), pose_set(&stage, "joints3d", &split)?),
    };

    let mut controls: Vec<(String, (Matrix, Matrix))> =
        vec![("none".into(), (Matrix::zeros(split.train_ids.len(), 0), Matrix::zeros(split.test_ids.len(), 0)))];
    if opts.controls.is_empty() {
        let [pos, dir, both] = stage.cfg.config.semipartial_slices()?;
        let (s_tr, s_te) = pose_set(&stage, "social3d", &split)?;
        for (name, cols) in [("positions", pos), ("directions", dir), ("combined", both)] {
            controls.push((name.into(), (s_tr.select_cols(&cols), s_te.select_cols(&cols))));
        }
    } else {
        for p in &opts.controls {
            let path = stage.input(p)?;
            controls.push((stem(p), load_layer(&path, &stage.cfg, &split)?));
        }
    }

    let results: Vec<SemiPartialResult> = controls
        .par_iter()
        .map(|(id, (c_tr, c_te))| Ok(semipartial(id, (c_tr, c_te), (&full.0, &full.1), &split, &rcfg)?))
        .collect::<Result<_>>()?;

    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = CsvOut::new(&HEADER);
    for res in &results {
        for d in &res.dims {
            out.row(&[
                full_id.clone(),
                res.control_id.clone(),
                d.rating_dim.clone(),
                fmt_f64(d.r_semi),
                opt(d.alpha_predictor),
                res.alpha_residualizer.iter().map(|&a| fmt_f64(a)).collect::<Vec<_>>().join(";"),
                fmt_f64(res.residual_ratio),
                d.degenerate.to_string(),
            ]);
        }
    }
    out.write(&stage.output_path(layout::SEMIPARTIAL))?;
    stage.wrote(layout::SEMIPARTIAL)?;
    stage.finish()
}
