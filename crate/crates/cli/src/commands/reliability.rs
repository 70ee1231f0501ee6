use rayon::prelude::*;
use sociopose_core::seed::derive_seed;
use sociopose_core::stats::split_half_reliability;

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{fmt_f64, read_raters, CsvOut};

pub const HEADER: [&str; 5] = ["rating_dim", "r_split_half", "n_splits", "spearman_brown", "n_excluded"];

pub fn run(cfg: LoadedConfig) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "reliability");
    let path = stage.input(&stage.cfg.config.paths.raters.clone())?;
    let tables = read_raters(&path)?;
    let n_splits = stage.cfg.config.stats.n_splits;
    let global = stage.seed();
    let results = tables
        .par_iter()
        .map(|t| Ok(split_half_reliability(t, n_splits, derive_seed(global, &format!("reliability/{}", t.rating_dim), 0))?))
        .collect::<Result<Vec<_>>>()?;
    let mut out = CsvOut::new(&HEADER);
    for r in &results {
        if !r.excluded.is_empty() {
            log::warn!("{}: {} clips with fewer than two raters excluded", r.rating_dim, r.excluded.len());
        }
        out.row(&[
            r.rating_dim.clone(),
            fmt_f64(r.r_split_half),
            r.n_splits.to_string(),
            r.spearman_brown.to_string(),
            r.excluded.len().to_string(),
        ]);
    }
    out.write(&stage.output_path(layout::RELIABILITY))?;
    stage.wrote(layout::RELIABILITY)?;
    stage.finish()
}
