use rayon::prelude::*;
use sociopose_core::pose::{extract_features, ClipFeatures};
use sociopose_core::Matrix;

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{CsvOut, FeatureTable};
use crate::tracks::{self, Rejection};

pub fn run(cfg: LoadedConfig) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "features");
    let paths = stage.cfg.config.paths.clone();
    let joints = stage.input(&paths.joints)?;
    let depths = if joints.extension().is_some_and(|e| e == "json") { joints.clone() } else { stage.input(&paths.depths)? };
    let set = tracks::read(&joints, &depths)?;
    let map = stage.cfg.config.joint_map.to_map();
    let opts = stage.cfg.config.feature_options();

    let results: Vec<_> = set.tracks.par_iter().map(|t| extract_features(t, &map, &opts)).collect();
    let mut feats: Vec<ClipFeatures> = Vec::with_capacity(results.len());
    let mut rejected = set.rejected;
    for (t, r) in set.tracks.iter().zip(results) {
        match r {
            Ok(f) => feats.push(f),
            Err(e) => rejected.push(Rejection { clip_id: t.clip_id.clone(), reason: e.to_string() }),
        }
    }
    rejected.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    log::info!("{} clips kept, {} rejected", feats.len(), rejected.len());

    let ids: Vec<String> = feats.iter().map(|f| f.clip_id.clone()).collect();
    let table = |pick: fn(&ClipFeatures) -> &[f64], width: usize| -> Result<FeatureTable> {
        let rows: Vec<&[f64]> = feats.iter().map(pick).collect();
        let m = if rows.is_empty() { Matrix::zeros(0, width) } else { Matrix::from_rows(&rows)? };
        FeatureTable::new(ids.clone(), m)
    };
    use sociopose_core::pose::{JOINTS3D_LEN, SOCIAL2D_LEN, SOCIAL3D_LEN};
    type Column = fn(&ClipFeatures) -> &[f64];
    let outputs: [(&str, Column, usize); 3] = [
        (layout::JOINTS3D, |f| &f.joints3d.values, JOINTS3D_LEN),
        (layout::SOCIAL3D, |f| &f.social3d.values, SOCIAL3D_LEN),
        (layout::SOCIAL2D, |f| &f.social2d.values, SOCIAL2D_LEN),
    ];
    for (rel, pick, width) in outputs {
        table(pick, width)?.write_csv(&stage.output_path(rel))?;
        stage.wrote(rel)?;
    }

    let mut out = CsvOut::new(&["clip_id", "reason"]);
    for r in &rejected {
        out.row(&[r.clip_id.as_str(), r.reason.as_str()]);
    }
    out.write(&stage.output_path(layout::REJECTIONS))?;
    stage.wrote(layout::REJECTIONS)?;
    stage.finish()
}
