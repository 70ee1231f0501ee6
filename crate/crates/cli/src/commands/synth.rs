//! Synthetic dataset: scenes with known geometry, raters and averaged
//! ratings derived from that geometry, and a zoo of embedding models whose
//! layers carry the ratings at different strengths. Everything is written
//! to the configured input paths.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use sociopose_core::ridge::RATING_DIMS;
use sociopose_core::seed::derive_seed;
use sociopose_core::synth::{gen_clip, gen_embeddings, gen_raters, AnalyticTargets, EmbeddingSpec, SyntheticClip};
use sociopose_core::Matrix;

use crate::config::{LoadedConfig, SynthSection};
use crate::error::{CliError, Result};
use crate::fmx;
use crate::manifest::Manifest;
use crate::run::Stage;
use crate::tables::{write_raters, RatingTable, Split};
use crate::tracks;

fn zscore(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
    v.iter().map(|x| if sd > 0.0 { (x - m) / sd } else { 0.0 }).collect()
}

/// Noise-free rating dimensions as functions of the scene geometry, one
/// column per entry of [`RATING_DIMS`].
pub fn latent_ratings(targets: &[AnalyticTargets]) -> Matrix {
    let dist: Vec<f64> = targets.iter().map(|t| t.distance).collect();
    let facing: Vec<f64> = targets.iter().map(|t| t.facing).collect();
    let gap: Vec<f64> = targets.iter().map(|t| t.depth_gap).collect();
    let (zd, zf, zg) = (zscore(&dist), zscore(&facing), zscore(&gap));
    Matrix::from_fn(targets.len(), RATING_DIMS.len(), |r, c| match c {
        0 => zd[r] + 0.5 * zg[r],
        1 => zd[r],
        2 => zf[r],
        3 => 0.7 * zf[r] - 0.3 * zd[r],
        _ => -zd[r] + 0.3 * zg[r],
    })
}

/// Test clips are the `test_fraction` share with the smallest split hashes.
fn split_of(ids: &[String], s: &SynthSection) -> Vec<Split> {
    let n = ids.len();
    let n_test = ((n as f64 * s.test_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| derive_seed(s.seed, "split", i as u64));
    let mut out = vec![Split::Train; n];
    for &i in &order[..n_test] {
        out[i] = Split::Test;
    }
    out
}

pub fn run(cfg: LoadedConfig) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "synth");
    let s = stage.cfg.config.synth.clone();
    let paths = stage.cfg.config.paths.clone();
    let scene = s.scene();
    scene.validate()?;
    let clips: Vec<SyntheticClip> = (0..s.n_clips).into_par_iter().map(|i| gen_clip(&scene, i)).collect::<std::result::Result<_, _>>()?;
    let ids: Vec<String> = clips.iter().map(|c| c.track.clip_id.clone()).collect();

    let joints = stage.cfg.resolve(&paths.joints);
    let track_list: Vec<_> = clips.iter().map(|c| c.track.clone()).collect();
    if joints.extension().is_some_and(|e| e == "json") {
        tracks::write_json(&joints, &track_list)?;
    } else {
        tracks::write_csv(&joints, &stage.cfg.resolve(&paths.depths), &track_list)?;
        stage.wrote_external(&paths.depths)?;
    }
    stage.wrote_external(&paths.joints)?;

    let latent = latent_ratings(&clips.iter().map(|c| c.targets).collect::<Vec<_>>());
    let dims: Vec<String> = RATING_DIMS.iter().map(|d| d.to_string()).collect();
    let raters = gen_raters(&ids, &latent, &dims, s.n_raters, s.rater_noise, s.missing, derive_seed(s.seed, "raters", 0))?;
    write_raters(&stage.cfg.resolve(&paths.raters), &raters)?;
    stage.wrote_external(&paths.raters)?;

    let means: Vec<Vec<Option<f64>>> = raters.iter().map(|t| t.clip_means()).collect();
    let splits = split_of(&ids, &s);
    let mut rows = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let vals = means
            .iter()
            .map(|m| m[i].ok_or_else(|| CliError::data(format!("clip {id} has no ratings; lower synth.missing"))))
            .collect::<Result<Vec<_>>>()?;
        rows.insert(id.clone(), (splits[i], vals));
    }
    RatingTable { dims, rows }.write(&stage.cfg.resolve(&paths.ratings))?;
    stage.wrote_external(&paths.ratings)?;

    if s.n_models > 0 {
        let spec = EmbeddingSpec {
            n_models: s.n_models,
            layers_per_model: s.layers_per_model,
            width: s.width,
            wide_width: (s.wide_width > 0).then_some(s.wide_width),
            noise: s.embedding_noise,
            seed: derive_seed(s.seed, "embeddings", 0),
        };
        let dir = stage.cfg.resolve(&paths.embeddings);
        for model in gen_embeddings(&latent, &spec)? {
            for (layer, x) in &model.layers {
                fmx::write(&dir.join(&model.id).join(format!("{layer}.fmx")), x, &ids)?;
            }
        }
        warn_stale(&dir, s.n_models);
        stage.wrote_external(&paths.embeddings)?;
    }
    stage.finish()
}

fn warn_stale(dir: &Path, n_models: usize) {
    if let Ok(models) = super::discover_models(dir) {
        if models.len() > n_models {
            log::warn!("{} holds {} models, more than the {n_models} just generated", dir.display(), models.len());
        }
    }
}
