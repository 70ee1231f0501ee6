//! Permutation tests on encoding scores.
//!
//! * `unpaired:<set>_vs_models:<dim>`: a pose feature set against the
//!   embedding models, two-tailed.
//! * `paired:model_minus_grouped:<dim>`: each model alone minus the same
//!   model fused with pose features, one-tailed (small p = fusion helps).
//!
//! Sampled tests are split into batches that run in parallel; the counts
//! match a single sequential pass exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use sociopose_core::seed::derive_seed;
use sociopose_core::stats::{PairedTest, PermMode, PermTestResult, Tail, UnpairedTest};

use super::encode::POSE_SETS;
use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{fmt_f64, read_scores, unmatched, CsvOut, ScoreRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Mode {
    #[default]
    All,
    Unpaired,
    Paired,
}

#[derive(Debug, Clone, Default, Args)]
pub struct PermtestOpts {
    #[arg(long, value_enum, default_value_t = Mode::All)]
    pub mode: Mode,
    /// Single-set scores; defaults to the encode stage output.
    #[arg(long, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// Grouped scores; defaults to the encode-grouped stage output.
    #[arg(long, value_name = "FILE")]
    pub grouped: Option<PathBuf>,
}

pub const HEADER: [&str; 6] = ["test", "observed", "p", "n_perm", "seed", "exhaustive"];

enum Test {
    Unpaired(UnpairedTest),
    Paired(PairedTest),
}

impl Test {
    fn total(&self) -> Option<u64> {
        match self {
            Test::Unpaired(t) => t.n_assignments(),
            Test::Paired(t) => t.n_patterns(),
        }
    }

    fn run(&self, n_perm: usize, seed: u64, batch: usize) -> Result<PermTestResult> {
        if self.total().is_some_and(|c| c <= n_perm as u64) {
            return Ok(match self {
                Test::Unpaired(t) => t.run(n_perm, seed, PermMode::Exhaustive)?,
                Test::Paired(t) => t.run(n_perm, seed, PermMode::Exhaustive)?,
            });
        }
        let bounds: Vec<u64> = (0..n_perm as u64).step_by(batch).collect();
        let extreme: usize = bounds
            .par_iter()
            .map(|&lo| {
                let r = lo..(lo + batch as u64).min(n_perm as u64);
                match self {
                    Test::Unpaired(t) => t.count_sampled(seed, r),
                    Test::Paired(t) => t.count_sampled(seed, r),
                }
            })
            .sum();
        let (observed, tail) = match self {
            Test::Unpaired(t) => (t.observed(), Tail::TwoSided),
            Test::Paired(t) => (t.observed(), Tail::OneSidedLeq),
        };
        Ok(PermTestResult {
            observed,
            p_value: extreme as f64 / n_perm as f64,
            n_permutations: n_perm,
            n_extreme: extreme,
            tail,
            seed,
            exhaustive: false,
        })
    }
}

/// `r_test` keyed by feature set, then rating dim.
fn by_set(rows: &[ScoreRow]) -> BTreeMap<&str, BTreeMap<&str, f64>> {
    let mut m: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in rows {
        m.entry(r.feature_set.as_str()).or_default().insert(r.rating_dim.as_str(), r.r_test);
    }
    m
}

/// Model id of a grouped feature set `<model>+<pose set>`.
pub fn grouped_model_id(feature_set: &str) -> &str {
    feature_set.rsplit_once('+').map_or(feature_set, |(m, _)| m)
}

pub fn run(cfg: LoadedConfig, opts: &PermtestOpts) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "permtest");
    let scores_path = match &opts.scores {
        Some(p) => stage.input(p)?,
        None => stage.upstream(layout::ENCODING, "encode")?,
    };
    let rows = read_scores(&scores_path)?;
    let sets = by_set(&rows);
    let dims: Vec<&str> = {
        let mut seen = BTreeSet::new();
        rows.iter().map(|r| r.rating_dim.as_str()).filter(|d| seen.insert(*d)).collect()
    };
    let models: Vec<&str> = sets.keys().copied().filter(|s| !POSE_SETS.contains(s)).collect();
    let model_r = |model: &str, dim: &str| -> Result<f64> {
        sets[model].get(dim).copied().ok_or_else(|| CliError::data(format!("{model} has no score for {dim}")))
    };

    let mut tests: Vec<(String, Test)> = Vec::new();
    if opts.mode != Mode::Paired {
        if models.is_empty() {
            log::warn!("no model scores; skipping unpaired tests");
        }
        for set in &stage.cfg.config.stats.pose_sets {
            let Some(pose) = sets.get(set.as_str()) else {
                log::warn!("no scores for pose set {set}; skipping");
                continue;
            };
            if models.is_empty() {
                continue;
            }
            for &dim in &dims {
                let a = [*pose.get(dim).ok_or_else(|| CliError::data(format!("{set} has no score for {dim}")))?];
                let b = models.iter().map(|m| model_r(m, dim)).collect::<Result<Vec<_>>>()?;
                tests.push((format!("unpaired:{set}_vs_models:{dim}"), Test::Unpaired(UnpairedTest::new(&a, &b)?)));
            }
        }
    }

    if opts.mode != Mode::Unpaired {
        let grouped_path = match &opts.grouped {
            Some(p) => Some(stage.input(p)?),
            None => {
                let p = stage.output_path(layout::GROUPED);
                match (p.exists(), opts.mode) {
                    (true, _) => Some(p),
                    (false, Mode::Paired) => Some(stage.upstream(layout::GROUPED, "encode-grouped")?),
                    (false, _) => {
                        log::warn!("no grouped scores; skipping paired tests");
                        None
                    }
                }
            }
        };
        if let Some(path) = grouped_path {
            let grouped = read_scores(&path)?;
            let fused = by_set(&grouped);
            let fused_models: BTreeSet<&str> = fused.keys().map(|s| grouped_model_id(s)).collect();
            let unmatched_ids: BTreeSet<&str> =
                fused_models.symmetric_difference(&models.iter().copied().collect()).copied().collect();
            if !unmatched_ids.is_empty() && !fused.is_empty() {
                return Err(unmatched("paired test: single and grouped model ids differ", &unmatched_ids));
            }
            if !fused.is_empty() {
                for &dim in &dims {
                    let diffs = fused
                        .iter()
                        .map(|(set, scores)| {
                            let g = scores.get(dim).ok_or_else(|| CliError::data(format!("{set} has no score for {dim}")))?;
                            Ok(model_r(grouped_model_id(set), dim)? - g)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    tests.push((format!("paired:model_minus_grouped:{dim}"), Test::Paired(PairedTest::new(&diffs)?)));
                }
            }
        }
    }

    let st = &stage.cfg.config.stats;
    let global = stage.seed();
    let mut out = CsvOut::new(&HEADER);
    for (name, test) in &tests {
        let seed = derive_seed(global, name, 0);
        let r = test.run(st.n_perm, seed, st.batch_size)?;
        out.row(&[
            name.clone(),
            fmt_f64(r.observed),
            fmt_f64(r.p_value),
            r.n_permutations.to_string(),
            r.seed.to_string(),
            r.exhaustive.to_string(),
        ]);
    }
    out.write(&stage.output_path(layout::PERMTEST))?;
    stage.wrote(layout::PERMTEST)?;
    stage.finish()
}
