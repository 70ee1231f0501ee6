//! Per-stage bookkeeping: input resolution and digests, output paths, and
//! the manifest update at the end of a stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::manifest::{self, Manifest, StageRecord};

/// Output locations relative to the output directory.
pub mod layout {
    pub const JOINTS3D: &str = "features/joints3d.csv";
    pub const SOCIAL3D: &str = "features/social3d.csv";
    pub const SOCIAL2D: &str = "features/social2d.csv";
    pub const REJECTIONS: &str = "features/rejections.csv";
    pub const ENCODING: &str = "scores/encoding.csv";
    pub const SELECTION: &str = "scores/selection.csv";
    pub const POSE_PREDICTION: &str = "scores/pose_prediction.csv";
    pub const GROUPED: &str = "scores/grouped.csv";
    pub const SEMIPARTIAL: &str = "stats/semipartial.csv";
    pub const PERMTEST: &str = "stats/permtest.csv";
    pub const RELIABILITY: &str = "stats/reliability.csv";
    pub const FIG2: &str = "report/fig2.csv";
    pub const FIG3: &str = "report/fig3.csv";
    pub const FIG4: &str = "report/fig4.csv";
    pub const FIG5: &str = "report/fig5.csv";
    pub const FIG_S1: &str = "report/figS1.csv";

    /// Feature file for a pose feature set name.
    pub fn feature_file(set: &str) -> Option<&'static str> {
        match set {
            "joints3d" => Some(JOINTS3D),
            "social3d" => Some(SOCIAL3D),
            "social2d" => Some(SOCIAL2D),
            _ => None,
        }
    }
}

pub struct Stage {
    pub cfg: LoadedConfig,
    name: &'static str,
    out: PathBuf,
    config_hash: String,
    inputs: BTreeMap<String, String>,
    outputs: StageRecord,
}

impl Stage {
    pub fn new(cfg: LoadedConfig, name: &'static str) -> Self {
        let out = cfg.output();
        let config_hash = manifest::sha256_hex(cfg.config.to_toml().as_bytes());
        log::info!("stage {name}: output {}", out.display());
        Stage { cfg, name, out, config_hash, inputs: BTreeMap::new(), outputs: StageRecord::default() }
    }

    pub fn seed(&self) -> u64 {
        self.cfg.config.seed
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Resolves a configured input, checks it exists and records its digest.
    pub fn input(&mut self, configured: &Path) -> Result<PathBuf> {
        let p = self.cfg.resolve(configured);
        if !p.exists() {
            return Err(CliError::config(format!("input {} does not exist", p.display())));
        }
        self.inputs.insert(configured.display().to_string(), manifest::path_digest(&p)?);
        Ok(p)
    }

    /// Like [`Stage::input`], but a missing path is `None` rather than an
    /// error.
    pub fn optional_input(&mut self, configured: &Path) -> Result<Option<PathBuf>> {
        if self.cfg.resolve(configured).exists() {
            self.input(configured).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Path of an output written by an earlier stage; fails naming that stage
    /// when it is absent.
    pub fn upstream(&self, rel: &str, stage: &str) -> Result<PathBuf> {
        let p = self.out.join(rel);
        if !p.exists() {
            return Err(CliError::data(format!("{} is missing; run `sociopose {stage}` first", p.display())));
        }
        Ok(p)
    }

    pub fn output_path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    /// Records a written output under the output directory.
    pub fn wrote(&mut self, rel: &str) -> Result<()> {
        let digest = manifest::path_digest(&self.out.join(rel))?;
        self.outputs.outputs.insert(rel.to_string(), digest);
        Ok(())
    }

    /// Records a written output outside the output directory, keyed by its
    /// configured path.
    pub fn wrote_external(&mut self, configured: &Path) -> Result<()> {
        let digest = manifest::path_digest(&self.cfg.resolve(configured))?;
        self.outputs.outputs.insert(configured.display().to_string(), digest);
        Ok(())
    }

    pub fn finish(self) -> Result<Manifest> {
        let mut m = Manifest::load_or_default(&self.out)?;
        m.record(&self.config_hash, &self.inputs, self.name, self.outputs);
        m.save(&self.out)?;
        log::info!("stage {} done, run {}", self.name, m.run_id);
        Ok(m)
    }
}
