#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use sociopose::commands::synth;
use sociopose::{LoadedConfig, RunConfig};
use tempfile::TempDir;

/// A small synthetic dataset written into a fresh temp directory.
pub struct Fixture {
    pub dir: TempDir,
    pub cfg: LoadedConfig,
}

impl Fixture {
    pub fn new(n_models: usize) -> Self {
        Self::with(|c| c.synth.n_models = n_models)
    }

    pub fn with(tweak: impl FnOnce(&mut RunConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config();
        tweak(&mut config);
        let cfg = LoadedConfig::from_config(config, dir.path().to_path_buf()).unwrap();
        synth::run(cfg.clone()).unwrap();
        Fixture { dir, cfg }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.cfg.output().join(rel)
    }

    pub fn read_out(&self, rel: &str) -> String {
        fs::read_to_string(self.out(rel)).unwrap()
    }

    /// Writes the config as TOML next to the data and returns its path.
    pub fn config_file(&self) -> PathBuf {
        let p = self.path("run.toml");
        fs::write(&p, self.cfg.config.to_toml()).unwrap();
        p
    }
}

/// Everything shrunk so a full pipeline takes well under a second.
pub fn small_config() -> RunConfig {
    let mut c = RunConfig { seed: 3, ..Default::default() };
    c.paths.joints = "data/joints.csv".into();
    c.paths.depths = "data/depths.csv".into();
    c.paths.embeddings = "data/embeddings".into();
    c.paths.ratings = "data/ratings.csv".into();
    c.paths.raters = "data/raters.csv".into();
    c.paths.output = "out".into();
    c.ridge.n_alphas = 9;
    c.ridge.n_folds = 3;
    c.ridge.n_repeats = 1;
    c.grouped.n_candidates = 6;
    c.stats.n_perm = 300;
    c.stats.n_splits = 10;
    c.stats.batch_size = 64;
    c.synth.seed = 5;
    c.synth.n_clips = 40;
    c.synth.n_frames = 3;
    c.synth.n_models = 3;
    c.synth.layers_per_model = 2;
    c.synth.width = 6;
    c.synth.wide_width = 0;
    c.synth.n_raters = 6;
    c.synth.embedding_noise = 2.0;
    c
}

/// Rewrites a CSV keeping the header and passing body lines through `f`.
pub fn edit_csv(path: &Path, f: impl FnOnce(Vec<String>) -> Vec<String>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().map(String::from);
    let header = lines.next().unwrap();
    let body = f(lines.collect());
    let mut out = header;
    out.push('\n');
    for l in body {
        out.push_str(&l);
        out.push('\n');
    }
    fs::write(path, out).unwrap();
}

/// Lines of a CSV body whose first field is `id`.
pub fn rows_for<'a>(text: &'a str, id: &str) -> Vec<&'a str> {
    text.lines().skip(1).filter(|l| l.split(',').next() == Some(id)).collect()
}
