//! Run configuration: one TOML file whose sections mirror the pipeline
//! stages. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sociopose_core::grouped::GroupedSearchConfig;
use sociopose_core::pose::{FeatureOptions, JointMap};
use sociopose_core::projection::SrpConfig;
use sociopose_core::ridge::{log_alpha_grid, RidgeConfig};
use sociopose_core::synth::{PlacementRange, Range1, SceneParams};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; every stochastic stage derives its own stream from it.
    pub seed: u64,
    pub paths: Paths,
    pub joint_map: JointMapConfig,
    pub features: FeaturesConfig,
    pub ridge: RidgeSection,
    pub grouped: GroupedSection,
    pub srp: SrpSection,
    pub stats: StatsSection,
    pub semipartial: SemipartialSection,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Joint CSV, or a single JSON track file.
    pub joints: PathBuf,
    /// Translation and depth CSV; unused with JSON tracks.
    pub depths: PathBuf,
    pub embeddings: PathBuf,
    pub ratings: PathBuf,
    pub raters: PathBuf,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            joints: "data/joints.csv".into(),
            depths: "data/depths.csv".into(),
            embeddings: "data/embeddings".into(),
            ratings: "data/ratings.csv".into(),
            raters: "data/raters.csv".into(),
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointMapConfig {
    pub neck: usize,
    pub nose: usize,
    pub left_eye: usize,
    pub right_eye: usize,
}

impl Default for JointMapConfig {
    fn default() -> Self {
        let m = JointMap::default();
        JointMapConfig { neck: m.neck, nose: m.nose, left_eye: m.left_eye, right_eye: m.right_eye }
    }
}

impl JointMapConfig {
    pub fn to_map(self) -> JointMap {
        JointMap { neck: self.neck, nose: self.nose, left_eye: self.left_eye, right_eye: self.right_eye }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub min_coverage: f64,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig { min_coverage: FeatureOptions::default().min_coverage }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeSection {
    pub alpha_min_exp: f64,
    pub alpha_max_exp: f64,
    pub n_alphas: usize,
    pub n_folds: usize,
    pub n_repeats: usize,
}

impl Default for RidgeSection {
    fn default() -> Self {
        let d = RidgeConfig::default();
        RidgeSection { alpha_min_exp: -10.0, alpha_max_exp: 10.0, n_alphas: d.alpha_grid.len(), n_folds: d.n_folds, n_repeats: d.n_repeats }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupedSection {
    pub n_candidates: usize,
    pub concentrations: Vec<f64>,
}

impl Default for GroupedSection {
    fn default() -> Self {
        let d = GroupedSearchConfig::default();
        GroupedSection { n_candidates: d.n_candidates, concentrations: d.concentrations }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SrpSection {
    pub epsilon: f64,
    pub target_dim: usize,
}

impl Default for SrpSection {
    fn default() -> Self {
        let d = SrpConfig::default();
        SrpSection { epsilon: d.epsilon, target_dim: d.target_dim }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub n_perm: usize,
    pub n_splits: usize,
    /// Draws per parallel batch for sampled permutation tests.
    pub batch_size: usize,
    /// Feature sets compared against the embedding models in the unpaired test.
    pub pose_sets: Vec<String>,
}

impl Default for StatsSection {
    fn default() -> Self {
        StatsSection {
            n_perm: sociopose_core::stats::DEFAULT_PERMUTATIONS,
            n_splits: sociopose_core::stats::DEFAULT_SPLITS,
            batch_size: 500,
            pose_sets: vec!["joints3d".into(), "social3d".into(), "social2d".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemipartialSection {
    /// Column indices of social3d holding head positions.
    pub positions: Vec<usize>,
    /// Column indices of social3d holding head directions.
    pub directions: Vec<usize>,
}

impl Default for SemipartialSection {
    fn default() -> Self {
        SemipartialSection { positions: vec![0, 1, 2, 6, 7, 8], directions: vec![3, 4, 5, 9, 10, 11] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentRangeConfig {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub yaw: [f64; 2],
}

impl AgentRangeConfig {
    fn from_range(r: &PlacementRange) -> Self {
        AgentRangeConfig { x: [r.x.lo, r.x.hi], y: [r.y.lo, r.y.hi], z: [r.z.lo, r.z.hi], yaw: [r.yaw.lo, r.yaw.hi] }
    }

    fn to_range(&self) -> PlacementRange {
        let r = |v: [f64; 2]| Range1::new(v[0], v[1]);
        PlacementRange { x: r(self.x), y: r(self.y), z: r(self.z), yaw: r(self.yaw) }
    }
}

impl Default for AgentRangeConfig {
    fn default() -> Self {
        AgentRangeConfig::from_range(&SceneParams::default().agents[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Seed for scene, embedding and rater generation, kept apart from the
    /// analysis seed so geometry does not move when the analysis is reseeded.
    pub seed: u64,
    pub n_clips: usize,
    pub n_frames: usize,
    pub noise_sigma: f64,
    pub test_fraction: f64,
    pub agent_a: AgentRangeConfig,
    pub agent_b: AgentRangeConfig,
    pub n_models: usize,
    pub layers_per_model: usize,
    pub width: usize,
    /// Width of the last model's layers; 0 disables the wide model.
    pub wide_width: usize,
    pub embedding_noise: f64,
    pub n_raters: usize,
    pub rater_noise: f64,
    pub missing: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let scene = SceneParams::default();
        SynthSection {
            seed: 0,
            n_clips: 120,
            n_frames: 90,
            noise_sigma: 0.01,
            test_fraction: 0.25,
            agent_a: AgentRangeConfig::from_range(&scene.agents[0]),
            agent_b: AgentRangeConfig::from_range(&scene.agents[1]),
            n_models: 8,
            layers_per_model: 3,
            width: 32,
            wide_width: 5000,
            embedding_noise: 1.0,
            n_raters: 10,
            rater_noise: 0.8,
            missing: 0.1,
        }
    }
}

impl SynthSection {
    pub fn scene(&self) -> SceneParams {
        SceneParams {
            n_clips: self.n_clips,
            n_frames: self.n_frames,
            agents: [self.agent_a.to_range(), self.agent_b.to_range()],
            noise_sigma: self.noise_sigma,
            seed: self.seed,
            ..SceneParams::default()
        }
    }
}

impl RunConfig {
    pub fn ridge_config(&self) -> RidgeConfig {
        RidgeConfig {
            alpha_grid: log_alpha_grid(self.ridge.alpha_min_exp, self.ridge.alpha_max_exp, self.ridge.n_alphas),
            n_folds: self.ridge.n_folds,
            n_repeats: self.ridge.n_repeats,
            seed: self.seed,
        }
    }

    pub fn grouped_config(&self) -> GroupedSearchConfig {
        let r = self.ridge_config();
        GroupedSearchConfig {
            n_candidates: self.grouped.n_candidates,
            concentrations: self.grouped.concentrations.clone(),
            alpha_grid: r.alpha_grid,
            n_folds: r.n_folds,
            n_repeats: r.n_repeats,
            seed: self.seed,
        }
    }

    pub fn srp_config(&self) -> SrpConfig {
        SrpConfig { epsilon: self.srp.epsilon, target_dim: self.srp.target_dim, seed: self.seed }
    }

    pub fn feature_options(&self) -> FeatureOptions {
        FeatureOptions { min_coverage: self.features.min_coverage }
    }

    /// Checks every numeric setting; paths are checked by the stage that
    /// reads them.
    pub fn validate(&self) -> Result<()> {
        self.joint_map.to_map().validate()?;
        let cov = self.features.min_coverage;
        if !(cov > 0.0 && cov <= 1.0) {
            return Err(CliError::config(format!("features.min_coverage {cov} outside (0, 1]")));
        }
        if self.ridge.n_alphas == 0 {
            return Err(CliError::config("ridge.n_alphas must be at least 1"));
        }
        self.ridge_config().validate()?;
        self.grouped_config().validate()?;
        self.srp_config().validate()?;
        if self.stats.n_perm == 0 || self.stats.n_splits == 0 || self.stats.batch_size == 0 {
            return Err(CliError::config("stats.n_perm, stats.n_splits and stats.batch_size must be positive"));
        }
        self.semipartial_slices()?;
        self.synth.scene().validate()?;
        if !(self.synth.test_fraction > 0.0 && self.synth.test_fraction < 1.0) {
            return Err(CliError::config("synth.test_fraction must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `(positions, directions, combined)` column slices of social3d.
    pub fn semipartial_slices(&self) -> Result<[Vec<usize>; 3]> {
        let p = &self.semipartial.positions;
        let d = &self.semipartial.directions;
        if p.len() != 6 || d.len() != 6 {
            return Err(CliError::config(format!(
                "semipartial slices must have widths 6/6/12, found {}/{}/{}",
                p.len(),
                d.len(),
                p.len() + d.len()
            )));
        }
        let mut combined: Vec<usize> = p.iter().chain(d).copied().collect();
        combined.sort_unstable();
        combined.dedup();
        if combined.len() != 12 || combined.iter().any(|&c| c >= 12) {
            return Err(CliError::config("semipartial slices must cover social3d columns 0..12 exactly once"));
        }
        Ok([p.clone(), d.clone(), combined])
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }
}

/// A config plus the directory its relative paths are anchored to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    /// Reads `path` and applies `key=value` overrides (dotted keys, values
    /// in TOML syntax with bare strings allowed).
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut value: toml::Table = text.parse().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let config: RunConfig = toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base })
    }

    pub fn from_config(config: RunConfig, base: PathBuf) -> Result<Self> {
        config.validate()?;
        Ok(LoadedConfig { config, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn output(&self) -> PathBuf {
        self.resolve(&self.config.paths.output)
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| CliError::config(format!("override {spec:?} is not key=value")))?;
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| CliError::config(format!("override {key}: {p} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let c = RunConfig { seed: 9, ..RunConfig::default() };
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn overrides_and_validation() {
        let dir = std::env::temp_dir().join(format!("sociopose-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "seed = 3\n[ridge]\nn_folds = 4\n").unwrap();
        let loaded = LoadedConfig::load(&path, &["ridge.n_repeats=3".into(), "paths.output=elsewhere".into()]).unwrap();
        assert_eq!(loaded.config.seed, 3);
        assert_eq!((loaded.config.ridge.n_folds, loaded.config.ridge.n_repeats), (4, 3));
        assert_eq!(loaded.output(), dir.join("elsewhere"));
        let bad = LoadedConfig::load(&path, &["semipartial.positions=[0,1]".into()]).unwrap_err();
        assert_eq!(bad.exit_code(), 2);
        assert!(LoadedConfig::load(&path, &["nonsense=1".into()]).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
