//! Synthetic dyadic scenes with known geometry, plus matching synthetic
//! embeddings and raters.
//!
//! A scene places two copies of a fixed upright skeleton. The placement
//! position is the head center, which sits on the skeleton's vertical axis,
//! so yaw changes the head direction without moving the head center. The
//! template faces `+z`; after yaw `θ` the head direction is
//! `(sin θ, 0, cos θ)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pose::{self, AgentFrame, JointMap, JointTrack, Vec3, N_AGENTS, N_JOINTS};
use crate::stats::RaterTable;
use crate::{math, seed};

pub const JOINT_NAMES: [&str; N_JOINTS] = [
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee", "spine2", "left_ankle",
    "right_ankle", "spine3", "left_foot", "right_foot", "neck", "left_collar", "right_collar", "head",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist", "left_hand",
    "right_hand", "nose", "left_eye", "right_eye", "left_ear", "right_ear", "left_big_toe", "left_small_toe",
    "left_heel", "right_big_toe", "right_small_toe", "right_heel", "left_thumb", "left_index", "left_middle",
    "left_ring", "left_pinky", "right_thumb", "right_index", "right_middle", "right_ring", "right_pinky",
];

/// Offsets from the pelvis in meters, `y` up, facing `+z`.
const TEMPLATE: [[f64; 3]; N_JOINTS] = [
    [0.0, 0.0, 0.0],
    [0.09, -0.08, 0.0],
    [-0.09, -0.08, 0.0],
    [0.0, 0.12, -0.01],
    [0.10, -0.48, 0.01],
    [-0.10, -0.48, 0.01],
    [0.0, 0.26, -0.01],
    [0.10, -0.88, -0.03],
    [-0.10, -0.88, -0.03],
    [0.0, 0.32, 0.0],
    [0.11, -0.94, 0.09],
    [-0.11, -0.94, 0.09],
    [0.0, 0.5625, 0.0],
    [0.07, 0.46, 0.0],
    [-0.07, 0.46, 0.0],
    [0.0, 0.70, 0.02],
    [0.18, 0.45, -0.01],
    [-0.18, 0.45, -0.01],
    [0.22, 0.18, -0.03],
    [-0.22, 0.18, -0.03],
    [0.24, -0.07, 0.0],
    [-0.24, -0.07, 0.0],
    [0.25, -0.15, 0.01],
    [-0.25, -0.15, 0.01],
    [0.0, 0.625, 0.125],
    [0.03125, 0.6875, 0.0],
    [-0.03125, 0.6875, 0.0],
    [0.075, 0.63, -0.06],
    [-0.075, 0.63, -0.06],
    [0.09, -0.96, 0.16],
    [0.14, -0.96, 0.13],
    [0.10, -0.96, -0.06],
    [-0.09, -0.96, 0.16],
    [-0.14, -0.96, 0.13],
    [-0.10, -0.96, -0.06],
    [0.23, -0.10, 0.04],
    [0.26, -0.20, 0.03],
    [0.25, -0.21, 0.02],
    [0.24, -0.20, 0.01],
    [0.23, -0.18, 0.0],
    [-0.23, -0.10, 0.04],
    [-0.26, -0.20, 0.03],
    [-0.25, -0.21, 0.02],
    [-0.24, -0.20, 0.01],
    [-0.23, -0.18, 0.0],
];

/// Head center of the template relative to the pelvis.
pub const HEAD_OFFSET: Vec3 = Vec3::new(0.0, 0.6875, 0.0);

pub fn template() -> [Vec3; N_JOINTS] {
    TEMPLATE.map(|[x, y, z]| Vec3::new(x, y, z))
}

/// Head direction after a yaw of `yaw` radians about the vertical axis.
pub fn forward(yaw: f64) -> Vec3 {
    Vec3::new(math::sin(yaw), 0.0, math::cos(yaw))
}

fn rotate_y(v: Vec3, yaw: f64) -> Vec3 {
    let (s, c) = (math::sin(yaw), math::cos(yaw));
    Vec3::new(c * v.x + s * v.z, v.y, -s * v.x + c * v.z)
}

/// Head center and yaw of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub position: Vec3,
    pub yaw: f64,
}

impl Placement {
    pub fn new(position: Vec3, yaw: f64) -> Self {
        Placement { position, yaw }
    }

    /// Pelvis position in camera coordinates.
    pub fn root(&self) -> Vec3 {
        self.position - rotate_y(HEAD_OFFSET, self.yaw)
    }

    /// Root-relative joints.
    pub fn joints(&self) -> [Vec3; N_JOINTS] {
        template().map(|j| rotate_y(j, self.yaw))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range1 {
    pub lo: f64,
    pub hi: f64,
}

impl Range1 {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range1 { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Range1 { lo: v, hi: v }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * rng.random::<f64>()
        }
    }

    fn valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Where one agent's head center and yaw are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementRange {
    pub x: Range1,
    pub y: Range1,
    pub z: Range1,
    pub yaw: Range1,
}

impl PlacementRange {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Placement {
        let p = Vec3::new(self.x.sample(rng), self.y.sample(rng), self.z.sample(rng));
        Placement::new(p, self.yaw.sample(rng))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneParams {
    pub n_clips: usize,
    pub n_frames: usize,
    pub agents: [PlacementRange; N_AGENTS],
    /// Joint jitter standard deviation in meters.
    pub noise_sigma: f64,
    /// Multiplier range applied to the root depth to form the mesh
    /// translation's `z`, which depth fusion discards.
    pub depth_bias: Range1,
    /// Smallest allowed head-center separation.
    pub min_separation: f64,
    pub seed: u64,
}

impl Default for SceneParams {
    fn default() -> Self {
        let pi = core::f64::consts::PI;
        let agent = |x: Range1| PlacementRange { x, y: Range1::new(-0.2, 0.2), z: Range1::new(2.0, 6.0), yaw: Range1::new(-pi, pi) };
        SceneParams {
            n_clips: 50,
            n_frames: 90,
            agents: [agent(Range1::new(-1.5, -0.3)), agent(Range1::new(0.3, 1.5))],
            noise_sigma: 0.0,
            depth_bias: Range1::new(0.7, 1.3),
            min_separation: 0.3,
            seed: 0,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::invalid("n_frames", "must be at least 1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma", "must be finite and non-negative"));
        }
        let ranges = self.agents.iter().flat_map(|a| [a.x, a.y, a.z, a.yaw]).chain([self.depth_bias]);
        if ranges.clone().any(|r| !r.valid()) {
            return Err(Error::invalid("placement", "ranges need finite lo <= hi"));
        }
        if self.depth_bias.lo <= 0.0 {
            return Err(Error::invalid("depth_bias", "must be positive"));
        }
        if !(self.min_separation.is_finite() && self.min_separation > 0.0) {
            return Err(Error::invalid("min_separation", "must be positive"));
        }
        Ok(())
    }
}

/// Ground-truth relations between the two head centers and directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticTargets {
    pub distance: f64,
    pub facing: f64,
    pub depth_gap: f64,
}

impl AnalyticTargets {
    pub const NAMES: [&'static str; 3] = ["distance", "facing", "depth_gap"];

    pub fn to_array(&self) -> [f64; 3] {
        [self.distance, self.facing, self.depth_gap]
    }
}

pub fn analytic_targets(placements: &[Placement; N_AGENTS]) -> Result<AnalyticTargets> {
    let [a, b] = placements;
    let delta = b.position - a.position;
    let distance = delta.norm();
    if !(distance > 0.0) {
        return Err(Error::invalid("placements", "head centers coincide"));
    }
    let u = delta / distance;
    let facing = 0.5 * (forward(a.yaw).dot(u) + forward(b.yaw).dot(-u));
    Ok(AnalyticTargets { distance, facing, depth_gap: (a.position.z - b.position.z).abs() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticClip {
    pub track: JointTrack,
    pub placements: [Placement; N_AGENTS],
    pub targets: AnalyticTargets,
}

const MAX_RETRIES: usize = 100;

pub fn clip_id(index: usize) -> String {
    format!("clip{index:04}")
}

/// One clip; the stream is `hash(seed, "synth", index)` so clips can be
/// generated in any order.
pub fn gen_clip(params: &SceneParams, index: usize) -> Result<SyntheticClip> {
    let mut rng = seed::stream_rng(params.seed, "synth", index as u64);
    let map = JointMap::default();
    let mut placements = None;
    for _ in 0..MAX_RETRIES {
        let p = [params.agents[0].sample(&mut rng), params.agents[1].sample(&mut rng)];
        if (p[1].position - p[0].position).norm() >= params.min_separation {
            placements = Some(p);
            break;
        }
    }
    let placements = placements.ok_or(Error::NoConvergence { what: "agent placement", iterations: MAX_RETRIES })?;
    let biases = [params.depth_bias.sample(&mut rng), params.depth_bias.sample(&mut rng)];
    let noise = Normal::new(0.0, params.noise_sigma).map_err(|_| Error::invalid("noise_sigma", "bad value"))?;

    let mut frames = Vec::with_capacity(params.n_frames);
    for _ in 0..params.n_frames {
        let mut frame = [AgentFrame { joints: [Vec3::ZERO; N_JOINTS], translation: Vec3::ZERO, bev_depth: 1.0 }; N_AGENTS];
        for (slot, (p, bias)) in frame.iter_mut().zip(placements.iter().zip(biases)) {
            let root = p.root();
            if !(root.z > 0.0) {
                return Err(Error::invalid("placement", format!("root depth {} is not in front of the camera", root.z)));
            }
            let clean = p.joints();
            let mut joints = clean;
            if params.noise_sigma > 0.0 {
                let mut ok = false;
                for _ in 0..MAX_RETRIES {
                    for (j, c) in joints.iter_mut().zip(&clean) {
                        *j = *c + Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                    }
                    if pose::head_direction(&joints, &map).is_ok() {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    return Err(Error::NoConvergence { what: "noisy head direction", iterations: MAX_RETRIES });
                }
            }
            *slot = AgentFrame { joints, translation: Vec3::new(root.x, root.y, root.z * bias), bev_depth: root.z };
        }
        frames.push(frame);
    }
    Ok(SyntheticClip {
        track: JointTrack { clip_id: clip_id(index), frames },
        placements,
        targets: analytic_targets(&placements)?,
    })
}

pub fn gen_scene(params: &SceneParams) -> Result<Vec<SyntheticClip>> {
    params.validate()?;
    (0..params.n_clips).map(|i| gen_clip(params, i)).collect()
}

/// Shape of a synthetic model zoo whose layers carry the targets linearly
/// at model-specific strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpec {
    pub n_models: usize,
    pub layers_per_model: usize,
    pub width: usize,
    /// Width of the last model's layers, to exercise projection.
    pub wide_width: Option<usize>,
    pub noise: f64,
    pub seed: u64,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec { n_models: 16, layers_per_model: 3, width: 64, wide_width: Some(5000), noise: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    pub id: String,
    pub layers: Vec<(String, Matrix)>,
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Layers `T · M · s + noise`, with `T` the standardized targets, `M`
/// Gaussian, and `s` rising through the layers of each model.
pub fn gen_embeddings(targets: &Matrix, spec: &EmbeddingSpec) -> Result<Vec<SyntheticModel>> {
    if spec.n_models == 0 || spec.layers_per_model == 0 || spec.width == 0 {
        return Err(Error::invalid("embeddings", "need at least one model, layer and column"));
    }
    if !(spec.noise.is_finite() && spec.noise >= 0.0) {
        return Err(Error::invalid("noise", "must be finite and non-negative"));
    }
    let t = crate::ridge::zscore_fit(targets)?.apply(targets)?;
    let n = t.rows();
    let mut out = Vec::with_capacity(spec.n_models);
    for m in 0..spec.n_models {
        let mut rng = seed::stream_rng(spec.seed, "embedding", m as u64);
        let strength = 0.2 + 1.3 * rng.random::<f64>();
        let width = match spec.wide_width {
            Some(w) if m + 1 == spec.n_models => w,
            _ => spec.width,
        };
        let mut layers = Vec::with_capacity(spec.layers_per_model);
        for l in 0..spec.layers_per_model {
            let scale = strength * (l + 1) as f64 / spec.layers_per_model as f64;
            let mix = gaussian(t.cols(), width, &mut rng);
            let mut x = t.matmul(&mix)?;
            x.scale(scale);
            let noise = gaussian(n, width, &mut rng);
            for (v, e) in x.as_mut_slice().iter_mut().zip(noise.as_slice()) {
                *v += spec.noise * e;
            }
            layers.push((format!("layer{l}"), x));
        }
        out.push(SyntheticModel { id: format!("dnn{m:02}"), layers });
    }
    Ok(out)
}

/// Raters who see each target column mapped onto a 1 to 5 scale, plus
/// Gaussian noise; each rating is missing with probability `missing`.
pub fn gen_raters(
    clip_ids: &[String],
    targets: &Matrix,
    dim_names: &[String],
    n_raters: usize,
    noise: f64,
    missing: f64,
    seed_value: u64,
) -> Result<Vec<RaterTable>> {
    if clip_ids.len() != targets.rows() || dim_names.len() != targets.cols() {
        return Err(Error::Shape { op: "gen_raters", expected: (clip_ids.len(), dim_names.len()), found: targets.shape() });
    }
    if n_raters < 2 || !(0.0..1.0).contains(&missing) || !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::invalid("raters", "need >= 2 raters, missing in [0, 1), noise >= 0"));
    }
    let rater_ids: Vec<String> = (0..n_raters).map(|r| format!("rater{r:02}")).collect();
    let mut tables = Vec::with_capacity(dim_names.len());
    for (c, dim) in dim_names.iter().enumerate() {
        let col = targets.col_to_vec(c);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut rng = seed::stream_rng(seed_value, "raters", c as u64);
        let mut values = Vec::with_capacity(col.len() * n_raters);
        for v in &col {
            let base = 1.0 + 4.0 * (v - lo) / span;
            for _ in 0..n_raters {
                let e: f64 = StandardNormal.sample(&mut rng);
                let keep = rng.random::<f64>() >= missing;
                values.push(keep.then(|| (base + noise * e).clamp(1.0, 5.0)));
            }
        }
        tables.push(RaterTable::new(dim.clone(), clip_ids.to_vec(), rater_ids.clone(), values)?);
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn template_matches_joint_map() {
        let t = template();
        let map = JointMap::default();
        assert_eq!(JOINT_NAMES[map.neck], "neck");
        assert_eq!(JOINT_NAMES[map.nose], "nose");
        assert_eq!(JOINT_NAMES[map.left_eye], "left_eye");
        assert_eq!(JOINT_NAMES[map.right_eye], "right_eye");
        assert_eq!(pose::head_center(&t, &map), HEAD_OFFSET);
        assert_eq!(pose::head_direction(&t, &map).unwrap(), Vec3::new(0.0, 0.0, 1.0));
        let (l, r) = (t[map.left_eye], t[map.right_eye]);
        assert_eq!((l.x, l.y, l.z), (-r.x, r.y, r.z));
        assert!(t[map.nose].z > 0.0);
    }

    #[test]
    fn facing_examples() {
        let p = |z: f64, yaw: f64| Placement::new(Vec3::new(0.0, 0.0, z), yaw);
        let head_on = analytic_targets(&[p(2.0, 0.0), p(5.0, PI)]).unwrap();
        assert!((head_on.facing - 1.0).abs() < 1e-12);
        assert!((head_on.distance - 3.0).abs() < 1e-12);
        assert!((head_on.depth_gap - 3.0).abs() < 1e-12);
        assert!(analytic_targets(&[p(2.0, 0.0), p(5.0, 0.0)]).unwrap().facing.abs() < 1e-12);
        assert!((analytic_targets(&[p(2.0, PI), p(5.0, 0.0)]).unwrap().facing + 1.0).abs() < 1e-12);
        assert!(analytic_targets(&[p(2.0, 0.0), p(2.0, 1.0)]).is_err());
    }

    #[test]
    fn translation_leaves_targets_unchanged() {
        let a = Placement::new(Vec3::new(-0.4, 0.1, 3.0), 0.3);
        let b = Placement::new(Vec3::new(0.7, -0.1, 4.5), -2.0);
        let shift = Vec3::new(5.0, -1.0, 2.0);
        let t0 = analytic_targets(&[a, b]).unwrap();
        let moved = [Placement::new(a.position + shift, a.yaw), Placement::new(b.position + shift, b.yaw)];
        let t1 = analytic_targets(&moved).unwrap();
        assert!((t0.distance - t1.distance).abs() < 1e-12);
        assert!((t0.facing - t1.facing).abs() < 1e-12);
        assert!((t0.depth_gap - t1.depth_gap).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_yaw_zero_recovers_forward_axis() {
        let mut params = SceneParams { n_clips: 1, n_frames: 2, ..SceneParams::default() };
        for a in &mut params.agents {
            a.yaw = Range1::fixed(0.0);
        }
        let clip = gen_clip(&params, 0).unwrap();
        let map = JointMap::default();
        for agent in &clip.track.frames[0] {
            let joints = pose::absolute_joints(agent).unwrap();
            let d = pose::head_direction(&joints, &map).unwrap();
            assert!((d - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn deterministic_and_noisy_generation() {
        let params = SceneParams { n_clips: 3, n_frames: 4, noise_sigma: 0.01, seed: 8, ..SceneParams::default() };
        let a = gen_scene(&params).unwrap();
        assert_eq!(a, gen_scene(&params).unwrap());
        assert_ne!(a, gen_scene(&SceneParams { seed: 9, ..params.clone() }).unwrap());
        assert!(gen_scene(&SceneParams { n_frames: 0, ..params.clone() }).is_err());
        assert!(gen_scene(&SceneParams { noise_sigma: -1.0, ..params }).is_err());
    }

    #[test]
    fn embeddings_and_raters_shapes() {
        let targets = Matrix::from_fn(10, 2, |r, c| (r * (c + 1)) as f64);
        let spec = EmbeddingSpec { n_models: 3, layers_per_model: 2, width: 5, wide_width: Some(9), ..EmbeddingSpec::default() };
        let models = gen_embeddings(&targets, &spec).unwrap();
        assert_eq!(models.len(), 3);
        assert_eq!(models[0].layers[1].1.shape(), (10, 5));
        assert_eq!(models[2].layers[0].1.shape(), (10, 9));
        let ids: Vec<String> = (0..10).map(clip_id).collect();
        let dims = [String::from("a"), String::from("b")];
        let tables = gen_raters(&ids, &targets, &dims, 4, 0.5, 0.1, 1).unwrap();
        assert_eq!(tables.len(), 2);
        assert!(tables[0].clip_means().iter().flatten().all(|m| (1.0..=5.0).contains(m)));
    }
}
