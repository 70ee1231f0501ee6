//! Clip-level pose features from dyadic joint tracks.
//!
//! Every frame carries two agents, each with 45 root-relative joints, the
//! mesh-recovery camera translation and a metric depth from a second model.
//! The depth replaces the z component of the translation, joints are moved
//! into scene space, and three clip descriptors are produced by averaging
//! over frames:
//!
//! * `joints3d`: all joints of both agents, 45 x 3 x 2 = 270 values;
//! * `social3d`: head center and unit head direction per agent, 12 values;
//! * `social2d`: the same with z and dz removed, 8 values.
//!
//! Agents are put in a canonical order (leftmost mean head center first) so
//! the features do not depend on how the upstream tracker labelled them.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::math;

pub const N_JOINTS: usize = 45;
pub const N_AGENTS: usize = 2;
pub const JOINTS3D_LEN: usize = N_JOINTS * 3 * N_AGENTS;
pub const SOCIAL3D_LEN: usize = 6 * N_AGENTS;
pub const SOCIAL2D_LEN: usize = 4 * N_AGENTS;

/// Head directions shorter than this (before normalization) are rejected.
pub const MIN_DIRECTION_NORM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Vec3 { x, y, z }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Indices of the four joints the social descriptors are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointMap {
    pub neck: usize,
    pub nose: usize,
    pub left_eye: usize,
    pub right_eye: usize,
}

impl Default for JointMap {
    /// SMPL neck (12) plus the first three extended landmarks. The upstream
    /// regressor's extended ordering should be checked before trusting these.
    fn default() -> Self {
        JointMap { neck: 12, nose: 24, left_eye: 25, right_eye: 26 }
    }
}

impl JointMap {
    pub fn validate(&self) -> Result<(), PoseError> {
        let idx = [self.neck, self.nose, self.left_eye, self.right_eye];
        if let Some(&bad) = idx.iter().find(|&&i| i >= N_JOINTS) {
            return Err(PoseError::InvalidJointMap { reason: alloc::format!("index {bad} outside [0, {N_JOINTS})") });
        }
        for i in 0..idx.len() {
            for j in i + 1..idx.len() {
                if idx[i] == idx[j] {
                    return Err(PoseError::InvalidJointMap { reason: alloc::format!("index {} used twice", idx[i]) });
                }
            }
        }
        Ok(())
    }
}

/// One agent in one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentFrame {
    /// Root-relative joints, meters.
    pub joints: [Vec3; N_JOINTS],
    /// Camera-space translation from mesh recovery, meters.
    pub translation: Vec3,
    /// Metric depth from the bird's-eye-view model, meters.
    pub bev_depth: f64,
}

impl AgentFrame {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if let Some(j) = self.joints.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFiniteJoint(j));
        }
        if !self.translation.is_finite() {
            return Err(GeometryError::NonFiniteTranslation);
        }
        fuse_depth(self.translation, self.bev_depth).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointTrack {
    pub clip_id: String,
    pub frames: Vec<[AgentFrame; N_AGENTS]>,
}

impl JointTrack {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }
}

/// Per-frame head center and unit head direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialPose {
    pub position: Vec3,
    pub direction: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Joints3d,
    Social3d,
    Social2d,
    Embedding,
}

impl FeatureKind {
    pub fn expected_len(self) -> Option<usize> {
        match self {
            FeatureKind::Joints3d => Some(JOINTS3D_LEN),
            FeatureKind::Social3d => Some(SOCIAL3D_LEN),
            FeatureKind::Social2d => Some(SOCIAL2D_LEN),
            FeatureKind::Embedding => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Joints3d => "joints3d",
            FeatureKind::Social3d => "social3d",
            FeatureKind::Social2d => "social2d",
            FeatureKind::Embedding => "embedding",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeature {
    pub clip_id: String,
    pub kind: FeatureKind,
    pub values: Vec<f64>,
}

impl ClipFeature {
    pub fn new(clip_id: impl Into<String>, kind: FeatureKind, values: Vec<f64>) -> Result<Self, PoseError> {
        if let Some(expected) = kind.expected_len() {
            if values.len() != expected {
                return Err(PoseError::WrongLength { kind, expected, found: values.len() });
            }
        }
        Ok(ClipFeature { clip_id: clip_id.into(), kind, values })
    }
}

/// Context-free geometry failures; [`PoseError::Frame`] adds the location.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("depth {0} is not a positive finite number")]
    InvalidDepth(f64),
    #[error("joint {0} has non-finite coordinates")]
    NonFiniteJoint(usize),
    #[error("translation has non-finite coordinates")]
    NonFiniteTranslation,
    #[error("degenerate head direction (norm {0:e})")]
    DegenerateDirection(f64),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoseError {
    #[error("clip {clip}, frame {frame}, agent {agent}: {source}")]
    Frame { clip: String, frame: usize, agent: usize, source: GeometryError },

    #[error("clip {clip}: no frames")]
    EmptyTrack { clip: String },

    #[error("clip {clip}: only {valid} of {total} frames usable, below the coverage threshold ({first_failure})")]
    InsufficientCoverage { clip: String, valid: usize, total: usize, first_failure: Box<PoseError> },

    #[error("invalid joint map: {reason}")]
    InvalidJointMap { reason: String },

    #[error("{kind} feature must have {expected} values, found {found}")]
    WrongLength { kind: FeatureKind, expected: usize, found: usize },

    #[error("invalid coverage fraction {0}, expected a value in (0, 1]")]
    InvalidCoverage(f64),
}

/// Replaces the depth component of a mesh-recovery translation with the
/// metric depth.
pub fn fuse_depth(translation: Vec3, bev_depth: f64) -> Result<Vec3, GeometryError> {
    if !(bev_depth.is_finite() && bev_depth > 0.0) {
        return Err(GeometryError::InvalidDepth(bev_depth));
    }
    Ok(Vec3::new(translation.x, translation.y, bev_depth))
}

/// Joints in scene space: root-relative joints plus the fused translation.
pub fn absolute_joints(agent: &AgentFrame) -> Result<[Vec3; N_JOINTS], GeometryError> {
    agent.validate()?;
    let t = fuse_depth(agent.translation, agent.bev_depth)?;
    Ok(agent.joints.map(|j| j + t))
}

/// Midpoint of the two eye joints.
pub fn head_center(joints: &[Vec3; N_JOINTS], map: &JointMap) -> Vec3 {
    (joints[map.left_eye] + joints[map.right_eye]) * 0.5
}

/// Unit vector along the mean of (nose - head center) and (nose - neck).
/// The raw vectors are averaged before normalizing.
pub fn head_direction(joints: &[Vec3; N_JOINTS], map: &JointMap) -> Result<Vec3, GeometryError> {
    let nose = joints[map.nose];
    let v = ((nose - head_center(joints, map)) + (nose - joints[map.neck])) * 0.5;
    let norm = v.norm();
    if !(norm >= MIN_DIRECTION_NORM) {
        return Err(GeometryError::DegenerateDirection(norm));
    }
    Ok(v / norm)
}

/// Head center and direction of one agent in one frame, in scene space.
pub fn frame_social_pose(agent: &AgentFrame, map: &JointMap) -> Result<SocialPose, GeometryError> {
    let joints = absolute_joints(agent)?;
    Ok(SocialPose { position: head_center(&joints, map), direction: head_direction(&joints, map)? })
}

/// Frame-exclusion policy. `min_coverage = 1.0` rejects a clip on its first
/// bad frame; lower values drop bad frames as long as enough remain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    pub min_coverage: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions { min_coverage: 1.0 }
    }
}

/// All three descriptors of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipFeatures {
    pub clip_id: String,
    pub joints3d: ClipFeature,
    pub social3d: ClipFeature,
    pub social2d: ClipFeature,
    pub frames_used: usize,
    pub frames_total: usize,
    /// The input's agent 1 was placed first by canonical ordering.
    pub swapped: bool,
}

struct AgentAccumulator {
    joints: [Vec3; N_JOINTS],
    position: Vec3,
    direction: Vec3,
}

impl AgentAccumulator {
    fn new() -> Self {
        AgentAccumulator { joints: [Vec3::ZERO; N_JOINTS], position: Vec3::ZERO, direction: Vec3::ZERO }
    }
}

struct FrameAverages {
    agents: [AgentAccumulator; N_AGENTS],
    used: usize,
    total: usize,
}

fn accumulate(
    track: &JointTrack,
    map: &JointMap,
    opts: &FeatureOptions,
    with_direction: bool,
) -> Result<FrameAverages, PoseError> {
    map.validate()?;
    if !(opts.min_coverage > 0.0 && opts.min_coverage <= 1.0) {
        return Err(PoseError::InvalidCoverage(opts.min_coverage));
    }
    let total = track.frames.len();
    if total == 0 {
        return Err(PoseError::EmptyTrack { clip: track.clip_id.clone() });
    }
    let mut acc = [AgentAccumulator::new(), AgentAccumulator::new()];
    let mut used = 0usize;
    let mut first_failure: Option<PoseError> = None;

    'frames: for (f, frame) in track.frames.iter().enumerate() {
        let mut per_agent = [([Vec3::ZERO; N_JOINTS], SocialPose { position: Vec3::ZERO, direction: Vec3::ZERO }); N_AGENTS];
        for (a, agent) in frame.iter().enumerate() {
            let result = absolute_joints(agent).and_then(|j| {
                let direction = if with_direction { head_direction(&j, map)? } else { Vec3::ZERO };
                Ok((j, SocialPose { position: head_center(&j, map), direction }))
            });
            match result {
                Ok(v) => per_agent[a] = v,
                Err(source) => {
                    let err = PoseError::Frame { clip: track.clip_id.clone(), frame: f, agent: a, source };
                    if opts.min_coverage >= 1.0 {
                        return Err(err);
                    }
                    first_failure.get_or_insert(err);
                    continue 'frames;
                }
            }
        }
        used += 1;
        for (slot, (joints, pose)) in acc.iter_mut().zip(per_agent.iter()) {
            for (s, j) in slot.joints.iter_mut().zip(joints.iter()) {
                *s = *s + *j;
            }
            slot.position = slot.position + pose.position;
            slot.direction = slot.direction + pose.direction;
        }
    }

    if used == 0 || (used as f64) < opts.min_coverage * total as f64 {
        let first_failure = first_failure.unwrap_or(PoseError::EmptyTrack { clip: track.clip_id.clone() });
        return Err(PoseError::InsufficientCoverage {
            clip: track.clip_id.clone(),
            valid: used,
            total,
            first_failure: Box::new(first_failure),
        });
    }

    let n = used as f64;
    for slot in acc.iter_mut() {
        for j in slot.joints.iter_mut() {
            *j = *j / n;
        }
        slot.position = slot.position / n;
        slot.direction = slot.direction / n;
    }
    Ok(FrameAverages { agents: acc, used, total })
}

/// Ascending mean head-center x, then z; input order breaks exact ties.
fn canonical_order(avg: &FrameAverages) -> [usize; N_AGENTS] {
    let a = &avg.agents[0].position;
    let b = &avg.agents[1].position;
    let ord = a.x.total_cmp(&b.x).then(a.z.total_cmp(&b.z));
    if ord == Ordering::Greater {
        [1, 0]
    } else {
        [0, 1]
    }
}

fn social3d_values(avg: &FrameAverages, order: [usize; N_AGENTS]) -> Vec<f64> {
    let mut v = Vec::with_capacity(SOCIAL3D_LEN);
    for &a in &order {
        let agent = &avg.agents[a];
        v.extend_from_slice(&agent.position.to_array());
        v.extend_from_slice(&agent.direction.to_array());
    }
    v
}

fn joints3d_values(avg: &FrameAverages, order: [usize; N_AGENTS]) -> Vec<f64> {
    let mut v = Vec::with_capacity(JOINTS3D_LEN);
    for &a in &order {
        for j in avg.agents[a].joints.iter() {
            v.extend_from_slice(&j.to_array());
        }
    }
    v
}

/// Computes all three descriptors in one pass over the track.
pub fn extract_features(track: &JointTrack, map: &JointMap, opts: &FeatureOptions) -> Result<ClipFeatures, PoseError> {
    let avg = accumulate(track, map, opts, true)?;
    let order = canonical_order(&avg);
    let social3d = ClipFeature::new(track.clip_id.clone(), FeatureKind::Social3d, social3d_values(&avg, order))?;
    let social2d = project_2d(&social3d)?;
    let joints3d = ClipFeature::new(track.clip_id.clone(), FeatureKind::Joints3d, joints3d_values(&avg, order))?;
    Ok(ClipFeatures {
        clip_id: track.clip_id.clone(),
        joints3d,
        social3d,
        social2d,
        frames_used: avg.used,
        frames_total: avg.total,
        swapped: order[0] == 1,
    })
}

/// Temporal mean of head center and head direction per agent, 12 values.
/// Direction means are not renormalized.
pub fn clip_social_pose_3d(track: &JointTrack, map: &JointMap) -> Result<ClipFeature, PoseError> {
    let avg = accumulate(track, map, &FeatureOptions::default(), true)?;
    ClipFeature::new(track.clip_id.clone(), FeatureKind::Social3d, social3d_values(&avg, canonical_order(&avg)))
}

/// Temporal mean of every scene-space joint, 270 values. Head directions
/// are not needed here; the map only serves the agent ordering.
pub fn clip_joint_feature(track: &JointTrack, map: &JointMap) -> Result<ClipFeature, PoseError> {
    let avg = accumulate(track, map, &FeatureOptions::default(), false)?;
    ClipFeature::new(track.clip_id.clone(), FeatureKind::Joints3d, joints3d_values(&avg, canonical_order(&avg)))
}

/// Drops z and dz of each agent: `(x, y, z, dx, dy, dz) -> (x, y, dx, dy)`.
pub fn project_2d(feature: &ClipFeature) -> Result<ClipFeature, PoseError> {
    if feature.values.len() != SOCIAL3D_LEN {
        return Err(PoseError::WrongLength {
            kind: FeatureKind::Social3d,
            expected: SOCIAL3D_LEN,
            found: feature.values.len(),
        });
    }
    let values = feature
        .values
        .chunks_exact(6)
        .flat_map(|a| [a[0], a[1], a[3], a[4]])
        .collect();
    ClipFeature::new(feature.clip_id.clone(), FeatureKind::Social2d, values)
}
