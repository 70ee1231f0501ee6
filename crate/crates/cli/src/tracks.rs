//! Joint tracks on disk.
//!
//! CSV form is two files: `clip_id,frame,agent,joint,x,y,z` with one row per
//! root-relative joint, and `clip_id,frame,agent,tx,ty,tz,bev_depth` with one
//! row per agent and frame. The JSON form holds both in one document:
//!
//! ```json
//! {"clips": [{"clip_id": "c1", "frames": [{"agents": [
//!     {"joints": [[x, y, z], ...], "translation": [x, y, z], "bev_depth": 3.2},
//!     {...}]}]}]}
//! ```
//!
//! Malformed rows abort the read. A clip whose frames are structurally
//! incomplete (a missing joint, agent or depth row) is not an error; it is
//! returned as a rejection with the reason.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sociopose_core::pose::{AgentFrame, JointTrack, Vec3, N_AGENTS, N_JOINTS};

use crate::error::{CliError, Result};
use crate::tables::{fmt_f64, parse_f64, reader, unmatched, CsvOut};

pub const JOINT_HEADER: [&str; 7] = ["clip_id", "frame", "agent", "joint", "x", "y", "z"];
pub const DEPTH_HEADER: [&str; 7] = ["clip_id", "frame", "agent", "tx", "ty", "tz", "bev_depth"];

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub clip_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackSet {
    /// Sorted by clip id.
    pub tracks: Vec<JointTrack>,
    pub rejected: Vec<Rejection>,
}

#[derive(Clone)]
struct FrameSlots {
    joints: [[Option<Vec3>; N_JOINTS]; N_AGENTS],
    depth: [Option<(Vec3, f64)>; N_AGENTS],
}

impl Default for FrameSlots {
    fn default() -> Self {
        FrameSlots { joints: [[None; N_JOINTS]; N_AGENTS], depth: [None; N_AGENTS] }
    }
}

impl FrameSlots {
    fn assemble(&self, frame: usize) -> std::result::Result<[AgentFrame; N_AGENTS], String> {
        let mut out = [AgentFrame { joints: [Vec3::ZERO; N_JOINTS], translation: Vec3::ZERO, bev_depth: 0.0 }; N_AGENTS];
        for (a, slot) in out.iter_mut().enumerate() {
            let missing: Vec<String> =
                (0..N_JOINTS).filter(|&j| self.joints[a][j].is_none()).map(|j| j.to_string()).collect();
            if !missing.is_empty() {
                return Err(format!("frame {frame}, agent {a}: missing joints {}", missing.join(" ")));
            }
            let (t, d) = self.depth[a].ok_or_else(|| format!("frame {frame}, agent {a}: missing depth row"))?;
            *slot = AgentFrame { joints: self.joints[a].map(|j| j.expect("checked")), translation: t, bev_depth: d };
        }
        Ok(out)
    }
}

fn expect_header(path: &Path, rdr: &mut csv::Reader<fs::File>, want: &[&str]) -> Result<()> {
    let h = rdr.headers().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    if h.iter().collect::<Vec<_>>() != want {
        return Err(CliError::data(format!("{}: header must be {}", path.display(), want.join(","))));
    }
    Ok(())
}

fn parse_index(path: &Path, line: u64, column: &str, raw: &str, bound: Option<usize>) -> Result<usize> {
    let v: usize = raw
        .parse()
        .map_err(|_| CliError::data(format!("{}:{line}: column {column}: {raw:?} is not an index", path.display())))?;
    if let Some(b) = bound {
        if v >= b {
            return Err(CliError::data(format!("{}:{line}: column {column}: {v} outside [0, {b})", path.display())));
        }
    }
    Ok(v)
}

type Slots = BTreeMap<String, BTreeMap<usize, FrameSlots>>;

/// Reads the CSV pair. Clip ids must match between the two files.
pub fn read_csv(joints: &Path, depths: &Path) -> Result<TrackSet> {
    let mut slots: Slots = BTreeMap::new();
    let mut rdr = reader(joints)?;
    expect_header(joints, &mut rdr, &JOINT_HEADER)?;
    let mut joint_clips = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: malformed CSV: {e}", joints.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let frame = parse_index(joints, line, "frame", &rec[1], None)?;
        let agent = parse_index(joints, line, "agent", &rec[2], Some(N_AGENTS))?;
        let joint = parse_index(joints, line, "joint", &rec[3], Some(N_JOINTS))?;
        let p = Vec3::new(
            parse_f64(joints, line, "x", &rec[4])?,
            parse_f64(joints, line, "y", &rec[5])?,
            parse_f64(joints, line, "z", &rec[6])?,
        );
        joint_clips.insert(rec[0].to_string());
        let cell = &mut slots.entry(rec[0].to_string()).or_default().entry(frame).or_default().joints[agent][joint];
        if cell.replace(p).is_some() {
            return Err(CliError::data(format!("{}:{line}: duplicate joint row", joints.display())));
        }
    }

    let mut rdr = reader(depths)?;
    expect_header(depths, &mut rdr, &DEPTH_HEADER)?;
    let mut depth_clips = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: malformed CSV: {e}", depths.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let frame = parse_index(depths, line, "frame", &rec[1], None)?;
        let agent = parse_index(depths, line, "agent", &rec[2], Some(N_AGENTS))?;
        let t = Vec3::new(
            parse_f64(depths, line, "tx", &rec[3])?,
            parse_f64(depths, line, "ty", &rec[4])?,
            parse_f64(depths, line, "tz", &rec[5])?,
        );
        let d = parse_f64(depths, line, "bev_depth", &rec[6])?;
        depth_clips.insert(rec[0].to_string());
        let cell = &mut slots.entry(rec[0].to_string()).or_default().entry(frame).or_default().depth[agent];
        if cell.replace((t, d)).is_some() {
            return Err(CliError::data(format!("{}:{line}: duplicate depth row", depths.display())));
        }
    }

    let only_one: BTreeSet<&str> = joint_clips.symmetric_difference(&depth_clips).map(String::as_str).collect();
    if !only_one.is_empty() {
        return Err(unmatched("joint and depth files disagree", &only_one));
    }
    Ok(assemble(slots))
}

fn assemble(slots: Slots) -> TrackSet {
    let mut set = TrackSet::default();
    for (clip_id, frames) in slots {
        let built: std::result::Result<Vec<_>, String> = frames.iter().map(|(&f, s)| s.assemble(f)).collect();
        match built {
            Ok(frames) => set.tracks.push(JointTrack { clip_id, frames }),
            Err(reason) => set.rejected.push(Rejection { clip_id, reason }),
        }
    }
    set
}

pub fn write_csv(joints: &Path, depths: &Path, tracks: &[JointTrack]) -> Result<()> {
    let mut j = CsvOut::new(&JOINT_HEADER);
    let mut d = CsvOut::new(&DEPTH_HEADER);
    for t in tracks {
        for (f, frame) in t.frames.iter().enumerate() {
            let (fs, id) = (f.to_string(), t.clip_id.as_str());
            for (a, agent) in frame.iter().enumerate() {
                let a_s = a.to_string();
                for (k, p) in agent.joints.iter().enumerate() {
                    j.row(&[id, &fs, &a_s, &k.to_string(), &fmt_f64(p.x), &fmt_f64(p.y), &fmt_f64(p.z)]);
                }
                let tr = agent.translation;
                d.row(&[id, &fs, &a_s, &fmt_f64(tr.x), &fmt_f64(tr.y), &fmt_f64(tr.z), &fmt_f64(agent.bev_depth)]);
            }
        }
    }
    j.write(joints)?;
    d.write(depths)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonAgent {
    joints: Vec<[f64; 3]>,
    translation: [f64; 3],
    bev_depth: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonFrame {
    agents: Vec<JsonAgent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonClip {
    clip_id: String,
    frames: Vec<JsonFrame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTracks {
    clips: Vec<JsonClip>,
}

pub fn read_json(path: &Path) -> Result<TrackSet> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: JsonTracks = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}:{}: malformed JSON: {e}", path.display(), e.line())))?;
    let mut slots: Slots = BTreeMap::new();
    for clip in doc.clips {
        if slots.contains_key(&clip.clip_id) {
            return Err(CliError::data(format!("{}: duplicate clip id {}", path.display(), clip.clip_id)));
        }
        let id = clip.clip_id.clone();
        let frames = slots.entry(clip.clip_id).or_default();
        for (f, frame) in clip.frames.into_iter().enumerate() {
            let too_many = frame.agents.len() > N_AGENTS || frame.agents.iter().any(|a| a.joints.len() > N_JOINTS);
            if too_many {
                return Err(CliError::data(format!(
                    "{}: clip {id}, frame {f}: more than {N_AGENTS} agents or {N_JOINTS} joints",
                    path.display()
                )));
            }
            let s = frames.entry(f).or_default();
            for (a, agent) in frame.agents.into_iter().enumerate() {
                for (k, p) in agent.joints.into_iter().enumerate() {
                    s.joints[a][k] = Some(p.into());
                }
                s.depth[a] = Some((agent.translation.into(), agent.bev_depth));
            }
        }
    }
    Ok(assemble(slots))
}

pub fn write_json(path: &Path, tracks: &[JointTrack]) -> Result<()> {
    let doc = JsonTracks {
        clips: tracks
            .iter()
            .map(|t| JsonClip {
                clip_id: t.clip_id.clone(),
                frames: t
                    .frames
                    .iter()
                    .map(|fr| JsonFrame {
                        agents: fr
                            .iter()
                            .map(|a| JsonAgent {
                                joints: a.joints.iter().map(|p| p.to_array()).collect(),
                                translation: a.translation.to_array(),
                                bev_depth: a.bev_depth,
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
    };
    crate::tables::create_parent(path)?;
    let text = serde_json::to_string(&doc).map_err(|e| CliError::data(e.to_string()))?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// JSON when `joints` ends in `.json`, otherwise the CSV pair.
pub fn read(joints: &Path, depths: &Path) -> Result<TrackSet> {
    if joints.extension().is_some_and(|e| e == "json") {
        read_json(joints)
    } else {
        read_csv(joints, depths)
    }
}
