//! Tidy figure-data CSVs. Nothing is plotted.
//!
//! * `fig2.csv`: per rating dim, a bar for the model mean and for joints3d,
//!   plus one dot per model, with the reliability ceiling and the unpaired p.
//! * `fig3.csv`: the three pose feature sets per rating dim.
//! * `figS1.csv`: semi-partial r of the full set under each control.
//! * `fig4.csv`: per model and dim, the model alone against the model fused
//!   with pose features, and a bar row with means, improved count and the
//!   paired p.
//! * `fig5.csv`: per model, mean rating r against mean pose-prediction r,
//!   with the correlation across models in footer rows.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use sociopose_core::stats::score_relationship;

use super::encode::{POSE_SETS, PREDICTED_SETS};
use super::permtest::grouped_model_id;
use crate::config::LoadedConfig;
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::run::{layout, Stage};
use crate::tables::{fmt_f64, read_scores, reader, CsvOut, ScoreRow};

pub const FIG2_HEADER: [&str; 6] = ["rating_dim", "kind", "feature_set", "r", "ceiling", "p"];
pub const FIG3_HEADER: [&str; 4] = ["rating_dim", "feature_set", "r", "ceiling"];
pub const FIG_S1_HEADER: [&str; 4] = ["rating_dim", "condition", "r", "ceiling"];
pub const FIG4_HEADER: [&str; 9] =
    ["rating_dim", "kind", "feature_set", "r_model", "r_grouped", "delta_r", "n_improved", "ceiling", "p"];
pub const FIG5_HEADER: [&str; 6] = ["kind", "target_set", "model", "rating_r", "pose_r", "relationship_r"];

/// Rows of a CSV as `column -> value` maps.
fn read_table(path: &Path) -> Result<Vec<HashMap<String, String>>> {
    let mut rdr = reader(path)?;
    let header: Vec<String> =
        rdr.headers().map_err(|e| CliError::data(format!("{}: {e}", path.display())))?.iter().map(String::from).collect();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        out.push(header.iter().cloned().zip(rec.iter().map(String::from)).collect());
    }
    Ok(out)
}

fn field<'a>(row: &'a HashMap<String, String>, key: &str, path: &Path) -> Result<&'a str> {
    row.get(key).map(String::as_str).ok_or_else(|| CliError::data(format!("{}: missing column {key}", path.display())))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

struct Scores<'a> {
    /// `(feature set, dim) -> r`
    r: BTreeMap<(&'a str, &'a str), f64>,
    dims: Vec<&'a str>,
}

impl<'a> Scores<'a> {
    fn new(rows: &'a [ScoreRow]) -> Self {
        let mut dims = Vec::new();
        let mut r = BTreeMap::new();
        for row in rows {
            if !dims.contains(&row.rating_dim.as_str()) {
                dims.push(row.rating_dim.as_str());
            }
            r.insert((row.feature_set.as_str(), row.rating_dim.as_str()), row.r_test);
        }
        Scores { r, dims }
    }

    fn get(&self, set: &str, dim: &str) -> Option<f64> {
        self.r.get(&(set, dim)).copied()
    }

    fn sets(&self) -> Vec<&'a str> {
        let mut s: Vec<&str> = self.r.keys().map(|k| k.0).collect();
        s.dedup();
        s
    }
}

pub fn run(cfg: LoadedConfig) -> Result<Manifest> {
    let mut stage = Stage::new(cfg, "report");
    let enc_path = stage.upstream(layout::ENCODING, "encode")?;
    let pose_path = stage.upstream(layout::POSE_PREDICTION, "encode")?;
    let grouped_path = stage.upstream(layout::GROUPED, "encode-grouped")?;
    let semi_path = stage.upstream(layout::SEMIPARTIAL, "semipartial")?;
    let rel_path = stage.upstream(layout::RELIABILITY, "reliability")?;

    let enc_rows = read_scores(&enc_path)?;
    let enc = Scores::new(&enc_rows);
    let models: Vec<&str> = enc.sets().into_iter().filter(|s| !POSE_SETS.contains(s)).collect();
    if models.is_empty() {
        log::warn!("no embedding models in {}; model figures will be header-only", enc_path.display());
    }
    let mut ceiling: HashMap<String, f64> = HashMap::new();
    for row in read_table(&rel_path)? {
        let r = field(&row, "r_split_half", &rel_path)?;
        ceiling.insert(field(&row, "rating_dim", &rel_path)?.to_string(), r.parse().unwrap_or(f64::NAN));
    }
    let ceil = |dim: &str| opt(ceiling.get(dim).copied());
    let perm_path = stage.output_path(layout::PERMTEST);
    let mut p_values: HashMap<String, f64> = HashMap::new();
    if perm_path.exists() {
        for row in read_table(&perm_path)? {
            let p = field(&row, "p", &perm_path)?.parse().unwrap_or(f64::NAN);
            p_values.insert(field(&row, "test", &perm_path)?.to_string(), p);
        }
    } else {
        log::warn!("no permutation results; p columns will be empty");
    }

    // fig 2
    let mut fig2 = CsvOut::new(&FIG2_HEADER);
    if !models.is_empty() {
        for &dim in &enc.dims {
            let model_r: Vec<f64> = models.iter().filter_map(|m| enc.get(m, dim)).collect();
            fig2.row(&[dim, "bar", "vision_dnn", &fmt_f64(mean(&model_r)), &ceil(dim), ""]);
            if let Some(r) = enc.get("joints3d", dim) {
                let p = opt(p_values.get(&format!("unpaired:joints3d_vs_models:{dim}")).copied());
                fig2.row(&[dim, "bar", "joints3d", &fmt_f64(r), &ceil(dim), &p]);
            }
            for m in &models {
                if let Some(r) = enc.get(m, dim) {
                    fig2.row(&[dim, "dot", m, &fmt_f64(r), &ceil(dim), ""]);
                }
            }
        }
    }
    fig2.write(&stage.output_path(layout::FIG2))?;
    stage.wrote(layout::FIG2)?;

    // fig 3
    let mut fig3 = CsvOut::new(&FIG3_HEADER);
    for &dim in &enc.dims {
        for set in POSE_SETS {
            if let Some(r) = enc.get(set, dim) {
                fig3.row(&[dim, set, &fmt_f64(r), &ceil(dim)]);
            }
        }
    }
    fig3.write(&stage.output_path(layout::FIG3))?;
    stage.wrote(layout::FIG3)?;

    // supplementary semi-partial figure
    let mut fig_s1 = CsvOut::new(&FIG_S1_HEADER);
    for row in read_table(&semi_path)? {
        let dim = field(&row, "rating_dim", &semi_path)?;
        let control = field(&row, "control", &semi_path)?;
        let condition = if control == "none" { "full".to_string() } else { format!("partial_{control}") };
        fig_s1.row(&[dim, &condition, field(&row, "r_semi", &semi_path)?, &ceil(dim)]);
    }
    fig_s1.write(&stage.output_path(layout::FIG_S1))?;
    stage.wrote(layout::FIG_S1)?;

    // fig 4
    let grouped_rows = read_scores(&grouped_path)?;
    let grouped = Scores::new(&grouped_rows);
    let mut fig4 = CsvOut::new(&FIG4_HEADER);
    if !models.is_empty() {
        for &dim in &enc.dims {
            let mut pairs = Vec::new();
            for set in grouped.sets() {
                let model = grouped_model_id(set);
                if let (Some(a), Some(g)) = (enc.get(model, dim), grouped.get(set, dim)) {
                    pairs.push((model, a, g));
                }
            }
            if pairs.is_empty() {
                continue;
            }
            let a: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let g: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            let improved = pairs.iter().filter(|p| p.2 > p.1).count();
            let p = opt(p_values.get(&format!("paired:model_minus_grouped:{dim}")).copied());
            let (ma, mg) = (mean(&a), mean(&g));
            fig4.row(&[dim, "bar", "mean", &fmt_f64(ma), &fmt_f64(mg), &fmt_f64(mg - ma), &improved.to_string(), &ceil(dim), &p]);
            for (model, a, g) in &pairs {
                fig4.row(&[dim, "dot", model, &fmt_f64(*a), &fmt_f64(*g), &fmt_f64(g - a), "", &ceil(dim), ""]);
            }
        }
    }
    fig4.write(&stage.output_path(layout::FIG4))?;
    stage.wrote(layout::FIG4)?;

    // fig 5
    let pose_rows = read_scores(&pose_path)?;
    let mut fig5 = CsvOut::new(&FIG5_HEADER);
    let mut footers = Vec::new();
    for target in PREDICTED_SETS {
        let prefix = format!("{target}:");
        let mut pairs = Vec::new();
        for m in &models {
            let rating: Vec<f64> = enc.dims.iter().filter_map(|d| enc.get(m, d)).collect();
            let pose: Vec<f64> = pose_rows
                .iter()
                .filter(|r| r.feature_set == *m && r.rating_dim.starts_with(&prefix))
                .map(|r| r.r_test)
                .collect();
            if rating.is_empty() || pose.is_empty() {
                continue;
            }
            let (x, y) = (mean(&rating), mean(&pose));
            fig5.row(&["point", target, m, &fmt_f64(x), &fmt_f64(y), ""]);
            pairs.push((x, y));
        }
        if pairs.len() >= 2 {
            footers.push((target, score_relationship(&pairs)?.r));
        }
    }
    for (target, r) in footers {
        fig5.row(&["footer", target, "", "", "", &fmt_f64(r)]);
    }
    fig5.write(&stage.output_path(layout::FIG5))?;
    stage.wrote(layout::FIG5)?;
    stage.finish()
}
