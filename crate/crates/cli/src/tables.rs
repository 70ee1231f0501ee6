//! CSV tables: clip features, ratings, per-rater ratings and score files.
//! Every reader reports the line of a malformed row; every join is keyed by
//! clip id.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use sociopose_core::ridge::{EncodingScore, TargetSplit};
use sociopose_core::stats::RaterTable;
use sociopose_core::Matrix;

use crate::error::{CliError, Result};
use crate::fmx;

pub fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f))
}

pub fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(())
}

/// Collects rows in memory and writes them in one go.
pub struct CsvOut {
    w: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header.iter().map(AsRef::as_ref)).expect("write to memory");
        CsvOut { w }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        self.w.write_record(fields.iter().map(AsRef::as_ref)).expect("write to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("flush to memory")
    }

    pub fn write(self, path: &Path) -> Result<()> {
        create_parent(path)?;
        fs::write(path, self.into_bytes()).map_err(|e| CliError::io(path, e))
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => CliError::data(format!("{}: {e}", path.display())),
        _ => CliError::data(format!("{}: malformed CSV: {e}", path.display())),
    }
}

pub fn parse_f64(path: &Path, line: u64, column: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .map_err(|_| CliError::data(format!("{}:{line}: column {column}: {raw:?} is not a number", path.display())))
}

fn parse_finite(path: &Path, line: u64, column: &str, raw: &str) -> Result<f64> {
    let v = parse_f64(path, line, column, raw)?;
    if !v.is_finite() {
        return Err(CliError::data(format!("{}:{line}: column {column}: non-finite value", path.display())));
    }
    Ok(v)
}

/// Shortest decimal string that parses back to the same `f64`; exponent
/// form for very small or very large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-6..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Error naming ids present on one side of a join but not the other.
pub fn unmatched(what: &str, missing: &BTreeSet<&str>) -> CliError {
    let shown: Vec<&str> = missing.iter().copied().take(20).collect();
    let more = if missing.len() > shown.len() { format!(" and {} more", missing.len() - shown.len()) } else { String::new() };
    CliError::data(format!("{what}: unmatched clip ids {}{more}", shown.join(", ")))
}

/// Rows of features keyed by clip id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<String>,
    pub matrix: Matrix,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>, matrix: Matrix) -> Result<Self> {
        if ids.len() != matrix.rows() {
            return Err(CliError::data(format!("{} ids for {} feature rows", ids.len(), matrix.rows())));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(CliError::data(format!("duplicate clip id {dup}")));
        }
        Ok(FeatureTable { ids, matrix })
    }

    /// Reads a `.fmx` file or a `clip_id,f0,f1,...` CSV.
    pub fn read(path: &Path) -> Result<Self> {
        if path.extension().is_some_and(|e| e == "fmx") {
            let (m, ids) = fmx::read(path)?;
            return FeatureTable::new(ids, m).map_err(|e| CliError::data(format!("{}: {e}", path.display())));
        }
        let mut rdr = reader(path)?;
        let width = rdr.headers().map_err(|e| csv_err(path, e))?.len().saturating_sub(1);
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let line = line_of(&rec);
            ids.push(rec[0].to_string());
            for (c, raw) in rec.iter().skip(1).enumerate() {
                data.push(parse_finite(path, line, &format!("f{c}"), raw)?);
            }
        }
        let m = Matrix::from_vec(ids.len(), width, data)?;
        FeatureTable::new(ids, m).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut header = vec!["clip_id".to_string()];
        header.extend((0..self.matrix.cols()).map(|c| format!("f{c}")));
        let mut out = CsvOut::new(&header);
        for (i, id) in self.ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.matrix.row(i).iter().map(|&v| fmt_f64(v)));
            out.row(&row);
        }
        out.write(path)
    }

    /// Rows for `ids`, in that order; fails listing every id without a row.
    pub fn align(&self, ids: &[String], what: &str) -> Result<Matrix> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let missing: BTreeSet<&str> = ids.iter().map(String::as_str).filter(|id| !index.contains_key(id)).collect();
        if !missing.is_empty() {
            return Err(unmatched(what, &missing));
        }
        let rows: Vec<usize> = ids.iter().map(|id| index[id.as_str()]).collect();
        Ok(self.matrix.select_rows(&rows))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// `clip_id,split,<dim>...`, averaged ratings on the 1-5 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    pub dims: Vec<String>,
    /// Keyed by clip id, so iteration is in sorted id order.
    pub rows: BTreeMap<String, (Split, Vec<f64>)>,
}

impl RatingTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = reader(path)?;
        let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
        if header.len() < 3 || &header[0] != "clip_id" || &header[1] != "split" {
            return Err(CliError::data(format!("{}: header must be clip_id,split,<rating dims>", path.display())));
        }
        let dims: Vec<String> = header.iter().skip(2).map(String::from).collect();
        let mut rows = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let line = line_of(&rec);
            let split = match &rec[1] {
                "train" => Split::Train,
                "test" => Split::Test,
                other => {
                    return Err(CliError::data(format!("{}:{line}: split {other:?} is neither train nor test", path.display())))
                }
            };
            let mut vals = Vec::with_capacity(dims.len());
            for (d, raw) in dims.iter().zip(rec.iter().skip(2)) {
                let v = parse_finite(path, line, d, raw)?;
                if !(1.0..=5.0).contains(&v) {
                    return Err(CliError::data(format!("{}:{line}: {d} = {v} outside the 1-5 scale", path.display())));
                }
                vals.push(v);
            }
            if rows.insert(rec[0].to_string(), (split, vals)).is_some() {
                return Err(CliError::data(format!("{}:{line}: duplicate clip id {}", path.display(), &rec[0])));
            }
        }
        Ok(RatingTable { dims, rows })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut header = vec!["clip_id".to_string(), "split".to_string()];
        header.extend(self.dims.iter().cloned());
        let mut out = CsvOut::new(&header);
        for (id, (split, vals)) in &self.rows {
            let mut row = vec![id.clone(), if *split == Split::Train { "train" } else { "test" }.to_string()];
            row.extend(vals.iter().map(|&v| fmt_f64(v)));
            out.row(&row);
        }
        out.write(path)
    }

    /// The frozen split with ids in sorted order.
    pub fn target_split(&self) -> Result<TargetSplit> {
        let part = |s: Split| {
            let ids: Vec<String> = self.rows.iter().filter(|(_, (sp, _))| *sp == s).map(|(id, _)| id.clone()).collect();
            let rows: Vec<&[f64]> = self.rows.values().filter(|(sp, _)| *sp == s).map(|(_, v)| v.as_slice()).collect();
            let m = if rows.is_empty() { Matrix::zeros(0, self.dims.len()) } else { Matrix::from_rows(&rows).expect("uniform width") };
            (ids, m)
        };
        let (train_ids, y_train) = part(Split::Train);
        let (test_ids, y_test) = part(Split::Test);
        if train_ids.is_empty() || test_ids.is_empty() {
            return Err(CliError::data("ratings need both train and test clips"));
        }
        Ok(TargetSplit::new(train_ids, test_ids, y_train, y_test, self.dims.clone())?)
    }
}

/// Long-format rater file `clip_id,rater_id,rating_dim,value`, one table per
/// dimension with clips and raters in sorted order.
pub fn read_raters(path: &Path) -> Result<Vec<RaterTable>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["clip_id", "rater_id", "rating_dim", "value"] {
        return Err(CliError::data(format!("{}: header must be clip_id,rater_id,rating_dim,value", path.display())));
    }
    let mut by_dim: BTreeMap<String, BTreeMap<(String, String), f64>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = line_of(&rec);
        let v = parse_finite(path, line, "value", &rec[3])?;
        let key = (rec[0].to_string(), rec[1].to_string());
        if by_dim.entry(rec[2].to_string()).or_default().insert(key, v).is_some() {
            return Err(CliError::data(format!("{}:{line}: duplicate rating", path.display())));
        }
    }
    by_dim
        .into_iter()
        .map(|(dim, cells)| {
            let clips: Vec<String> = cells.keys().map(|(c, _)| c.clone()).collect::<BTreeSet<_>>().into_iter().collect();
            let raters: Vec<String> = cells.keys().map(|(_, r)| r.clone()).collect::<BTreeSet<_>>().into_iter().collect();
            let mut values = Vec::with_capacity(clips.len() * raters.len());
            for c in &clips {
                for r in &raters {
                    values.push(cells.get(&(c.clone(), r.clone())).copied());
                }
            }
            Ok(RaterTable::new(dim, clips, raters, values)?)
        })
        .collect()
}

pub fn write_raters(path: &Path, tables: &[RaterTable]) -> Result<()> {
    let mut out = CsvOut::new(&["clip_id", "rater_id", "rating_dim", "value"]);
    for t in tables {
        for (c, clip) in t.clip_ids.iter().enumerate() {
            for (r, rater) in t.rater_ids.iter().enumerate() {
                if let Some(v) = t.get(c, r) {
                    out.row(&[clip.as_str(), rater.as_str(), t.rating_dim.as_str(), &fmt_f64(v)]);
                }
            }
        }
    }
    out.write(path)
}

pub const SCORE_HEADER: [&str; 6] = ["feature_set", "layer", "rating_dim", "alpha", "r_test", "n_test"];

/// One row of an encoding score file. `gamma` is present only in grouped
/// output, formatted `group:weight;group:weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub feature_set: String,
    pub layer: Option<String>,
    pub rating_dim: String,
    pub alpha: f64,
    pub r_test: f64,
    pub n_test: usize,
    pub gamma: Option<String>,
}

impl From<&EncodingScore> for ScoreRow {
    fn from(s: &EncodingScore) -> Self {
        ScoreRow {
            feature_set: s.feature_set_id.clone(),
            layer: s.layer_id.clone(),
            rating_dim: s.rating_dim.clone(),
            alpha: s.alpha,
            r_test: s.r_test,
            n_test: s.n_test,
            gamma: None,
        }
    }
}

pub fn format_gamma(ids: &[String], gamma: &[f64]) -> String {
    ids.iter().zip(gamma).map(|(id, g)| format!("{id}:{}", fmt_f64(*g))).collect::<Vec<_>>().join(";")
}

pub fn write_scores(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let grouped = rows.iter().any(|r| r.gamma.is_some());
    let mut header: Vec<&str> = SCORE_HEADER.to_vec();
    if grouped {
        header.push("gamma");
    }
    let mut out = CsvOut::new(&header);
    for r in rows {
        let mut f = vec![
            r.feature_set.clone(),
            r.layer.clone().unwrap_or_default(),
            r.rating_dim.clone(),
            fmt_f64(r.alpha),
            fmt_f64(r.r_test),
            r.n_test.to_string(),
        ];
        if grouped {
            f.push(r.gamma.clone().unwrap_or_default());
        }
        out.row(&f);
    }
    out.write(path)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let has_gamma = cols.len() == 7 && cols[6] == "gamma";
    if cols[..cols.len().min(6)] != SCORE_HEADER || !(cols.len() == 6 || has_gamma) {
        return Err(CliError::data(format!("{}: header must be {}", path.display(), SCORE_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = line_of(&rec);
        let n_test = rec[5]
            .parse()
            .map_err(|_| CliError::data(format!("{}:{line}: n_test {:?} is not a count", path.display(), &rec[5])))?;
        rows.push(ScoreRow {
            feature_set: rec[0].to_string(),
            layer: (!rec[1].is_empty()).then(|| rec[1].to_string()),
            rating_dim: rec[2].to_string(),
            alpha: parse_f64(path, line, "alpha", &rec[3])?,
            r_test: parse_f64(path, line, "r_test", &rec[4])?,
            n_test,
            gamma: has_gamma.then(|| rec[6].to_string()),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip_formatting() {
        for v in [0.1, 1.0 / 3.0, -2.5e-12, 1e10, 0.0, 6.554996457543168e-23, 1.5e300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-10), "1e-10");
        assert_eq!(fmt_f64(1e10), "10000000000");
    }

    #[test]
    fn gamma_column_format() {
        assert_eq!(format_gamma(&["a".into(), "b".into()], &[0.75, 0.25]), "a:0.75;b:0.25");
    }

    #[test]
    fn align_names_missing_ids() {
        let t = FeatureTable::new(vec!["a".into(), "b".into()], Matrix::from_rows(&[[1.0], [2.0]]).unwrap()).unwrap();
        assert_eq!(t.align(&["b".into(), "a".into()], "x").unwrap().as_slice(), &[2.0, 1.0]);
        let e = t.align(&["c".into(), "a".into(), "d".into()], "x").unwrap_err().to_string();
        assert!(e.contains("c, d"), "{e}");
        assert!(FeatureTable::new(vec!["a".into(), "a".into()], Matrix::zeros(2, 1)).is_err());
    }
}
