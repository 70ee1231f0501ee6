//! Standardized ridge encoding models.
//!
//! Features and targets are z-scored with training statistics only, ridge
//! weights are fit without an intercept, and models are scored by the
//! Pearson correlation between held-out predictions and targets. Layer and
//! penalty are chosen per target by repeated k-fold cross-validation on the
//! training rows, refitting the standardization inside every fold.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix, Svd};
use crate::{math, seed};

/// Standard deviations below this are treated as constant columns.
pub const MIN_STD: f64 = 1e-12;
/// Either input of [`pearson_r`] with a variance below this gives r = 0.
pub const MIN_VARIANCE: f64 = 1e-24;

/// The five behavioral rating dimensions, in canonical column order.
pub const RATING_DIMS: [&str; 5] =
    ["spatial_expanse", "interagent_distance", "agents_facing", "communicative", "physical"];

/// Column means and population standard deviations of training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl StandardizationStats {
    pub fn fit(x: &Matrix) -> Result<Self> {
        zscore_fit(x)
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        zscore_apply(x, self)
    }

    pub fn dims(&self) -> usize {
        self.means.len()
    }
}

pub fn zscore_fit(x: &Matrix) -> Result<StandardizationStats> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::TooFewRows { op: "zscore_fit", needed: 2, found: n });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite { what: "standardization input" });
    }
    let mut means = vec![0.0; d];
    for r in 0..n {
        for (m, v) in means.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut vars = vec![0.0; d];
    for r in 0..n {
        for ((s, v), m) in vars.iter_mut().zip(x.row(r)).zip(&means) {
            let dv = v - m;
            *s += dv * dv;
        }
    }
    let stds = vars
        .into_iter()
        .map(|s| {
            let sd = math::sqrt(s / n as f64);
            if sd < MIN_STD {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(StandardizationStats { means, stds })
}

pub fn zscore_apply(x: &Matrix, stats: &StandardizationStats) -> Result<Matrix> {
    if x.cols() != stats.dims() {
        return Err(Error::Shape { op: "zscore_apply", expected: (x.rows(), stats.dims()), found: x.shape() });
    }
    let mut out = x.clone();
    for r in 0..out.rows() {
        for ((v, m), s) in out.row_mut(r).iter_mut().zip(&stats.means).zip(&stats.stds) {
            *v = (*v - m) / s;
        }
    }
    Ok(out)
}

/// How [`ridge_fit_with`] solves the penalized least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RidgeSolver {
    /// Thin SVD of the design, `W = V diag(s / (s² + α)) Uᵀ Y`. Stable for
    /// every penalty including rank-deficient designs.
    #[default]
    Svd,
    /// Cholesky on `XᵀX + αI` (d x d), iteratively refined.
    Primal,
    /// Cholesky on `XXᵀ + αI` (n x n), `W = Xᵀ (XXᵀ + αI)⁻¹ Y`.
    Dual,
}

fn check_fit_inputs(x: &Matrix, y: &Matrix, alpha: f64) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::Shape { op: "ridge_fit", expected: (x.rows(), y.cols()), found: y.shape() });
    }
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::NonFinite { what: "ridge inputs" });
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", alloc::format!("{alpha} is not a non-negative finite number")));
    }
    Ok(())
}

const PRIMAL_REFINEMENTS: usize = 2;

/// Ridge weights `W` (d x t) solving `(XᵀX + αI) W = XᵀY`.
pub fn ridge_fit(x: &Matrix, y: &Matrix, alpha: f64) -> Result<Matrix> {
    ridge_fit_with(x, y, alpha, RidgeSolver::Svd)
}

pub fn ridge_fit_with(x: &Matrix, y: &Matrix, alpha: f64, solver: RidgeSolver) -> Result<Matrix> {
    check_fit_inputs(x, y, alpha)?;
    match solver {
        RidgeSolver::Svd => Ok(RidgePath::new(x, y)?.weights(alpha)),
        RidgeSolver::Primal => {
            let mut a = x.tr_matmul(x)?;
            a.add_diagonal(alpha);
            let chol = Cholesky::factor(&a)?;
            let mut w = chol.solve(&x.tr_matmul(y)?)?;
            // refinement against Xᵀ(Y - XW) - αW, which never forms XᵀX
            for _ in 0..PRIMAL_REFINEMENTS {
                let mut r = x.tr_matmul(&y.sub(&x.matmul(&w)?)?)?;
                for (ri, wi) in r.as_mut_slice().iter_mut().zip(w.as_slice()) {
                    *ri -= alpha * wi;
                }
                let delta = chol.solve(&r)?;
                for (wi, di) in w.as_mut_slice().iter_mut().zip(delta.as_slice()) {
                    *wi += di;
                }
            }
            Ok(w)
        }
        RidgeSolver::Dual => {
            let mut k = x.matmul_tr(x)?;
            k.add_diagonal(alpha);
            let c = Cholesky::factor(&k)?.solve(y)?;
            x.tr_matmul(&c)
        }
    }
}

pub fn ridge_predict(x: &Matrix, w: &Matrix) -> Result<Matrix> {
    x.matmul(w)
}

/// One SVD of the training design reused across the whole penalty grid.
#[derive(Debug, Clone)]
pub struct RidgePath {
    v: Matrix,
    s: Vec<f64>,
    /// `Uᵀ Y`, k x t.
    uty: Matrix,
}

/// Spectral filter `s / (s² + α)`; zero for a null direction.
#[inline]
fn shrink(s: f64, alpha: f64) -> f64 {
    let denom = s * s + alpha;
    if denom == 0.0 {
        0.0
    } else {
        s / denom
    }
}

impl RidgePath {
    pub fn new(x: &Matrix, y: &Matrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::Shape { op: "RidgePath::new", expected: (x.rows(), y.cols()), found: y.shape() });
        }
        let Svd { u, s, v } = Svd::compute(x)?;
        let uty = u.tr_matmul(y)?;
        Ok(RidgePath { v, s, uty })
    }

    pub fn targets(&self) -> usize {
        self.uty.cols()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    pub fn weights(&self, alpha: f64) -> Matrix {
        let alphas = vec![alpha; self.targets()];
        self.weights_per_target(&alphas)
    }

    /// Weights with a separate penalty for every target column.
    pub fn weights_per_target(&self, alphas: &[f64]) -> Matrix {
        debug_assert_eq!(alphas.len(), self.targets());
        let (d, k) = self.v.shape();
        let t = self.targets();
        let mut filtered = Matrix::zeros(k, t);
        for j in 0..k {
            for c in 0..t {
                filtered[(j, c)] = shrink(self.s[j], alphas[c]) * self.uty[(j, c)];
            }
        }
        let w = self.v.matmul(&filtered).expect("inner dims agree");
        debug_assert_eq!(w.shape(), (d, t));
        w
    }

    /// `X_new · V`, the new rows in the singular basis.
    pub fn project(&self, x_new: &Matrix) -> Result<Matrix> {
        x_new.matmul(&self.v)
    }

    /// Predictions for rows already passed through [`RidgePath::project`].
    pub fn predict_projected(&self, projected: &Matrix, alpha: f64) -> Matrix {
        let (m, k) = projected.shape();
        let t = self.targets();
        let mut out = Matrix::zeros(m, t);
        let factors: Vec<f64> = self.s.iter().map(|&s| shrink(s, alpha)).collect();
        for r in 0..m {
            let row = projected.row(r);
            let out_row = out.row_mut(r);
            for j in 0..k {
                let a = row[j] * factors[j];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(self.uty.row(j)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// Pearson correlation; `degenerate` is set when either input is
/// (numerically) constant, in which case `r` is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

pub fn pearson_r(a: &[f64], b: &[f64]) -> Result<Correlation> {
    if a.len() != b.len() {
        return Err(Error::Shape { op: "pearson_r", expected: (a.len(), 1), found: (b.len(), 1) });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewRows { op: "pearson_r", needed: 2, found: n });
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa / n as f64 >= MIN_VARIANCE && sbb / n as f64 >= MIN_VARIANCE) {
        return Ok(Correlation { r: 0.0, degenerate: true });
    }
    let r = (sab / (math::sqrt(saa) * math::sqrt(sbb))).clamp(-1.0, 1.0);
    Ok(Correlation { r, degenerate: false })
}

/// Pearson r of every column pair of two equally shaped matrices.
pub fn columnwise_r(pred: &Matrix, truth: &Matrix) -> Result<Vec<Correlation>> {
    if pred.shape() != truth.shape() {
        return Err(Error::Shape { op: "columnwise_r", expected: truth.shape(), found: pred.shape() });
    }
    (0..pred.cols()).map(|c| pearson_r(&pred.col_to_vec(c), &truth.col_to_vec(c))).collect()
}

/// `n` log-spaced values from `10^min_exp` to `10^max_exp` inclusive.
pub fn log_alpha_grid(min_exp: f64, max_exp: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![math::pow(10.0, min_exp)],
        _ => (0..n)
            .map(|i| {
                let e = min_exp + (max_exp - min_exp) * i as f64 / (n - 1) as f64;
                // exact powers of ten when the exponent is integral
                if e == math::floor(e) {
                    math::powi10(e as i32)
                } else {
                    math::pow(10.0, e)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeConfig {
    pub alpha_grid: Vec<f64>,
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        RidgeConfig { alpha_grid: log_alpha_grid(-10.0, 10.0, 21), n_folds: 5, n_repeats: 2, seed: 0 }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        validate_alpha_grid(&self.alpha_grid)?;
        if self.n_folds < 2 {
            return Err(Error::invalid("n_folds", "need at least 2 folds"));
        }
        if self.n_repeats < 1 {
            return Err(Error::invalid("n_repeats", "need at least 1 repeat"));
        }
        Ok(())
    }
}

pub fn validate_alpha_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty { what: "alpha grid" });
    }
    if grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::invalid("alpha grid", "values must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("alpha grid", "values must be strictly increasing"));
    }
    Ok(())
}

/// Validation folds for every repeat. Repeat `r` shuffles row indices with
/// the stream `hash(seed, "cv", r)` and cuts them into near-equal chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    n_rows: usize,
    /// `repeats[r][f]` lists the validation rows of fold `f` in repeat `r`.
    repeats: Vec<Vec<Vec<usize>>>,
}

impl FoldPlan {
    pub fn new(n_rows: usize, n_folds: usize, n_repeats: usize, seed: u64) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::invalid("n_folds", "need at least 2 folds"));
        }
        // each validation fold must hold two rows for a correlation
        if n_rows < 2 * n_folds {
            return Err(Error::TooFewRows { op: "cross-validation", needed: 2 * n_folds, found: n_rows });
        }
        let repeats = (0..n_repeats)
            .map(|r| {
                let mut order: Vec<usize> = (0..n_rows).collect();
                order.shuffle(&mut seed::stream_rng(seed, "cv", r as u64));
                (0..n_folds)
                    .map(|f| {
                        let lo = f * n_rows / n_folds;
                        let hi = (f + 1) * n_rows / n_folds;
                        let mut fold = order[lo..hi].to_vec();
                        fold.sort_unstable();
                        fold
                    })
                    .collect()
            })
            .collect();
        Ok(FoldPlan { n_rows, repeats })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_splits(&self) -> usize {
        self.repeats.iter().map(Vec::len).sum()
    }

    pub fn repeats(&self) -> &[Vec<Vec<usize>>] {
        &self.repeats
    }

    /// `(train rows, validation rows)` for every fold of every repeat.
    pub fn splits(&self) -> impl Iterator<Item = (Vec<usize>, &[usize])> + '_ {
        self.repeats.iter().flat_map(move |folds| {
            folds.iter().map(move |val| {
                let mut is_val = vec![false; self.n_rows];
                val.iter().for_each(|&i| is_val[i] = true);
                let train = (0..self.n_rows).filter(|&i| !is_val[i]).collect();
                (train, val.as_slice())
            })
        })
    }
}

/// Standardized fold data: every matrix scaled with fold-train statistics.
pub(crate) struct FoldData {
    pub x_train: Matrix,
    pub y_train: Matrix,
    pub x_val: Matrix,
    pub y_val: Matrix,
}

pub(crate) fn standardize_fold(x: &Matrix, y: &Matrix, train: &[usize], val: &[usize]) -> Result<FoldData> {
    let x_tr = x.select_rows(train);
    let y_tr = y.select_rows(train);
    let xs = zscore_fit(&x_tr)?;
    let ys = zscore_fit(&y_tr)?;
    Ok(FoldData {
        x_train: xs.apply(&x_tr)?,
        y_train: ys.apply(&y_tr)?,
        x_val: xs.apply(&x.select_rows(val))?,
        y_val: ys.apply(&y.select_rows(val))?,
    })
}

/// Mean validation r over all folds, `n_alphas x n_targets`.
pub fn cv_scores(x: &Matrix, y: &Matrix, plan: &FoldPlan, alpha_grid: &[f64]) -> Result<Matrix> {
    if x.rows() != plan.n_rows() || y.rows() != plan.n_rows() {
        return Err(Error::Shape { op: "cv_scores", expected: (plan.n_rows(), x.cols()), found: x.shape() });
    }
    let t = y.cols();
    let mut total = Matrix::zeros(alpha_grid.len(), t);
    for (train, val) in plan.splits() {
        let fold = standardize_fold(x, y, &train, val)?;
        let path = RidgePath::new(&fold.x_train, &fold.y_train)?;
        let projected = path.project(&fold.x_val)?;
        for (ai, &alpha) in alpha_grid.iter().enumerate() {
            let pred = path.predict_projected(&projected, alpha);
            for (c, corr) in columnwise_r(&pred, &fold.y_val)?.into_iter().enumerate() {
                total[(ai, c)] += corr.r;
            }
        }
    }
    total.scale(1.0 / plan.n_splits() as f64);
    Ok(total)
}

/// A named candidate feature space (one network layer, or one feature set).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub id: String,
    pub x: Matrix,
}

impl Layer {
    pub fn new(id: impl Into<String>, x: Matrix) -> Self {
        Layer { id: id.into(), x }
    }
}

/// Winning layer and penalty for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub layer_id: String,
    pub alpha: f64,
    pub cv_r: f64,
}

/// `true` when `(r, alpha, id)` beats the incumbent: higher mean r, then
/// smaller alpha, then lexicographically smaller id.
fn beats(r: f64, alpha: f64, id: &str, best: &Selection) -> bool {
    if r != best.cv_r {
        return r > best.cv_r || best.cv_r.is_nan();
    }
    if alpha != best.alpha {
        return alpha < best.alpha;
    }
    id < best.layer_id.as_str()
}

/// Picks the (layer, α) pair with the best mean validation r, separately
/// for every target column.
pub fn cv_select(layers: &[Layer], y_train: &Matrix, cfg: &RidgeConfig) -> Result<Vec<Selection>> {
    cfg.validate()?;
    if layers.is_empty() {
        return Err(Error::Empty { what: "layer list" });
    }
    let n = y_train.rows();
    if let Some(bad) = layers.iter().find(|l| l.x.rows() != n) {
        return Err(Error::Shape { op: "cv_select", expected: (n, bad.x.cols()), found: bad.x.shape() });
    }
    let plan = FoldPlan::new(n, cfg.n_folds, cfg.n_repeats, cfg.seed)?;
    let t = y_train.cols();
    let mut best: Vec<Option<Selection>> = vec![None; t];
    for layer in layers {
        let scores = cv_scores(&layer.x, y_train, &plan, &cfg.alpha_grid)?;
        for (ai, &alpha) in cfg.alpha_grid.iter().enumerate() {
            for (c, slot) in best.iter_mut().enumerate() {
                let r = scores[(ai, c)];
                let better = match slot {
                    None => true,
                    Some(b) => beats(r, alpha, &layer.id, b),
                };
                if better {
                    *slot = Some(Selection { layer_id: layer.id.clone(), alpha, cv_r: r });
                }
            }
        }
    }
    Ok(best.into_iter().map(|s| s.expect("at least one candidate")).collect())
}

/// Held-out score of one feature set on one target.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingScore {
    pub feature_set_id: String,
    pub layer_id: Option<String>,
    pub rating_dim: String,
    pub alpha: f64,
    pub r_test: f64,
    pub n_test: usize,
    pub degenerate: bool,
}

/// Fails when any id appears in both splits.
pub fn check_disjoint(train_ids: &[String], test_ids: &[String]) -> Result<()> {
    let train: BTreeSet<&str> = train_ids.iter().map(String::as_str).collect();
    let mut shared: Vec<String> = test_ids.iter().filter(|id| train.contains(id.as_str())).cloned().collect();
    if shared.is_empty() {
        Ok(())
    } else {
        shared.sort();
        shared.dedup();
        Err(Error::Leakage { ids: shared })
    }
}

/// A frozen train/test split of targets, keyed by clip id.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub y_train: Matrix,
    pub y_test: Matrix,
    pub dim_names: Vec<String>,
}

impl TargetSplit {
    pub fn new(
        train_ids: Vec<String>,
        test_ids: Vec<String>,
        y_train: Matrix,
        y_test: Matrix,
        dim_names: Vec<String>,
    ) -> Result<Self> {
        check_disjoint(&train_ids, &test_ids)?;
        if y_train.rows() != train_ids.len() || y_test.rows() != test_ids.len() {
            return Err(Error::Shape { op: "TargetSplit::new", expected: (train_ids.len(), test_ids.len()), found: (y_train.rows(), y_test.rows()) });
        }
        if y_train.cols() != dim_names.len() || y_test.cols() != dim_names.len() {
            return Err(Error::Shape { op: "TargetSplit::new", expected: (dim_names.len(), dim_names.len()), found: (y_train.cols(), y_test.cols()) });
        }
        Ok(TargetSplit { train_ids, test_ids, y_train, y_test, dim_names })
    }

    pub fn n_targets(&self) -> usize {
        self.dim_names.len()
    }
}

/// Standardizes on the full training split, fits with a per-target
/// penalty, and correlates test predictions with test targets.
pub fn evaluate(
    x_train: &Matrix,
    x_test: &Matrix,
    split: &TargetSplit,
    alphas: &[f64],
) -> Result<Vec<(f64, Correlation)>> {
    check_disjoint(&split.train_ids, &split.test_ids)?;
    if x_train.rows() != split.train_ids.len() || x_test.rows() != split.test_ids.len() {
        return Err(Error::Shape { op: "evaluate", expected: (split.train_ids.len(), split.test_ids.len()), found: (x_train.rows(), x_test.rows()) });
    }
    if alphas.len() != split.n_targets() {
        return Err(Error::Shape { op: "evaluate", expected: (split.n_targets(), 1), found: (alphas.len(), 1) });
    }
    let xs = zscore_fit(x_train)?;
    let ys = zscore_fit(&split.y_train)?;
    let path = RidgePath::new(&xs.apply(x_train)?, &ys.apply(&split.y_train)?)?;
    let w = path.weights_per_target(alphas);
    let pred = ridge_predict(&xs.apply(x_test)?, &w)?;
    let corr = columnwise_r(&pred, &split.y_test)?;
    Ok(alphas.iter().copied().zip(corr).collect())
}

/// Full encoding of one model: per-target layer and α by cross-validation
/// on the training rows, then a held-out score with the winning pair.
///
/// `layers[i].x` holds training rows; `test_layers[i]` the matching test rows.
pub fn encode(
    feature_set_id: &str,
    layers: &[Layer],
    test_layers: &[Matrix],
    split: &TargetSplit,
    cfg: &RidgeConfig,
) -> Result<Vec<EncodingScore>> {
    let selections = cv_select(layers, &split.y_train, cfg)?;
    encode_selected(feature_set_id, layers, test_layers, split, &selections)
}

/// Held-out scores for selections made beforehand by [`cv_select`] on the
/// same layers.
pub fn encode_selected(
    feature_set_id: &str,
    layers: &[Layer],
    test_layers: &[Matrix],
    split: &TargetSplit,
    selections: &[Selection],
) -> Result<Vec<EncodingScore>> {
    if layers.len() != test_layers.len() {
        return Err(Error::Shape { op: "encode", expected: (layers.len(), 1), found: (test_layers.len(), 1) });
    }
    if selections.len() != split.n_targets() {
        return Err(Error::Shape { op: "encode", expected: (split.n_targets(), 1), found: (selections.len(), 1) });
    }
    let mut scores = Vec::with_capacity(selections.len());
    for (c, sel) in selections.iter().enumerate() {
        let li = layers
            .iter()
            .position(|l| l.id == sel.layer_id)
            .ok_or(Error::invalid("selections", "selected layer is not among the layers"))?;
        let single = TargetSplit {
            train_ids: split.train_ids.clone(),
            test_ids: split.test_ids.clone(),
            y_train: split.y_train.select_cols(&[c]),
            y_test: split.y_test.select_cols(&[c]),
            dim_names: vec![split.dim_names[c].clone()],
        };
        let (alpha, corr) = evaluate(&layers[li].x, &test_layers[li], &single, &[sel.alpha])?[0];
        scores.push(EncodingScore {
            feature_set_id: feature_set_id.into(),
            layer_id: if layers.len() > 1 { Some(sel.layer_id.clone()) } else { None },
            rating_dim: split.dim_names[c].clone(),
            alpha,
            r_test: corr.r,
            n_test: split.test_ids.len(),
            degenerate: corr.degenerate,
        });
    }
    Ok(scores)
}
