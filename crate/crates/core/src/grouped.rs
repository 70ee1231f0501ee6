//! Banded ridge regression over feature groups.
//!
//! Each group `g` is scaled by `sqrt(γ_g)` with `γ` on the simplex, and one
//! shared penalty α is applied to the concatenated design. This is the same
//! as ridge with the kernel `Σ_g γ_g X_g X_gᵀ`. Group weights are found by
//! random search: candidates come from symmetric Dirichlet distributions,
//! the uniform weighting is always candidate 0, and every candidate is
//! scored over the full α grid with leak-free repeated k-fold CV.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Svd};
use crate::ridge::{
    self, check_disjoint, columnwise_r, standardize_fold, zscore_fit, Correlation, EncodingScore, FoldPlan,
    RidgePath, StandardizationStats, TargetSplit,
};
use crate::{math, seed};

const SIMPLEX_TOL: f64 = 1e-12;
const MAX_DIRICHLET_REDRAWS: usize = 64;

/// Named feature groups sharing row alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    groups: Vec<(String, Matrix)>,
}

impl GroupSpec {
    pub fn new(groups: Vec<(String, Matrix)>) -> Result<Self> {
        let Some((_, first)) = groups.first() else {
            return Err(Error::Empty { what: "group list" });
        };
        let n = first.rows();
        for (id, m) in &groups {
            if m.rows() != n {
                return Err(Error::Shape { op: "GroupSpec::new", expected: (n, m.cols()), found: m.shape() });
            }
            if m.cols() == 0 {
                return Err(Error::invalid("group", alloc::format!("group {id} has no columns")));
            }
        }
        Ok(GroupSpec { groups })
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn n_rows(&self) -> usize {
        self.groups[0].1.rows()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.groups.iter().map(|(_, m)| m.cols()).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(|(id, _)| id.as_str())
    }

    pub fn groups(&self) -> &[(String, Matrix)] {
        &self.groups
    }

    /// All groups side by side.
    pub fn concat(&self) -> Matrix {
        let blocks: Vec<&Matrix> = self.groups.iter().map(|(_, m)| m).collect();
        Matrix::hcat(&blocks).expect("rows validated")
    }
}

/// Group weights on the simplex. `concentration` records the Dirichlet the
/// candidate came from; the uniform candidate carries `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCandidate {
    pub gamma: Vec<f64>,
    pub concentration: f64,
}

impl GammaCandidate {
    pub fn uniform(n_groups: usize) -> Self {
        GammaCandidate { gamma: vec![1.0 / n_groups as f64; n_groups], concentration: f64::INFINITY }
    }

    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        let c = GammaCandidate { gamma, concentration: f64::NAN };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma.is_empty() || self.gamma.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(Error::invalid("gamma", "weights must be finite and non-negative"));
        }
        let sum: f64 = self.gamma.iter().sum();
        if (sum - 1.0).abs() >= SIMPLEX_TOL {
            return Err(Error::invalid("gamma", alloc::format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSearchConfig {
    pub n_candidates: usize,
    pub concentrations: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
}

impl Default for GroupedSearchConfig {
    fn default() -> Self {
        let r = ridge::RidgeConfig::default();
        GroupedSearchConfig {
            n_candidates: 200,
            concentrations: vec![0.1, 1.0],
            alpha_grid: r.alpha_grid,
            n_folds: r.n_folds,
            n_repeats: r.n_repeats,
            seed: r.seed,
        }
    }
}

impl GroupedSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(Error::invalid("n_candidates", "need at least one candidate"));
        }
        if self.concentrations.is_empty() || self.concentrations.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("concentrations", "need at least one positive finite value"));
        }
        ridge::validate_alpha_grid(&self.alpha_grid)?;
        if self.n_folds < 2 || self.n_repeats < 1 {
            return Err(Error::invalid("cv plan", "need n_folds >= 2 and n_repeats >= 1"));
        }
        Ok(())
    }
}

/// `n_candidates` simplex points: split as evenly as possible across the
/// concentrations (earlier ones get the remainder), each concentration on
/// its own stream `hash(seed, "gamma", i)`. Candidate 0 is then replaced by
/// the uniform weighting.
pub fn sample_gammas(cfg: &GroupedSearchConfig, n_groups: usize) -> Result<Vec<GammaCandidate>> {
    cfg.validate()?;
    if n_groups == 0 {
        return Err(Error::invalid("n_groups", "need at least one group"));
    }
    let k = cfg.concentrations.len();
    let mut out = Vec::with_capacity(cfg.n_candidates);
    for (i, &conc) in cfg.concentrations.iter().enumerate() {
        let count = cfg.n_candidates / k + usize::from(i < cfg.n_candidates % k);
        let mut rng = seed::stream_rng(cfg.seed, "gamma", i as u64);
        let dist = Gamma::new(conc, 1.0).map_err(|_| Error::invalid("concentrations", "bad gamma shape"))?;
        for _ in 0..count {
            let mut gamma = vec![0.0; n_groups];
            let mut redraws = 0;
            loop {
                gamma.iter_mut().for_each(|g| *g = dist.sample(&mut rng));
                let sum: f64 = gamma.iter().sum();
                if sum > 0.0 && sum.is_finite() {
                    gamma.iter_mut().for_each(|g| *g /= sum);
                    break;
                }
                redraws += 1;
                if redraws > MAX_DIRICHLET_REDRAWS {
                    return Err(Error::NoConvergence { what: "dirichlet sampling", iterations: redraws });
                }
            }
            out.push(GammaCandidate { gamma, concentration: conc });
        }
    }
    out[0] = GammaCandidate::uniform(n_groups);
    Ok(out)
}

fn scale_groups(x: &Matrix, widths: &[usize], gamma: &[f64]) -> Matrix {
    let mut out = x.clone();
    let factors = column_factors(widths, gamma);
    for r in 0..out.rows() {
        for (v, f) in out.row_mut(r).iter_mut().zip(&factors) {
            *v *= f;
        }
    }
    out
}

fn column_factors(widths: &[usize], gamma: &[f64]) -> Vec<f64> {
    widths
        .iter()
        .zip(gamma)
        .flat_map(|(&w, &g)| core::iter::repeat(math::sqrt(g)).take(w))
        .collect()
}

/// Banded ridge weights expressed on the unscaled concatenated design, so
/// predictions are `X_concat · coef`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedFit {
    pub gamma: Vec<f64>,
    pub alpha: f64,
    pub coef: Matrix,
}

impl GroupedFit {
    pub fn predict(&self, x_concat: &Matrix) -> Result<Matrix> {
        x_concat.matmul(&self.coef)
    }
}

/// Fits banded ridge on already standardized groups and targets.
pub fn grouped_fit(spec: &GroupSpec, y: &Matrix, gamma: &GammaCandidate, alpha: f64) -> Result<GroupedFit> {
    gamma.validate()?;
    if gamma.gamma.len() != spec.n_groups() {
        return Err(Error::Shape { op: "grouped_fit", expected: (spec.n_groups(), 1), found: (gamma.gamma.len(), 1) });
    }
    let widths = spec.widths();
    let scaled = scale_groups(&spec.concat(), &widths, &gamma.gamma);
    let w = ridge::ridge_fit(&scaled, y, alpha)?;
    Ok(GroupedFit { gamma: gamma.gamma.clone(), alpha, coef: unscale_coef(&w, &widths, &gamma.gamma) })
}

fn unscale_coef(w: &Matrix, widths: &[usize], gamma: &[f64]) -> Matrix {
    let factors = column_factors(widths, gamma);
    let mut coef = w.clone();
    for (r, f) in factors.iter().enumerate() {
        coef.row_mut(r).iter_mut().for_each(|v| *v *= f);
    }
    coef
}

/// Winning candidate and penalty for one target.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSelection {
    pub candidate: usize,
    pub gamma: Vec<f64>,
    pub alpha: f64,
    pub cv_r: f64,
}

/// Refit model: training statistics for every group and the targets, and
/// one coefficient column per target built from that target's selection.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedModel {
    pub group_ids: Vec<String>,
    pub group_stats: Vec<StandardizationStats>,
    pub selections: Vec<GroupedSelection>,
    pub coef: Matrix,
}

impl GroupedModel {
    /// Predictions in standardized target units for raw test groups.
    pub fn predict(&self, groups: &[Matrix]) -> Result<Matrix> {
        if groups.len() != self.group_stats.len() {
            return Err(Error::Shape { op: "GroupedModel::predict", expected: (self.group_stats.len(), 1), found: (groups.len(), 1) });
        }
        let standardized = groups
            .iter()
            .zip(&self.group_stats)
            .map(|(g, s)| s.apply(g))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Matrix> = standardized.iter().collect();
        Matrix::hcat(&refs)?.matmul(&self.coef)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSearchResult {
    pub candidates: Vec<GammaCandidate>,
    /// Mean validation r, indexed `[candidate][alpha][target]`.
    pub cv_scores: Vec<Matrix>,
    pub model: GroupedModel,
}

impl GroupedSearchResult {
    pub fn selections(&self) -> &[GroupedSelection] {
        &self.model.selections
    }
}

/// Per-fold scoring of one candidate over the whole α grid. Designs no wider
/// than the fold's training rows go through an SVD of the scaled design;
/// wider ones through the combined kernel.
enum FoldEngine {
    Primal { fold: ridge::FoldData, widths: Vec<usize> },
    Kernel { grams: Vec<Matrix>, val_grams: Vec<Matrix>, y_train: Matrix, y_val: Matrix },
}

impl FoldEngine {
    fn new(x: &Matrix, y: &Matrix, widths: &[usize], train: &[usize], val: &[usize]) -> Result<Self> {
        let fold = standardize_fold(x, y, train, val)?;
        let d: usize = widths.iter().sum();
        if d <= train.len() {
            return Ok(FoldEngine::Primal { fold, widths: widths.to_vec() });
        }
        let mut grams = Vec::with_capacity(widths.len());
        let mut val_grams = Vec::with_capacity(widths.len());
        let mut start = 0;
        for &w in widths {
            let cols: Vec<usize> = (start..start + w).collect();
            let tr = fold.x_train.select_cols(&cols);
            let va = fold.x_val.select_cols(&cols);
            grams.push(tr.matmul_tr(&tr)?);
            val_grams.push(va.matmul_tr(&tr)?);
            start += w;
        }
        Ok(FoldEngine::Kernel { grams, val_grams, y_train: fold.y_train, y_val: fold.y_val })
    }

    /// Validation correlations, `[alpha][target]`, added into `acc`.
    fn score(&self, gamma: &[f64], alpha_grid: &[f64], acc: &mut Matrix) -> Result<()> {
        match self {
            FoldEngine::Primal { fold, widths } => {
                let scaled_tr = scale_groups(&fold.x_train, widths, gamma);
                let scaled_va = scale_groups(&fold.x_val, widths, gamma);
                let path = RidgePath::new(&scaled_tr, &fold.y_train)?;
                let projected = path.project(&scaled_va)?;
                for (ai, &alpha) in alpha_grid.iter().enumerate() {
                    let pred = path.predict_projected(&projected, alpha);
                    add_row(acc, ai, &columnwise_r(&pred, &fold.y_val)?);
                }
            }
            FoldEngine::Kernel { grams, val_grams, y_train, y_val } => {
                let k = weighted_sum(grams, gamma);
                let kv = weighted_sum(val_grams, gamma);
                // K is symmetric PSD: right singular vectors are eigenvectors
                let eig = Svd::compute(&k)?;
                let p = kv.matmul(&eig.v)?;
                let q = eig.v.tr_matmul(y_train)?;
                for (ai, &alpha) in alpha_grid.iter().enumerate() {
                    let mut filtered = q.clone();
                    for (j, &s) in eig.s.iter().enumerate() {
                        let f = 1.0 / (s + alpha);
                        filtered.row_mut(j).iter_mut().for_each(|v| *v *= f);
                    }
                    let pred = p.matmul(&filtered)?;
                    add_row(acc, ai, &columnwise_r(&pred, y_val)?);
                }
            }
        }
        Ok(())
    }
}

fn weighted_sum(mats: &[Matrix], gamma: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(mats[0].rows(), mats[0].cols());
    for (m, &g) in mats.iter().zip(gamma) {
        if g == 0.0 {
            continue;
        }
        for (o, v) in out.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *o += g * v;
        }
    }
    out
}

fn add_row(acc: &mut Matrix, row: usize, corr: &[Correlation]) {
    for (c, k) in corr.iter().enumerate() {
        acc[(row, c)] += k.r;
    }
}

/// Random search over `cfg`'s Dirichlet candidates.
pub fn grouped_search(spec: &GroupSpec, y_train: &Matrix, cfg: &GroupedSearchConfig) -> Result<GroupedSearchResult> {
    let candidates = sample_gammas(cfg, spec.n_groups())?;
    grouped_search_with(spec, y_train, candidates, cfg)
}

/// Random search over an explicit candidate list.
pub fn grouped_search_with(
    spec: &GroupSpec,
    y_train: &Matrix,
    candidates: Vec<GammaCandidate>,
    cfg: &GroupedSearchConfig,
) -> Result<GroupedSearchResult> {
    ridge::validate_alpha_grid(&cfg.alpha_grid)?;
    if candidates.is_empty() {
        return Err(Error::Empty { what: "candidate list" });
    }
    for c in &candidates {
        c.validate()?;
        if c.gamma.len() != spec.n_groups() {
            return Err(Error::Shape { op: "grouped_search", expected: (spec.n_groups(), 1), found: (c.gamma.len(), 1) });
        }
    }
    let n = spec.n_rows();
    if y_train.rows() != n {
        return Err(Error::Shape { op: "grouped_search", expected: (n, y_train.cols()), found: y_train.shape() });
    }
    let plan = FoldPlan::new(n, cfg.n_folds, cfg.n_repeats, cfg.seed)?;
    let x = spec.concat();
    let widths = spec.widths();
    let t = y_train.cols();
    let n_alpha = cfg.alpha_grid.len();

    let mut scores = vec![Matrix::zeros(n_alpha, t); candidates.len()];
    for (train, val) in plan.splits() {
        let engine = FoldEngine::new(&x, y_train, &widths, &train, val)?;
        for (cand, acc) in candidates.iter().zip(scores.iter_mut()) {
            engine.score(&cand.gamma, &cfg.alpha_grid, acc)?;
        }
    }
    let splits = plan.n_splits() as f64;
    scores.iter_mut().for_each(|s| s.scale(1.0 / splits));

    let mut selections: Vec<Option<GroupedSelection>> = vec![None; t];
    for (ci, cand) in candidates.iter().enumerate() {
        for (ai, &alpha) in cfg.alpha_grid.iter().enumerate() {
            for (c, slot) in selections.iter_mut().enumerate() {
                let r = scores[ci][(ai, c)];
                let better = match slot {
                    None => true,
                    Some(b) => {
                        if r != b.cv_r {
                            r > b.cv_r || b.cv_r.is_nan()
                        } else {
                            alpha < b.alpha
                        }
                    }
                };
                if better {
                    *slot = Some(GroupedSelection { candidate: ci, gamma: cand.gamma.clone(), alpha, cv_r: r });
                }
            }
        }
    }
    let selections: Vec<GroupedSelection> = selections.into_iter().map(|s| s.expect("non-empty grid")).collect();
    let model = refit(spec, y_train, selections)?;
    Ok(GroupedSearchResult { candidates, cv_scores: scores, model })
}

fn refit(spec: &GroupSpec, y_train: &Matrix, selections: Vec<GroupedSelection>) -> Result<GroupedModel> {
    let group_stats = spec.groups().iter().map(|(_, g)| zscore_fit(g)).collect::<Result<Vec<_>>>()?;
    let standardized = spec
        .groups()
        .iter()
        .zip(&group_stats)
        .map(|((id, g), s)| Ok((id.clone(), s.apply(g)?)))
        .collect::<Result<Vec<_>>>()?;
    let std_spec = GroupSpec::new(standardized)?;
    let y_std = zscore_fit(y_train)?.apply(y_train)?;

    let d: usize = spec.widths().iter().sum();
    let mut coef = Matrix::zeros(d, y_train.cols());
    for (c, sel) in selections.iter().enumerate() {
        let gamma = GammaCandidate { gamma: sel.gamma.clone(), concentration: f64::NAN };
        let fit = grouped_fit(&std_spec, &y_std.select_cols(&[c]), &gamma, sel.alpha)?;
        for r in 0..d {
            coef[(r, c)] = fit.coef[(r, 0)];
        }
    }
    Ok(GroupedModel {
        group_ids: spec.ids().map(String::from).collect(),
        group_stats,
        selections,
        coef,
    })
}

/// Held-out score of a grouped model, with the selected γ per target.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedScore {
    pub score: EncodingScore,
    pub gamma: Vec<f64>,
}

pub fn grouped_evaluate(
    feature_set_id: &str,
    model: &GroupedModel,
    test_groups: &[Matrix],
    split: &TargetSplit,
) -> Result<Vec<GroupedScore>> {
    check_disjoint(&split.train_ids, &split.test_ids)?;
    if let Some(g) = test_groups.iter().find(|g| g.rows() != split.test_ids.len()) {
        return Err(Error::Shape { op: "grouped_evaluate", expected: (split.test_ids.len(), g.cols()), found: g.shape() });
    }
    if model.selections.len() != split.n_targets() {
        return Err(Error::Shape { op: "grouped_evaluate", expected: (split.n_targets(), 1), found: (model.selections.len(), 1) });
    }
    let pred = model.predict(test_groups)?;
    let corr = columnwise_r(&pred, &split.y_test)?;
    Ok(model
        .selections
        .iter()
        .zip(corr)
        .zip(&split.dim_names)
        .map(|((sel, k), dim)| GroupedScore {
            score: EncodingScore {
                feature_set_id: feature_set_id.into(),
                layer_id: None,
                rating_dim: dim.clone(),
                alpha: sel.alpha,
                r_test: k.r,
                n_test: split.test_ids.len(),
                degenerate: k.degenerate,
            },
            gamma: sel.gamma.clone(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> GroupedSearchConfig {
        GroupedSearchConfig { n_candidates: n, seed: 5, ..GroupedSearchConfig::default() }
    }

    #[test]
    fn one_group_gives_unit_weights() {
        for c in sample_gammas(&cfg(20), 1).unwrap() {
            assert_eq!(c.gamma, vec![1.0]);
        }
    }

    #[test]
    fn candidates_live_on_the_simplex() {
        let cands = sample_gammas(&cfg(200), 3).unwrap();
        assert_eq!(cands.len(), 200);
        assert_eq!(cands[0], GammaCandidate::uniform(3));
        assert_eq!(cands.iter().filter(|c| c.concentration == 0.1).count(), 99);
        assert_eq!(cands.iter().filter(|c| c.concentration == 1.0).count(), 100);
        for c in &cands {
            assert!((c.gamma.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(c.gamma.iter().all(|g| *g >= 0.0));
        }
        assert_eq!(cands, sample_gammas(&cfg(200), 3).unwrap());
    }

    #[test]
    fn invalid_configs() {
        assert!(sample_gammas(&cfg(0), 2).is_err());
        let mut c = cfg(10);
        c.concentrations = vec![0.0];
        assert!(sample_gammas(&c, 2).is_err());
        assert!(GammaCandidate::new(vec![0.5, 0.6]).is_err());
        assert!(GammaCandidate::new(vec![1.5, -0.5]).is_err());
        assert!(GroupSpec::new(vec![]).is_err());
        assert!(GroupSpec::new(vec![("a".into(), Matrix::zeros(3, 1)), ("b".into(), Matrix::zeros(4, 1))]).is_err());
    }

    #[test]
    fn zero_weight_group_has_no_influence() {
        let a = Matrix::from_fn(12, 2, |r, c| ((r * 7 + c * 3) % 5) as f64 - 2.0);
        let b = Matrix::from_fn(12, 3, |r, c| ((r * 5 + c * 11) % 7) as f64 - 3.0);
        let y = Matrix::from_fn(12, 1, |r, _| (r % 4) as f64);
        let spec = GroupSpec::new(vec![("a".into(), a), ("b".into(), b.clone())]).unwrap();
        let fit = grouped_fit(&spec, &y, &GammaCandidate::new(vec![1.0, 0.0]).unwrap(), 0.5).unwrap();
        assert!((2..5).all(|r| fit.coef[(r, 0)] == 0.0));
        // changing b changes nothing
        let b2 = Matrix::from_fn(12, 3, |r, c| (r * c) as f64);
        let spec2 = GroupSpec::new(vec![("a".into(), spec.groups()[0].1.clone()), ("b".into(), b2)]).unwrap();
        let pred1 = fit.predict(&spec.concat()).unwrap();
        let pred2 = fit.predict(&spec2.concat()).unwrap();
        assert_eq!(pred1, pred2);
        let _ = b;
    }

    fn noise(n: usize, d: usize, salt: u64) -> Matrix {
        use rand::Rng;
        let mut rng = seed::stream_rng(salt, "test", 0);
        Matrix::from_fn(n, d, |_, _| rng.random::<f64>() - 0.5)
    }

    #[test]
    fn single_group_matches_plain_ridge_cv() {
        let x = noise(40, 6, 1);
        let mut y = noise(40, 2, 2);
        for r in 0..40 {
            y[(r, 0)] += x[(r, 0)] - x[(r, 3)];
        }
        let c = GroupedSearchConfig { n_candidates: 4, ..cfg(4) };
        let spec = GroupSpec::new(vec![("only".into(), x.clone())]).unwrap();
        let res = grouped_search(&spec, &y, &c).unwrap();
        let rc = ridge::RidgeConfig { alpha_grid: c.alpha_grid.clone(), n_folds: c.n_folds, n_repeats: c.n_repeats, seed: c.seed };
        let plain = ridge::cv_select(&[ridge::Layer::new("only", x)], &y, &rc).unwrap();
        for (g, p) in res.selections().iter().zip(&plain) {
            assert!((g.cv_r - p.cv_r).abs() < 1e-10);
            assert_eq!(g.alpha, p.alpha);
            assert_eq!(g.candidate, 0);
        }
    }

    #[test]
    fn kernel_route_matches_primal_route() {
        let a = noise(30, 9, 3);
        let b = noise(30, 7, 4);
        let y = noise(30, 2, 5);
        let x = Matrix::hcat(&[&a, &b]).unwrap();
        let widths = [9, 7];
        let train: Vec<usize> = (0..20).collect();
        let val: Vec<usize> = (20..30).collect();
        let grid = ridge::log_alpha_grid(-3.0, 3.0, 7);
        let gamma = [0.3, 0.7];

        let primal = FoldEngine::new(&x, &y, &widths, &train, &val).unwrap();
        assert!(matches!(primal, FoldEngine::Primal { .. }));
        let mut acc_p = Matrix::zeros(7, 2);
        primal.score(&gamma, &grid, &mut acc_p).unwrap();

        let fold = standardize_fold(&x, &y, &train, &val).unwrap();
        let mut grams = Vec::new();
        let mut val_grams = Vec::new();
        for cols in [(0..9).collect::<Vec<_>>(), (9..16).collect()] {
            let tr = fold.x_train.select_cols(&cols);
            let va = fold.x_val.select_cols(&cols);
            grams.push(tr.matmul_tr(&tr).unwrap());
            val_grams.push(va.matmul_tr(&tr).unwrap());
        }
        let kernel = FoldEngine::Kernel { grams, val_grams, y_train: fold.y_train, y_val: fold.y_val };
        let mut acc_k = Matrix::zeros(7, 2);
        kernel.score(&gamma, &grid, &mut acc_k).unwrap();
        assert!(acc_p.sub(&acc_k).unwrap().frobenius_norm() < 1e-8, "{acc_p:?} {acc_k:?}");
    }
}
