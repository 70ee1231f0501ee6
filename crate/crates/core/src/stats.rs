//! Permutation tests, semi-partial encoding, split-half reliability and
//! small score summaries.
//!
//! Sampled permutation draws are counter based: draw `i` uses ChaCha stream
//! `i` of the seed `hash(seed, stage, 0)`, so any partition of the draw
//! range into batches sums to the same count as a single pass.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ridge::{self, pearson_r, Correlation, FoldPlan, Layer, RidgeConfig, RidgePath, TargetSplit};
use crate::seed;

/// Default number of sampled permutations.
pub const DEFAULT_PERMUTATIONS: usize = 5000;
/// Default number of random rater halvings.
pub const DEFAULT_SPLITS: usize = 100;
/// Residual-to-input energy ratio below which residualized features are
/// treated as empty.
pub const MIN_RESIDUAL_ENERGY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `|perm| >= |observed|`.
    TwoSided,
    /// `perm <= observed`.
    OneSidedLeq,
}

impl Tail {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tail::TwoSided => "two_sided",
            Tail::OneSidedLeq => "one_sided_leq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermMode {
    /// Enumerate when the full permutation set is no larger than `n_perm`.
    #[default]
    Auto,
    Sampled,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermTestResult {
    pub observed: f64,
    pub p_value: f64,
    pub n_permutations: usize,
    pub n_extreme: usize,
    pub tail: Tail,
    pub seed: u64,
    pub exhaustive: bool,
}

/// Slack for deciding ties between a permuted statistic and the observed
/// one; both are sums of the same numbers in different orders.
fn tie_tolerance(values: &[f64]) -> f64 {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    1e-12 * (1.0 + scale)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `C(n, k)`, or `None` once it exceeds `u64`.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

fn draw_rng(base: u64, draw: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(draw);
    rng
}

fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what })
    }
}

/// Two-sample test on the difference of means with shuffled labels.
#[derive(Debug, Clone)]
pub struct UnpairedTest {
    pooled: Vec<f64>,
    n_a: usize,
    observed: f64,
    tol: f64,
}

impl UnpairedTest {
    pub fn new(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Empty { what: "permutation group" });
        }
        check_finite(a, "permutation scores")?;
        check_finite(b, "permutation scores")?;
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let tol = tie_tolerance(&pooled);
        Ok(UnpairedTest { observed: mean(a) - mean(b), n_a: a.len(), tol, pooled })
    }

    pub fn observed(&self) -> f64 {
        self.observed
    }

    /// Size of the full label-assignment set, if it fits in `u64`.
    pub fn n_assignments(&self) -> Option<u64> {
        binomial(self.pooled.len(), self.n_a)
    }

    fn stat_from_sum(&self, sum_a: f64, total: f64) -> f64 {
        let n_b = self.pooled.len() - self.n_a;
        sum_a / self.n_a as f64 - (total - sum_a) / n_b as f64
    }

    fn is_extreme(&self, stat: f64) -> bool {
        stat.abs() >= self.observed.abs() - self.tol
    }

    /// Extreme count over every assignment of `n_a` labels.
    pub fn count_exhaustive(&self) -> usize {
        let n = self.pooled.len();
        let k = self.n_a;
        let total: f64 = self.pooled.iter().sum();
        let mut idx: Vec<usize> = (0..k).collect();
        let mut count = 0;
        loop {
            let sum_a: f64 = idx.iter().map(|&i| self.pooled[i]).sum();
            if self.is_extreme(self.stat_from_sum(sum_a, total)) {
                count += 1;
            }
            // next k-combination in lexicographic order
            let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
                return count;
            };
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    /// Extreme count over sampled draws `draws`.
    pub fn count_sampled(&self, seed: u64, draws: Range<u64>) -> usize {
        let base = seed::derive_seed(seed, "perm-unpaired", 0);
        let total: f64 = self.pooled.iter().sum();
        let mut work = self.pooled.clone();
        let mut count = 0;
        for d in draws {
            work.copy_from_slice(&self.pooled);
            let mut rng = draw_rng(base, d);
            let (chosen, _) = work.partial_shuffle(&mut rng, self.n_a);
            let sum_a: f64 = chosen.iter().sum();
            if self.is_extreme(self.stat_from_sum(sum_a, total)) {
                count += 1;
            }
        }
        count
    }

    pub fn run(&self, n_perm: usize, seed: u64, mode: PermMode) -> Result<PermTestResult> {
        let exhaustive = match mode {
            PermMode::Exhaustive => true,
            PermMode::Sampled => false,
            PermMode::Auto => self.n_assignments().is_some_and(|c| c <= n_perm as u64),
        };
        let (n, extreme) = if exhaustive {
            let c = self.n_assignments().filter(|&c| c <= usize::MAX as u64).ok_or(Error::invalid(
                "mode",
                "too many assignments to enumerate",
            ))? as usize;
            (c, self.count_exhaustive())
        } else {
            if n_perm == 0 {
                return Err(Error::invalid("n_perm", "must be at least 1"));
            }
            (n_perm, self.count_sampled(seed, 0..n_perm as u64))
        };
        Ok(PermTestResult {
            observed: self.observed,
            p_value: extreme as f64 / n as f64,
            n_permutations: n,
            n_extreme: extreme,
            tail: Tail::TwoSided,
            seed,
            exhaustive,
        })
    }
}

/// Two-tailed unpaired permutation test on `mean(a) - mean(b)`.
pub fn perm_test_unpaired(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<PermTestResult> {
    UnpairedTest::new(a, b)?.run(n_perm, seed, PermMode::Auto)
}

/// One-tailed paired test on `mean(diffs)`; the null flips each sign.
#[derive(Debug, Clone)]
pub struct PairedTest {
    diffs: Vec<f64>,
    observed: f64,
    tol: f64,
}

impl PairedTest {
    pub fn new(diffs: &[f64]) -> Result<Self> {
        if diffs.is_empty() {
            return Err(Error::Empty { what: "paired differences" });
        }
        check_finite(diffs, "paired differences")?;
        Ok(PairedTest { observed: mean(diffs), tol: tie_tolerance(diffs), diffs: diffs.to_vec() })
    }

    pub fn observed(&self) -> f64 {
        self.observed
    }

    /// `2^n`, if it fits in `u64`.
    pub fn n_patterns(&self) -> Option<u64> {
        1u64.checked_shl(self.diffs.len() as u32).filter(|_| self.diffs.len() < 64)
    }

    fn is_extreme(&self, sum: f64) -> bool {
        sum / self.diffs.len() as f64 <= self.observed + self.tol
    }

    pub fn count_exhaustive(&self) -> usize {
        let n = self.diffs.len();
        let patterns = self.n_patterns().expect("checked by caller");
        (0..patterns)
            .filter(|mask| {
                let sum: f64 = (0..n).map(|i| if mask >> i & 1 == 1 { -self.diffs[i] } else { self.diffs[i] }).sum();
                self.is_extreme(sum)
            })
            .count()
    }

    pub fn count_sampled(&self, seed: u64, draws: Range<u64>) -> usize {
        let base = seed::derive_seed(seed, "perm-paired", 0);
        draws
            .filter(|&d| {
                let mut rng = draw_rng(base, d);
                let sum: f64 = self.diffs.iter().map(|&x| if rng.random::<bool>() { -x } else { x }).sum();
                self.is_extreme(sum)
            })
            .count()
    }

    pub fn run(&self, n_perm: usize, seed: u64, mode: PermMode) -> Result<PermTestResult> {
        let exhaustive = match mode {
            PermMode::Exhaustive => true,
            PermMode::Sampled => false,
            PermMode::Auto => self.n_patterns().is_some_and(|c| c <= n_perm as u64),
        };
        let (n, extreme) = if exhaustive {
            let c = self
                .n_patterns()
                .filter(|&c| c <= usize::MAX as u64)
                .ok_or(Error::invalid("mode", "too many sign patterns to enumerate"))? as usize;
            (c, self.count_exhaustive())
        } else {
            if n_perm == 0 {
                return Err(Error::invalid("n_perm", "must be at least 1"));
            }
            (n_perm, self.count_sampled(seed, 0..n_perm as u64))
        };
        Ok(PermTestResult {
            observed: self.observed,
            p_value: extreme as f64 / n as f64,
            n_permutations: n,
            n_extreme: extreme,
            tail: Tail::OneSidedLeq,
            seed,
            exhaustive,
        })
    }
}

/// One-tailed paired permutation test; small p means the differences are
/// unusually negative.
pub fn perm_test_paired(diffs: &[f64], n_perm: usize, seed: u64) -> Result<PermTestResult> {
    PairedTest::new(diffs)?.run(n_perm, seed, PermMode::Auto)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiPartialDim {
    pub rating_dim: String,
    pub r_semi: f64,
    /// `None` when the residuals were degenerate and no fit was made.
    pub alpha_predictor: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiPartialResult {
    pub control_id: String,
    /// Penalty per column of the full set; empty for an empty control,
    /// where no residualization happens.
    pub alpha_residualizer: Vec<f64>,
    /// Residual energy over input energy on the training rows.
    pub residual_ratio: f64,
    pub dims: Vec<SemiPartialDim>,
}

/// Unique held-out contribution of `full` beyond `control`.
///
/// `full` is residualized on `control` with a multi-output ridge fit on the
/// training rows; the penalty maximizes mean CV r across `full`'s columns.
/// The residuals are then encoded exactly as [`ridge::encode`] would encode
/// raw features. An empty control skips the first stage.
pub fn semipartial(
    control_id: &str,
    control: (&Matrix, &Matrix),
    full: (&Matrix, &Matrix),
    split: &TargetSplit,
    cfg: &RidgeConfig,
) -> Result<SemiPartialResult> {
    cfg.validate()?;
    let (c_train, c_test) = control;
    let (f_train, f_test) = full;
    let n_tr = split.train_ids.len();
    let n_te = split.test_ids.len();
    for (m, n) in [(c_train, n_tr), (f_train, n_tr), (c_test, n_te), (f_test, n_te)] {
        if m.rows() != n {
            return Err(Error::Shape { op: "semipartial", expected: (n, m.cols()), found: m.shape() });
        }
    }
    if c_train.cols() != c_test.cols() || f_train.cols() != f_test.cols() {
        return Err(Error::Shape { op: "semipartial", expected: c_train.shape(), found: c_test.shape() });
    }

    if c_train.cols() == 0 {
        let scores = ridge::encode(control_id, &[Layer::new("full", f_train.clone())], core::slice::from_ref(f_test), split, cfg)?;
        return Ok(SemiPartialResult {
            control_id: control_id.into(),
            alpha_residualizer: Vec::new(),
            residual_ratio: 1.0,
            dims: scores
                .into_iter()
                .map(|s| SemiPartialDim {
                    rating_dim: s.rating_dim,
                    r_semi: s.r_test,
                    alpha_predictor: Some(s.alpha),
                    degenerate: s.degenerate,
                })
                .collect(),
        });
    }

    let cs = ridge::zscore_fit(c_train)?;
    let fs = ridge::zscore_fit(f_train)?;
    let c_tr = cs.apply(c_train)?;
    let c_te = cs.apply(c_test)?;
    let f_tr = fs.apply(f_train)?;
    let f_te = fs.apply(f_test)?;

    let plan = FoldPlan::new(n_tr, cfg.n_folds, cfg.n_repeats, cfg.seed)?;
    let scores = ridge::cv_scores(&c_tr, &f_tr, &plan, &cfg.alpha_grid)?;
    let alpha_res: Vec<f64> = (0..f_tr.cols())
        .map(|c| {
            let mut best = (f64::NEG_INFINITY, cfg.alpha_grid[0]);
            for (ai, &alpha) in cfg.alpha_grid.iter().enumerate() {
                let r = scores[(ai, c)];
                if r > best.0 || (r == best.0 && alpha < best.1) {
                    best = (r, alpha);
                }
            }
            best.1
        })
        .collect();
    let w = RidgePath::new(&c_tr, &f_tr)?.weights_per_target(&alpha_res);
    let mut resid_tr = f_tr.sub(&c_tr.matmul(&w)?)?;
    let mut resid_te = f_te.sub(&c_te.matmul(&w)?)?;
    // a column the control explains fully is zeroed; rescaling it inside the
    // encoder would otherwise restore the control's information
    for c in 0..f_tr.cols() {
        let before: f64 = (0..n_tr).map(|r| f_tr[(r, c)] * f_tr[(r, c)]).sum();
        let after: f64 = (0..n_tr).map(|r| resid_tr[(r, c)] * resid_tr[(r, c)]).sum();
        if after < MIN_RESIDUAL_ENERGY * before {
            (0..n_tr).for_each(|r| resid_tr[(r, c)] = 0.0);
            (0..n_te).for_each(|r| resid_te[(r, c)] = 0.0);
        }
    }

    let input_energy = f_tr.frobenius_norm();
    let ratio = if input_energy > 0.0 {
        let r = resid_tr.frobenius_norm() / input_energy;
        r * r
    } else {
        0.0
    };
    if ratio < MIN_RESIDUAL_ENERGY {
        return Ok(SemiPartialResult {
            control_id: control_id.into(),
            alpha_residualizer: alpha_res,
            residual_ratio: ratio,
            dims: split
                .dim_names
                .iter()
                .map(|d| SemiPartialDim { rating_dim: d.clone(), r_semi: 0.0, alpha_predictor: None, degenerate: true })
                .collect(),
        });
    }

    let scores = ridge::encode(control_id, &[Layer::new("residual", resid_tr)], &[resid_te], split, cfg)?;
    Ok(SemiPartialResult {
        control_id: control_id.into(),
        alpha_residualizer: alpha_res,
        residual_ratio: ratio,
        dims: scores
            .into_iter()
            .map(|s| SemiPartialDim {
                rating_dim: s.rating_dim,
                r_semi: s.r_test,
                alpha_predictor: Some(s.alpha),
                degenerate: s.degenerate,
            })
            .collect(),
    })
}

/// Ratings for one dimension: `clips x raters`, `None` where a rater did
/// not rate a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct RaterTable {
    pub rating_dim: String,
    pub clip_ids: Vec<String>,
    pub rater_ids: Vec<String>,
    values: Vec<Option<f64>>,
}

impl RaterTable {
    pub fn new(rating_dim: impl Into<String>, clip_ids: Vec<String>, rater_ids: Vec<String>, values: Vec<Option<f64>>) -> Result<Self> {
        if values.len() != clip_ids.len() * rater_ids.len() {
            return Err(Error::Shape { op: "RaterTable::new", expected: (clip_ids.len(), rater_ids.len()), found: (values.len(), 1) });
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "rating" });
        }
        Ok(RaterTable { rating_dim: rating_dim.into(), clip_ids, rater_ids, values })
    }

    pub fn get(&self, clip: usize, rater: usize) -> Option<f64> {
        self.values[clip * self.rater_ids.len() + rater]
    }

    /// Per-clip mean over raters present.
    pub fn clip_means(&self) -> Vec<Option<f64>> {
        (0..self.clip_ids.len())
            .map(|c| {
                let vals: Vec<f64> = (0..self.rater_ids.len()).filter_map(|r| self.get(c, r)).collect();
                (!vals.is_empty()).then(|| mean(&vals))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityResult {
    pub rating_dim: String,
    pub r_split_half: f64,
    /// Splits that had enough clips to correlate.
    pub n_splits: usize,
    pub spearman_brown: bool,
    /// Clips with fewer than two raters.
    pub excluded: Vec<String>,
}

/// `2r / (1 + r)`, clamped to `[-1, 1]`.
pub fn spearman_brown(r: f64) -> f64 {
    if r <= -1.0 {
        return -1.0;
    }
    (2.0 * r / (1.0 + r)).clamp(-1.0, 1.0)
}

/// Split-half reliability: raters are split into two random halves (the
/// same halves for every clip), half-means are correlated across clips, the
/// correlation is Spearman–Brown corrected, and the mean over splits is
/// reported. A clip is skipped in a split when one half has no rating for it.
pub fn split_half_reliability(table: &RaterTable, n_splits: usize, seed: u64) -> Result<ReliabilityResult> {
    if n_splits == 0 {
        return Err(Error::invalid("n_splits", "must be at least 1"));
    }
    let n_raters = table.rater_ids.len();
    if n_raters < 2 {
        return Err(Error::invalid("raters", "need at least two raters"));
    }
    let mut usable = Vec::new();
    let mut excluded = Vec::new();
    for (c, id) in table.clip_ids.iter().enumerate() {
        let present = (0..n_raters).filter(|&r| table.get(c, r).is_some()).count();
        if present >= 2 {
            usable.push(c);
        } else {
            excluded.push(id.clone());
        }
    }
    if usable.len() < 2 {
        return Err(Error::Empty { what: "clips with at least two raters" });
    }

    let mut order: Vec<usize> = (0..n_raters).collect();
    let mut in_first = vec![false; n_raters];
    let mut total = 0.0;
    let mut used = 0;
    for s in 0..n_splits {
        let mut rng = seed::stream_rng(seed, "split-half", s as u64);
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i);
        order.shuffle(&mut rng);
        in_first.iter_mut().for_each(|f| *f = false);
        for &r in &order[..n_raters / 2] {
            in_first[r] = true;
        }
        let mut xa = Vec::with_capacity(usable.len());
        let mut xb = Vec::with_capacity(usable.len());
        for &c in &usable {
            let (mut sa, mut na, mut sb, mut nb) = (0.0, 0usize, 0.0, 0usize);
            for (r, &first) in in_first.iter().enumerate() {
                if let Some(v) = table.get(c, r) {
                    if first {
                        sa += v;
                        na += 1;
                    } else {
                        sb += v;
                        nb += 1;
                    }
                }
            }
            if na > 0 && nb > 0 {
                xa.push(sa / na as f64);
                xb.push(sb / nb as f64);
            }
        }
        if xa.len() < 2 {
            continue;
        }
        total += spearman_brown(pearson_r(&xa, &xb)?.r);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Empty { what: "split with two or more shared clips" });
    }
    Ok(ReliabilityResult {
        rating_dim: table.rating_dim.clone(),
        r_split_half: (total / used as f64).clamp(-1.0, 1.0),
        n_splits: used,
        spearman_brown: true,
        excluded,
    })
}

/// Elementwise `a - b`.
pub fn delta_r(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Shape { op: "delta_r", expected: (a.len(), 1), found: (b.len(), 1) });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x - y).collect())
}

/// Pearson r across `(human-judgment r, pose-prediction r)` pairs.
pub fn score_relationship(pairs: &[(f64, f64)]) -> Result<Correlation> {
    if pairs.len() < 2 {
        return Err(Error::TooFewRows { op: "score_relationship", needed: 2, found: pairs.len() });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    pearson_r(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unpaired_examples() {
        let r = perm_test_unpaired(&[1.0, 1.0], &[0.0, 0.0], 5000, 0).unwrap();
        assert!(r.exhaustive);
        assert_eq!(r.n_permutations, 6);
        assert_eq!(r.n_extreme, 2);
        assert_eq!(r.observed, 1.0);
        let r = perm_test_unpaired(&[3.0, 3.0, 3.0], &[3.0, 3.0], 5000, 0).unwrap();
        assert_eq!((r.observed, r.p_value), (0.0, 1.0));
        assert!(perm_test_unpaired(&[], &[1.0], 10, 0).is_err());
        assert!(perm_test_unpaired(&[f64::NAN], &[1.0], 10, 0).is_err());
    }

    #[test]
    fn paired_examples() {
        let r = perm_test_paired(&[-1.0, -1.0], 5000, 0).unwrap();
        assert!(r.exhaustive);
        assert_eq!((r.n_permutations, r.p_value), (4, 0.25));
        assert_eq!(perm_test_paired(&[0.0; 5], 5000, 0).unwrap().p_value, 1.0);
        assert!(perm_test_paired(&[], 10, 0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(20, 10), Some(184_756));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(200, 100), None);
    }

    #[test]
    fn sampled_draws_partition_cleanly() {
        let t = UnpairedTest::new(&[0.3, 0.5, 0.1, 0.9, 0.2, 0.4], &[0.0, 0.2, 0.1, 0.3, 0.25]).unwrap();
        let whole = t.count_sampled(9, 0..1000);
        let parts: usize = [0..137, 137..600, 600..1000].into_iter().map(|r| t.count_sampled(9, r)).sum();
        assert_eq!(whole, parts);
        let p = PairedTest::new(&[0.1, -0.2, -0.3, 0.05, -0.1, 0.2, -0.4, 0.3, -0.05, -0.2, 0.1, -0.15]).unwrap();
        assert_eq!(p.count_sampled(3, 0..700), p.count_sampled(3, 0..350) + p.count_sampled(3, 350..700));
    }

    #[test]
    fn semipartial_self_control_is_degenerate_or_small() {
        let n = 40;
        let x = Matrix::from_fn(n, 3, |r, c| ((r * (c + 3) * 7919) % 101) as f64 / 101.0);
        let y = Matrix::from_fn(n, 1, |r, _| x[(r, 0)] + 0.5 * x[(r, 2)]);
        let (tr, te): (Vec<usize>, Vec<usize>) = (0..n).partition(|r| r % 2 == 0);
        let ids = |v: &[usize]| v.iter().map(|i| alloc::format!("c{i}")).collect::<Vec<_>>();
        let split = TargetSplit::new(ids(&tr), ids(&te), y.select_rows(&tr), y.select_rows(&te), vec!["d".into()]).unwrap();
        let cfg = RidgeConfig { n_folds: 4, ..RidgeConfig::default() };
        let xs = (&x.select_rows(&tr), &x.select_rows(&te));
        let res = semipartial("self", xs, xs, &split, &cfg).unwrap();
        assert!(res.dims[0].r_semi.abs() < 0.1, "{res:?}");
    }

    #[test]
    fn reliability_examples() {
        let clips: Vec<String> = (0..6).map(|i| alloc::format!("c{i}")).collect();
        let raters: Vec<String> = (0..4).map(|i| alloc::format!("r{i}")).collect();
        let vals: Vec<Option<f64>> = (0..24).map(|i| Some((i / 4) as f64 * 1.5)).collect();
        let t = RaterTable::new("facing", clips.clone(), raters, vals).unwrap();
        let res = split_half_reliability(&t, 20, 1).unwrap();
        assert!((res.r_split_half - 1.0).abs() < 1e-12);
        assert_eq!(res.n_splits, 20);

        // two raters: plain correlation, then the correction
        let a = [1.0, 2.0, 4.0, 3.0, 5.0, 0.5];
        let b = [2.0, 1.0, 3.5, 3.0, 6.0, 1.0];
        let vals: Vec<Option<f64>> = a.iter().zip(&b).flat_map(|(x, y)| [Some(*x), Some(*y)]).collect();
        let t = RaterTable::new("d", clips.clone(), vec!["x".into(), "y".into()], vals).unwrap();
        let r = pearson_r(&a, &b).unwrap().r;
        let res = split_half_reliability(&t, 1, 0).unwrap();
        assert!((res.r_split_half - 2.0 * r / (1.0 + r)).abs() < 1e-12);

        // sparse clip excluded
        let mut vals: Vec<Option<f64>> = a.iter().zip(&b).flat_map(|(x, y)| [Some(*x), Some(*y)]).collect();
        vals[1] = None;
        let t = RaterTable::new("d", clips, vec!["x".into(), "y".into()], vals).unwrap();
        assert_eq!(split_half_reliability(&t, 3, 0).unwrap().excluded, vec![String::from("c0")]);
    }

    #[test]
    fn small_summaries() {
        assert_eq!(delta_r(&[0.5], &[0.2]).unwrap()[0], 0.5 - 0.2);
        assert_eq!(delta_r(&[0.1, 0.2], &[0.1, 0.2]).unwrap(), vec![0.0, 0.0]);
        assert!(delta_r(&[0.1], &[]).is_err());
        let line: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((score_relationship(&line).unwrap().r - 1.0).abs() < 1e-12);
        assert!(score_relationship(&[(1.0, 1.0)]).is_err());
        assert_eq!(spearman_brown(-1.0), -1.0);
        assert_eq!(spearman_brown(0.0), 0.0);
    }
}
