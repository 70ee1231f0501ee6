//! Sparse random projection to a Johnson-Lindenstrauss sized space.
//!
//! Entries are `-v`, `0`, `+v` with probabilities `density/2`,
//! `1 - density`, `density/2`, where `density = 1/sqrt(d_in)` and
//! `v = sqrt(1 / (density * d_out))`, so squared norms are preserved in
//! expectation. The matrix is regenerated from `(d_in, d_out, seed)`; each
//! output row draws from its own ChaCha stream.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::{math, seed};

/// Target size used for every embedding in the benchmark.
pub const DEFAULT_TARGET_DIM: usize = 4732;
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Minimum dimension that keeps pairwise distances of `n_samples` points
/// within a factor `1 ± epsilon`: `floor(4 ln n / (ε²/2 − ε³/3))`.
pub fn jl_min_dim(n_samples: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", alloc::format!("{epsilon} outside (0, 1)")));
    }
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least 2 samples"));
    }
    let denom = epsilon * epsilon / 2.0 - epsilon * epsilon * epsilon / 3.0;
    Ok(math::floor(4.0 * math::ln(n_samples as f64) / denom) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrpConfig {
    pub epsilon: f64,
    pub target_dim: usize,
    pub seed: u64,
}

impl Default for SrpConfig {
    fn default() -> Self {
        SrpConfig { epsilon: DEFAULT_EPSILON, target_dim: DEFAULT_TARGET_DIM, seed: 0 }
    }
}

impl SrpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid("epsilon", alloc::format!("{} outside (0, 1)", self.epsilon)));
        }
        if self.target_dim == 0 {
            return Err(Error::invalid("target_dim", "must be at least 1"));
        }
        Ok(())
    }
}

/// Sparse `d_out x d_in` projection stored by output row. Every nonzero
/// has magnitude `value`; only its sign and column are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SrpMatrix {
    d_in: usize,
    d_out: usize,
    density: f64,
    value: f64,
    seed: u64,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    negative: Vec<bool>,
}

impl SrpMatrix {
    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Entry `(row, col)` as a dense value. Linear in the row's nonzeros.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let span = self.row_start[row]..self.row_start[row + 1];
        match self.cols[span.clone()].binary_search(&(col as u32)) {
            Ok(k) => {
                if self.negative[span.start + k] {
                    -self.value
                } else {
                    self.value
                }
            }
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.d_out, self.d_in);
        for r in 0..self.d_out {
            for k in self.row_start[r]..self.row_start[r + 1] {
                m[(r, self.cols[k] as usize)] = if self.negative[k] { -self.value } else { self.value };
            }
        }
        m
    }
}

/// Generates the projection for inputs of width `d_in`. The stream seed is
/// `hash(cfg.seed, "srp", d_in)`; output row `r` uses ChaCha stream `r`.
pub fn build_srp(d_in: usize, cfg: &SrpConfig) -> Result<SrpMatrix> {
    cfg.validate()?;
    if d_in == 0 {
        return Err(Error::invalid("d_in", "must be at least 1"));
    }
    if d_in > u32::MAX as usize {
        return Err(Error::invalid("d_in", "too wide"));
    }
    let d_out = cfg.target_dim;
    let density = 1.0 / math::sqrt(d_in as f64);
    let value = math::sqrt(1.0 / (density * d_out as f64));
    let stream_seed = seed::derive_seed(cfg.seed, "srp", d_in as u64);
    let half = density / 2.0;

    let expected = (density * (d_in * d_out) as f64) as usize;
    let mut row_start = Vec::with_capacity(d_out + 1);
    let mut cols = Vec::with_capacity(expected + expected / 8 + 16);
    let mut negative = Vec::with_capacity(cols.capacity());
    row_start.push(0);
    for r in 0..d_out {
        let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(stream_seed);
        rng.set_stream(r as u64);
        for c in 0..d_in {
            let u: f64 = rng.random();
            if u < density {
                cols.push(c as u32);
                negative.push(u < half);
            }
        }
        row_start.push(cols.len());
    }
    Ok(SrpMatrix { d_in, d_out, density, value, seed: cfg.seed, row_start, cols, negative })
}

/// Result of [`apply_srp`]; `applied` is false for the identity pass-through.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub matrix: Matrix,
    pub applied: bool,
}

/// `X · Pᵀ`. Inputs no wider than the target are passed through unchanged.
pub fn apply_srp(x: &Matrix, p: &SrpMatrix) -> Result<Projected> {
    if x.cols() != p.d_in {
        return Err(Error::Shape { op: "apply_srp", expected: (x.rows(), p.d_in), found: x.shape() });
    }
    if p.d_in <= p.d_out {
        return Ok(Projected { matrix: x.clone(), applied: false });
    }
    Ok(Projected { matrix: project_rows(x, p), applied: true })
}

fn project_rows(x: &Matrix, p: &SrpMatrix) -> Matrix {
    let mut out = Matrix::zeros(x.rows(), p.d_out);
    for i in 0..x.rows() {
        let row = x.row(i);
        let out_row = out.row_mut(i);
        for (r, o) in out_row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in p.row_start[r]..p.row_start[r + 1] {
                let v = row[p.cols[k] as usize];
                if p.negative[k] {
                    acc -= v;
                } else {
                    acc += v;
                }
            }
            *o = acc * p.value;
        }
    }
    out
}

/// Builds the projection for `x`'s width and applies it.
pub fn project_if_wider(x: &Matrix, cfg: &SrpConfig) -> Result<Projected> {
    cfg.validate()?;
    if x.cols() <= cfg.target_dim {
        return Ok(Projected { matrix: x.clone(), applied: false });
    }
    let p = build_srp(x.cols(), cfg)?;
    apply_srp(x, &p)
}
