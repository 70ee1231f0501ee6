use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sociopose_core::projection::{apply_srp, build_srp, jl_min_dim, project_if_wider, SrpConfig};
use sociopose_core::Matrix;

fn gaussian(seed: u64, n: usize, d: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
}

/// Fraction of pairwise distances kept within `tol` relative error.
fn preserved_fraction(x: &Matrix, y: &Matrix, tol: f64) -> f64 {
    let n = x.rows();
    let dist = |m: &Matrix, i: usize, j: usize| -> f64 {
        m.row(i).iter().zip(m.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    let mut ok = 0;
    let mut total = 0;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (dist(x, i, j), dist(y, i, j));
            ok += usize::from((b - a).abs() <= tol * a);
            total += 1;
        }
    }
    ok as f64 / total as f64
}

#[test]
fn jl_anchor() {
    assert_eq!(jl_min_dim(250, 0.1).unwrap(), 4732);
}

#[test]
fn distances_survive_projection_for_ten_seeds() {
    let x = gaussian(99, 60, 6000);
    for seed in 0..10 {
        let cfg = SrpConfig { seed, ..SrpConfig::default() };
        let y = project_if_wider(&x, &cfg).unwrap();
        assert!(y.applied);
        assert_eq!(y.matrix.cols(), 4732);
        let frac = preserved_fraction(&x, &y.matrix, 0.15);
        assert!(frac >= 0.95, "seed {seed}: {frac}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_linear_and_deterministic(seed in 0u64..1000, d_in in 20usize..200, a in -3.0..3.0f64) {
        let cfg = SrpConfig { target_dim: 16, seed, ..SrpConfig::default() };
        let p = build_srp(d_in, &cfg).unwrap();
        let x = gaussian(seed, 3, d_in);
        let z = gaussian(seed + 7, 3, d_in);
        let combo = Matrix::from_fn(3, d_in, |r, c| a * x[(r, c)] + z[(r, c)]);
        let px = apply_srp(&x, &p).unwrap().matrix;
        let pz = apply_srp(&z, &p).unwrap().matrix;
        let pc = apply_srp(&combo, &p).unwrap().matrix;
        let expect = Matrix::from_fn(3, 16, |r, c| a * px[(r, c)] + pz[(r, c)]);
        prop_assert!(pc.sub(&expect).unwrap().frobenius_norm() <= 1e-10 * (1.0 + expect.frobenius_norm()));
        prop_assert_eq!(px, apply_srp(&x, &build_srp(d_in, &cfg).unwrap()).unwrap().matrix);
    }

    #[test]
    fn narrow_inputs_pass_through(seed in 0u64..1000, d_in in 1usize..40) {
        let cfg = SrpConfig { target_dim: 40, seed, ..SrpConfig::default() };
        let x = gaussian(seed, 4, d_in);
        let out = project_if_wider(&x, &cfg).unwrap();
        prop_assert!(!out.applied);
        prop_assert_eq!(out.matrix, x);
    }
}
