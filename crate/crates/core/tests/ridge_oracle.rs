//! Ridge solvers against explicit normal-equation solves done with an
//! independent LU factorization (nalgebra).

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sociopose_core::linalg::Matrix;
use sociopose_core::ridge::{log_alpha_grid, ridge_fit, ridge_fit_with, RidgeSolver};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    use rand_distr::{Distribution, StandardNormal};
    Matrix::from_fn(n, d, |_, _| StandardNormal.sample(rng))
}

/// Primal normal equations when d <= n, dual ones otherwise.
fn oracle(x: &Matrix, y: &Matrix, alpha: f64) -> DMatrix<f64> {
    let (xn, yn) = (to_na(x), to_na(y));
    let (n, d) = x.shape();
    if d <= n {
        let a = xn.transpose() * &xn + DMatrix::identity(d, d) * alpha;
        a.lu().solve(&(xn.transpose() * yn)).expect("oracle solve")
    } else {
        let k = &xn * xn.transpose() + DMatrix::identity(n, n) * alpha;
        xn.transpose() * k.lu().solve(&yn).expect("oracle solve")
    }
}

fn rel(a: &Matrix, b: &DMatrix<f64>) -> f64 {
    let diff = (to_na(a) - b).norm();
    diff / b.norm().max(f64::MIN_POSITIVE)
}

#[test]
fn svd_ridge_matches_normal_equations() {
    let grid = log_alpha_grid(-10.0, 10.0, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=50);
        let d = rng.random_range(1..=80);
        let t = rng.random_range(1..=5);
        let x = gaussian(&mut rng, n, d);
        let y = gaussian(&mut rng, n, t);
        for &alpha in &grid {
            let w = ridge_fit(&x, &y, alpha).unwrap();
            let e = rel(&w, &oracle(&x, &y, alpha));
            worst = worst.max(e);
            assert!(e < 1e-8, "n={n} d={d} alpha={alpha:e}: rel err {e:e}");
        }
    }
    eprintln!("worst relative error {worst:e}");
}

#[test]
fn primal_and_dual_agree_when_wide() {
    let grid = log_alpha_grid(-10.0, 10.0, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 100 {
        let n = rng.random_range(2..=50);
        let d = rng.random_range(1..=80);
        if d <= n {
            continue;
        }
        let t = rng.random_range(1..=5);
        let x = gaussian(&mut rng, n, d);
        let y = gaussian(&mut rng, n, t);
        for &alpha in &grid {
            // X Xᵀ has full rank n here, but XᵀX + αI is nearly singular for tiny α
            let dual = ridge_fit_with(&x, &y, alpha, RidgeSolver::Dual).unwrap();
            let svd = ridge_fit(&x, &y, alpha).unwrap();
            let scale = svd.frobenius_norm().max(f64::MIN_POSITIVE);
            let e = dual.sub(&svd).unwrap().frobenius_norm() / scale;
            assert!(e < 1e-8, "dual vs svd n={n} d={d} alpha={alpha:e}: {e:e}");
            let primal = ridge_fit_with(&x, &y, alpha, RidgeSolver::Primal).unwrap();
            let e = primal.sub(&dual).unwrap().frobenius_norm() / scale;
            assert!(e < 1e-8, "primal vs dual n={n} d={d} alpha={alpha:e}: {e:e}");
        }
        checked += 1;
    }
}
