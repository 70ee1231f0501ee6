use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sociopose_core::ridge::{
    cv_select, encode, log_alpha_grid, pearson_r, ridge_fit, FoldPlan, Layer, RidgeConfig, TargetSplit,
};
use sociopose_core::Matrix;

fn gaussian(seed: u64, n: usize, d: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn small_cfg() -> RidgeConfig {
    RidgeConfig { alpha_grid: log_alpha_grid(-4.0, 4.0, 9), n_folds: 3, n_repeats: 1, seed: 4 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pearson_affine_invariance(
        seed in 0u64..10_000,
        c1 in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64],
        c2 in -100.0..100.0f64,
    ) {
        let a = gaussian(seed, 30, 1).into_vec();
        let b = gaussian(seed + 1, 30, 1).into_vec();
        let bt: Vec<f64> = b.iter().map(|v| c1 * v + c2).collect();
        let r0 = pearson_r(&a, &b).unwrap().r;
        let r1 = pearson_r(&a, &bt).unwrap().r;
        prop_assert!((r1 - c1.signum() * r0).abs() < 1e-12);
    }

    #[test]
    fn shrinkage_is_monotone(seed in 0u64..10_000, n in 3usize..30, d in 1usize..40) {
        let x = gaussian(seed, n, d);
        let y = gaussian(seed ^ 0xabc, n, 2);
        let norms: Vec<f64> = log_alpha_grid(-10.0, 10.0, 21)
            .iter()
            .map(|&a| ridge_fit(&x, &y, a).unwrap().frobenius_norm())
            .collect();
        for w in norms.windows(2) {
            prop_assert!(w[0] >= w[1] * (1.0 - 1e-12), "{:?}", norms);
        }
    }

    #[test]
    fn fold_plans_partition_rows(n in 6usize..80, k in 2usize..6, reps in 1usize..4, seed in 0u64..100) {
        prop_assume!(n >= 2 * k);
        let plan = FoldPlan::new(n, k, reps, seed).unwrap();
        prop_assert_eq!(&plan, &FoldPlan::new(n, k, reps, seed).unwrap());
        for repeat in plan.repeats() {
            let mut all: Vec<usize> = repeat.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let sizes: Vec<usize> = repeat.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn selection_is_deterministic() {
    let x = gaussian(1, 40, 5);
    let y = gaussian(2, 40, 3);
    let layers = [Layer::new("a", x.clone()), Layer::new("b", gaussian(3, 40, 7))];
    let cfg = small_cfg();
    assert_eq!(cv_select(&layers, &y, &cfg).unwrap(), cv_select(&layers, &y, &cfg).unwrap());
}

#[test]
fn test_data_never_reaches_training() {
    let (n_tr, n_te) = (40, 15);
    let x_tr = gaussian(10, n_tr, 6);
    let y_tr = gaussian(11, n_tr, 2);
    let layers = [Layer::new("l0", x_tr.clone()), Layer::new("l1", gaussian(12, n_tr, 4))];
    let cfg = small_cfg();
    let run = |x_te: Matrix, y_te: Matrix| {
        let split = TargetSplit::new(ids("tr", n_tr), ids("te", n_te), y_tr.clone(), y_te, vec!["a".into(), "b".into()])
            .unwrap();
        let test_layers = [x_te.clone(), x_te.select_cols(&[0, 1, 2, 3])];
        encode("m", &layers, &test_layers, &split, &cfg).unwrap()
    };
    let base = run(gaussian(13, n_te, 6), gaussian(14, n_te, 2));
    let perturbed = run(gaussian(15, n_te, 6), gaussian(16, n_te, 2));
    for (a, b) in base.iter().zip(&perturbed) {
        assert_eq!(a.layer_id, b.layer_id);
        assert_eq!(a.alpha, b.alpha);
    }
    // fitted weights depend only on training rows
    let w0 = ridge_fit(&x_tr, &y_tr, 1.0).unwrap();
    assert_eq!(w0, ridge_fit(&x_tr, &y_tr, 1.0).unwrap());
}

#[test]
fn linear_target_is_recovered() {
    let x = gaussian(20, 120, 8);
    let beta = gaussian(21, 8, 1);
    let y = x.matmul(&beta).unwrap();
    let (tr, te): (Vec<usize>, Vec<usize>) = (0..120).partition(|i| i % 4 != 0);
    let split = TargetSplit::new(
        tr.iter().map(|i| format!("c{i}")).collect(),
        te.iter().map(|i| format!("c{i}")).collect(),
        y.select_rows(&tr),
        y.select_rows(&te),
        vec!["y".into()],
    )
    .unwrap();
    let scores = encode("lin", &[Layer::new("x", x.select_rows(&tr))], &[x.select_rows(&te)], &split, &RidgeConfig::default())
        .unwrap();
    assert!(scores[0].r_test >= 0.999, "{scores:?}");
}

#[test]
fn perfect_layer_wins_every_dim() {
    let n = 60;
    let good = gaussian(30, n, 3);
    let y = good.clone();
    let noise = gaussian(31, n, 3);
    let sel = cv_select(&[Layer::new("noise", noise), Layer::new("perfect", good)], &y, &RidgeConfig::default()).unwrap();
    assert!(sel.iter().all(|s| s.layer_id == "perfect"), "{sel:?}");
}
