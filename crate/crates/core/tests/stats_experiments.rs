use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sociopose_core::ridge::{self, pearson_r, Layer, RidgeConfig, TargetSplit};
use sociopose_core::stats::{
    perm_test_paired, perm_test_unpaired, score_relationship, semipartial, split_half_reliability, PairedTest,
    PermMode, RaterTable, UnpairedTest,
};
use sociopose_core::Matrix;

fn normals(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn gaussian(seed: u64, n: usize, d: usize) -> Matrix {
    Matrix::from_vec(n, d, normals(seed, n * d)).unwrap()
}

#[test]
fn sampled_p_values_converge_to_enumeration() {
    let bound = 2.0 / 5000f64.sqrt();
    let u = UnpairedTest::new(&[1.0, 1.0], &[0.0, 0.0]).unwrap();
    let exact = u.run(5000, 0, PermMode::Exhaustive).unwrap();
    assert_eq!(exact.p_value, 2.0 / 6.0);
    let sampled = u.run(5000, 11, PermMode::Sampled).unwrap();
    assert!((sampled.p_value - 1.0 / 3.0).abs() <= bound, "{}", sampled.p_value);

    let p = PairedTest::new(&[-1.0, -1.0]).unwrap();
    assert_eq!(p.run(5000, 0, PermMode::Exhaustive).unwrap().p_value, 0.25);
    let sampled = p.run(5000, 11, PermMode::Sampled).unwrap();
    assert!((sampled.p_value - 0.25).abs() <= bound, "{}", sampled.p_value);
}

#[test]
fn null_calibration() {
    let mut rejections = 0;
    for i in 0..1000u64 {
        let a = normals(2 * i, 12);
        let b = normals(2 * i + 1, 12);
        let r = perm_test_unpaired(&a, &b, 1000, i).unwrap();
        assert!(!r.exhaustive);
        rejections += usize::from(r.p_value < 0.05);
    }
    let rate = rejections as f64 / 1000.0;
    assert!((0.03..=0.07).contains(&rate), "rejection rate {rate}");
}

#[test]
fn sampled_p_values_are_reproducible() {
    let a = normals(1, 15);
    let b = normals(2, 14);
    let x = perm_test_unpaired(&a, &b, 5000, 77).unwrap();
    assert_eq!(x, perm_test_unpaired(&a, &b, 5000, 77).unwrap());
    assert_ne!(x.n_extreme, perm_test_unpaired(&a, &b, 5000, 78).unwrap().n_extreme);
    let d = normals(3, 20);
    assert_eq!(perm_test_paired(&d, 5000, 5).unwrap(), perm_test_paired(&d, 5000, 5).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unpaired_is_symmetric(seed in 0u64..10_000, na in 1usize..6, nb in 1usize..6) {
        let a = normals(seed, na);
        let b = normals(seed + 1, nb);
        let ab = perm_test_unpaired(&a, &b, 5000, seed).unwrap();
        let ba = perm_test_unpaired(&b, &a, 5000, seed).unwrap();
        prop_assert!(ab.exhaustive && ba.exhaustive);
        prop_assert!((ab.observed + ba.observed).abs() < 1e-12);
        prop_assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn paired_negation_is_complementary(seed in 0u64..10_000, n in 1usize..10) {
        let d = normals(seed, n);
        let neg: Vec<f64> = d.iter().map(|v| -v).collect();
        let total = 1usize << n;
        let p_neg = perm_test_paired(&neg, 5000, 0).unwrap();
        // count of sign patterns whose mean is >= the original observed mean
        let obs = d.iter().sum::<f64>() / n as f64;
        let geq = (0..total)
            .filter(|mask| {
                let m = (0..n).map(|i| if mask >> i & 1 == 1 { -d[i] } else { d[i] }).sum::<f64>() / n as f64;
                m >= obs - 1e-12
            })
            .count();
        prop_assert!(p_neg.exhaustive);
        prop_assert_eq!(p_neg.n_extreme, geq);
    }

    #[test]
    fn batches_reproduce_the_single_pass(seed in 0u64..1000, cut in 1u64..999) {
        let t = UnpairedTest::new(&normals(seed, 9), &normals(seed + 1, 11)).unwrap();
        prop_assert_eq!(t.count_sampled(seed, 0..1000), t.count_sampled(seed, 0..cut) + t.count_sampled(seed, cut..1000));
    }
}

fn split_for(y: &Matrix, n_train: usize) -> TargetSplit {
    let n = y.rows();
    let tr: Vec<usize> = (0..n_train).collect();
    let te: Vec<usize> = (n_train..n).collect();
    let names = |v: &[usize]| v.iter().map(|i| format!("c{i}")).collect();
    let dims = (0..y.cols()).map(|c| format!("d{c}")).collect();
    TargetSplit::new(names(&tr), names(&te), y.select_rows(&tr), y.select_rows(&te), dims).unwrap()
}

fn rows(m: &Matrix, range: std::ops::Range<usize>) -> Matrix {
    m.select_rows(&range.collect::<Vec<_>>())
}

#[test]
fn empty_control_equals_plain_encoding() {
    let (n, n_tr) = (80, 60);
    let x = gaussian(1, n, 6);
    let y = Matrix::from_fn(n, 2, |r, c| x[(r, c)] + 0.3 * x[(r, 5)]);
    let split = split_for(&y, n_tr);
    let cfg = RidgeConfig::default();
    let empty = Matrix::zeros(n, 0);
    let res = semipartial("none", (&rows(&empty, 0..n_tr), &rows(&empty, n_tr..n)), (&rows(&x, 0..n_tr), &rows(&x, n_tr..n)), &split, &cfg)
        .unwrap();
    let plain = ridge::encode("plain", &[Layer::new("x", rows(&x, 0..n_tr))], &[rows(&x, n_tr..n)], &split, &cfg).unwrap();
    for (s, p) in res.dims.iter().zip(&plain) {
        assert_eq!(s.r_semi, p.r_test);
    }
}

#[test]
fn independent_control_leaves_r_unchanged() {
    let (n, n_tr) = (200, 150);
    let mut total = 0.0;
    for seed in 0..20u64 {
        let full = gaussian(10 + seed, n, 5);
        let control = gaussian(100 + seed, n, 5);
        let noise = gaussian(200 + seed, n, 1);
        let y = Matrix::from_fn(n, 1, |r, _| full[(r, 0)] - 0.5 * full[(r, 3)] + 0.7 * noise[(r, 0)]);
        let split = split_for(&y, n_tr);
        let cfg = RidgeConfig { seed, ..RidgeConfig::default() };
        let res = semipartial(
            "indep",
            (&rows(&control, 0..n_tr), &rows(&control, n_tr..n)),
            (&rows(&full, 0..n_tr), &rows(&full, n_tr..n)),
            &split,
            &cfg,
        )
        .unwrap();
        let plain = ridge::encode("p", &[Layer::new("x", rows(&full, 0..n_tr))], &[rows(&full, n_tr..n)], &split, &cfg).unwrap();
        total += (res.dims[0].r_semi - plain[0].r_test).abs();
    }
    let mean = total / 20.0;
    assert!(mean < 0.05, "mean |r_semi - r| = {mean}");
}

#[test]
fn shared_columns_lose_their_contribution() {
    // y depends on the first two columns, which the control also holds
    let (n, n_tr) = (1200, 600);
    let full = gaussian(40, n, 6);
    let noise = normals(41, n);
    let y = Matrix::from_fn(n, 1, |r, _| full[(r, 0)] - full[(r, 1)] + 0.3 * noise[r]);
    let split = split_for(&y, n_tr);
    let cfg = RidgeConfig::default();
    let run = |cols: &[usize]| {
        let c = full.select_cols(cols);
        semipartial("c", (&rows(&c, 0..n_tr), &rows(&c, n_tr..n)), (&rows(&full, 0..n_tr), &rows(&full, n_tr..n)), &split, &cfg)
            .unwrap()
    };
    let shared = run(&[0, 1]);
    assert_eq!(shared.alpha_residualizer.len(), 6);
    assert!(shared.dims[0].r_semi.abs() < 0.1, "{}", shared.dims[0].r_semi);
    let other = run(&[4, 5]);
    assert!(other.dims[0].r_semi > 0.9, "{}", other.dims[0].r_semi);
}

#[test]
fn reliability_of_independent_raters_is_near_zero() {
    let clips: Vec<String> = (0..50).map(|i| format!("c{i}")).collect();
    let raters: Vec<String> = (0..10).map(|i| format!("r{i}")).collect();
    let vals = normals(5, 500).into_iter().map(Some).collect();
    let t = RaterTable::new("x", clips, raters, vals).unwrap();
    let res = split_half_reliability(&t, 100, 3).unwrap();
    assert_eq!(res.n_splits, 100);
    assert!(res.r_split_half.abs() < 0.3, "{}", res.r_split_half);
}

#[test]
fn score_relationship_matches_pearson_oracle() {
    let pairs = [(0.12, 0.40), (0.31, 0.52), (0.05, 0.18), (0.44, 0.61)];
    // hand computation
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let mx = xs.iter().sum::<f64>() / 4.0;
    let my = ys.iter().sum::<f64>() / 4.0;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let expected = sxy / (sxx * syy).sqrt();
    assert!((score_relationship(&pairs).unwrap().r - expected).abs() < 1e-12);
    assert!((pearson_r(&xs, &ys).unwrap().r - expected).abs() < 1e-12);
}
