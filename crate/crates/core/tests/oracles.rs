//! Hand-derived examples checked against oracles written independently of
//! the library.

use std::collections::BTreeMap;

use hallrate::estimator::{count_detections, mean_std};
use hallrate::labeling::Token;
use hallrate::metrics::{adjudicate, pairwise_iaa};
use hallrate::stats::{dist_cdf, fit_ols, lr_test, pearson, ttest_two_sample, Distribution, ModelFit, TtestVariant};
use hallrate::{
    estimate_rate, parse_markup, DetectorPerformance, EvalSource, HallucinationType, Label, Task, TokenLabels,
};
use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational, One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{oracle, rational, to_f64};

fn stream(labels: &[Label]) -> TokenLabels {
    let tokens = (0..labels.len())
        .map(|i| Token {
            text: "t".into(),
            start: 2 * i,
            end: 2 * i + 1,
        })
        .collect();
    TokenLabels::new(tokens, labels.to_vec(), Task::Binary).unwrap()
}

/// Solves `A x = b` exactly by Gauss-Jordan elimination over rationals.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Vec<BigRational> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("non-singular");
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = BigRational::one() / a[col][col].clone();
        for j in col..n {
            a[col][j] = &a[col][j] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for j in col..n {
                    let delta = &factor * &a[col][j];
                    a[r][j] -= delta;
                }
                let delta = &factor * &b[col];
                b[r] -= delta;
            }
        }
    }
    b
}

#[test]
fn ols_matches_exact_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let (n, p) = (20, 4);
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.random_range(-3.0..3.0) });
    let y = DVector::from_fn(n, |i, _| 0.5 + x[(i, 1)] - 2.0 * x[(i, 2)] + rng.random_range(-1.0..1.0));
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let fit = fit_ols(&x, &y, &names).unwrap();

    let xr: Vec<Vec<BigRational>> = (0..n).map(|i| (0..p).map(|j| rational(x[(i, j)])).collect()).collect();
    let yr: Vec<BigRational> = (0..n).map(|i| rational(y[i])).collect();
    let xtx: Vec<Vec<BigRational>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| (0..n).fold(BigRational::zero(), |acc, i| acc + &xr[i][a] * &xr[i][b]))
                .collect()
        })
        .collect();
    let xty: Vec<BigRational> = (0..p)
        .map(|a| (0..n).fold(BigRational::zero(), |acc, i| acc + &xr[i][a] * &yr[i]))
        .collect();
    let beta = solve_exact(xtx, xty);
    for (got, want) in fit.betas.iter().zip(&beta) {
        assert!((got - to_f64(want)).abs() < 1e-8, "{got} vs {}", to_f64(want));
    }
    let rss = (0..n).fold(BigRational::zero(), |acc, i| {
        let fitted = (0..p).fold(BigRational::zero(), |s, j| s + &xr[i][j] * &beta[j]);
        let r = &yr[i] - fitted;
        acc + &r * &r
    });
    let sigma2 = to_f64(&(rss / BigRational::from_integer(BigInt::from(n))));
    assert!((fit.sigma2 - sigma2).abs() < 1e-10);
}

#[test]
fn corrected_rate_example_by_exact_arithmetic() {
    let perf = DetectorPerformance {
        language: "xx".into(),
        task: Task::Binary,
        source: EvalSource::Gold,
        precision: 0.8,
        recall: 0.5,
    };
    let got = estimate_rate(&perf, 100, 1000).unwrap();
    let (p, r) = (rational(0.8), rational(0.5));
    let want = BigRational::from_integer(100.into()) * p * BigRational::from_integer(100.into())
        / (r * BigRational::from_integer(1000.into()));
    assert!((got.hr_est - to_f64(&want)).abs() < 1e-12);
    assert!((got.hr_est - 16.0).abs() < 1e-12);
    assert_eq!(got.naive, 10.0);
}

#[test]
fn sample_std_example() {
    let (m, s) = mean_std(&[8.0, 12.0]).unwrap();
    assert_eq!(m, 10.0);
    // ((8-10)^2 + (12-10)^2) / 1 = 8
    assert!((s - 8f64.sqrt()).abs() < 1e-12);
}

#[test]
fn markup_offsets_by_hand() {
    let doc = parse_markup("Messi is an <entity>American</entity> soccer player.").unwrap();
    let clean = "Messi is an American soccer player.";
    let start = clean.find("American").unwrap();
    assert_eq!(doc.text, clean);
    assert_eq!((doc.spans[0].start, doc.spans[0].end), (start, start + "American".len()));
    assert_eq!(doc.spans[0].htype, HallucinationType::Entity);
}

#[test]
fn detection_counts_by_hand() {
    use Label::{H, O};
    let counts = count_detections(&[stream(&[H, H, O]), stream(&[O, O, O, O])]).unwrap();
    assert_eq!(counts, (2, 7));
}

#[test]
fn pairwise_agreement_by_hand() {
    use Label::{H, O};
    let (a, c) = (stream(&[O, H, O]), stream(&[H, O, H]));
    // A vs C: p_o = 0, p_e = 2/3*1/3 + 1/3*2/3 = 4/9, kappa = -(4/9)/(5/9).
    let kac = -(4.0 / 9.0) / (5.0 / 9.0);
    let mean = (1.0 + 2.0 * kac) / 3.0;
    let got = pairwise_iaa(&[vec![a.clone()], vec![a], vec![c]], Task::Binary).unwrap();
    assert!((got - mean).abs() < 1e-12);
    assert!((got + 0.2).abs() < 1e-12);
}

#[test]
fn adjudication_screens_and_picks_highest_kappa() {
    use Label::{H, O};
    let silver = vec![stream(&[H, H, O, O, O, O, O, O, H, O])];
    let mut annotators = BTreeMap::new();
    annotators.insert("A".to_string(), vec![stream(&[H, O, O, O, O, O, O, O, H, O])]);
    annotators.insert("B".to_string(), vec![stream(&[H, H, O, O, O, O, O, O, H, O])]);
    // Agrees on 3 of 10 tokens, below a 0.40 screen.
    annotators.insert("C".to_string(), vec![stream(&[O, O, H, H, H, O, H, H, H, O])]);
    let adj = adjudicate(&annotators, &silver, 0.40, Task::Binary).unwrap();
    assert_eq!(adj.chosen, "B");
    assert!(adj.agreement["C"].flagged);
    assert!((adj.agreement["C"].observed_agreement - 0.3).abs() < 1e-12);
}

#[test]
fn pearson_example_against_t_oracle() {
    let res = pearson(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
    // Sxy = 8, Sxx = Syy = 10.
    assert!((res.r - 0.8).abs() < 1e-12);
    let t = 0.8 * (3.0f64 / (1.0 - 0.64)).sqrt();
    let p = oracle::t_two_sided(t, 3.0);
    assert!((res.p_value - p).abs() < 1e-10);
    assert!((p - 0.104).abs() < 5e-4);
}

#[test]
fn pooled_ttest_example_against_t_oracle() {
    let res = ttest_two_sample(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0], TtestVariant::Pooled).unwrap();
    // Pooled variance 1, se = sqrt(2/3), t = -1 / se.
    let t = -1.0 / (2.0f64 / 3.0).sqrt();
    assert!((res.statistic - t).abs() < 1e-12);
    assert_eq!(res.df, 4.0);
    let p = oracle::t_two_sided(t, 4.0);
    assert!((res.p_value - p).abs() < 1e-10);
    assert!((p - 0.288).abs() < 5e-4);
}

#[test]
fn distribution_closed_forms() {
    let t1 = dist_cdf(Distribution::StudentT { df: 1.0 }, 1.0).unwrap();
    assert!((t1 - (0.5 + 1f64.atan() / std::f64::consts::PI)).abs() < 1e-12);
    let x = 2.0 * 2f64.ln();
    let c2 = dist_cdf(Distribution::ChiSquare { df: 2.0 }, x).unwrap();
    assert!((c2 - (1.0 - (-x / 2.0).exp())).abs() < 1e-12);
    assert!((c2 - oracle::chi2_cdf(x, 2)).abs() < 1e-10);
}

#[test]
fn likelihood_ratio_example_against_chi_square_oracle() {
    let fit = |loglik: f64, p: usize| ModelFit {
        names: (0..p).map(|i| format!("b{i}")).collect(),
        betas: vec![0.0; p],
        std_errors: vec![0.0; p],
        sigma2: 1.0,
        sigma_b2: 0.0,
        lambda: 0.0,
        loglik,
        n: 50,
        p,
        n_groups: 1,
        flags: Vec::new(),
        rows_digest: 1,
    };
    let lr = lr_test(&fit(-40.0, 7), &fit(-51.07, 4)).unwrap();
    assert!((lr.statistic - 22.14).abs() < 1e-9);
    let p = oracle::chi2_sf(22.14, 3);
    assert!((lr.p_value - p).abs() < 1e-12);
    assert!((p - 6.1e-5).abs() < 1e-6);
}
