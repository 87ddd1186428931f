//! Metrics against independent brute-force reimplementations.

use std::collections::BTreeMap;

use prefkit_core::dataset::PreferenceLabel;
use prefkit_core::metrics::{
    elo_correlation, frechet_distance, predict_label, shuffle_order, sweep_probabilities, threshold_grid,
    tie_aware_points, EloConfig, Match, TieThreshold,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use PreferenceLabel::{First as A, Second as B, Tie};

#[test]
fn tie_aware_table_is_exact() {
    // Rows: user label; columns: predicted a, b, tie.
    let table = [[1.0, 0.0, 0.5], [0.0, 1.0, 0.5], [0.5, 0.5, 1.0]];
    for (i, label) in [A, B, Tie].into_iter().enumerate() {
        for (j, predicted) in [A, B, Tie].into_iter().enumerate() {
            assert_eq!(
                tie_aware_points(label, predicted),
                table[i][j],
                "{label} vs {predicted}"
            );
        }
    }
}

/// Accuracy at one threshold, written out case by case.
fn brute_force_accuracy(scored: &[(PreferenceLabel, [f64; 2])], t: f64) -> f64 {
    let mut points = 0.0;
    for &(label, [p1, p2]) in scored {
        let gap = if p1 > p2 { p1 - p2 } else { p2 - p1 };
        let predicted = if gap < t {
            "tie"
        } else if p1 >= p2 {
            "a"
        } else {
            "b"
        };
        points += match (label.as_str(), predicted) {
            (l, p) if l == p => 1.0,
            ("tie", _) | (_, "tie") => 0.5,
            _ => 0.0,
        };
    }
    points / scored.len() as f64
}

#[test]
fn threshold_sweep_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let scored: Vec<(PreferenceLabel, [f64; 2])> = (0..200)
            .map(|_| {
                let p1: f64 = rng.random_range(0.01..0.99);
                (PreferenceLabel::ALL[rng.random_range(0..3)], [p1, 1.0 - p1])
            })
            .collect();
        let grid = threshold_grid(0.0, 0.5, 0.01).unwrap();
        assert_eq!(grid.len(), 51);
        let result = sweep_probabilities(&scored, &grid).unwrap();

        let mut best = (f64::NAN, -1.0);
        for (k, &t) in grid.iter().enumerate() {
            let acc = brute_force_accuracy(&scored, t);
            assert_eq!(result.curve[k], (t, acc));
            if acc > best.1 {
                best = (t, acc);
            }
        }
        assert_eq!((result.best_t, result.best_accuracy), best);
        // The public predictor agrees with the case analysis at the chosen threshold.
        let th = TieThreshold::new(result.best_t).unwrap();
        let recount: f64 = scored
            .iter()
            .map(|&(l, p)| tie_aware_points(l, predict_label(p, th)))
            .sum::<f64>()
            / scored.len() as f64;
        assert_eq!(recount, result.best_accuracy);
    }
}

type Mat = Vec<Vec<f64>>;

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Cyclic Jacobi rotations: eigenvalues and eigenvectors (columns) of a symmetric matrix.
fn jacobi_eigen(mut a: Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut v: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

fn mean_and_cov(xs: &[Vec<f64>]) -> (Vec<f64>, Mat) {
    let n = xs.len() as f64;
    let d = xs[0].len();
    let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let cov = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| xs.iter().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect();
    (mean, cov)
}

/// Frechet distance via Jacobi, taking the square root of the second covariance
/// (the library roots the first), so the two paths share no intermediate.
fn frechet_oracle(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (ma, ca) = mean_and_cov(a);
    let (mb, cb) = mean_and_cov(b);
    let d = ma.len();
    let (vals, vecs) = jacobi_eigen(cb.clone());
    let root: Mat = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (0..d).map(|k| vecs[i][k] * vals[k].max(0.0).sqrt() * vecs[j][k]).sum())
                .collect()
        })
        .collect();
    let inner = mat_mul(&mat_mul(&root, &ca), &root);
    let (inner_vals, _) = jacobi_eigen(inner);
    let tr_sqrt: f64 = inner_vals.iter().map(|l| l.max(0.0).sqrt()).sum();
    let mean_term: f64 = ma.iter().zip(&mb).map(|(x, y)| (x - y) * (x - y)).sum();
    let traces: f64 = (0..d).map(|i| ca[i][i] + cb[i][i]).sum();
    mean_term + traces - 2.0 * tr_sqrt
}

fn gaussian_cloud(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64, stretch: f64) -> Vec<Vec<f64>> {
    // Correlated features: x_j = shift + stretch * z_j + 0.5 * z_{j-1}.
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            (0..d)
                .map(|j| shift + stretch * z[j] + if j > 0 { 0.5 * z[j - 1] } else { 0.0 })
                .collect()
        })
        .collect()
}

#[test]
fn frechet_matches_jacobi_oracle_in_8d() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..10 {
        let a = gaussian_cloud(&mut rng, 200, 8, 0.0, 1.0);
        let b = gaussian_cloud(&mut rng, 150, 8, 0.1 * trial as f64, 1.5);
        let got = frechet_distance(&a, &b).unwrap();
        let want = frechet_oracle(&a, &b);
        assert!((got - want).abs() < 1e-6, "trial {trial}: {got} vs {want}");
    }
}

#[test]
fn frechet_one_dimensional_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let a: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-2.0..3.0)]).collect();
        let b: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let (ma, va) = mean_and_cov(&a);
        let (mb, vb) = mean_and_cov(&b);
        let want = (ma[0] - mb[0]).powi(2) + (va[0][0].sqrt() - vb[0][0].sqrt()).powi(2);
        let got = frechet_distance(&a, &b).unwrap();
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        assert!((frechet_distance(&b, &a).unwrap() - got).abs() < 1e-6);
    }
}

fn plain_elo(matches: &[Match], labels: &[PreferenceLabel], order: &[usize], names: &[String]) -> Vec<f64> {
    let idx = |s: &str| names.iter().position(|n| n == s).unwrap();
    let mut r = vec![1000.0; names.len()];
    for &i in order {
        let (a, b) = (idx(&matches[i].a), idx(&matches[i].b));
        let expected = 1.0 / (1.0 + 10f64.powf((r[b] - r[a]) / 400.0));
        let actual = match labels[i] {
            A => 1.0,
            B => 0.0,
            Tie => 0.5,
        };
        r[a] += 32.0 * (actual - expected);
        r[b] -= 32.0 * (actual - expected);
    }
    r
}

fn textbook_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn noisy_metric_elo_correlation_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let strengths = [0.0, 0.5, 1.0, 1.5];
    let names: Vec<String> = (0..4).map(|i| format!("m{i}")).collect();
    let matches: Vec<Match> = (0..2000)
        .map(|_| {
            let a = rng.random_range(0..4);
            let b = (a + rng.random_range(1..4)) % 4;
            let p_a: f64 = 1.0 / (1.0 + (-(strengths[a] - strengths[b]) * 2.0_f64).exp());
            let outcome = if rng.random::<f64>() < p_a { A } else { B };
            Match {
                a: names[a].clone(),
                b: names[b].clone(),
                outcome,
            }
        })
        .collect();
    let user: Vec<_> = matches.iter().map(|m| m.outcome).collect();
    let noisy: Vec<_> = user
        .iter()
        .map(|&l| if rng.random::<f64>() < 0.35 { l.flipped() } else { l })
        .collect();
    let inverted: Vec<_> = user.iter().map(|l| l.flipped()).collect();
    let predicted = BTreeMap::from([
        ("perfect".to_string(), user.clone()),
        ("noisy".to_string(), noisy.clone()),
        ("inverted".to_string(), inverted),
    ]);
    let repeats = 50;
    let out = elo_correlation(&matches, &predicted, EloConfig::default(), repeats, 77).unwrap();

    let mut corrs = Vec::new();
    for r in 0..repeats {
        let order = shuffle_order(matches.len(), 77, r as u64 + 1);
        let human = plain_elo(&matches, &user, &order, &names);
        let metric = plain_elo(&matches, &noisy, &order, &names);
        corrs.push(textbook_pearson(&human, &metric));
    }
    let mean = corrs.iter().sum::<f64>() / repeats as f64;
    assert!(
        (out["noisy"].mean_corr - mean).abs() < 1e-6,
        "{} vs {mean}",
        out["noisy"].mean_corr
    );
    assert!(out["inverted"].mean_corr < out["noisy"].mean_corr);
    assert!(out["noisy"].mean_corr < out["perfect"].mean_corr);
    assert_eq!(out["perfect"].mean_corr, 1.0);
    assert_eq!(out["perfect"].std_corr, 0.0);
}
