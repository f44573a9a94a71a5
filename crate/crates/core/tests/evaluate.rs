mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use sfiegarch::evaluate::*;
use sfiegarch::innovations::{log_pdf, sample_with};
use sfiegarch::InnovationDist;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn normals(n: usize, r: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn ar1(n: usize, phi: f64, r: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let e = normals(n + 200, r);
    let mut x = vec![0.0; n + 200];
    for t in 1..x.len() {
        x[t] = phi * x[t - 1] + e[t];
    }
    x.split_off(200)
}

#[test]
fn error_measure_examples() {
    let y = [0.3, -1.2, 2.0];
    let e = error_measures(&y, &y).unwrap();
    assert_eq!((e.mae, e.mpe, e.max_ae), (0.0, Some(0.0), 0.0));
    let e = error_measures(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
    assert_eq!((e.mae, e.mpe, e.max_ae), (1.0, Some(1.0), 1.0));
    let e = error_measures(&[2.0, 0.0, -4.0], &[1.0, 1.0, -1.0]).unwrap();
    assert!((e.mae - 5.0 / 3.0).abs() < 1e-15);
    assert!((e.mpe.unwrap() - (0.5 + 0.75) / 2.0).abs() < 1e-15);
    assert_eq!(e.max_ae, 3.0);
    assert_eq!(e.mpe_skipped, 1);
    assert!(error_measures(&[], &[]).is_err());
    assert!(error_measures(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn dm_special_cases() {
    assert!(diebold_mariano(&[0.0; 30], 2).unwrap().degenerate);
    let c = diebold_mariano(&[1.0; 30], 1).unwrap();
    assert_eq!(c.stat, f64::INFINITY);
    assert_eq!(c.pvalue, 0.0);
    let c = diebold_mariano(&[-0.5; 30], 1).unwrap();
    assert_eq!(c.stat, f64::NEG_INFINITY);
    assert!(diebold_mariano(&[1.0; 9], 1).is_err());
}

#[test]
fn dm_matches_hand_statistic() {
    let d = [0.5, -0.2, 0.9, 0.1, -0.4, 0.3, 0.7, -0.1, 0.2, 0.6, -0.3, 0.4];
    let n = d.len() as f64;
    let m = mean(&d);
    let g = |k: usize| (k..d.len()).map(|t| (d[t] - m) * (d[t - k] - m)).sum::<f64>() / n;
    let lrv = g(0) + 2.0 * (2.0 / 3.0 * g(1) + 1.0 / 3.0 * g(2));
    let r = diebold_mariano(&d, 3).unwrap();
    assert!((r.stat - m / (lrv / n).sqrt()).abs() < 1e-12);
    let loss = abs_loss_diff(&[1.0, -2.0], &[0.5, 0.0], &[0.0, -1.0]).unwrap();
    assert_eq!(loss, vec![-0.5, 1.0]);
}

#[test]
fn dm_size_under_iid_losses() {
    let mut r = rng(101);
    let reps = 200;
    let rejects = (0..reps)
        .filter(|_| diebold_mariano(&normals(10_000, &mut r), 1).unwrap().stat.abs() > 1.96)
        .count();
    let rate = rejects as f64 / reps as f64;
    assert!((0.02..=0.09).contains(&rate), "rate {rate}");
}

#[test]
fn predictive_loglik_identities() {
    let y = [0.1, -0.4, 2.0];
    let s = predictive_loglik(&y, &y, &[1.0; 3], &InnovationDist::Gaussian).unwrap();
    assert!((s + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);
    let mu = [0.0, 0.1, -0.2];
    let sig = [0.5, 1.5, 2.0];
    let c = 3.0f64;
    for dist in [InnovationDist::Gaussian, InnovationDist::Ged { nu: 1.4 }] {
        let a = predictive_loglik(&y, &mu, &sig, &dist).unwrap();
        let ys: Vec<f64> = y.iter().zip(&mu).map(|(v, m)| m + c.sqrt() * (v - m)).collect();
        let ss: Vec<f64> = sig.iter().map(|v| c * v).collect();
        let b = predictive_loglik(&ys, &mu, &ss, &dist).unwrap();
        assert!((b - (a - 0.5 * c.ln())).abs() < 1e-12);
        let direct: f64 = (0..3)
            .map(|t| log_pdf(&dist, (y[t] - mu[t]) / sig[t].sqrt()) - 0.5 * sig[t].ln())
            .sum::<f64>()
            / 3.0;
        assert!((a - direct).abs() < 1e-14);
    }
    assert!(predictive_loglik(&y, &mu, &[1.0, 0.0, 1.0], &InnovationDist::Gaussian).is_err());
}

#[test]
fn mz_identities() {
    let mut r = rng(7);
    let y: Vec<f64> = normals(300, &mut r).iter().map(|v| 1.0 + v.abs()).collect();
    let exact = mincer_zarnowitz(&y, &y, None, 3).unwrap();
    assert!(exact.gamma0.abs() < 1e-12 && (exact.gamma1 - 1.0).abs() < 1e-12);
    assert!(exact.wald_pvalue > 0.999);

    let doubled: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
    let half = mincer_zarnowitz(&y, &doubled, None, 3).unwrap();
    assert!((half.gamma1 - 0.5).abs() < 1e-12);
    assert!(half.gamma0.abs() < 1e-12);

    let noisy: Vec<f64> = y.iter().zip(normals(300, &mut r)).map(|(v, e)| v + 0.3 * e).collect();
    let plain = mincer_zarnowitz(&noisy, &y, None, 4).unwrap();
    let corrected = mincer_zarnowitz(&noisy, &y, Some(300), 4).unwrap();
    let root2 = 2f64.sqrt();
    assert!((corrected.lambda_correction - root2).abs() < 1e-15);
    assert!((corrected.se0 / plain.se0 - root2).abs() < 1e-12);
    assert!((corrected.se1 / plain.se1 - root2).abs() < 1e-12);
    assert!((plain.wald / corrected.wald - 2.0).abs() < 1e-9);
    let other = mincer_zarnowitz(&noisy, &y, Some(1200), 4).unwrap();
    assert!((other.lambda_correction - 1.25f64.sqrt()).abs() < 1e-15);

    assert!(mincer_zarnowitz(&y, &vec![2.0; 300], None, 0).is_err());
    assert!(mincer_zarnowitz(&y[..3], &y[..3], None, 5).is_err());
}

#[test]
fn mz_ols_and_white_covariance_by_hand() {
    let x = [1.0, 2.0, 4.0, 3.0, 5.0, 7.0];
    let y = [1.5, 1.9, 4.6, 2.7, 5.5, 6.6];
    let r = mincer_zarnowitz(&y, &x, None, 0).unwrap();
    let n = 6.0;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
    let b1 = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let b0 = (sy - b1 * sx) / n;
    assert!((r.gamma1 - b1).abs() < 1e-12 && (r.gamma0 - b0).abs() < 1e-12);
    // White covariance (X'X)^{-1} X' diag(u^2) X (X'X)^{-1}
    let det = n * sxx - sx * sx;
    let inv = [[sxx / det, -sx / det], [-sx / det, n / det]];
    let mut meat = [[0.0; 2]; 2];
    for t in 0..6 {
        let u = y[t] - b0 - b1 * x[t];
        let v = [1.0, x[t]];
        for i in 0..2 {
            for j in 0..2 {
                meat[i][j] += u * u * v[i] * v[j];
            }
        }
    }
    let mut cov = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    cov[i][j] += inv[i][k] * meat[k][l] * inv[l][j];
                }
            }
        }
    }
    assert!((r.se0 - cov[0][0].sqrt()).abs() < 1e-12);
    assert!((r.se1 - cov[1][1].sqrt()).abs() < 1e-12);
}

#[test]
fn portmanteau_hand_values() {
    let x = [1.0, 3.0, 2.0, 5.0, 4.0, 6.0, 5.0, 8.0];
    let n = x.len() as f64;
    let m = mean(&x);
    let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let rho = |k: usize| (k..x.len()).map(|t| (x[t] - m) * (x[t - k] - m)).sum::<f64>() / c0;
    let rows = portmanteau(&x, &[1, 3], 2).unwrap();
    let bp3 = n * (1..=3).map(|k| rho(k).powi(2)).sum::<f64>();
    let lb3 = n * (n + 2.0) * (1..=3).map(|k| rho(k).powi(2) / (n - k as f64)).sum::<f64>();
    assert!((rows[1].bp - bp3).abs() < 1e-12);
    assert!((rows[1].lb - lb3).abs() < 1e-12);
    assert_eq!(rows[0].df, 1);
    assert_eq!(rows[1].df, 1);
    let chi = ChiSquared::new(1.0).unwrap();
    assert!((rows[1].lb_pvalue - (1.0 - chi.cdf(lb3))).abs() < 1e-12);
    assert!(portmanteau(&x, &[8], 0).is_err());
}

#[test]
fn portmanteau_detects_dependence() {
    let x: Vec<f64> = (0..500).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let rows = portmanteau(&x, &[10], 0).unwrap();
    assert!(rows[0].lb_pvalue < 1e-10 && rows[0].bp_pvalue < 1e-10);
}

#[test]
fn portmanteau_pvalues_uniform_under_iid() {
    let mut r = rng(55);
    let p: Vec<f64> = (0..200)
        .map(|_| portmanteau(&normals(10_000, &mut r), &[20], 0).unwrap()[0].lb_pvalue)
        .collect();
    let (_, pv) = sfiegarch::stats::ks_uniform(&p);
    assert!(pv > 0.01, "KS p {pv}");
}

#[test]
fn cpgram_calibration_and_power() {
    let mut r = rng(77);
    let reps = 300;
    let rejects = (0..reps).filter(|_| cumulative_periodogram(&normals(500, &mut r)).unwrap().reject).count();
    let rate = rejects as f64 / reps as f64;
    assert!((0.02..=0.09).contains(&rate), "rate {rate}");
    let strong = cumulative_periodogram(&ar1(500, 0.9, &mut r)).unwrap();
    assert!(strong.reject && strong.pvalue < 1e-6);
    assert!(cumulative_periodogram(&[3.0; 40]).unwrap().degenerate);
    assert!(cumulative_periodogram(&[1.0; 15]).is_err());
}

#[test]
fn pit_calibration_for_correct_gaussian_model() {
    let mut r = rng(88);
    let reps = 100;
    let mut pass = 0;
    let mut all_u = Vec::new();
    for _ in 0..reps {
        let sigma2: Vec<f64> = (0..1000).map(|_| r.random_range(0.5..3.0)).collect();
        let x: Vec<f64> = sigma2.iter().map(|s| s.sqrt() * r.sample::<f64, _>(StandardNormal)).collect();
        let table = density_transform_test(&x, &sigma2, &[1.5, 2.0]).unwrap();
        assert_eq!(table.rows[1].nu, 2.0);
        if table.rows[1].pvalue > 0.05 {
            pass += 1;
        }
        all_u.extend(pit(&x, &sigma2, &InnovationDist::Gaussian).unwrap());
    }
    assert!(pass >= 90, "{pass} of {reps}");
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for u in &all_u {
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expect = all_u.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 p {p}");
}

#[test]
fn pit_detects_wrong_tails_and_degenerate_input() {
    let mut r = rng(3);
    let z = sample_with(&InnovationDist::Ged { nu: 1.1 }, 5000, &mut r).unwrap();
    let ones = vec![1.0; 5000];
    let table = density_transform_test(&z, &ones, &[1.1, 2.0]).unwrap();
    assert!(table.rows[0].pvalue > 0.001);
    assert!(table.rows[1].pvalue < 1e-6);
    let flat = density_transform_test(&[0.5; 10], &[1.0; 10], &[2.0]).unwrap();
    assert!(flat.degenerate && flat.rows[0].pvalue.is_nan());
    assert!(density_transform_test(&z, &ones, &[0.5]).is_err());
}

#[test]
fn realized_volatility_definitions() {
    let rs = realized_volatility(&[0.2; 6], &[3, 3]).unwrap();
    assert!(rs.daily_vol.iter().all(|v| v.abs() < 1e-30));
    let single = realized_volatility(&[1.0, -1.0], &[2]).unwrap();
    assert_eq!(single.daily_vol, vec![2.0]);

    let mut r = rng(4);
    let intraday = normals(40, &mut r);
    let counts = [5usize, 8, 7, 10, 10];
    let rs = realized_volatility(&intraday, &counts).unwrap();
    assert_eq!(rs.vol_window(1), rs.daily_vol);
    let w2 = rs.vol_window(2);
    assert_eq!(w2.len(), 4);
    for t in 0..4 {
        assert!((w2[t] - rs.daily_vol[t] - rs.daily_vol[t + 1]).abs() < 1e-14);
    }
    let rw = rs.return_window(5);
    assert!((rw[0] - intraday.iter().sum::<f64>()).abs() < 1e-12);
    assert!(rs.vol_window(6).is_empty());
    let mut start = 0;
    for (t, &m) in counts.iter().enumerate() {
        let day = &intraday[start..start + m];
        let rbar = mean(day);
        let v: f64 = day.iter().map(|x| (x - rbar).powi(2)).sum();
        assert!((rs.daily_vol[t] - v).abs() < 1e-13);
        assert!(rs.daily_vol[t] >= 0.0);
        start += m;
    }
    assert!(realized_volatility(&intraday, &[20, 19]).is_err());
    assert!(realized_volatility(&intraday, &[20, 0, 20]).is_err());
}

#[test]
fn combined_report() {
    let mut r = rng(9);
    let pred: Vec<f64> = (0..400).map(|_| r.random_range(0.5..2.0)).collect();
    let actual: Vec<f64> = pred.iter().map(|p| p + 0.2 * r.sample::<f64, _>(StandardNormal)).collect();
    let opts = EvalOptions {
        n_fit: Some(1000),
        hac_lags: 2,
        density: Some(DensityForecast {
            mu: pred.clone(),
            sigma2: vec![0.04; 400],
            dist: InnovationDist::Gaussian,
        }),
        ..Default::default()
    };
    let rep = evaluate(&actual, &pred, &opts).unwrap();
    assert_eq!(rep.n, 400);
    assert!(rep.errors.mae <= rep.errors.max_ae);
    let mz = rep.mz.unwrap();
    assert!((mz.lambda_correction - 1.4f64.sqrt()).abs() < 1e-15);
    assert_eq!(rep.portmanteau.len(), 3);
    assert!(rep.cpgram.is_some());
    assert!(rep.dm.unwrap().stat < 0.0);
    assert!(rep.ks_pit.unwrap().pvalue > 0.001);
    assert!(rep.predictive_loglik.unwrap().is_finite());
    let again = evaluate(&actual, &pred, &opts).unwrap();
    assert_eq!(rep, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn statistics_are_well_formed(seed in 0u64..100_000, n in 40usize..300, phi in -0.95f64..0.95) {
        let mut r = rng(seed);
        let x = ar1(n, phi, &mut r);
        let pred: Vec<f64> = x.iter().map(|v| 0.8 * v + 0.1).collect();
        for row in portmanteau(&x, &[1, 5, 10], 1).unwrap() {
            prop_assert!(row.lb >= row.bp);
            prop_assert!((0.0..=1.0).contains(&row.lb_pvalue));
            prop_assert!((0.0..=1.0).contains(&row.bp_pvalue));
        }
        let e = error_measures(&x, &pred).unwrap();
        prop_assert!(e.mae <= e.max_ae);
        prop_assert!(e.mpe.unwrap() >= 0.0);
        let dm = diebold_mariano(&abs_loss_diff(&x, &pred, &vec![0.0; n]).unwrap(), 3).unwrap();
        prop_assert!((0.0..=1.0).contains(&dm.pvalue));
        let mz = mincer_zarnowitz(&x, &pred, Some(n), 2).unwrap();
        prop_assert!((0.0..=1.0).contains(&mz.wald_pvalue));
        let cp = cumulative_periodogram(&x).unwrap();
        prop_assert!((0.0..=1.0).contains(&cp.pvalue));
        let ones = vec![1.0; n];
        for row in density_transform_test(&x, &ones, &[1.3, 2.0, 4.0]).unwrap().rows {
            prop_assert!((0.0..=1.0).contains(&row.pvalue));
        }
    }
}
