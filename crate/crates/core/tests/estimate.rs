mod common;

use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use sfiegarch::coeffs::lambda_coeffs;
use sfiegarch::estimate::*;
use sfiegarch::innovations::g;
use sfiegarch::simulate::{simulate_returns, simulate_sfiegarch};
use sfiegarch::{ArmaSpec, InnovationDist, SfiegarchSpec};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

#[test]
fn filter_matches_direct_recursion() {
    let spec = SfiegarchSpec::new(0.1, -0.15, 0.25, 0.3, 3).with_arma(vec![0.2], vec![0.4]);
    let x: Vec<f64> = normals(300, 1).iter().map(|v| 0.9 * v).collect();
    let em = (2.0 / std::f64::consts::PI).sqrt();
    let lam = lambda_oracle(&spec, 300);
    let f = filter(&spec, &x, em, &lambda_coeffs(&spec, 300).unwrap()).unwrap();
    assert_eq!(f.ln_sigma2.len(), 301);
    let mut z: Vec<f64> = Vec::new();
    let mut ll = 0.0;
    for t in 0..=300 {
        let l = spec.omega
            + (0..t).map(|k| lam[k] * g(z[t - 1 - k], spec.theta, spec.gamma_mag, em)).sum::<f64>();
        assert!((f.ln_sigma2[t] - l).abs() < 1e-10, "t = {t}");
        if t < 300 {
            let zt = x[t] / l.exp().sqrt();
            z.push(zt);
            assert!((f.z[t] - zt).abs() < 1e-10);
            let c = -0.5 * (LN_2PI + l + zt * zt);
            assert!((f.contributions[t] - c).abs() < 1e-10);
            ll += c;
        }
    }
    let q = quasi_loglik(&spec, &x, &QmlConfig::default());
    assert!((q - ll).abs() < 1e-8);
}

#[test]
fn filter_rejects_overflow() {
    let x = normals(50, 6);
    let spec = SfiegarchSpec::new(701.0, 0.0, 0.1, 0.0, 1);
    assert_eq!(quasi_loglik(&spec, &x, &QmlConfig::default()), f64::NEG_INFINITY);
    let lam = lambda_coeffs(&spec, 50).unwrap();
    assert!(filter(&spec, &x, 0.8, &lam).is_none());
    let fine = SfiegarchSpec::new(699.0, 0.0, 0.0, 0.0, 1);
    assert!(filter(&fine, &x, 0.8, &lam).is_some());
}

#[test]
fn sandwich_recovers_white_covariance_for_least_squares() {
    let n = 400;
    let xs = normals(n, 2);
    let noise = normals(n, 3);
    let y: Vec<f64> = (0..n).map(|t| 1.0 + 2.0 * xs[t] + (1.0 + xs[t].abs()) * noise[t]).collect();
    let design = DMatrix::from_fn(n, 2, |t, j| if j == 0 { 1.0 } else { xs[t] });
    let yv = nalgebra::DVector::from_vec(y.clone());
    let xtx = design.transpose() * &design;
    let b = xtx.clone().try_inverse().unwrap() * design.transpose() * &yv;
    let contrib = |v: &[f64]| -> Option<Vec<f64>> {
        Some((0..n).map(|t| -0.5 * (y[t] - v[0] - v[1] * xs[t]).powi(2)).collect())
    };
    let rc = robust_covariance(contrib, &[b[0], b[1]]).unwrap();
    assert!(!rc.pseudo_inverse_used);
    let inv = xtx.clone().try_inverse().unwrap();
    let mut meat = DMatrix::<f64>::zeros(2, 2);
    for t in 0..n {
        let e = y[t] - b[0] - b[1] * xs[t];
        let row = design.row(t);
        meat += e * e * row.transpose() * row;
    }
    let white = &inv * meat * &inv;
    for i in 0..2 {
        for j in 0..2 {
            assert!((rc.hessian[(i, j)] + xtx[(i, j)]).abs() < 1e-5 * xtx.amax());
            assert!(rel_err(rc.cov[(i, j)], white[(i, j)]) < 1e-5);
        }
    }
}

#[test]
fn sandwich_falls_back_to_pseudo_inverse() {
    let y = normals(50, 4);
    let contrib = |v: &[f64]| -> Option<Vec<f64>> { Some(y.iter().map(|t| -0.5 * (t - v[0] - v[1]).powi(2)).collect()) };
    let m = mean(&y);
    let rc = robust_covariance(contrib, &[0.5 * m, 0.5 * m]).unwrap();
    assert!(rc.pseudo_inverse_used);
    assert!(rc.cov.iter().all(|v| v.is_finite()));
}

#[test]
fn information_criteria_penalties() {
    let (a1, b1, h1) = info_criteria(-100.0, 3, 500);
    let (a2, b2, h2) = info_criteria(-100.0, 4, 500);
    assert!((a2 - a1 - 2.0).abs() < 1e-12);
    assert!((b2 - b1 - 500f64.ln()).abs() < 1e-12);
    assert!((h2 - h1 - 2.0 * 500f64.ln().ln()).abs() < 1e-12);
    let (aic, _, _) = info_criteria(-3053.9066, 16, 4232);
    assert!((aic - 6139.8132).abs() < 1e-9);
    let (egarch, _, _) = info_criteria(-3053.9066, 15, 4232);
    assert!((aic - egarch - 2.0).abs() < 1e-9);
}

fn layouts() -> impl Strategy<Value = ParamLayout> {
    (1usize..8, 0usize..3, 0usize..3, proptest::option::of(-0.5f64..0.45)).prop_map(|(s, p, q, fixed_d)| {
        ParamLayout {
            s,
            p,
            q,
            fixed_d,
            innovation: InnovationDist::Gaussian,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn encode_decode_round_trip(layout in layouts(), d in -0.95f64..0.49, vals in proptest::collection::vec(-0.9f64..0.9, 9)) {
        let spec = SfiegarchSpec::new(vals[0], vals[1], vals[2], layout.fixed_d.unwrap_or(d), layout.s)
            .with_arma(vals[3..3 + layout.p].to_vec(), vals[6..6 + layout.q].to_vec());
        let eta = layout.encode(&spec);
        prop_assert_eq!(eta.len(), layout.len());
        prop_assert_eq!(layout.names().len(), layout.len());
        let back = layout.decode(&eta);
        prop_assert!((back.d - spec.d).abs() < 1e-9);
        prop_assert_eq!(back.omega, spec.omega);
        prop_assert_eq!(&back.alpha, &spec.alpha);
        prop_assert_eq!(&back.beta, &spec.beta);
        let nat = layout.spec_to_natural(&spec);
        prop_assert_eq!(layout.natural_to_spec(&nat), spec);
    }

    #[test]
    fn decoded_memory_stays_in_range(u in -60.0f64..60.0) {
        let layout = ParamLayout { s: 2, p: 0, q: 0, fixed_d: None, innovation: InnovationDist::Gaussian };
        let d = layout.decode(&[0.0, 0.0, 0.0, u]).d;
        prop_assert!((-1.0..=0.5).contains(&d));
    }
}

fn psd(rows: &[Vec<f64>]) -> bool {
    let m = to_matrix(rows);
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.amax();
    eig.eigenvalues.iter().all(|v| *v >= -1e-10 * top)
}

#[test]
fn egarch_recovery_with_fixed_memory() {
    let truth = SfiegarchSpec::new(-0.2, -0.12, 0.25, 0.0, 1).with_arma(vec![], vec![0.85]);
    let path = simulate_sfiegarch(&truth, 2500, Some(500), Some(500), 21).unwrap();
    let cfg = FitConfig {
        fixed_d: Some(0.0),
        ..Default::default()
    };
    let fit = fit_sfiegarch(&path.x, 1, 0, 1, &cfg).unwrap();
    assert_eq!(fit.param_names, ["omega", "theta", "gamma", "beta_1"]);
    assert_eq!(fit.spec_hat.d, 0.0);
    let truth_nat = [truth.omega, truth.theta, truth.gamma_mag, truth.beta[0]];
    for i in 0..4 {
        let z = (fit.params[i] - truth_nat[i]) / fit.se[i];
        assert!(z.abs() < 3.5, "{}: {} (se {})", fit.param_names[i], fit.params[i], fit.se[i]);
    }
    assert!(psd(&fit.cov_robust));
    let (aic, _, _) = info_criteria(fit.loglik, 4, 2500);
    assert!((fit.aic - aic).abs() < 1e-9);
}

#[test]
fn seasonal_fit_outputs_are_consistent() {
    let truth = SfiegarchSpec::new(0.0, -0.1, 0.3, 0.3, 1);
    let path = simulate_sfiegarch(&truth, 2000, None, None, 8).unwrap();
    let fit = fit_sfiegarch(&path.x, 1, 0, 0, &FitConfig::default()).unwrap();
    assert_eq!(fit.param_names, ["omega", "theta", "gamma", "d"]);
    assert!((fit.spec_hat.d - 0.3).abs() < 0.15, "d = {}", fit.spec_hat.d);
    assert!(psd(&fit.cov_robust));
    assert_eq!(fit.residuals_z.len(), 2000);
    for t in 0..2000 {
        let z = fit.residuals_x[t] / fit.sigma2_fitted[t].sqrt();
        assert!((fit.residuals_z[t] - z).abs() < 1e-12);
    }
    let lam = lambda_coeffs(&fit.spec_hat, 2000).unwrap();
    let f = filter(&fit.spec_hat, &fit.residuals_x, fit.abs_mean, &lam).unwrap();
    assert!((f.ln_sigma2[2000] - fit.ln_sigma2_next).abs() < 1e-12);
    assert!((f.contributions.iter().sum::<f64>() - fit.loglik).abs() < 1e-8);

    // First-order condition: moving one standard error changes the fit by little.
    let layout = ParamLayout {
        s: 1,
        p: 0,
        q: 0,
        fixed_d: None,
        innovation: InnovationDist::Gaussian,
    };
    for i in 0..4 {
        let h = 1e-4 * fit.params[i].abs().max(1.0);
        let mut up = fit.params.clone();
        up[i] += h;
        let mut dn = fit.params.clone();
        dn[i] -= h;
        let qml = QmlConfig::default();
        let grad = (quasi_loglik(&layout.natural_to_spec(&up), &path.x, &qml)
            - quasi_loglik(&layout.natural_to_spec(&dn), &path.x, &qml))
            / (2.0 * h);
        assert!((grad * fit.se[i]).abs() < 0.05, "{}: grad {grad}", fit.param_names[i]);
    }

    let again = fit_sfiegarch(&path.x, 1, 0, 0, &FitConfig::default()).unwrap();
    assert_eq!(again.params, fit.params);
}

#[test]
fn fit_rejects_bad_input() {
    assert!(fit_sfiegarch(&[0.1, 0.2, 0.3], 1, 0, 0, &FitConfig::default()).is_err());
    assert!(fit_sfiegarch(&normals(100, 1), 0, 0, 0, &FitConfig::default()).is_err());
    let mut x = normals(100, 1);
    x[10] = f64::NAN;
    assert!(fit_sfiegarch(&x, 1, 0, 0, &FitConfig::default()).is_err());
}

#[test]
fn ma1_mean_equation_recovery() {
    let mut arma = ArmaSpec::white_noise(0.5);
    arma.ma.insert(1, 0.3);
    let r = simulate_returns(&arma, &normals(5000, 9));
    let lags = ArmaLags {
        ar: vec![],
        ma: vec![1],
        include_mean: true,
    };
    let fit = fit_arma(&r, &lags, &ArmaFitConfig::default()).unwrap();
    assert_eq!(fit.param_names, ["mu", "ma_1"]);
    assert!(fit.eliminated.is_empty());
    // Var(ma_1) = (1 - 0.09) / n; Var(mu) = (1 + 0.3)^2 / n
    let se_ma = (0.91f64 / 5000.0).sqrt();
    let se_mu = 1.3 / 5000f64.sqrt();
    assert!((fit.se[1] / se_ma - 1.0).abs() < 0.1);
    assert!((fit.se[0] / se_mu - 1.0).abs() < 0.1);
    assert!((fit.params[1] - 0.3).abs() < 3.0 * se_ma);
    assert!((fit.params[0] - 0.5).abs() < 3.0 * se_mu);
    assert!((fit.sigma2 - 1.0).abs() < 0.06);
    for p in &fit.pvalues {
        assert!((0.0..=1.0).contains(p));
    }
    let resid = arma_residuals(&fit.arma, &r);
    assert_eq!(resid, fit.residuals);
}

#[test]
fn backward_elimination_drops_idle_lags() {
    let mut arma = ArmaSpec::white_noise(0.0);
    arma.ar.insert(7, 0.3);
    let r = simulate_returns(&arma, &normals(4000, 12));
    let lags = ArmaLags {
        ar: vec![7, 13],
        ma: vec![],
        include_mean: true,
    };
    let fit = fit_arma(&r, &lags, &ArmaFitConfig::default()).unwrap();
    assert_eq!(fit.param_names, ["ar_7"]);
    assert!(fit.eliminated.contains(&"ar_13".to_string()));
    assert!(fit.eliminated.contains(&"mu".to_string()));
    assert!((fit.params[0] - 0.3).abs() < 0.05);

    let keep_all = ArmaFitConfig {
        elimination_level: None,
        ..Default::default()
    };
    let full = fit_arma(&r, &lags, &keep_all).unwrap();
    assert_eq!(full.param_names, ["mu", "ar_7", "ar_13"]);
}

#[test]
fn white_noise_candidates_are_removed() {
    let r = normals(3000, 31);
    let lags = ArmaLags {
        ar: vec![7],
        ma: vec![13],
        include_mean: false,
    };
    let keep_all = ArmaFitConfig {
        elimination_level: None,
        ..Default::default()
    };
    let fit = fit_arma(&r, &lags, &keep_all).unwrap();
    for (b, s) in fit.params.iter().zip(&fit.se) {
        assert!((b / s).abs() < 3.0);
    }
    let p = wald_pvalues(&fit.params, &fit.se);
    for (a, b) in p.iter().zip(&fit.pvalues) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn two_step_fit_links_mean_and_volatility() {
    let truth = SfiegarchSpec::new(-0.3, -0.1, 0.2, 0.0, 1).with_arma(vec![], vec![0.8]);
    let path = simulate_sfiegarch(&truth, 1500, Some(300), Some(300), 44).unwrap();
    let mut arma = ArmaSpec::white_noise(0.05);
    arma.ar.insert(1, 0.2);
    let r = simulate_returns(&arma, &path.x);
    let lags = ArmaLags {
        ar: vec![1],
        ma: vec![],
        include_mean: true,
    };
    let cfg = FitConfig {
        fixed_d: Some(0.0),
        ..Default::default()
    };
    let (af, fit) = fit_two_step(&r, &lags, &ArmaFitConfig { elimination_level: None, max_iter: 2000 }, 1, 0, 1, &cfg).unwrap();
    assert_eq!(fit.arma_hat, af.arma);
    assert_eq!(fit.residuals_x, af.residuals);
    assert!((af.params[1] - 0.2).abs() < 0.1);
    assert_eq!(fit.params.len(), 4);
}
