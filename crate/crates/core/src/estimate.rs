//! Two-step quasi-maximum-likelihood estimation.
//!
//! Step one fits a constrained ARMA mean equation by conditional least squares
//! with backward elimination of insignificant lags. Step two maximizes the
//! Gaussian quasi-likelihood of the SFIEGARCH volatility on the ARMA residuals:
//!
//! ```text
//! L_n = -n/2 ln(2 pi) - 1/2 sum_t [ln sigma_t^2 + x_t^2 / sigma_t^2]
//! ln sigma_t^2 = omega + sum_{k=0}^{t-2} lambda_k g(z_{t-1-k}),   z_t = x_t / sigma_t
//! ```

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coeffs::lambda_coeffs;
use crate::innovations::g;
use crate::model::{ArmaSpec, InnovationDist, SfiegarchSpec};
use crate::numeric::optim::{minimize, OptimOptions};
use crate::numeric::poly;
use crate::stats::normal_two_sided_p;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Log-variances beyond this magnitude reject the parameter point.
const LN_VAR_LIMIT: f64 = 700.0;

/// Filtered conditional variances and standardized residuals.
#[derive(Debug, Clone)]
pub struct Filtered {
    /// `ln sigma_t^2` for `t = 1..=n+1`; the last entry is the one-step forecast.
    pub ln_sigma2: Vec<f64>,
    pub z: Vec<f64>,
    /// Per-observation log-likelihood contributions.
    pub contributions: Vec<f64>,
}

/// Runs the log-variance recursion over `x` with `g(z_t) = 0` for `t <= 0`.
/// `lambda` must hold at least `x.len()` coefficients. Returns `None` on overflow.
pub fn filter(spec: &SfiegarchSpec, x: &[f64], abs_mean: f64, lambda: &[f64]) -> Option<Filtered> {
    let n = x.len();
    assert!(lambda.len() >= n, "lambda shorter than the series");
    let mut gbuf = vec![0.0; n];
    let mut ln_sigma2 = Vec::with_capacity(n + 1);
    let mut z = Vec::with_capacity(n);
    let mut contributions = Vec::with_capacity(n);
    for t in 1..=n + 1 {
        let hist = &gbuf[n + 1 - t..];
        let acc: f64 = lambda[..t - 1].iter().zip(hist).map(|(a, b)| a * b).sum();
        let l = spec.omega + acc;
        if !l.is_finite() || l.abs() > LN_VAR_LIMIT {
            return None;
        }
        ln_sigma2.push(l);
        if t == n + 1 {
            break;
        }
        let xt = x[t - 1];
        let inv_sd = (-0.5 * l).exp();
        let zt = xt * inv_sd;
        z.push(zt);
        contributions.push(-0.5 * (LN_2PI + l + zt * zt));
        gbuf[n - t] = g(zt, spec.theta, spec.gamma_mag, abs_mean);
    }
    Some(Filtered {
        ln_sigma2,
        z,
        contributions,
    })
}

/// Quasi-likelihood settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmlConfig {
    /// `E|Z|` used inside `g`; `sqrt(2/pi)` under Gaussian QML.
    pub abs_mean: f64,
}

impl Default for QmlConfig {
    fn default() -> Self {
        Self {
            abs_mean: (2.0 / std::f64::consts::PI).sqrt(),
        }
    }
}

/// `L_n` at `spec` for mean-adjusted data `x`; `-inf` for rejected points.
pub fn quasi_loglik(spec: &SfiegarchSpec, x: &[f64], cfg: &QmlConfig) -> f64 {
    let Ok(lambda) = lambda_coeffs(spec, x.len().max(1)) else {
        return f64::NEG_INFINITY;
    };
    match filter(spec, x, cfg.abs_mean, &lambda) {
        Some(f) => f.contributions.iter().sum(),
        None => f64::NEG_INFINITY,
    }
}

/// Maps between the natural parameter vector and the unconstrained search space.
///
/// Natural order: `omega, theta, gamma, [d], alpha_1..alpha_p, beta_1..beta_q`,
/// with `d` omitted when fixed. The search space replaces `d` by `u` with
/// `d = -1 + 1.5 logistic(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub s: usize,
    pub p: usize,
    pub q: usize,
    pub fixed_d: Option<f64>,
    pub innovation: InnovationDist,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        3 + usize::from(self.fixed_d.is_none()) + self.p + self.q
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> Vec<String> {
        let mut v = vec!["omega".to_string(), "theta".into(), "gamma".into()];
        if self.fixed_d.is_none() {
            v.push("d".into());
        }
        v.extend((1..=self.p).map(|i| format!("alpha_{i}")));
        v.extend((1..=self.q).map(|j| format!("beta_{j}")));
        v
    }

    fn d_offset(&self) -> usize {
        3 + usize::from(self.fixed_d.is_none())
    }

    pub fn natural_to_spec(&self, v: &[f64]) -> SfiegarchSpec {
        let o = self.d_offset();
        SfiegarchSpec {
            omega: v[0],
            theta: v[1],
            gamma_mag: v[2],
            d: self.fixed_d.unwrap_or_else(|| v.get(3).copied().unwrap_or(0.0)),
            s: self.s,
            alpha: v[o..o + self.p].to_vec(),
            beta: v[o + self.p..o + self.p + self.q].to_vec(),
            innovation: self.innovation,
        }
    }

    pub fn spec_to_natural(&self, spec: &SfiegarchSpec) -> Vec<f64> {
        let mut v = vec![spec.omega, spec.theta, spec.gamma_mag];
        if self.fixed_d.is_none() {
            v.push(spec.d);
        }
        v.extend(&spec.alpha);
        v.extend(&spec.beta);
        v
    }

    pub fn encode(&self, spec: &SfiegarchSpec) -> Vec<f64> {
        let mut v = self.spec_to_natural(spec);
        if self.fixed_d.is_none() {
            let t = ((spec.d + 1.0) / 1.5).clamp(1e-12, 1.0 - 1e-12);
            v[3] = (t / (1.0 - t)).ln();
        }
        v
    }

    pub fn decode(&self, eta: &[f64]) -> SfiegarchSpec {
        let mut v = eta.to_vec();
        if self.fixed_d.is_none() {
            v[3] = -1.0 + 1.5 / (1.0 + (-eta[3]).exp());
        }
        self.natural_to_spec(&v)
    }
}

/// Sandwich covariance with its ingredients.
#[derive(Debug, Clone)]
pub struct RobustCov {
    pub cov: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
    pub opg: DMatrix<f64>,
    pub pseudo_inverse_used: bool,
}

fn step(x: f64) -> f64 {
    1e-4 * x.abs().max(1.0)
}

/// `H^{-1} B H^{-1}` where `H` is the Hessian of the summed objective (central
/// differences of a central-difference gradient) and `B` the outer product of
/// per-observation scores. `contrib` returns per-observation contributions.
pub fn robust_covariance<F>(contrib: F, params: &[f64]) -> Result<RobustCov>
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let k = params.len();
    let eval = |x: &[f64]| -> Result<Vec<f64>> {
        contrib(x).ok_or_else(|| Error::Numerical("objective undefined near the optimum".into()))
    };
    let base = eval(params)?;
    let n = base.len();
    let mut scores = DMatrix::<f64>::zeros(n, k);
    let mut x = params.to_vec();
    for i in 0..k {
        let h = step(params[i]);
        x[i] = params[i] + h;
        let up = eval(&x)?;
        x[i] = params[i] - h;
        let dn = eval(&x)?;
        x[i] = params[i];
        for t in 0..n {
            scores[(t, i)] = (up[t] - dn[t]) / (2.0 * h);
        }
    }
    let total = |x: &[f64]| -> Result<f64> { Ok(eval(x)?.iter().sum()) };
    let grad = |x: &[f64]| -> Result<Vec<f64>> {
        let mut xp = x.to_vec();
        let mut g = vec![0.0; k];
        for j in 0..k {
            let h = step(x[j]);
            xp[j] = x[j] + h;
            let fp = total(&xp)?;
            xp[j] = x[j] - h;
            let fm = total(&xp)?;
            xp[j] = x[j];
            g[j] = (fp - fm) / (2.0 * h);
        }
        Ok(g)
    };
    let mut hess = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let h = step(params[i]);
        x[i] = params[i] + h;
        let gp = grad(&x)?;
        x[i] = params[i] - h;
        let gm = grad(&x)?;
        x[i] = params[i];
        for j in 0..k {
            hess[(i, j)] = (gp[j] - gm[j]) / (2.0 * h);
        }
    }
    let hess = 0.5 * (&hess + hess.transpose());
    let opg = scores.transpose() * &scores;
    let (hinv, pseudo) = match hess.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) && hess.rank(1e-8 * hess.amax()) == k => {
            (inv, false)
        }
        _ => {
            log::warn!("singular Hessian; using the pseudo-inverse");
            let pinv = hess
                .clone()
                .pseudo_inverse(1e-8 * hess.amax().max(1e-300))
                .map_err(|e| Error::Numerical(e.to_string()))?;
            (pinv, true)
        }
    };
    let cov = &hinv * &opg * &hinv;
    let cov = 0.5 * (&cov + cov.transpose());
    Ok(RobustCov {
        cov,
        hessian: hess,
        opg,
        pseudo_inverse_used: pseudo,
    })
}

/// `(AIC, BIC, HQC) = (-2L + 2k, -2L + k ln n, -2L + 2k ln ln n)`.
pub fn info_criteria(loglik: f64, k: usize, n: usize) -> (f64, f64, f64) {
    let kf = k as f64;
    let nf = n as f64;
    (
        -2.0 * loglik + 2.0 * kf,
        -2.0 * loglik + kf * nf.ln(),
        -2.0 * loglik + 2.0 * kf * nf.ln().ln(),
    )
}

/// Settings for the volatility fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// `E|Z|` in `g`; `None` uses `sqrt(2/pi)`.
    pub abs_mean: Option<f64>,
    /// Holds `d` fixed (for example `Some(0.0)` for EGARCH).
    pub fixed_d: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub start: Option<SfiegarchSpec>,
    /// Law recorded in the fitted spec; estimation is Gaussian QML regardless.
    pub innovation: InnovationDist,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            abs_mean: None,
            fixed_d: None,
            max_iter: 2000,
            tol: 1e-8,
            start: None,
            innovation: InnovationDist::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub spec_hat: SfiegarchSpec,
    pub arma_hat: ArmaSpec,
    pub loglik: f64,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub cov_robust: Vec<Vec<f64>>,
    pub se: Vec<f64>,
    pub aic: f64,
    pub bic: f64,
    pub hqc: f64,
    pub residuals_x: Vec<f64>,
    pub residuals_z: Vec<f64>,
    pub sigma2_fitted: Vec<f64>,
    /// `ln sigma^2_{n+1}` from the filter.
    pub ln_sigma2_next: f64,
    pub abs_mean: f64,
    pub converged: bool,
    pub iterations: usize,
    pub pseudo_inverse_used: bool,
}

fn beta_penalty(spec: &SfiegarchSpec) -> Option<f64> {
    if spec.beta.iter().all(|v| *v == 0.0) {
        return Some(0.0);
    }
    let rho = poly::min_root_modulus(&spec.beta_poly());
    let margin = 1.0 + 1e-3;
    if rho <= crate::model::ROOT_MARGIN {
        return None;
    }
    Some(if rho < margin {
        1e6 * (margin - rho).powi(2)
    } else {
        0.0
    })
}

fn default_start(x: &[f64], layout: &ParamLayout) -> SfiegarchSpec {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    SfiegarchSpec {
        omega: ms.max(1e-12).ln(),
        theta: -0.05,
        gamma_mag: 0.15,
        d: layout.fixed_d.unwrap_or(0.2),
        s: layout.s,
        alpha: vec![0.0; layout.p],
        beta: vec![0.0; layout.q],
        innovation: layout.innovation,
    }
}

/// Maximizes the quasi-likelihood of SFIEGARCH(p, d, q)_s on residuals `x`.
pub fn fit_sfiegarch(x: &[f64], s: usize, p: usize, q: usize, cfg: &FitConfig) -> Result<FitResult> {
    if s == 0 {
        return Err(Error::InvalidParameter("season length s must be >= 1".into()));
    }
    let n = x.len();
    let layout = ParamLayout {
        s,
        p,
        q,
        fixed_d: cfg.fixed_d,
        innovation: cfg.innovation,
    };
    if n <= layout.len() + 1 {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {} parameters",
            layout.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite observation".into()));
    }
    let qml = QmlConfig {
        abs_mean: cfg.abs_mean.unwrap_or_else(|| QmlConfig::default().abs_mean),
    };
    let start = match &cfg.start {
        Some(s0) => {
            let mut s0 = s0.clone();
            s0.s = s;
            s0.alpha.resize(p, 0.0);
            s0.beta.resize(q, 0.0);
            if let Some(d) = cfg.fixed_d {
                s0.d = d;
            }
            s0
        }
        None => default_start(x, &layout),
    };
    let objective = |eta: &[f64]| -> f64 {
        let spec = layout.decode(eta);
        let Some(pen) = beta_penalty(&spec) else {
            return 1e300;
        };
        let ll = quasi_loglik(&spec, x, &qml);
        if ll.is_finite() {
            -ll + pen
        } else {
            1e300
        }
    };
    let opts = OptimOptions {
        max_iter: cfg.max_iter,
        tol: cfg.tol,
        ..Default::default()
    };
    let eta0 = layout.encode(&start);
    let res = minimize(&objective, &eta0, &opts);
    let spec_hat = layout.decode(&res.x);
    if res.fx >= 1e299 {
        return Err(Error::Numerical("no admissible parameter point found".into()));
    }
    let lambda = lambda_coeffs(&spec_hat, n)?;
    let filt = filter(&spec_hat, x, qml.abs_mean, &lambda)
        .ok_or_else(|| Error::Numerical("filter overflow at the optimum".into()))?;
    let loglik: f64 = filt.contributions.iter().sum();
    let natural = layout.spec_to_natural(&spec_hat);
    let contrib = |v: &[f64]| -> Option<Vec<f64>> {
        let sp = layout.natural_to_spec(v);
        let lam = lambda_coeffs(&sp, n).ok()?;
        filter(&sp, x, qml.abs_mean, &lam).map(|f| f.contributions)
    };
    let rc = robust_covariance(contrib, &natural)?;
    let k = layout.len();
    let se = (0..k).map(|i| rc.cov[(i, i)].max(0.0).sqrt()).collect();
    let (aic, bic, hqc) = info_criteria(loglik, k, n);
    Ok(FitResult {
        spec_hat,
        arma_hat: ArmaSpec::white_noise(0.0),
        loglik,
        param_names: layout.names(),
        params: natural,
        cov_robust: (0..k).map(|i| rc.cov.row(i).iter().copied().collect()).collect(),
        se,
        aic,
        bic,
        hqc,
        residuals_x: x.to_vec(),
        residuals_z: filt.z,
        sigma2_fitted: filt.ln_sigma2[..n].iter().map(|l| l.exp()).collect(),
        ln_sigma2_next: filt.ln_sigma2[n],
        abs_mean: qml.abs_mean,
        converged: res.converged,
        iterations: res.iterations,
        pseudo_inverse_used: rc.pseudo_inverse_used,
    })
}

/// Free lags of the constrained mean equation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmaLags {
    pub ar: Vec<usize>,
    pub ma: Vec<usize>,
    pub include_mean: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmaFitConfig {
    /// Drop parameters one at a time while some p-value reaches this level.
    pub elimination_level: Option<f64>,
    pub max_iter: usize,
}

impl Default for ArmaFitConfig {
    fn default() -> Self {
        Self {
            elimination_level: Some(0.05),
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmaFit {
    pub arma: ArmaSpec,
    pub residuals: Vec<f64>,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub se: Vec<f64>,
    pub pvalues: Vec<f64>,
    /// Residual variance.
    pub sigma2: f64,
    pub eliminated: Vec<String>,
}

impl ArmaFit {
    pub fn n_params(&self) -> usize {
        self.params.len()
    }
}

/// Residuals `x_t = r_t - mu - sum phi_k (r_{t-k} - mu) - sum vphi_j x_{t-j}` with
/// pre-sample returns equal to `mu` and pre-sample residuals zero.
pub fn arma_residuals(arma: &ArmaSpec, r: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; r.len()];
    for t in 0..r.len() {
        let mut v = r[t] - arma.mu;
        for (&k, &phi) in &arma.ar {
            if k <= t {
                v -= phi * (r[t - k] - arma.mu);
            }
        }
        for (&j, &vphi) in &arma.ma {
            if j <= t {
                v -= vphi * x[t - j];
            }
        }
        x[t] = v;
    }
    x
}

fn arma_from(lags: &ArmaLags, v: &[f64]) -> ArmaSpec {
    let mut i = 0;
    let mu = if lags.include_mean {
        i = 1;
        v[0]
    } else {
        0.0
    };
    let mut ar = BTreeMap::new();
    for &k in &lags.ar {
        ar.insert(k, v[i]);
        i += 1;
    }
    let mut ma = BTreeMap::new();
    for &j in &lags.ma {
        ma.insert(j, v[i]);
        i += 1;
    }
    ArmaSpec { mu, ar, ma }
}

fn arma_names(lags: &ArmaLags) -> Vec<String> {
    let mut v = Vec::new();
    if lags.include_mean {
        v.push("mu".to_string());
    }
    v.extend(lags.ar.iter().map(|k| format!("ar_{k}")));
    v.extend(lags.ma.iter().map(|j| format!("ma_{j}")));
    v
}

fn fit_arma_once(r: &[f64], lags: &ArmaLags, max_iter: usize) -> Result<ArmaFit> {
    let n = r.len();
    let names = arma_names(lags);
    let k = names.len();
    if n <= k + 1 {
        return Err(Error::InsufficientData(format!("{n} observations for {k} ARMA parameters")));
    }
    let rbar = r.iter().sum::<f64>() / n as f64;
    let mut x0 = vec![0.0; k];
    if lags.include_mean {
        x0[0] = rbar;
    }
    let sse = |v: &[f64]| -> f64 {
        let arma = arma_from(lags, v);
        if arma.ma.values().any(|c| c.abs() > 10.0) || arma.ar.values().any(|c| c.abs() > 10.0) {
            return f64::INFINITY;
        }
        let s: f64 = arma_residuals(&arma, r).iter().map(|e| e * e).sum();
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    };
    let opts = OptimOptions {
        max_iter,
        tol: 1e-12,
        initial_step: 0.05,
        ..Default::default()
    };
    let res = minimize(&sse, &x0, &opts);
    let arma = arma_from(lags, &res.x);
    let ar_rho = poly::min_root_modulus(&arma.ar_poly());
    if ar_rho <= crate::model::ROOT_MARGIN {
        return Err(Error::NonInvertible {
            which: "AR",
            modulus: ar_rho,
        });
    }
    let resid = arma_residuals(&arma, r);
    let sigma2 = resid.iter().map(|e| e * e).sum::<f64>() / (n - k) as f64;
    // Gauss-Newton covariance sigma^2 (J'J)^{-1} with J = d residual / d parameter.
    let mut jac = DMatrix::<f64>::zeros(n, k);
    let mut v = res.x.clone();
    for i in 0..k {
        let h = 1e-6 * res.x[i].abs().max(1.0);
        v[i] = res.x[i] + h;
        let up = arma_residuals(&arma_from(lags, &v), r);
        v[i] = res.x[i] - h;
        let dn = arma_residuals(&arma_from(lags, &v), r);
        v[i] = res.x[i];
        for t in 0..n {
            jac[(t, i)] = (up[t] - dn[t]) / (2.0 * h);
        }
    }
    let jtj = jac.transpose() * &jac;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular ARMA information matrix".into()))?
        * sigma2;
    let se: Vec<f64> = (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let pvalues = res
        .x
        .iter()
        .zip(&se)
        .map(|(b, s)| if *s > 0.0 { normal_two_sided_p(b / s) } else { 0.0 })
        .collect();
    Ok(ArmaFit {
        arma,
        residuals: resid,
        param_names: names,
        params: res.x,
        se,
        pvalues,
        sigma2,
        eliminated: vec![],
    })
}

/// Conditional-least-squares ARMA fit over the free lags, removing the least
/// significant parameter one at a time while its normal-approximation p-value
/// reaches the elimination level.
pub fn fit_arma(r: &[f64], lags: &ArmaLags, cfg: &ArmaFitConfig) -> Result<ArmaFit> {
    let mut current = lags.clone();
    let mut eliminated = Vec::new();
    loop {
        let mut fit = fit_arma_once(r, &current, cfg.max_iter)?;
        let worst = fit
            .pvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, p)| (i, *p));
        match (cfg.elimination_level, worst) {
            (Some(level), Some((i, p))) if p >= level => {
                let name = fit.param_names[i].clone();
                eliminated.push(name.clone());
                if name == "mu" {
                    current.include_mean = false;
                } else if let Some(k) = name.strip_prefix("ar_") {
                    let k: usize = k.parse().unwrap_or(0);
                    current.ar.retain(|&v| v != k);
                } else if let Some(j) = name.strip_prefix("ma_") {
                    let j: usize = j.parse().unwrap_or(0);
                    current.ma.retain(|&v| v != j);
                }
            }
            _ => {
                fit.eliminated = eliminated;
                return Ok(fit);
            }
        }
    }
}

/// ARMA mean fit followed by the volatility fit on its residuals.
pub fn fit_two_step(
    r: &[f64],
    lags: &ArmaLags,
    arma_cfg: &ArmaFitConfig,
    s: usize,
    p: usize,
    q: usize,
    cfg: &FitConfig,
) -> Result<(ArmaFit, FitResult)> {
    let af = fit_arma(r, lags, arma_cfg)?;
    let mut fit = fit_sfiegarch(&af.residuals, s, p, q, cfg)?;
    fit.arma_hat = af.arma.clone();
    Ok((af, fit))
}

/// Symmetric matrix from nested rows.
pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let k = rows.len();
    DMatrix::from_fn(k, k, |i, j| rows[i][j])
}

/// `t`-statistics' two-sided normal p-values for `params` given standard errors.
pub fn wald_pvalues(params: &[f64], se: &[f64]) -> Vec<f64> {
    let v = DVector::from_iterator(params.len(), params.iter().zip(se).map(|(b, s)| b / s));
    v.iter().map(|z| normal_two_sided_p(*z)).collect()
}
