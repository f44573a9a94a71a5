//! h-step forecasts of returns, log-variances and conditional variances.
//!
//! Three variance predictors are produced: the exact conditional expectation
//! `sigma2_hat = sigma2_check * prod_{l<h-1} E(l)`, the exponentiated log
//! predictor `sigma2_check = exp(ln_sigma2_hat)` and the second-order Taylor
//! predictor `sigma2_tilde = sigma2_check (1 + sigma_g^2/2 sum_{k<h-1} lambda_k^2)`,
//! where `E(l) = E exp(lambda_l g(Z))`.

use serde::{Deserialize, Serialize};

use crate::acov_spectral::{log_mgf_sum, MOMENT_TRUNCATION};
use crate::coeffs::{arma_psi_weights, lambda_coeffs};
use crate::estimate::FitResult;
use crate::innovations::{abs_moment, g, g_mgf, sigma_g_sq};
use crate::model::{ArmaSpec, SfiegarchSpec};
use crate::{Error, Result};

/// How `E(l) = E exp(lambda_l g(Z))` and `sigma_g^2` are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EMethod {
    /// Sample averages over the standardized residuals.
    #[default]
    Sample,
    /// Exact moments under the spec's innovation law.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub horizon: usize,
    pub sigma2_hat: f64,
    pub sigma2_check: f64,
    pub sigma2_tilde: f64,
    pub ln_sigma2_hat: f64,
    pub r_hat: f64,
    pub r2_hat: f64,
    pub mse_sigma2: f64,
    pub mse_x2: f64,
    pub mse_ln: f64,
    /// `E(l)` for `l = 0..h-2`.
    pub e_table: Vec<f64>,
    pub sigma_g_sq_hat: f64,
}

/// Analytic moment products for the mean-square errors.
///
/// Holds `ln M(lambda_k)` and `ln M(2 lambda_k)` for `k < max_h`, with
/// `M(b) = E exp(b g(Z))`, plus `sum_k ln M(2 lambda_k)` over the whole series.
#[derive(Debug, Clone)]
pub struct MomentProducts {
    omega: f64,
    l1: Vec<f64>,
    l2: Vec<f64>,
    total2: f64,
    z4: f64,
}

impl MomentProducts {
    /// `extrapolate` adds the geometric tail beyond `lambda.len()`.
    pub fn new(spec: &SfiegarchSpec, lambda: &[f64], max_h: usize, extrapolate: bool) -> Result<Self> {
        let k = max_h.saturating_sub(1).min(lambda.len());
        let mut l1 = Vec::with_capacity(k);
        let mut l2 = Vec::with_capacity(k);
        for &lam in &lambda[..k] {
            l1.push(g_mgf(&spec.innovation, lam, spec.theta, spec.gamma_mag)?.ln());
            l2.push(g_mgf(&spec.innovation, 2.0 * lam, spec.theta, spec.gamma_mag)?.ln());
        }
        let total2 = log_mgf_sum(spec, 2.0, lambda, 0, extrapolate)?;
        Ok(Self {
            omega: spec.omega,
            l1,
            l2,
            total2,
            z4: abs_moment(&spec.innovation, 4.0)?,
        })
    }

    /// `E sigma^4 = e^{2 omega} prod_k M(2 lambda_k)`.
    pub fn sigma4(&self) -> f64 {
        (2.0 * self.omega + self.total2).exp()
    }

    /// `e^{2 omega} [prod_{k<=h-2} M(2 lambda_k) - prod_{k<=h-2} M(lambda_k)^2] prod_{j>=h-1} M(2 lambda_j)`.
    pub fn mse_sigma2(&self, h: usize) -> f64 {
        assert!(h >= 1 && h - 1 <= self.l1.len(), "horizon beyond the table");
        let a2: f64 = self.l2[..h - 1].iter().sum();
        let a1: f64 = self.l1[..h - 1].iter().sum();
        let tail = self.total2 - a2;
        let v = (2.0 * self.omega + tail).exp() * (a2.exp() - (2.0 * a1).exp());
        v.max(0.0)
    }

    /// `E sigma^4 (E Z^4 - 1) + mse(sigma^2)`.
    pub fn mse_x2(&self, h: usize) -> f64 {
        self.sigma4() * (self.z4 - 1.0) + self.mse_sigma2(h)
    }
}

/// Mean-square error of the exact variance predictor under known parameters.
pub fn mse_sigma2(spec: &SfiegarchSpec, lambda: &[f64], h: usize, extrapolate: bool) -> Result<f64> {
    if h == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    Ok(MomentProducts::new(spec, lambda, h, extrapolate)?.mse_sigma2(h))
}

/// Forecasting state built from a fitted model and its history.
#[derive(Debug, Clone)]
pub struct Forecaster {
    pub spec: SfiegarchSpec,
    pub arma: ArmaSpec,
    r: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    abs_mean: f64,
    lambda: Vec<f64>,
    psi: Vec<f64>,
    max_h: usize,
    e_table: Vec<f64>,
    sigma_g_sq_hat: f64,
    moments: Option<MomentProducts>,
}

impl Forecaster {
    /// `r`, `x`, `z` are the returns, ARMA residuals and standardized residuals
    /// over `t = 1..n`; `abs_mean` is the `E|Z|` used inside `g` by the filter.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: &SfiegarchSpec,
        arma: &ArmaSpec,
        r: &[f64],
        x: &[f64],
        z: &[f64],
        abs_mean: f64,
        max_h: usize,
        method: EMethod,
    ) -> Result<Self> {
        let n = z.len();
        if max_h == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if x.len() != n || r.len() != n {
            return Err(Error::InvalidParameter(format!(
                "history lengths differ: r {}, x {}, z {}",
                r.len(),
                x.len(),
                z.len()
            )));
        }
        if n == 0 {
            return Err(Error::InsufficientData("empty history".into()));
        }
        let m = (n + max_h).max(MOMENT_TRUNCATION);
        let lambda = lambda_coeffs(spec, m - 1)?;
        let psi = arma_psi_weights(arma, n + max_h)?;
        let nf = n as f64;
        let (e_table, sigma_g_sq_hat) = match method {
            EMethod::Sample => {
                let mu_abs = z.iter().map(|v| v.abs()).sum::<f64>() / nf;
                let sign = z.iter().map(|v| v * v.abs()).sum::<f64>() / nf;
                let (th, ga) = (spec.theta, spec.gamma_mag);
                let sg = th * th + ga * ga - (ga * mu_abs).powi(2) + 2.0 * th * ga * sign;
                let e = lambda[..max_h - 1]
                    .iter()
                    .map(|&lam| {
                        z.iter()
                            .map(|&zt| (lam * (th * zt + ga * (zt.abs() - mu_abs))).exp())
                            .sum::<f64>()
                            / nf
                    })
                    .collect();
                (e, sg)
            }
            EMethod::Analytic => {
                let e = lambda[..max_h - 1]
                    .iter()
                    .map(|&lam| g_mgf(&spec.innovation, lam, spec.theta, spec.gamma_mag))
                    .collect::<Result<Vec<_>>>()?;
                (e, sigma_g_sq(&spec.innovation, spec.theta, spec.gamma_mag)?)
            }
        };
        if e_table.iter().any(|v: &f64| !v.is_finite()) {
            return Err(Error::Divergent("E(l) estimate is not finite".into()));
        }
        let moments = match MomentProducts::new(spec, &lambda, max_h, true) {
            Ok(mp) => Some(mp),
            Err(Error::Divergent(msg)) => {
                log::warn!("fourth moment unavailable: {msg}");
                None
            }
            Err(e) => return Err(e),
        };
        Ok(Self {
            spec: spec.clone(),
            arma: arma.clone(),
            r: r.to_vec(),
            x: x.to_vec(),
            z: z.to_vec(),
            abs_mean,
            lambda,
            psi,
            max_h,
            e_table,
            sigma_g_sq_hat,
            moments,
        })
    }

    /// Uses the fit's spec, ARMA part, residuals and `E|Z|`.
    pub fn from_fit(fit: &FitResult, r: &[f64], max_h: usize, method: EMethod) -> Result<Self> {
        Self::new(
            &fit.spec_hat,
            &fit.arma_hat,
            r,
            &fit.residuals_x,
            &fit.residuals_z,
            fit.abs_mean,
            max_h,
            method,
        )
    }

    pub fn max_h(&self) -> usize {
        self.max_h
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    fn check_h(&self, h: usize) -> Result<()> {
        if h == 0 || h > self.max_h {
            return Err(Error::InvalidParameter(format!(
                "horizon {h} outside 1..={}",
                self.max_h
            )));
        }
        Ok(())
    }

    /// `omega + sum_{k=0}^{n-1} lambda_{k+h-1} g(z_{n-k})`.
    pub fn ln_sigma2(&self, h: usize) -> Result<f64> {
        self.check_h(h)?;
        let n = self.z.len();
        let acc: f64 = (0..n)
            .map(|k| {
                let zt = self.z[n - 1 - k];
                self.lambda[k + h - 1] * g(zt, self.spec.theta, self.spec.gamma_mag, self.abs_mean)
            })
            .sum();
        Ok(self.spec.omega + acc)
    }

    /// `sigma_g^2 sum_{k=0}^{h-2} lambda_k^2`.
    pub fn mse_ln(&self, h: usize) -> Result<f64> {
        self.check_h(h)?;
        Ok(self.sigma_g_sq_hat * self.lambda[..h - 1].iter().map(|l| l * l).sum::<f64>())
    }

    /// ARMA point forecasts `r_hat_{n+1..n+max_h}`.
    pub fn r_hat_path(&self) -> Vec<f64> {
        let n = self.r.len();
        let mu = self.arma.mu;
        let mut rr: Vec<f64> = self.r.clone();
        for h in 1..=self.max_h {
            let t = n + h;
            let mut v = mu;
            for (&k, &phi) in &self.arma.ar {
                let dev = if k < t { rr[t - k - 1] - mu } else { 0.0 };
                v += phi * dev;
            }
            for (&j, &vphi) in &self.arma.ma {
                if j >= h && j < t {
                    v += vphi * self.x[t - j - 1];
                }
            }
            rr.push(v);
        }
        rr.split_off(n)
    }

    /// `sum_{j >= h} psi_j x_{n+h-j}` with `x_t = 0` for `t <= 0`.
    fn history_term(&self, h: usize) -> f64 {
        let n = self.x.len();
        (h..n + h).map(|j| self.psi[j] * self.x[n + h - j - 1]).sum()
    }

    /// All horizons `1..=max_h`.
    pub fn forecast_all(&self) -> Result<Vec<ForecastSet>> {
        let r_hat = self.r_hat_path();
        let mut out: Vec<ForecastSet> = Vec::with_capacity(self.max_h);
        let mut log_e = 0.0;
        let mut sum_l2 = 0.0;
        let mu = self.arma.mu;
        for h in 1..=self.max_h {
            if h >= 2 {
                log_e += self.e_table[h - 2].ln();
                sum_l2 += self.lambda[h - 2].powi(2);
            }
            let ln_hat = self.ln_sigma2(h)?;
            let check = ln_hat.exp();
            let (hat, tilde) = if h == 1 {
                (check, check)
            } else {
                (
                    check * log_e.exp(),
                    check * (1.0 + 0.5 * self.sigma_g_sq_hat * sum_l2),
                )
            };
            let (mse_s, mse_x) = match &self.moments {
                Some(mp) => (mp.mse_sigma2(h), mp.mse_x2(h)),
                None => (f64::INFINITY, f64::INFINITY),
            };
            let var_part: f64 = (0..h)
                .map(|k| {
                    let s2 = if k == 0 { hat } else { out[h - 1 - k].sigma2_hat };
                    self.psi[k].powi(2) * s2
                })
                .sum();
            let s = self.history_term(h);
            out.push(ForecastSet {
                horizon: h,
                sigma2_hat: hat,
                sigma2_check: check,
                sigma2_tilde: tilde,
                ln_sigma2_hat: ln_hat,
                r_hat: r_hat[h - 1],
                r2_hat: mu * mu + var_part + s * s + 2.0 * mu * s,
                mse_sigma2: mse_s,
                mse_x2: mse_x,
                mse_ln: self.sigma_g_sq_hat * sum_l2,
                e_table: self.e_table[..h - 1].to_vec(),
                sigma_g_sq_hat: self.sigma_g_sq_hat,
            });
        }
        Ok(out)
    }

    /// Single horizon.
    pub fn forecast(&self, h: usize) -> Result<ForecastSet> {
        self.check_h(h)?;
        Ok(self.forecast_all()?.swap_remove(h - 1))
    }
}

/// Multi-day aggregates `(r_hat^(d)[h], sigma2_hat^(d)[h])`.
///
/// `sets` are the intraday forecasts from the end of the last observed day;
/// `day_counts` gives the number of intraday returns in each following day.
/// The window covers `hM = sum_{j<h_days} day_counts[j]` steps with
/// `Psi_j = (sum_{k=0}^{hM-j} psi_k)^2`.
pub fn aggregate_horizon(
    sets: &[ForecastSet],
    psi: &[f64],
    day_counts: &[usize],
    h_days: usize,
) -> Result<(f64, f64)> {
    if h_days == 0 || h_days > day_counts.len() {
        return Err(Error::InvalidParameter(format!(
            "h_days = {h_days} with {} days available",
            day_counts.len()
        )));
    }
    let hm: usize = day_counts[..h_days].iter().sum();
    if hm == 0 {
        return Err(Error::InvalidParameter("empty day window".into()));
    }
    if sets.len() < hm || psi.len() < hm {
        return Err(Error::InsufficientData(format!(
            "window of {hm} steps exceeds {} forecasts / {} psi weights",
            sets.len(),
            psi.len()
        )));
    }
    let r: f64 = sets[..hm].iter().map(|s| s.r_hat).sum();
    let mut cum = vec![0.0; hm + 1];
    for k in 0..hm {
        cum[k + 1] = cum[k] + psi[k];
    }
    let v: f64 = (1..=hm)
        .map(|j| cum[hm - j + 1].powi(2) * sets[j - 1].sigma2_hat)
        .sum();
    Ok((r, v))
}
