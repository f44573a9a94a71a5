//! Forecast-accuracy measures and residual diagnostics.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::innovations::{cdf, log_pdf};
use crate::model::InnovationDist;
use crate::stats::{autocovariances, chi2_sf, kolmogorov_sf, ks_uniform, mean, normal_two_sided_p};
use crate::{Error, Result};

/// Terms with `|y_t|` below this are left out of the mean percentage error.
pub const MPE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMeasures {
    pub mae: f64,
    /// `None` when every term was skipped.
    pub mpe: Option<f64>,
    pub max_ae: f64,
    pub mpe_skipped: usize,
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// `mae = mean |e|`, `mpe = mean |e|/|y|`, `max_ae = max |e|` with `e = y - y_hat`.
pub fn error_measures(actual: &[f64], predicted: &[f64]) -> Result<ErrorMeasures> {
    same_len(actual, predicted)?;
    if actual.is_empty() {
        return Err(Error::InsufficientData("no forecasts to evaluate".into()));
    }
    let mut sum = 0.0;
    let mut max_ae = 0.0f64;
    let mut pct = 0.0;
    let mut used = 0usize;
    for (y, yh) in actual.iter().zip(predicted) {
        let e = (y - yh).abs();
        sum += e;
        max_ae = max_ae.max(e);
        if y.abs() >= MPE_FLOOR {
            pct += e / y.abs();
            used += 1;
        }
    }
    Ok(ErrorMeasures {
        mae: sum / actual.len() as f64,
        mpe: (used > 0).then(|| pct / used as f64),
        max_ae,
        mpe_skipped: actual.len() - used,
    })
}

/// Loss differential `|y - a| - |y - b|`.
pub fn abs_loss_diff(actual: &[f64], pred_a: &[f64], pred_b: &[f64]) -> Result<Vec<f64>> {
    same_len(actual, pred_a)?;
    same_len(actual, pred_b)?;
    Ok(actual
        .iter()
        .zip(pred_a.iter().zip(pred_b))
        .map(|(y, (a, b))| (y - a).abs() - (y - b).abs())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub stat: f64,
    pub pvalue: f64,
    /// Set when the statistic is undefined (zero variance with zero mean).
    pub degenerate: bool,
}

/// Bartlett-weighted long-run variance `gamma_0 + 2 sum_{k<=L} (1 - k/(L+1)) gamma_k`.
pub fn bartlett_lrv(x: &[f64], lags: usize) -> f64 {
    let g = autocovariances(x, lags);
    let l = lags as f64;
    g[0] + 2.0
        * g.iter()
            .enumerate()
            .skip(1)
            .map(|(k, v)| (1.0 - k as f64 / (l + 1.0)) * v)
            .sum::<f64>()
}

/// Diebold-Mariano test of equal accuracy: `mean(d) / sqrt(lrv / n)` with a
/// Bartlett long-run variance at lag `h - 1` and a two-sided normal p-value.
/// A constant nonzero differential yields an infinite statistic.
pub fn diebold_mariano(loss_diff: &[f64], h: usize) -> Result<TestResult> {
    let n = loss_diff.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!("{n} loss differentials; need >= 10")));
    }
    if h == 0 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    let m = mean(loss_diff);
    let lrv = bartlett_lrv(loss_diff, (h - 1).min(n - 1));
    if !(lrv > 1e-300) {
        if m == 0.0 {
            return Ok(TestResult {
                stat: f64::NAN,
                pvalue: f64::NAN,
                degenerate: true,
            });
        }
        return Ok(TestResult {
            stat: m.signum() * f64::INFINITY,
            pvalue: 0.0,
            degenerate: false,
        });
    }
    let stat = m / (lrv / n as f64).sqrt();
    Ok(TestResult {
        stat,
        pvalue: normal_two_sided_p(stat),
        degenerate: false,
    })
}

/// `S = mean_t ln f(y_t)` where `f` is the location-scale density with
/// location `mu_t`, variance `sigma2_t` and standardized law `dist`.
pub fn predictive_loglik(
    actual: &[f64],
    mu: &[f64],
    sigma2: &[f64],
    dist: &InnovationDist,
) -> Result<f64> {
    same_len(actual, mu)?;
    same_len(actual, sigma2)?;
    if actual.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    let mut s = 0.0;
    for ((y, m), v) in actual.iter().zip(mu).zip(sigma2) {
        if !(*v > 0.0) {
            return Err(Error::InvalidParameter(format!("nonpositive variance {v}")));
        }
        let sd = v.sqrt();
        s += log_pdf(dist, (y - m) / sd) - sd.ln();
    }
    Ok(s / actual.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MzResult {
    pub gamma0: f64,
    pub gamma1: f64,
    /// Newey-West standard errors times `lambda_correction`.
    pub se0: f64,
    pub se1: f64,
    pub lambda_correction: f64,
    /// Wald statistic for `(gamma0, gamma1) = (0, 1)`, chi-square with 2 df.
    pub wald: f64,
    pub wald_pvalue: f64,
}

/// Mincer-Zarnowitz regression `y = gamma0 + gamma1 y_hat + e` by OLS with a
/// Newey-West (Bartlett, `hac_lags`) covariance. With `n_fit`, standard errors
/// are multiplied by `sqrt(1 + n_p / n_fit)`.
pub fn mincer_zarnowitz(
    actual: &[f64],
    predicted: &[f64],
    n_fit: Option<usize>,
    hac_lags: usize,
) -> Result<MzResult> {
    same_len(actual, predicted)?;
    let n = actual.len();
    if n < hac_lags + 2 || n < 3 {
        return Err(Error::InsufficientData(format!("{n} observations for {hac_lags} HAC lags")));
    }
    let xbar = mean(predicted);
    let ybar = mean(actual);
    let sxx: f64 = predicted.iter().map(|x| (x - xbar).powi(2)).sum();
    if !(sxx > 1e-14 * predicted.iter().map(|x| x * x).sum::<f64>().max(1e-300)) {
        return Err(Error::Numerical("collinear predictor in the efficiency regression".into()));
    }
    let sxy: f64 = predicted.iter().zip(actual).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let g1 = sxy / sxx;
    let g0 = ybar - g1 * xbar;
    let u: Vec<f64> = actual.iter().zip(predicted).map(|(y, x)| y - g0 - g1 * x).collect();
    let mut xtx = Matrix2::zeros();
    for x in predicted {
        let v = Vector2::new(1.0, *x);
        xtx += v * v.transpose();
    }
    let score = |t: usize| Vector2::new(u[t], u[t] * predicted[t]);
    let mut s = Matrix2::zeros();
    for t in 0..n {
        let st = score(t);
        s += st * st.transpose();
    }
    for l in 1..=hac_lags {
        let w = 1.0 - l as f64 / (hac_lags as f64 + 1.0);
        let mut gl = Matrix2::zeros();
        for t in l..n {
            gl += score(t) * score(t - l).transpose();
        }
        s += w * (gl + gl.transpose());
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular regressor matrix".into()))?;
    let lam = match n_fit {
        Some(nf) if nf > 0 => (1.0 + n as f64 / nf as f64).sqrt(),
        _ => 1.0,
    };
    let cov = inv * s * inv * (lam * lam);
    let diff = Vector2::new(g0, g1 - 1.0);
    let scale = 1.0 + g0.abs() + g1.abs();
    let wald = match cov.try_inverse() {
        _ if diff.amax() <= 1e-12 * scale => 0.0,
        Some(ci) => (diff.transpose() * ci * diff)[(0, 0)],
        None => f64::NAN,
    };
    Ok(MzResult {
        gamma0: g0,
        gamma1: g1,
        se0: cov[(0, 0)].max(0.0).sqrt(),
        se1: cov[(1, 1)].max(0.0).sqrt(),
        lambda_correction: lam,
        wald,
        wald_pvalue: if wald.is_finite() { chi2_sf(wald.max(0.0), 2.0) } else { f64::NAN },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortmanteauRow {
    pub lag: usize,
    pub df: usize,
    pub bp: f64,
    pub bp_pvalue: f64,
    pub lb: f64,
    pub lb_pvalue: f64,
}

/// Box-Pierce `n sum rho^2` and Ljung-Box `n(n+2) sum rho^2/(n-k)` at each lag,
/// with chi-square p-values on `max(lag - fitted_params, 1)` degrees of freedom.
pub fn portmanteau(series: &[f64], lags: &[usize], fitted_params: usize) -> Result<Vec<PortmanteauRow>> {
    let n = series.len();
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if n <= max_lag {
        return Err(Error::InsufficientData(format!("{n} observations for lag {max_lag}")));
    }
    let g = autocovariances(series, max_lag);
    if !(g[0] > 0.0) {
        return Err(Error::Numerical("constant series has no autocorrelations".into()));
    }
    let nf = n as f64;
    let mut bp_cum = vec![0.0; max_lag + 1];
    let mut lb_cum = vec![0.0; max_lag + 1];
    for k in 1..=max_lag {
        let rho = g[k] / g[0];
        bp_cum[k] = bp_cum[k - 1] + rho * rho;
        lb_cum[k] = lb_cum[k - 1] + rho * rho / (nf - k as f64);
    }
    Ok(lags
        .iter()
        .map(|&lag| {
            let df = lag.saturating_sub(fitted_params).max(1);
            let bp = nf * bp_cum[lag];
            let lb = nf * (nf + 2.0) * lb_cum[lag];
            PortmanteauRow {
                lag,
                df,
                bp,
                bp_pvalue: chi2_sf(bp, df as f64),
                lb,
                lb_pvalue: chi2_sf(lb, df as f64),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpgramResult {
    /// Largest distance between the normalized cumulative periodogram and the diagonal.
    pub stat: f64,
    /// 5% critical value.
    pub critical: f64,
    pub pvalue: f64,
    pub reject: bool,
    pub degenerate: bool,
}

/// Cumulative periodogram white-noise test over the Fourier frequencies
/// `2 pi j / n`, `j = 1..floor((n-1)/2)`, of the demeaned series.
pub fn cumulative_periodogram(series: &[f64]) -> Result<CpgramResult> {
    let n = series.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!("{n} observations; need >= 16")));
    }
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|v| v - m).collect();
    let pg = crate::acov_spectral::periodogram(&centered)?;
    let k = (n - 1) / 2;
    let ords: Vec<f64> = pg[1..=k].iter().map(|(_, p)| *p).collect();
    let total: f64 = ords.iter().sum();
    if !(total > 0.0) {
        return Ok(CpgramResult {
            stat: f64::NAN,
            critical: f64::NAN,
            pvalue: f64::NAN,
            reject: false,
            degenerate: true,
        });
    }
    // Y_1..Y_{k-1} behave like ordered U(0, 1) draws under white noise.
    let q = (k - 1).max(1) as f64;
    let mut cum = 0.0;
    let mut stat = 0.0f64;
    for (j, p) in ords.iter().enumerate().take(k - 1) {
        cum += p;
        let y = cum / total;
        stat = stat.max((j + 1) as f64 / q - y).max(y - j as f64 / q);
    }
    let sq = q.sqrt();
    let critical = 1.358 / (sq + 0.12 + 0.11 / sq);
    Ok(CpgramResult {
        stat,
        critical,
        pvalue: kolmogorov_sf((sq + 0.12 + 0.11 / sq) * stat),
        reject: stat > critical,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitRow {
    pub nu: f64,
    pub ks_stat: f64,
    pub pvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitTable {
    pub rows: Vec<PitRow>,
    pub degenerate: bool,
}

/// Probability integral transforms `u_t = F_nu(x_t / sigma_t)`.
pub fn pit(x: &[f64], sigma2: &[f64], dist: &InnovationDist) -> Result<Vec<f64>> {
    same_len(x, sigma2)?;
    x.iter()
        .zip(sigma2)
        .map(|(xt, v)| {
            if *v > 0.0 {
                Ok(cdf(dist, xt / v.sqrt()))
            } else {
                Err(Error::InvalidParameter(format!("nonpositive variance {v}")))
            }
        })
        .collect()
}

/// Kolmogorov-Smirnov uniformity tests of the GED(nu) transforms for each `nu`.
pub fn density_transform_test(x: &[f64], sigma2: &[f64], nu_grid: &[f64]) -> Result<PitTable> {
    same_len(x, sigma2)?;
    if x.is_empty() {
        return Err(Error::InsufficientData("no residuals".into()));
    }
    let degenerate = x.iter().all(|v| *v == x[0]);
    let mut rows = Vec::with_capacity(nu_grid.len());
    for &nu in nu_grid {
        let dist = if nu == 2.0 {
            InnovationDist::Gaussian
        } else {
            InnovationDist::Ged { nu }
        };
        if !dist.is_valid() {
            return Err(Error::Domain {
                name: "nu",
                value: nu,
                domain: "nu > 1",
            });
        }
        let (ks_stat, pvalue) = if degenerate {
            (f64::NAN, f64::NAN)
        } else {
            ks_uniform(&pit(x, sigma2, &dist)?)
        };
        rows.push(PitRow { nu, ks_stat, pvalue });
    }
    Ok(PitTable { rows, degenerate })
}

/// Daily aggregates of intraday returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedSeries {
    pub daily_returns: Vec<f64>,
    /// `v_t = sum_k (r_{t,k} - rbar_t)^2`.
    pub daily_vol: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RealizedSeries {
    /// `v_{t-1}[h] = sum_{j<h} v_{t+j}` for every complete window.
    pub fn vol_window(&self, h: usize) -> Vec<f64> {
        window_sums(&self.daily_vol, h)
    }

    /// `r_{t-1}[h] = sum_{j<h} r_{t+j}` for every complete window.
    pub fn return_window(&self, h: usize) -> Vec<f64> {
        window_sums(&self.daily_returns, h)
    }
}

fn window_sums(v: &[f64], h: usize) -> Vec<f64> {
    if h == 0 || h > v.len() {
        return Vec::new();
    }
    v.windows(h).map(|w| w.iter().sum()).collect()
}

/// Splits `intraday` into consecutive days of `day_counts[t]` returns.
pub fn realized_volatility(intraday: &[f64], day_counts: &[usize]) -> Result<RealizedSeries> {
    if day_counts.iter().sum::<usize>() != intraday.len() {
        return Err(Error::InvalidParameter(format!(
            "day counts sum to {} but there are {} returns",
            day_counts.iter().sum::<usize>(),
            intraday.len()
        )));
    }
    let mut daily_returns = Vec::with_capacity(day_counts.len());
    let mut daily_vol = Vec::with_capacity(day_counts.len());
    let mut start = 0;
    for (t, &m) in day_counts.iter().enumerate() {
        if m == 0 {
            return Err(Error::InvalidParameter(format!("day {} is empty", t + 1)));
        }
        let day = &intraday[start..start + m];
        let rbar = mean(day);
        daily_returns.push(day.iter().sum());
        daily_vol.push(day.iter().map(|r| (r - rbar).powi(2)).sum());
        start += m;
    }
    Ok(RealizedSeries {
        daily_returns,
        daily_vol,
        counts: day_counts.to_vec(),
    })
}

/// Density forecast accompanying point forecasts: location, variance and law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityForecast {
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub dist: InnovationDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Competing forecasts for the Diebold-Mariano test; `None` compares with the zero forecast.
    pub benchmark: Option<Vec<f64>>,
    pub horizon: usize,
    /// Estimation sample size for the Mincer-Zarnowitz correction.
    pub n_fit: Option<usize>,
    pub hac_lags: usize,
    /// Portmanteau lags applied to the forecast errors.
    pub lags: Vec<usize>,
    pub fitted_params: usize,
    pub density: Option<DensityForecast>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            benchmark: None,
            horizon: 1,
            n_fit: None,
            hac_lags: 0,
            lags: vec![5, 10, 20],
            fitted_params: 0,
            density: None,
        }
    }
}

/// Combined evaluation of one forecast series. Tests that do not apply to the
/// input (too short, constant, collinear) are reported as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub errors: ErrorMeasures,
    pub dm: Option<TestResult>,
    pub mz: Option<MzResult>,
    /// Normalized predictive log-likelihood `S(M)`.
    pub predictive_loglik: Option<f64>,
    pub portmanteau: Vec<PortmanteauRow>,
    pub cpgram: Option<CpgramResult>,
    /// Kolmogorov-Smirnov uniformity of the probability integral transforms.
    pub ks_pit: Option<PitRow>,
}

/// Runs every applicable measure on `actual` against `predicted`.
pub fn evaluate(actual: &[f64], predicted: &[f64], opts: &EvalOptions) -> Result<EvalReport> {
    let errors = error_measures(actual, predicted)?;
    let zeros;
    let bench = match &opts.benchmark {
        Some(b) => b.as_slice(),
        None => {
            zeros = vec![0.0; actual.len()];
            &zeros
        }
    };
    let diff = abs_loss_diff(actual, predicted, bench)?;
    let dm = diebold_mariano(&diff, opts.horizon.max(1)).ok();
    let mz = mincer_zarnowitz(actual, predicted, opts.n_fit, opts.hac_lags).ok();
    let e: Vec<f64> = actual.iter().zip(predicted).map(|(y, p)| y - p).collect();
    let portmanteau = portmanteau(&e, &opts.lags, opts.fitted_params).unwrap_or_default();
    let cpgram = cumulative_periodogram(&e).ok().filter(|c| !c.degenerate);
    let (predictive, ks_pit) = match &opts.density {
        Some(df) => {
            let s = predictive_loglik(actual, &df.mu, &df.sigma2, &df.dist)?;
            let x: Vec<f64> = actual.iter().zip(&df.mu).map(|(y, m)| y - m).collect();
            let (ks_stat, pvalue) = ks_uniform(&pit(&x, &df.sigma2, &df.dist)?);
            (
                Some(s),
                Some(PitRow {
                    nu: df.dist.nu(),
                    ks_stat,
                    pvalue,
                }),
            )
        }
        None => (None, None),
    };
    Ok(EvalReport {
        n: actual.len(),
        errors,
        dm,
        mz,
        predictive_loglik: predictive,
        portmanteau,
        cpgram,
        ks_pit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_error_measures() {
        let e = error_measures(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert_eq!((e.mae, e.mpe, e.max_ae), (1.0, Some(1.0), 1.0));
        let e = error_measures(&[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(e.mpe, None);
        assert_eq!(e.mpe_skipped, 2);
    }

    #[test]
    fn dm_degenerate_and_constant() {
        let z = vec![0.0; 20];
        assert!(diebold_mariano(&z, 1).unwrap().degenerate);
        let o = vec![1.0; 20];
        let r = diebold_mariano(&o, 3).unwrap();
        assert_eq!(r.stat, f64::INFINITY);
        assert_eq!(r.pvalue, 0.0);
    }

    #[test]
    fn realized_single_day() {
        let rs = realized_volatility(&[1.0, -1.0], &[2]).unwrap();
        assert_eq!(rs.daily_vol, vec![2.0]);
        assert_eq!(rs.daily_returns, vec![0.0]);
    }
}
