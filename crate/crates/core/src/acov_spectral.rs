//! Closed-form second-order theory.
//!
//! ```text
//! gamma_A(h)           = sum_i f_i f_{i+|h|},               f = alpha/beta
//! gamma_V(s h)         = sigma_g^2 Gamma(1-2d)/(Gamma(1-d)Gamma(d)) Gamma(h+d)/Gamma(h+1-d)
//! gamma_lnsigma2(sh+r) = sum_k gamma_A(s k + r) gamma_V(s(h - k))
//! gamma_lnX2(h)        = gamma_lnsigma2(h) + C_1 lambda_{|h|-1} [h != 0] + Var(ln Z^2) [h = 0]
//! f_lnsigma2(w)        = sigma_g^2/(2 pi) |Lambda(w)|^2,   Lambda(w) = lambda(e^{-iw})
//! f_lnX2(w)            = f_lnsigma2(w) + C_1/pi Re(e^{-iw} Lambda(w)) + Var(ln Z^2)/(2 pi)
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::coeffs::lambda_coeffs;
use crate::innovations::{abs_moment, g_mgf, InnovationMoments};
use crate::model::SfiegarchSpec;
use crate::numeric::conv::convolve;
use crate::numeric::poly;
use crate::numeric::quadrature::{integrate, QuadOptions};
use crate::{Error, Result};

/// Number of lambda coefficients used in the infinite products before tail extrapolation.
pub const MOMENT_TRUNCATION: usize = 1 << 16;
const MAX_ARMA_LEN: usize = 2_000_000;

fn require_existence(spec: &SfiegarchSpec) -> Result<()> {
    if !(spec.d < 0.5) {
        return Err(Error::Domain {
            name: "d",
            value: spec.d,
            domain: "d < 0.5",
        });
    }
    Ok(())
}

/// `f_k` of `alpha(z)/beta(z)`, long enough that the dropped tail is below double precision.
fn arma_f(spec: &SfiegarchSpec) -> Result<Vec<f64>> {
    let a = spec.alpha_poly();
    let b = spec.beta_poly();
    if spec.beta.iter().all(|v| *v == 0.0) {
        return Ok(a);
    }
    let rho = poly::min_root_modulus(&b);
    if rho <= crate::model::ROOT_MARGIN {
        return Err(Error::NonInvertible {
            which: "beta",
            modulus: rho,
        });
    }
    let len = (a.len() + b.len() + (60.0 / rho.ln()).ceil() as usize + 50).min(MAX_ARMA_LEN);
    let mut f = poly::series_div(&a, &b, len);
    let peak = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while f.len() > 1 && f[f.len() - 1].abs() < 1e-18 * peak {
        f.pop();
    }
    Ok(f)
}

/// `gamma_A(0..=L)`; zero beyond the returned length.
fn arma_acov_table(spec: &SfiegarchSpec) -> Result<Vec<f64>> {
    let f = arma_f(spec)?;
    let rev: Vec<f64> = f.iter().rev().copied().collect();
    let full = convolve(&f, &rev);
    Ok(full[f.len() - 1..].to_vec())
}

/// `gamma_V(s j)` for `j = 0..=jmax` by the ratio recursion
/// `gamma_V(s j) = gamma_V(s (j-1)) (j - 1 + d) / (j - d)`.
fn seasonal_table(d: f64, sigma_g_sq: f64, jmax: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(jmax + 1);
    v.push(sigma_g_sq * (ln_gamma(1.0 - 2.0 * d) - 2.0 * ln_gamma(1.0 - d)).exp());
    for j in 1..=jmax {
        let jf = j as f64;
        let prev = v[j - 1];
        v.push(prev * (jf - 1.0 + d) / (jf - d));
    }
    v
}

/// `gamma_A(h)`, the autocovariance of the ARMA filter `alpha/beta` of unit white noise.
pub fn gamma_arma(spec: &SfiegarchSpec, h: i64) -> Result<f64> {
    let t = arma_acov_table(spec)?;
    Ok(t.get(h.unsigned_abs() as usize).copied().unwrap_or(0.0))
}

/// `gamma_V(h)`; zero unless `s` divides `h`.
pub fn gamma_seasonal(spec: &SfiegarchSpec, h: i64) -> Result<f64> {
    require_existence(spec)?;
    let h = h.unsigned_abs() as usize;
    if !h.is_multiple_of(spec.s) {
        return Ok(0.0);
    }
    let sg = InnovationMoments::compute(&spec.innovation, spec.theta, spec.gamma_mag)?.sigma_g_sq;
    let j = h / spec.s;
    if j > 100_000 {
        // Direct log-gamma form avoids a long recursion.
        let d = spec.d;
        let c = sg * gamma(1.0 - 2.0 * d) / (gamma(1.0 - d) * gamma(d));
        let jf = j as f64;
        return Ok(c * (ln_gamma(jf + d) - ln_gamma(jf + 1.0 - d)).exp());
    }
    Ok(seasonal_table(spec.d, sg, j)[j])
}

/// Shared tables for repeated autocovariance evaluations of one spec.
#[derive(Debug, Clone)]
pub struct SecondOrder {
    pub spec: SfiegarchSpec,
    pub moments: InnovationMoments,
    gamma_a: Vec<f64>,
    gamma_v: Vec<f64>,
    lambda: Vec<f64>,
}

impl SecondOrder {
    /// Prepares tables covering lags `0..=max_lag`.
    pub fn new(spec: &SfiegarchSpec, max_lag: usize) -> Result<Self> {
        require_existence(spec)?;
        if spec.s == 0 {
            return Err(Error::InvalidParameter("season length s must be >= 1".into()));
        }
        let moments = InnovationMoments::compute(&spec.innovation, spec.theta, spec.gamma_mag)?;
        let gamma_a = arma_acov_table(spec)?;
        let jmax = (max_lag + gamma_a.len()) / spec.s + 2;
        let gamma_v = seasonal_table(spec.d, moments.sigma_g_sq, jmax);
        let lambda = lambda_coeffs(spec, max_lag.max(1))?;
        Ok(Self {
            spec: spec.clone(),
            moments,
            gamma_a,
            gamma_v,
            lambda,
        })
    }

    pub fn gamma_arma(&self, h: i64) -> f64 {
        self.gamma_a.get(h.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    pub fn gamma_seasonal(&self, h: i64) -> f64 {
        let h = h.unsigned_abs() as usize;
        if !h.is_multiple_of(self.spec.s) {
            return 0.0;
        }
        self.gamma_v[h / self.spec.s]
    }

    pub fn gamma_ln_sigma2(&self, h: i64) -> f64 {
        let s = self.spec.s as i64;
        let h = h.abs();
        let hq = h.div_euclid(s);
        let r = h.rem_euclid(s);
        let l = self.gamma_a.len() as i64 - 1;
        let kmin = (-l - r).div_euclid(s) - 1;
        let kmax = (l - r).div_euclid(s) + 1;
        let mut acc = 0.0;
        for k in kmin..=kmax {
            let a = self.gamma_arma(s * k + r);
            if a == 0.0 {
                continue;
            }
            let j = (hq - k).unsigned_abs() as usize;
            acc += a * self.gamma_v[j];
        }
        acc
    }

    pub fn gamma_ln_x2(&self, h: i64) -> f64 {
        let base = self.gamma_ln_sigma2(h);
        let ha = h.unsigned_abs() as usize;
        if ha == 0 {
            base + self.moments.ln_sq_var
        } else {
            base + self.moments.c1 * self.lambda[ha - 1]
        }
    }
}

pub fn gamma_ln_sigma2(spec: &SfiegarchSpec, h: i64) -> Result<f64> {
    Ok(SecondOrder::new(spec, h.unsigned_abs() as usize)?.gamma_ln_sigma2(h))
}

pub fn gamma_ln_x2(spec: &SfiegarchSpec, h: i64) -> Result<f64> {
    Ok(SecondOrder::new(spec, h.unsigned_abs() as usize)?.gamma_ln_x2(h))
}

/// `gamma_lnX2(h)` with the MA(infinity) representation truncated after `m` lambda
/// coefficients: `sigma_g^2 sum_{k=0}^{m-|h|} lambda_k lambda_{k+|h|}` plus the
/// `C_1` and `Var(ln Z^2)` terms.
pub fn gamma_ln_x2_truncated(spec: &SfiegarchSpec, h: i64, m: usize) -> Result<f64> {
    require_existence(spec)?;
    let mo = InnovationMoments::compute(&spec.innovation, spec.theta, spec.gamma_mag)?;
    let lambda = lambda_coeffs(spec, m)?;
    let ha = h.unsigned_abs() as usize;
    let cross: f64 = if ha <= m {
        lambda[..=m - ha].iter().zip(&lambda[ha..]).map(|(a, b)| a * b).sum()
    } else {
        0.0
    };
    let extra = if ha == 0 {
        mo.ln_sq_var
    } else if ha - 1 <= m {
        mo.c1 * lambda[ha - 1]
    } else {
        0.0
    };
    Ok(mo.sigma_g_sq * cross + extra)
}

/// Leading-order decay of `sum_{r<s} gamma_lnX2(s h + r) ~ constant h^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayLaw {
    pub exponent: f64,
    pub constant: f64,
}

/// For `d > 0` the seasonal-fractional part dominates:
/// `sigma_g^2 Gamma(1-2d)/(Gamma(1-d)Gamma(d)) (sum_k gamma_A(k)) h^{2d-1}`.
/// For `d < 0` the `C_1` term dominates: `C_1 alpha(1)/(beta(1) Gamma(d)) h^{d-1}`.
pub fn decay_law(spec: &SfiegarchSpec) -> Result<Option<DecayLaw>> {
    require_existence(spec)?;
    let d = spec.d;
    if d == 0.0 {
        return Ok(None);
    }
    let mo = InnovationMoments::compute(&spec.innovation, spec.theta, spec.gamma_mag)?;
    let ratio = spec.arma_ratio_at_one();
    if d > 0.0 {
        let c = mo.sigma_g_sq * gamma(1.0 - 2.0 * d) / (gamma(1.0 - d) * gamma(d));
        Ok(Some(DecayLaw {
            exponent: 2.0 * d - 1.0,
            constant: c * ratio * ratio,
        }))
    } else {
        Ok(Some(DecayLaw {
            exponent: d - 1.0,
            constant: mo.c1 * ratio / gamma(d),
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcovReport {
    pub gamma_a: Vec<f64>,
    pub gamma_v: Vec<f64>,
    pub gamma_ln_sigma2: Vec<f64>,
    pub gamma_ln_x2: Vec<f64>,
    pub max_lag: usize,
    /// `(sum_k gamma_A(k), alpha(1)/beta(1))`, the limits of the finite-lag constants.
    pub tail_params: (f64, f64),
    pub decay: Option<DecayLaw>,
}

/// Autocovariances at lags `0..=max_lag`.
pub fn acov_report(spec: &SfiegarchSpec, max_lag: usize) -> Result<AcovReport> {
    let so = SecondOrder::new(spec, max_lag)?;
    let lags = 0..=max_lag as i64;
    let ratio = spec.arma_ratio_at_one();
    Ok(AcovReport {
        gamma_a: lags.clone().map(|h| so.gamma_arma(h)).collect(),
        gamma_v: lags.clone().map(|h| so.gamma_seasonal(h)).collect(),
        gamma_ln_sigma2: lags.clone().map(|h| so.gamma_ln_sigma2(h)).collect(),
        gamma_ln_x2: lags.map(|h| so.gamma_ln_x2(h)).collect(),
        max_lag,
        tail_params: (ratio * ratio, ratio),
        decay: decay_law(spec)?,
    })
}

/// Evaluator for `ln E exp(b g(Z))` over scaled lambda coefficients.
fn log_mgf(spec: &SfiegarchSpec, b: f64) -> Result<f64> {
    let v = g_mgf(&spec.innovation, b, spec.theta, spec.gamma_mag)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Divergent(format!("E exp(b g(Z)) not finite at b = {b}")));
    }
    Ok(v.ln())
}

/// `sum_{k >= from} ln E exp(scale lambda_k g(Z))` over the supplied coefficients.
///
/// With `extrapolate`, the remainder beyond `lambda.len()` is added by geometric
/// extrapolation of the sums over the last two dyadic blocks, which is exact for
/// terms decaying as a power of `k`. Growing block sums signal divergence.
pub fn log_mgf_sum(
    spec: &SfiegarchSpec,
    scale: f64,
    lambda: &[f64],
    from: usize,
    extrapolate: bool,
) -> Result<f64> {
    let n = lambda.len();
    let mut total = 0.0;
    let mut terms = vec![0.0; n];
    for k in from..n {
        let b = scale * lambda[k];
        terms[k] = if b == 0.0 { 0.0 } else { log_mgf(spec, b)? };
        total += terms[k];
    }
    if !extrapolate || n < 64 {
        return Ok(total);
    }
    let q = n / 4;
    let h = n / 2;
    if from > q {
        return Ok(total);
    }
    let s1: f64 = terms[q..h].iter().sum();
    let s2: f64 = terms[h..].iter().sum();
    if s2 <= 1e-300 {
        return Ok(total);
    }
    let rho = s2 / s1;
    if !(rho < 1.0) {
        return Err(Error::Divergent(
            "log-moment partial sums are not Cauchy at the truncation point".into(),
        ));
    }
    Ok(total + s2 * rho / (1.0 - rho))
}

fn moment_lambda(spec: &SfiegarchSpec) -> Result<Vec<f64>> {
    lambda_coeffs(spec, MOMENT_TRUNCATION - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnconditionalMoment {
    /// `E|X_t|^r`.
    pub abs_x: f64,
    /// `E sigma_t^r`.
    pub sigma: f64,
}

/// `E sigma^r = e^{r omega/2} prod_k E exp((r/2) lambda_k g(Z))` and `E|X|^r = E sigma^r E|Z|^r`.
pub fn unconditional_moment(spec: &SfiegarchSpec, r: f64) -> Result<UnconditionalMoment> {
    require_existence(spec)?;
    let lambda = moment_lambda(spec)?;
    let ls = log_mgf_sum(spec, 0.5 * r, &lambda, 0, true)?;
    let sigma = (0.5 * r * spec.omega + ls).exp();
    if !sigma.is_finite() {
        return Err(Error::Divergent(format!("moment of order {r} is infinite")));
    }
    Ok(UnconditionalMoment {
        abs_x: sigma * abs_moment(&spec.innovation, r)?,
        sigma,
    })
}

/// `(K_X, A_X)` with
/// `K_X = E Z^4 prod E e^{2 lambda g} / prod (E e^{lambda g})^2` and
/// `A_X = E Z^3 prod E e^{1.5 lambda g} / prod (E e^{lambda g})^{1.5}`.
pub fn kurtosis_asymmetry(spec: &SfiegarchSpec) -> Result<(f64, f64)> {
    require_existence(spec)?;
    let lambda = moment_lambda(spec)?;
    let l1 = log_mgf_sum(spec, 1.0, &lambda, 0, true)?;
    let l2 = log_mgf_sum(spec, 2.0, &lambda, 0, true)?;
    let z4 = abs_moment(&spec.innovation, 4.0)?;
    let k = z4 * (l2 - 2.0 * l1).exp();
    if !k.is_finite() {
        return Err(Error::Divergent("fourth moment is infinite".into()));
    }
    // Both supported laws are symmetric, so E Z^3 = 0.
    Ok((k, 0.0))
}

/// Spectral density value; `pole` marks the `+inf` sentinel at a seasonal frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralValue {
    pub value: f64,
    pub pole: bool,
}

/// Seasonal frequencies `2 pi k / s` in `[0, pi]`.
pub fn seasonal_poles(s: usize) -> Vec<f64> {
    (0..=s / 2).map(|k| 2.0 * PI * k as f64 / s as f64).collect()
}

/// Spectral densities of `ln sigma_t^2` and `ln X_t^2`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub spec: SfiegarchSpec,
    pub moments: InnovationMoments,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Spectrum {
    pub fn new(spec: &SfiegarchSpec) -> Result<Self> {
        require_existence(spec)?;
        if spec.s == 0 {
            return Err(Error::InvalidParameter("season length s must be >= 1".into()));
        }
        let moments = InnovationMoments::compute(&spec.innovation, spec.theta, spec.gamma_mag)?;
        Ok(Self {
            spec: spec.clone(),
            moments,
            a: spec.alpha_poly(),
            b: spec.beta_poly(),
        })
    }

    /// `Lambda(w)` given `w` and the seasonal phase `phi = s w` reduced to `(-pi, pi]`.
    /// `None` at a pole with `d > 0`.
    fn transfer(&self, w: f64, phi: f64) -> Option<Complex64> {
        let e = Complex64::from_polar(1.0, -w);
        let ratio = poly::eval_complex(&self.a, e) / poly::eval_complex(&self.b, e);
        let d = self.spec.d;
        let frac = if phi == 0.0 {
            if d > 0.0 {
                return None;
            } else if d == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else {
            let modulus = 2.0 * (0.5 * phi.abs()).sin();
            let arg = phi.signum() * 0.5 * (PI - phi.abs());
            Complex64::from_polar(modulus.powf(-d), -d * arg)
        };
        Some(ratio * frac)
    }

    fn phase(&self, w: f64) -> f64 {
        let p = (self.spec.s as f64 * w + PI).rem_euclid(2.0 * PI) - PI;
        if p == -PI {
            PI
        } else {
            p
        }
    }

    /// `Lambda(w) = lambda(e^{-iw})` in closed form.
    pub fn lambda_transfer(&self, w: f64) -> Option<Complex64> {
        self.transfer(w, self.phase(w))
    }

    fn ln_sigma2_parts(&self, w: f64, phi: f64) -> f64 {
        match self.transfer(w, phi) {
            Some(l) => self.moments.sigma_g_sq / (2.0 * PI) * l.norm_sqr(),
            None => f64::INFINITY,
        }
    }

    fn ln_x2_parts(&self, w: f64, phi: f64) -> f64 {
        match self.transfer(w, phi) {
            Some(l) => {
                let e = Complex64::from_polar(1.0, -w);
                self.moments.sigma_g_sq / (2.0 * PI) * l.norm_sqr()
                    + self.moments.c1 / PI * (e * l).re
                    + self.moments.ln_sq_var / (2.0 * PI)
            }
            None => f64::INFINITY,
        }
    }

    pub fn ln_sigma2(&self, w: f64) -> SpectralValue {
        let v = self.ln_sigma2_parts(w, self.phase(w));
        SpectralValue {
            value: v,
            pole: v.is_infinite(),
        }
    }

    pub fn ln_x2(&self, w: f64) -> SpectralValue {
        let v = self.ln_x2_parts(w, self.phase(w));
        SpectralValue {
            value: v,
            pole: v.is_infinite(),
        }
    }

    /// `int_{-pi}^{pi}` of the density of `ln X^2` (or of `ln sigma^2` when `ln_x2` is false).
    ///
    /// Integrates outward from each seasonal pole; near a pole the substitution
    /// `x = L t^{1/(1-2d)}` removes the `|x|^{-2d}` singularity.
    pub fn integral(&self, ln_x2: bool) -> f64 {
        let s = self.spec.s as f64;
        let d = self.spec.d;
        let kappa = if d > 0.0 { 1.0 / (1.0 - 2.0 * d) } else { 1.0 };
        let half = PI / s;
        let opts = QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-11,
            max_intervals: 20_000,
        };
        let eval = |w: f64, phi: f64| {
            if ln_x2 {
                self.ln_x2_parts(w, phi)
            } else {
                self.ln_sigma2_parts(w, phi)
            }
        };
        let mut total = 0.0;
        for p in seasonal_poles(self.spec.s) {
            for dir in [-1.0f64, 1.0] {
                let len = if dir < 0.0 { half.min(p) } else { half.min(PI - p) };
                if len <= 0.0 {
                    continue;
                }
                let q = integrate(
                    |t: f64| {
                        if t <= 0.0 {
                            return 0.0;
                        }
                        let x = len * t.powf(kappa);
                        let jac = len * kappa * t.powf(kappa - 1.0);
                        eval(p + dir * x, dir * s * x) * jac
                    },
                    0.0,
                    1.0,
                    opts,
                );
                total += q.value;
            }
        }
        2.0 * total
    }
}

pub fn spectral_ln_sigma2(spec: &SfiegarchSpec, freq: f64) -> Result<SpectralValue> {
    Ok(Spectrum::new(spec)?.ln_sigma2(freq))
}

pub fn spectral_ln_x2(spec: &SfiegarchSpec, freq: f64) -> Result<SpectralValue> {
    Ok(Spectrum::new(spec)?.ln_x2(freq))
}

/// `I(w_j) = |sum_t x_t e^{-i w_j t}|^2 / (2 pi n)` at `w_j = 2 pi j / n`, `j = 0..=n/2`.
pub fn periodogram(series: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InsufficientData("periodogram needs at least 2 points".into()));
    }
    let mut buf: Vec<Complex64> = series.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let norm = 2.0 * PI * n as f64;
    Ok((0..=n / 2)
        .map(|j| (2.0 * PI * j as f64 / n as f64, buf[j].norm_sqr() / norm))
        .collect())
}
