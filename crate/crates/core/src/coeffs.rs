//! Power-series coefficient families.
//!
//! ```text
//! (1 - z^s)^{-d}                  = sum_k pi_k z^k     (nonzero only at k = s j)
//! alpha(z) / beta(z)              = sum_k f_k z^k
//! beta(z) (1 - z^s)^{d}           = sum_k tau_k z^k
//! alpha(z)/beta(z) (1 - z^s)^{-d} = sum_k lambda_k z^k
//! beta(z)/alpha(z) (1 - z^s)^{d}  = sum_k lambda_inv_k z^k
//! ```

use statrs::function::gamma::gamma;

use crate::model::{ArmaSpec, SfiegarchSpec, RESULTANT_TOL, ROOT_MARGIN};
use crate::numeric::poly;
use crate::{Error, Result};

/// Lower limit on the default truncation order.
pub const MIN_TRUNCATION: usize = 5000;
/// Upper limit on the default truncation order.
pub const MAX_TRUNCATION: usize = 1_000_000;
/// Tolerance used when sizing the default truncation order.
pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-3;

/// Coefficients of `(1 - z)^{-d}` through index `m`, by the ratio recursion
/// `c_{j+1} = c_j (j + d) / (j + 1)`.
pub fn frac_coeffs(d: f64, m: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(m + 1);
    c.push(1.0);
    for j in 0..m {
        let next = c[j] * (j as f64 + d) / (j as f64 + 1.0);
        c.push(next);
    }
    c
}

/// Coefficients `pi_0..pi_m` of `(1 - z^s)^{-d}`.
pub fn seasonal_pi(d: f64, s: usize, m: usize) -> Result<Vec<f64>> {
    if !d.is_finite() {
        return Err(Error::InvalidParameter(format!("d must be finite, got {d}")));
    }
    if s == 0 {
        return Err(Error::InvalidParameter("season length s must be >= 1".into()));
    }
    let base = frac_coeffs(d, m / s);
    let mut out = vec![0.0; m + 1];
    for (j, v) in base.into_iter().enumerate() {
        out[j * s] = v;
    }
    Ok(out)
}

fn check_denominator(which: &'static str, c: &[f64]) -> Result<()> {
    let modulus = poly::min_root_modulus(c);
    if modulus <= ROOT_MARGIN {
        return Err(Error::NonInvertible { which, modulus });
    }
    Ok(())
}

/// Coefficients `f_0..f_m` of `num(z) / den(z)` for full coefficient vectors
/// (constant term first). Rejects unstable denominators and shared roots.
pub fn arma_ratio_coeffs(num: &[f64], den: &[f64], m: usize) -> Result<Vec<f64>> {
    if den.is_empty() || den[0] == 0.0 {
        return Err(Error::InvalidParameter("denominator must have a nonzero constant term".into()));
    }
    if num.is_empty() {
        return Ok(vec![0.0; m + 1]);
    }
    check_denominator("beta", den)?;
    let resultant = poly::resultant(num, den);
    if resultant.abs() < RESULTANT_TOL {
        return Err(Error::CommonRoot { resultant });
    }
    Ok(poly::series_div(num, den, m))
}

fn check_spec_domain(spec: &SfiegarchSpec) -> Result<()> {
    if !spec.d.is_finite() || spec.alpha.iter().chain(&spec.beta).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite coefficient".into()));
    }
    if spec.s == 0 {
        return Err(Error::InvalidParameter("season length s must be >= 1".into()));
    }
    check_denominator("beta", &spec.beta_poly())
}

/// `tau_0..tau_m` of `beta(z) (1 - z^s)^d`.
pub fn tau_coeffs(spec: &SfiegarchSpec, m: usize) -> Result<Vec<f64>> {
    check_spec_domain(spec)?;
    let delta = seasonal_pi(-spec.d, spec.s, m)?;
    Ok(poly::mul_trunc(&spec.beta_poly(), &delta, m))
}

/// `lambda_0..lambda_m` by the coefficient recurrence
/// `lambda_k = a_k - sum_{i<k} lambda_i tau_{k-i}`, with `a` the coefficients
/// of `alpha(z)` and `tau` those of `beta(z)(1 - z^s)^d`.
///
/// Cost is quadratic in `m`; [`lambda_coeffs`] is the linear-time equivalent.
pub fn lambda_recurrence(spec: &SfiegarchSpec, m: usize) -> Result<Vec<f64>> {
    let tau = tau_coeffs(spec, m)?;
    let a = spec.alpha_poly();
    let nz: Vec<(usize, f64)> = tau
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect();
    let mut lambda = vec![0.0; m + 1];
    for k in 0..=m {
        let mut acc = a.get(k).copied().unwrap_or(0.0);
        for &(o, t) in &nz {
            if o > k {
                break;
            }
            acc -= t * lambda[k - o];
        }
        lambda[k] = acc;
    }
    Ok(lambda)
}

/// `lambda_0..lambda_m` as `alpha(z) pi(z)` divided by `beta(z)`, linear in `m`.
pub fn lambda_coeffs(spec: &SfiegarchSpec, m: usize) -> Result<Vec<f64>> {
    check_spec_domain(spec)?;
    let pi = seasonal_pi(spec.d, spec.s, m)?;
    let num = poly::mul_trunc(&spec.alpha_poly(), &pi, m);
    Ok(poly::series_div(&num, &spec.beta_poly(), m))
}

/// Closed-form large-index approximation
/// `lambda_K ~ s^{1-d} / (Gamma(d) K^{1-d}) * alpha(1)/beta(1)` at `K = s k + r`.
pub fn lambda_asymptotic(spec: &SfiegarchSpec, k: usize, r: usize) -> Result<f64> {
    if !(spec.d < 0.5) {
        return Err(Error::Domain {
            name: "d",
            value: spec.d,
            domain: "d < 0.5",
        });
    }
    if k == 0 || r >= spec.s {
        return Err(Error::InvalidParameter("need k >= 1 and 0 <= r < s".into()));
    }
    let ratio = spec.arma_ratio_at_one();
    if ratio == 0.0 || spec.d == 0.0 {
        return Ok(0.0);
    }
    let big_k = (spec.s * k + r) as f64;
    let s = spec.s as f64;
    Ok(s.powf(1.0 - spec.d) / (gamma(spec.d) * big_k.powf(1.0 - spec.d)) * ratio)
}

/// Index beyond which `|lambda_k| < eps` according to the asymptotic form:
/// `s [ |alpha(1)/beta(1)| / (|Gamma(d)| eps) ]^{1/(1-d)}`.
pub fn truncation_bound(spec: &SfiegarchSpec, eps: f64) -> f64 {
    let ratio = spec.arma_ratio_at_one().abs();
    if spec.d == 0.0 || ratio == 0.0 {
        return 0.0;
    }
    let g = gamma(spec.d).abs();
    spec.s as f64 * (ratio / (g * eps)).powf(1.0 / (1.0 - spec.d))
}

/// `max(5000, bound)` with the bound at [`DEFAULT_TRUNCATION_EPS`] capped at `10^6`.
pub fn default_truncation(spec: &SfiegarchSpec) -> usize {
    let b = truncation_bound(spec, DEFAULT_TRUNCATION_EPS);
    let capped = if b.is_finite() {
        b.min(MAX_TRUNCATION as f64).ceil() as usize
    } else {
        MAX_TRUNCATION
    };
    capped.max(MIN_TRUNCATION)
}

/// Coefficients of `beta(z)/alpha(z) (1 - z^s)^d`, the AR(infinity) weights
/// of the log-variance filter.
pub fn inverse_lambda(spec: &SfiegarchSpec, m: usize) -> Result<Vec<f64>> {
    if !(spec.d > -1.0 && spec.d < 0.5) {
        return Err(Error::Domain {
            name: "d",
            value: spec.d,
            domain: "(-1, 0.5) for invertibility",
        });
    }
    check_spec_domain(spec)?;
    let a = spec.alpha_poly();
    check_denominator("alpha", &a)?;
    let delta = seasonal_pi(-spec.d, spec.s, m)?;
    let num = poly::mul_trunc(&spec.beta_poly(), &delta, m);
    Ok(poly::series_div(&num, &a, m))
}

/// MA(infinity) weights `psi_0..psi_m` of the mean equation,
/// `(1 + sum vphi_j z^j) / (1 - sum phi_k z^k)`.
pub fn arma_psi_weights(arma: &ArmaSpec, m: usize) -> Result<Vec<f64>> {
    let ar = arma.ar_poly();
    check_denominator("AR", &ar)?;
    Ok(poly::series_div(&arma.ma_poly(), &ar, m))
}

/// Truncated expansions bundled with their truncation metadata.
#[derive(Debug, Clone)]
pub struct CoeffTable {
    pub lambda: Vec<f64>,
    pub pi: Vec<f64>,
    pub f: Vec<f64>,
    pub tau: Vec<f64>,
    /// Empty when the filter is not invertible.
    pub lambda_inv: Vec<f64>,
    pub m: usize,
    pub d: f64,
    pub s: usize,
}

impl CoeffTable {
    pub fn build(spec: &SfiegarchSpec, m: usize) -> Result<Self> {
        let lambda = lambda_coeffs(spec, m)?;
        let pi = seasonal_pi(spec.d, spec.s, m)?;
        let f = poly::series_div(&spec.alpha_poly(), &spec.beta_poly(), m);
        let tau = tau_coeffs(spec, m)?;
        let lambda_inv = inverse_lambda(spec, m).unwrap_or_default();
        Ok(Self {
            lambda,
            pi,
            f,
            tau,
            lambda_inv,
            m,
            d: spec.d,
            s: spec.s,
        })
    }
}
