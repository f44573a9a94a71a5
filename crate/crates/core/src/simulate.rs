//! Sample paths of the SFIEGARCH process and of ARMA-filtered returns.

use serde::{Deserialize, Serialize};

use crate::coeffs::{default_truncation, lambda_coeffs};
use crate::innovations::{abs_mean, g, rng, sample_with};
use crate::model::{ArmaSpec, SfiegarchSpec};
use crate::numeric::conv::convolve;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimPath {
    pub x: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub z: Vec<f64>,
    pub ln_sigma2: Vec<f64>,
    pub burn_in: usize,
    pub m_trunc: usize,
    pub seed: u64,
}

/// Simulates `n` observations.
///
/// `ln sigma_t^2 = omega + sum_{k=0}^{m} lambda_k g(Z_{t-1-k})`; `m + 1` pre-sample
/// innovations are drawn so every point, burn-in included, sees a full window.
/// `burn_in` defaults to `m_trunc`, which defaults to
/// [`default_truncation`](crate::coeffs::default_truncation).
pub fn simulate_sfiegarch(
    spec: &SfiegarchSpec,
    n: usize,
    burn_in: Option<usize>,
    m_trunc: Option<usize>,
    seed: u64,
) -> Result<SimPath> {
    if !(spec.d < 0.5) {
        return Err(Error::Domain {
            name: "d",
            value: spec.d,
            domain: "d < 0.5",
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let m = m_trunc.unwrap_or_else(|| default_truncation(spec));
    let burn = burn_in.unwrap_or(m);
    let lambda = lambda_coeffs(spec, m)?;
    let em = abs_mean(&spec.innovation)?;
    let total = m + 1 + burn + n;
    let z = sample_with(&spec.innovation, total, &mut rng(seed, 0))?;
    let gz: Vec<f64> = z[..total - 1]
        .iter()
        .map(|&v| g(v, spec.theta, spec.gamma_mag, em))
        .collect();
    let c = convolve(&lambda, &gz);
    let start = m + 1 + burn;
    let mut x = Vec::with_capacity(n);
    let mut sigma2 = Vec::with_capacity(n);
    let mut ln_sigma2 = Vec::with_capacity(n);
    for t in start..total {
        let l = spec.omega + c[t - 1];
        let s2 = l.exp();
        ln_sigma2.push(l);
        sigma2.push(s2);
        x.push(s2.sqrt() * z[t]);
    }
    Ok(SimPath {
        x,
        sigma2,
        z: z[start..].to_vec(),
        ln_sigma2,
        burn_in: burn,
        m_trunc: m,
        seed,
    })
}

/// `r_t = mu + sum phi_k (r_{t-k} - mu) + x_t + sum vphi_j x_{t-j}` with
/// pre-sample returns equal to `mu` and pre-sample innovations zero.
pub fn simulate_returns(arma: &ArmaSpec, x: &[f64]) -> Vec<f64> {
    let mut dev = vec![0.0; x.len()];
    for t in 0..x.len() {
        let mut v = x[t];
        for (&k, &phi) in &arma.ar {
            if k <= t {
                v += phi * dev[t - k];
            }
        }
        for (&j, &vphi) in &arma.ma {
            if j <= t {
                v += vphi * x[t - j];
            }
        }
        dev[t] = v;
    }
    dev.into_iter().map(|v| v + arma.mu).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_g_gives_constant_variance() {
        let spec = SfiegarchSpec::new(1.5, 0.0, 0.0, 0.3, 4);
        let p = simulate_sfiegarch(&spec, 50, Some(10), Some(100), 3).unwrap();
        for s in &p.sigma2 {
            assert!((s - 1.5f64.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn refuses_nonstationary_d() {
        let spec = SfiegarchSpec::new(0.0, 0.1, 0.1, 0.5, 1);
        assert!(simulate_sfiegarch(&spec, 10, None, Some(10), 0).is_err());
    }

    #[test]
    fn returns_white_noise_and_ma() {
        let x = [1.0, -2.0, 0.5, 3.0];
        let r = simulate_returns(&ArmaSpec::white_noise(0.2), &x);
        for (a, b) in r.iter().zip(&x) {
            assert!((a - (b + 0.2)).abs() < 1e-15);
        }
        let mut ma = ArmaSpec::white_noise(0.0);
        ma.ma.insert(1, 0.3);
        let r = simulate_returns(&ma, &x);
        assert_eq!(r[0], 1.0);
        for t in 1..4 {
            assert!((r[t] - (x[t] + 0.3 * x[t - 1])).abs() < 1e-15);
        }
    }
}
