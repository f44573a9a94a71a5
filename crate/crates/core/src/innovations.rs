//! Innovation laws and the innovation-level moments consumed by the model formulas.
//!
//! The GED with shape `nu` and unit variance has density
//!
//! ```text
//! f(z) = nu exp(-|z/l|^nu / 2) / (l 2^{1 + 1/nu} Gamma(1/nu)),
//! l    = [2^{-2/nu} Gamma(1/nu) / Gamma(3/nu)]^{1/2}.
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::{gamma, gamma_lr, ln_gamma};

use crate::model::InnovationDist;
use crate::numeric::quadrature::{integrate_real_line, integrate_upper, QuadOptions};
use crate::stats::normal_cdf;
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_SERIES_TERMS: usize = 10_000;

fn check(dist: &InnovationDist) -> Result<f64> {
    if dist.is_valid() {
        Ok(dist.nu())
    } else {
        Err(Error::Domain {
            name: "nu",
            value: dist.nu(),
            domain: "nu > 1",
        })
    }
}

/// Scale `l` of the unit-variance GED.
pub fn ged_scale(nu: f64) -> f64 {
    (2f64.powf(-2.0 / nu) * gamma(1.0 / nu) / gamma(3.0 / nu)).sqrt()
}

pub fn log_pdf(dist: &InnovationDist, z: f64) -> f64 {
    match dist {
        InnovationDist::Gaussian => -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln(),
        InnovationDist::Ged { nu } => {
            let l = ged_scale(*nu);
            nu.ln()
                - 0.5 * (z / l).abs().powf(*nu)
                - l.ln()
                - (1.0 + 1.0 / nu) * std::f64::consts::LN_2
                - ln_gamma(1.0 / nu)
        }
    }
}

pub fn pdf(dist: &InnovationDist, z: f64) -> f64 {
    log_pdf(dist, z).exp()
}

pub fn cdf(dist: &InnovationDist, z: f64) -> f64 {
    match dist {
        InnovationDist::Gaussian => normal_cdf(z),
        InnovationDist::Ged { nu } => {
            if z == 0.0 {
                return 0.5;
            }
            let l = ged_scale(*nu);
            let p = gamma_lr(1.0 / nu, 0.5 * (z / l).abs().powf(*nu));
            if z >= 0.0 {
                0.5 + 0.5 * p
            } else {
                0.5 - 0.5 * p
            }
        }
    }
}

/// `E|Z|^r = l^r 2^{r/nu} Gamma((r+1)/nu) / Gamma(1/nu)`.
pub fn abs_moment(dist: &InnovationDist, r: f64) -> Result<f64> {
    let nu = check(dist)?;
    let l = ged_scale(nu);
    Ok((r * l.ln() + r / nu * std::f64::consts::LN_2 + ln_gamma((r + 1.0) / nu) - ln_gamma(1.0 / nu)).exp())
}

/// `E|Z|`: `sqrt(2/pi)` for the Gaussian, `Gamma(2/nu)/sqrt(Gamma(1/nu)Gamma(3/nu))` for GED.
pub fn abs_mean(dist: &InnovationDist) -> Result<f64> {
    let nu = check(dist)?;
    Ok(match dist {
        InnovationDist::Gaussian => (2.0 / std::f64::consts::PI).sqrt(),
        InnovationDist::Ged { .. } => gamma(2.0 / nu) / (gamma(1.0 / nu) * gamma(3.0 / nu)).sqrt(),
    })
}

/// `g(z) = theta z + gamma (|z| - E|Z|)`.
#[inline]
pub fn g(z: f64, theta: f64, gamma_mag: f64, abs_mean: f64) -> f64 {
    theta * z + gamma_mag * (z.abs() - abs_mean)
}

/// `sigma_g^2 = theta^2 + gamma^2 - (gamma E|Z|)^2 + 2 theta gamma E(Z|Z|)`.
pub fn sigma_g_sq_from(theta: f64, gamma_mag: f64, abs_mean: f64, sign_cross: f64) -> f64 {
    theta * theta + gamma_mag * gamma_mag - (gamma_mag * abs_mean).powi(2)
        + 2.0 * theta * gamma_mag * sign_cross
}

pub fn sigma_g_sq(dist: &InnovationDist, theta: f64, gamma_mag: f64) -> Result<f64> {
    Ok(sigma_g_sq_from(theta, gamma_mag, abs_mean(dist)?, 0.0))
}

/// `E exp(b g(Z))` by quadrature.
pub fn g_mgf_quadrature(dist: &InnovationDist, b: f64, theta: f64, gamma_mag: f64) -> Result<f64> {
    let m = abs_mean(dist)?;
    let q = integrate_real_line(
        |z| (b * g(z, theta, gamma_mag, m) + log_pdf(dist, z)).exp(),
        QuadOptions::default(),
    );
    if !q.value.is_finite() {
        return Err(Error::Numerical("MGF quadrature did not produce a finite value".into()));
    }
    Ok(q.value)
}

/// `int_0^inf e^{c z} f(z) dz` for the unit-variance GED by its power series.
/// Returns `None` when the series fails to converge cleanly.
fn ged_half_series(nu: f64, c: f64) -> Option<f64> {
    let x = c * ged_scale(nu) * 2f64.powf(1.0 / nu);
    let base = -ln_gamma(1.0 / nu) - std::f64::consts::LN_2;
    if x == 0.0 {
        return Some(base.exp() * gamma(1.0 / nu));
    }
    let lx = x.abs().ln();
    let mut sum = 0.0;
    let mut max_term = 0.0f64;
    let mut prev_mag = f64::INFINITY;
    for j in 0..MAX_SERIES_TERMS {
        let jf = j as f64;
        let log_mag = jf * lx + ln_gamma((jf + 1.0) / nu) - ln_gamma(jf + 1.0) + base;
        let mag = log_mag.exp();
        let term = if x < 0.0 && j % 2 == 1 { -mag } else { mag };
        sum += term;
        max_term = max_term.max(mag);
        if mag < prev_mag && mag < 1e-15 * sum.abs().max(1e-300) {
            if max_term > 1e8 * sum.abs() {
                return None;
            }
            return Some(sum);
        }
        prev_mag = mag;
    }
    None
}

/// `E exp(b g(Z))`. Gaussian: closed form with the normal CDF. GED: power series,
/// falling back to quadrature when the series does not converge.
pub fn g_mgf(dist: &InnovationDist, b: f64, theta: f64, gamma_mag: f64) -> Result<f64> {
    if !b.is_finite() {
        return Err(Error::InvalidParameter(format!("b must be finite, got {b}")));
    }
    let nu = check(dist)?;
    if b == 0.0 {
        return Ok(1.0);
    }
    match dist {
        InnovationDist::Gaussian => {
            let em = (2.0 / std::f64::consts::PI).sqrt();
            let u = b * (gamma_mag - theta);
            let v = b * (gamma_mag + theta);
            let t1 = (0.5 * u * u).exp() * normal_cdf(u);
            let t2 = (0.5 * v * v).exp() * normal_cdf(v);
            Ok((-b * gamma_mag * em).exp() * (t1 + t2))
        }
        InnovationDist::Ged { .. } => {
            let em = abs_mean(dist)?;
            let pos = ged_half_series(nu, b * (gamma_mag + theta));
            let neg = ged_half_series(nu, b * (gamma_mag - theta));
            match (pos, neg) {
                (Some(p), Some(n)) => Ok((-b * gamma_mag * em).exp() * (p + n)),
                _ => {
                    log::warn!("GED MGF series did not converge at b = {b}; using quadrature");
                    g_mgf_quadrature(dist, b, theta, gamma_mag)
                }
            }
        }
    }
}

/// Moments of `ln Z^2` needed by the log-squared-return formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LnSqMoments {
    /// `E ln Z^2`.
    pub mean: f64,
    /// `Var ln Z^2`.
    pub var: f64,
    /// `E(|Z| ln Z^2)`.
    pub abs_cross: f64,
    /// `E(Z ln Z^2)`; zero for symmetric laws.
    pub sign_cross: f64,
    pub abs_mean: f64,
}

impl LnSqMoments {
    /// `C_1 = Cov(g(Z), ln Z^2)`.
    pub fn c1(&self, theta: f64, gamma_mag: f64) -> f64 {
        theta * self.sign_cross + gamma_mag * (self.abs_cross - self.abs_mean * self.mean)
    }
}

/// Gaussian values in closed form; GED values by quadrature.
pub fn ln_sq_moments(dist: &InnovationDist) -> Result<LnSqMoments> {
    let nu = check(dist)?;
    let abs_mean = abs_mean(dist)?;
    if let InnovationDist::Gaussian = dist {
        let ln2 = std::f64::consts::LN_2;
        return Ok(LnSqMoments {
            mean: -EULER_GAMMA - ln2,
            var: std::f64::consts::PI.powi(2) / 2.0,
            abs_cross: (2.0 / std::f64::consts::PI).sqrt() * (ln2 - EULER_GAMMA),
            sign_cross: 0.0,
            abs_mean,
        });
    }
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-13,
        max_intervals: 8000,
    };
    let half = |h: &dyn Fn(f64) -> f64| 2.0 * integrate_upper(|z| h(z) * pdf(dist, z), 0.0, opts).value;
    let mean = half(&|z: f64| (z * z).ln());
    let var = half(&|z: f64| ((z * z).ln() - mean).powi(2));
    let abs_cross = half(&|z: f64| z * (z * z).ln());
    let _ = nu;
    Ok(LnSqMoments {
        mean,
        var,
        abs_cross,
        sign_cross: 0.0,
        abs_mean,
    })
}

/// Every innovation-level constant used by the theory for a given `(theta, gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnovationMoments {
    pub abs_mean: f64,
    pub sign_cross: f64,
    pub sigma_g_sq: f64,
    pub c1: f64,
    pub ln_sq_mean: f64,
    pub ln_sq_var: f64,
    pub z4: f64,
    pub z3: f64,
}

impl InnovationMoments {
    pub fn compute(dist: &InnovationDist, theta: f64, gamma_mag: f64) -> Result<Self> {
        let ls = ln_sq_moments(dist)?;
        Ok(Self {
            abs_mean: ls.abs_mean,
            sign_cross: 0.0,
            sigma_g_sq: sigma_g_sq_from(theta, gamma_mag, ls.abs_mean, 0.0),
            c1: ls.c1(theta, gamma_mag),
            ln_sq_mean: ls.mean,
            ln_sq_var: ls.var,
            z4: abs_moment(dist, 4.0)?,
            z3: 0.0,
        })
    }
}

/// Deterministic RNG for `(seed, stream)`; distinct streams are independent.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Draws `n` i.i.d. unit-variance innovations from `rng`.
pub fn sample_with<R: Rng + ?Sized>(dist: &InnovationDist, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let nu = check(dist)?;
    match dist {
        InnovationDist::Gaussian => Ok((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()),
        InnovationDist::Ged { .. } => {
            let l = ged_scale(nu);
            let gam = Gamma::new(1.0 / nu, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok((0..n)
                .map(|_| {
                    let gv: f64 = gam.sample(rng);
                    let mag = l * (2.0 * gv).powf(1.0 / nu);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect())
        }
    }
}

/// Draws `n` i.i.d. innovations; identical seeds give identical streams.
pub fn sample(dist: &InnovationDist, n: usize, seed: u64) -> Result<Vec<f64>> {
    sample_with(dist, n, &mut rng(seed, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS: InnovationDist = InnovationDist::Gaussian;

    #[test]
    fn gaussian_abs_mean() {
        assert!((abs_mean(&GAUSS).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-15);
        let ged2 = abs_mean(&InnovationDist::Ged { nu: 2.0 }).unwrap();
        assert!((ged2 - 0.797_884_560_802_865_4).abs() < 1e-13);
        assert!(abs_mean(&InnovationDist::Ged { nu: 1.0 }).is_err());
    }

    #[test]
    fn ged_two_is_gaussian_pdf() {
        let g2 = InnovationDist::Ged { nu: 2.0 };
        for z in [-2.5, -0.3, 0.0, 1.1, 3.0] {
            assert!((pdf(&g2, z) - pdf(&GAUSS, z)).abs() < 1e-14);
            assert!((cdf(&g2, z) - cdf(&GAUSS, z)).abs() < 1e-12);
        }
    }

    #[test]
    fn mgf_at_zero_and_degenerate() {
        assert_eq!(g_mgf(&GAUSS, 0.0, 0.3, 0.2).unwrap(), 1.0);
        for b in [-1.0, 0.5, 2.0] {
            assert!((g_mgf(&GAUSS, b, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ged_series_equals_gaussian_at_two() {
        let g2 = InnovationDist::Ged { nu: 2.0 };
        for b in [-2.0, -0.5, 0.7, 1.5] {
            let a = g_mgf(&g2, b, 0.25, 0.24).unwrap();
            let c = g_mgf(&GAUSS, b, 0.25, 0.24).unwrap();
            assert!((a - c).abs() < 1e-12 * c, "{b}: {a} vs {c}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample(&InnovationDist::Ged { nu: 1.5 }, 100, 9).unwrap();
        let b = sample(&InnovationDist::Ged { nu: 1.5 }, 100, 9).unwrap();
        assert_eq!(a, b);
        let c = sample(&InnovationDist::Ged { nu: 1.5 }, 100, 10).unwrap();
        assert_ne!(a, c);
    }
}
