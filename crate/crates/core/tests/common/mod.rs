#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sfiegarch::SfiegarchSpec;
use statrs::function::gamma::gamma;

/// `Gamma(j + d) / (Gamma(j + 1) Gamma(d))` from the gamma function directly.
pub fn pi_gamma(d: f64, j: usize) -> f64 {
    if d == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let jf = j as f64;
    if (jf + d).fract() == 0.0 && jf + d <= 0.0 {
        return 0.0;
    }
    gamma(jf + d) / (gamma(jf + 1.0) * gamma(d))
}

/// Naive product of two coefficient vectors truncated at index `m`.
pub fn naive_mul(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j <= m {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Naive long division `num / den` through index `m`.
pub fn naive_div(num: &[f64], den: &[f64], m: usize) -> Vec<f64> {
    let mut rem: Vec<f64> = (0..=m).map(|i| num.get(i).copied().unwrap_or(0.0)).collect();
    let mut q = vec![0.0; m + 1];
    for k in 0..=m {
        q[k] = rem[k] / den[0];
        for (j, dj) in den.iter().enumerate().skip(1) {
            if k + j <= m {
                rem[k + j] -= q[k] * dj;
            }
        }
    }
    q
}

/// Coefficients of `(1 - z^s)^{-d}` via the gamma-function formula.
pub fn seasonal_pi_oracle(d: f64, s: usize, m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m + 1];
    for j in 0..=m / s {
        v[j * s] = pi_gamma(d, j);
    }
    v
}

/// `alpha(z) (1 - z^s)^{-d} / beta(z)` by brute force.
pub fn lambda_oracle(spec: &SfiegarchSpec, m: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    a.extend(spec.alpha.iter().map(|v| -v));
    let mut b = vec![1.0];
    b.extend(spec.beta.iter().map(|v| -v));
    let pi = seasonal_pi_oracle(spec.d, spec.s, m);
    naive_div(&naive_mul(&a, &pi, m), &b, m)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300).max(a.abs()).max(1e-12)
}

/// Random spec with `p, q <= 3`, `s` in {1, 2, 6, 7}, `d` in `(-0.9, 0.49)` and
/// `sum |beta_j| < 0.9`, which keeps every root of `beta(z)` outside the unit disk.
pub fn random_spec(rng: &mut ChaCha8Rng) -> SfiegarchSpec {
    let p = rng.random_range(0..=3usize);
    let q = rng.random_range(0..=3usize);
    let s = [1usize, 2, 6, 7][rng.random_range(0..4usize)];
    let d = rng.random_range(-0.9..0.49);
    let alpha: Vec<f64> = (0..p).map(|_| rng.random_range(-0.6..0.6)).collect();
    let budget = 0.9 / q.max(1) as f64;
    let beta: Vec<f64> = (0..q).map(|_| rng.random_range(-budget..budget)).collect();
    let theta = rng.random_range(-0.4..0.4);
    let gamma_mag = rng.random_range(0.05..0.4);
    SfiegarchSpec::new(rng.random_range(-1.0..1.0), theta, gamma_mag, d, s).with_arma(alpha, beta)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn sd(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Sample autocovariances (divisor `n`) around the sample mean.
pub fn acov(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    (0..=max_lag)
        .map(|h| (0..n - h).map(|t| (x[t] - m) * (x[t + h] - m)).sum::<f64>() / n as f64)
        .collect()
}

/// Composite Simpson rule with `n` (even) panels on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `int_{-L}^{L} f` split at zero, for integrands with a kink at the origin.
pub fn simpson_symmetric<F: Fn(f64) -> f64>(f: F, l: f64, n: usize) -> f64 {
    simpson(&f, -l, 0.0, n) + simpson(&f, 0.0, l, n)
}

/// `pi_gamma` through log-gamma, usable at large `j` (requires `j + d > 0` for `j >= 1`).
pub fn pi_lgamma(d: f64, j: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if j == 0 {
        return 1.0;
    }
    if d == 0.0 {
        return 0.0;
    }
    let jf = j as f64;
    (ln_gamma(jf + d) - ln_gamma(jf + 1.0)).exp() / gamma(d)
}

/// `alpha(z) (1 - z^s)^{-d} / beta(z)` through index `m`, linear in `m`.
pub fn lambda_oracle_long(spec: &SfiegarchSpec, m: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    a.extend(spec.alpha.iter().map(|v| -v));
    let mut b = vec![1.0];
    b.extend(spec.beta.iter().map(|v| -v));
    let mut pi = vec![0.0; m + 1];
    for j in 0..=m / spec.s {
        pi[j * spec.s] = pi_lgamma(spec.d, j);
    }
    let mut num = vec![0.0; m + 1];
    for (i, ai) in a.iter().enumerate() {
        for k in 0..=m - i.min(m) {
            if i + k <= m {
                num[i + k] += ai * pi[k];
            }
        }
    }
    let mut q = vec![0.0; m + 1];
    for k in 0..=m {
        let mut v = num[k];
        for (j, bj) in b.iter().enumerate().skip(1) {
            if j <= k {
                v -= bj * q[k - j];
            }
        }
        q[k] = v;
    }
    q
}

/// Limit of `S(m) = S_inf + a m^{-e} + b m^{-e-1}` from `S(m), S(2m), S(4m)`.
pub fn richardson3(s: [f64; 3], e: f64) -> f64 {
    // Eliminate the leading term from consecutive pairs, then the next one.
    let r1 = 2f64.powf(-e);
    let t1 = (s[1] - r1 * s[0]) / (1.0 - r1);
    let t2 = (s[2] - r1 * s[1]) / (1.0 - r1);
    let r2 = 2f64.powf(-e - 1.0);
    (t2 - r2 * t1) / (1.0 - r2)
}
