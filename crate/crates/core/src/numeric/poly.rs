//! Polynomials stored as ascending coefficient vectors `c[0] + c[1] z + ...`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Drops trailing (highest-degree) coefficients that are exactly zero.
pub fn trim(c: &[f64]) -> &[f64] {
    let mut end = c.len();
    while end > 1 && c[end - 1] == 0.0 {
        end -= 1;
    }
    &c[..end]
}

/// Builds the lag polynomial `1 - c_1 z - ... - c_p z^p`.
pub fn lag_poly(c: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(c.iter().map(|v| -v)).collect()
}

/// Builds `1 + c_1 z + ... + c_p z^p`.
pub fn plus_poly(c: &[f64]) -> Vec<f64> {
    std::iter::once(1.0).chain(c.iter().copied()).collect()
}

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

pub fn eval_complex(c: &[f64], z: Complex64) -> Complex64 {
    c.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &v| acc * z + v)
}

/// Full product of two polynomials.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Product truncated to indices `0..=m`.
pub fn mul_trunc(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    for (i, &x) in a.iter().enumerate().take(m + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(m + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Power-series quotient `num / den` through index `m`; requires `den[0] != 0`.
pub fn series_div(num: &[f64], den: &[f64], m: usize) -> Vec<f64> {
    let den = trim(den);
    let d0 = den[0];
    let mut out = vec![0.0; m + 1];
    for k in 0..=m {
        let mut acc = num.get(k).copied().unwrap_or(0.0);
        for j in 1..den.len().min(k + 1) {
            acc -= den[j] * out[k - j];
        }
        out[k] = acc / d0;
    }
    out
}

/// Complex roots via eigenvalues of the companion matrix.
pub fn roots(c: &[f64]) -> Vec<Complex64> {
    let c = trim(c);
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return vec![];
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    comp.complex_eigenvalues().iter().copied().collect()
}

/// Smallest root modulus; `inf` for constants.
pub fn min_root_modulus(c: &[f64]) -> f64 {
    roots(c)
        .iter()
        .map(|r| r.norm())
        .fold(f64::INFINITY, f64::min)
}

/// Resultant of two polynomials as the determinant of their Sylvester matrix.
pub fn resultant(a: &[f64], b: &[f64]) -> f64 {
    let a = trim(a);
    let b = trim(b);
    let m = a.len() - 1;
    let n = b.len() - 1;
    if m == 0 {
        return a[0].powi(n as i32);
    }
    if n == 0 {
        return b[0].powi(m as i32);
    }
    let size = m + n;
    let mut s = DMatrix::<f64>::zeros(size, size);
    for row in 0..n {
        for (k, &v) in a.iter().rev().enumerate() {
            s[(row, row + k)] = v;
        }
    }
    for row in 0..m {
        for (k, &v) in b.iter().rev().enumerate() {
            s[(n + row, row + k)] = v;
        }
    }
    s.determinant()
}
