//! Parameter containers, validation and the canonical JSON model file.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numeric::poly;

/// Companion-matrix root moduli must exceed this bound.
pub const ROOT_MARGIN: f64 = 1.0 + 1e-8;
/// Resultants below this magnitude are treated as a shared root.
pub const RESULTANT_TOL: f64 = 1e-10;

/// Innovation law of `Z_t`, normalized to mean zero and unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InnovationDist {
    #[default]
    Gaussian,
    Ged { nu: f64 },
}

impl InnovationDist {
    /// Tail-thickness parameter; the Gaussian law is GED with `nu = 2`.
    pub fn nu(&self) -> f64 {
        match self {
            InnovationDist::Gaussian => 2.0,
            InnovationDist::Ged { nu } => *nu,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            InnovationDist::Gaussian => true,
            InnovationDist::Ged { nu } => nu.is_finite() && *nu > 1.0,
        }
    }
}

/// SFIEGARCH(p, d, q)_s parameterization.
///
/// `alpha` holds `alpha_1..alpha_p` of `alpha(z) = 1 - sum alpha_i z^i` and
/// `beta` holds `beta_1..beta_q` of `beta(z) = 1 - sum beta_j z^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfiegarchSpec {
    pub omega: f64,
    pub theta: f64,
    #[serde(rename = "gamma")]
    pub gamma_mag: f64,
    pub d: f64,
    pub s: usize,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub innovation: InnovationDist,
}

impl SfiegarchSpec {
    /// SFIEGARCH(0, d, 0)_s with Gaussian innovations.
    pub fn new(omega: f64, theta: f64, gamma_mag: f64, d: f64, s: usize) -> Self {
        Self {
            omega,
            theta,
            gamma_mag,
            d,
            s,
            alpha: vec![],
            beta: vec![],
            innovation: InnovationDist::Gaussian,
        }
    }

    pub fn with_arma(mut self, alpha: Vec<f64>, beta: Vec<f64>) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_innovation(mut self, innovation: InnovationDist) -> Self {
        self.innovation = innovation;
        self
    }

    pub fn p(&self) -> usize {
        self.alpha.len()
    }

    pub fn q(&self) -> usize {
        self.beta.len()
    }

    /// Coefficients of `alpha(z)`, constant term first.
    pub fn alpha_poly(&self) -> Vec<f64> {
        poly::lag_poly(&self.alpha)
    }

    /// Coefficients of `beta(z)`, constant term first.
    pub fn beta_poly(&self) -> Vec<f64> {
        poly::lag_poly(&self.beta)
    }

    /// `alpha(1) / beta(1)`.
    pub fn arma_ratio_at_one(&self) -> f64 {
        poly::eval(&self.alpha_poly(), 1.0) / poly::eval(&self.beta_poly(), 1.0)
    }
}

/// Constrained ARMA mean equation
/// `r_t = mu + sum phi_k (r_{t-k} - mu) + X_t + sum vphi_j X_{t-j}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmaSpec {
    pub mu: f64,
    #[serde(default)]
    pub ar: BTreeMap<usize, f64>,
    #[serde(default)]
    pub ma: BTreeMap<usize, f64>,
}

impl ArmaSpec {
    pub fn white_noise(mu: f64) -> Self {
        Self {
            mu,
            ..Default::default()
        }
    }

    pub fn max_lag(&self) -> usize {
        let a = self.ar.keys().next_back().copied().unwrap_or(0);
        let m = self.ma.keys().next_back().copied().unwrap_or(0);
        a.max(m)
    }

    pub fn ar_order(&self) -> usize {
        self.ar.keys().next_back().copied().unwrap_or(0)
    }

    pub fn ma_order(&self) -> usize {
        self.ma.keys().next_back().copied().unwrap_or(0)
    }

    /// Dense `1 - sum phi_k z^k`.
    pub fn ar_poly(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.ar_order() + 1];
        c[0] = 1.0;
        for (&k, &v) in &self.ar {
            c[k] -= v;
        }
        c
    }

    /// Dense `1 + sum vphi_j z^j`.
    pub fn ma_poly(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.ma_order() + 1];
        c[0] = 1.0;
        for (&k, &v) in &self.ma {
            c[k] += v;
        }
        c
    }
}

/// Canonical model file: the volatility spec plus the mean equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub omega: f64,
    pub theta: f64,
    pub gamma: f64,
    pub d: f64,
    pub s: usize,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub innovation: InnovationDist,
    #[serde(default)]
    pub arma: ArmaSpec,
}

impl ModelFile {
    pub fn new(spec: &SfiegarchSpec, arma: &ArmaSpec) -> Self {
        Self {
            omega: spec.omega,
            theta: spec.theta,
            gamma: spec.gamma_mag,
            d: spec.d,
            s: spec.s,
            alpha: spec.alpha.clone(),
            beta: spec.beta.clone(),
            innovation: spec.innovation,
            arma: arma.clone(),
        }
    }

    pub fn spec(&self) -> SfiegarchSpec {
        SfiegarchSpec {
            omega: self.omega,
            theta: self.theta,
            gamma_mag: self.gamma,
            d: self.d,
            s: self.s,
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
            innovation: self.innovation,
        }
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> crate::Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite(&'static str),
    SeasonZero,
    /// Process existence requires `d < 0.5`.
    DNotBelowHalf(f64),
    /// `g` is identically zero.
    DegenerateG,
    BetaRootInDisk(f64),
    CommonRoot(f64),
    InvalidNu(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite(name) => write!(f, "{name} is not finite"),
            Violation::SeasonZero => write!(f, "season length s must be at least 1"),
            Violation::DNotBelowHalf(d) => write!(f, "existence requires d<0.5 (d = {d})"),
            Violation::DegenerateG => write!(f, "g degenerate: theta and gamma both zero"),
            Violation::BetaRootInDisk(m) => {
                write!(f, "beta root on or inside unit circle (min modulus {m:.8})")
            }
            Violation::CommonRoot(r) => write!(f, "alpha and beta share a root (resultant {r:.3e})"),
            Violation::InvalidNu(nu) => write!(f, "GED shape nu must exceed 1 (nu = {nu})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Invertibility needs `-1 < d < 0.5`.
    NotInvertible(f64),
    AlphaRootInDisk(f64),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NotInvertible(d) => write!(f, "not invertible: d = {d} outside (-1, 0.5)"),
            Warning::AlphaRootInDisk(m) => {
                write!(f, "alpha root on or inside unit circle (min modulus {m:.8}); not invertible")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
    pub beta_min_root_modulus: f64,
    pub alpha_min_root_modulus: f64,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(crate::Error::Validation(self.to_string()))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks every side condition of the model definition. Never panics on finite input.
pub fn validate(spec: &SfiegarchSpec) -> ValidationReport {
    let mut r = ValidationReport {
        beta_min_root_modulus: f64::INFINITY,
        alpha_min_root_modulus: f64::INFINITY,
        ..Default::default()
    };
    let scalars = [
        ("omega", spec.omega),
        ("theta", spec.theta),
        ("gamma", spec.gamma_mag),
        ("d", spec.d),
    ];
    for (name, v) in scalars {
        if !v.is_finite() {
            r.violations.push(Violation::NonFinite(name));
        }
    }
    if spec.alpha.iter().any(|v| !v.is_finite()) {
        r.violations.push(Violation::NonFinite("alpha"));
    }
    if spec.beta.iter().any(|v| !v.is_finite()) {
        r.violations.push(Violation::NonFinite("beta"));
    }
    if !r.violations.is_empty() {
        return r;
    }
    if spec.s == 0 {
        r.violations.push(Violation::SeasonZero);
    }
    if spec.d >= 0.5 {
        r.violations.push(Violation::DNotBelowHalf(spec.d));
    }
    if spec.d <= -1.0 {
        r.warnings.push(Warning::NotInvertible(spec.d));
    }
    if spec.theta == 0.0 && spec.gamma_mag == 0.0 {
        r.violations.push(Violation::DegenerateG);
    }
    if !spec.innovation.is_valid() {
        r.violations.push(Violation::InvalidNu(spec.innovation.nu()));
    }
    let a = spec.alpha_poly();
    let b = spec.beta_poly();
    r.beta_min_root_modulus = poly::min_root_modulus(&b);
    if r.beta_min_root_modulus <= ROOT_MARGIN {
        r.violations.push(Violation::BetaRootInDisk(r.beta_min_root_modulus));
    }
    r.alpha_min_root_modulus = poly::min_root_modulus(&a);
    if r.alpha_min_root_modulus <= ROOT_MARGIN {
        r.warnings.push(Warning::AlphaRootInDisk(r.alpha_min_root_modulus));
    }
    let res = poly::resultant(&a, &b);
    if res.abs() < RESULTANT_TOL {
        r.violations.push(Violation::CommonRoot(res));
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecialCase {
    Sfiegarch,
    Fiegarch,
    Egarch,
}

/// Tags `d = 0` as EGARCH and `s = 1` as FIEGARCH.
pub fn special_case_of(spec: &SfiegarchSpec) -> SpecialCase {
    if spec.d == 0.0 {
        SpecialCase::Egarch
    } else if spec.s == 1 {
        SpecialCase::Fiegarch
    } else {
        SpecialCase::Sfiegarch
    }
}
