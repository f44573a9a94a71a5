use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::DateTime;
use rayon::prelude::*;
use serde::Serialize;
use sfiegarch::acov_spectral::{acov_report, kurtosis_asymmetry, periodogram, Spectrum};
use sfiegarch::coeffs::lambda_coeffs;
use sfiegarch::data::{aggregate_returns, descriptive_stats, ingest_prices, read_series, IngestConfig, Partial};
use sfiegarch::estimate::{arma_residuals, filter, fit_sfiegarch, fit_two_step, ArmaFit, ArmaFitConfig, ArmaLags, FitConfig};
use sfiegarch::evaluate::{cumulative_periodogram, density_transform_test, evaluate as run_evaluation, portmanteau, DensityForecast, EvalOptions};
use sfiegarch::forecast::{EMethod, Forecaster};
use sfiegarch::innovations::abs_mean;
use sfiegarch::model::validate;
use sfiegarch::simulate::{simulate_returns, simulate_sfiegarch};
use sfiegarch::{ArmaSpec, Error, InnovationDist, ModelFile, SfiegarchSpec};

use crate::config::Config;
use crate::error::CliError;
use crate::output::{num, opt, OutDir};
use crate::{
    AcovArgs, DiagArgs, EvaluateArgs, FitArgs, ForecastArgs, IngestArgs, MethodArg, ModelArg, PartialArg, SeriesArg, SimArgs,
    SpectrumArgs,
};

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

fn series(path: &Path, column: Option<&str>) -> Result<Vec<f64>, CliError> {
    Ok(read_series(open(path)?, column)?)
}

fn load_model(arg: &ModelArg, cfg: &Config) -> Result<(SfiegarchSpec, ArmaSpec), CliError> {
    let file = match &arg.model {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            ModelFile::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => cfg
            .model
            .clone()
            .ok_or_else(|| CliError::Usage("no model: pass --model or set `model` in the config".into()))?,
    };
    let spec = file.spec();
    let report = validate(&spec);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    report.into_result()?;
    Ok((spec, file.arma))
}

fn innovation_for(nu: Option<f64>) -> Result<InnovationDist, CliError> {
    let dist = match nu {
        None | Some(2.0) => InnovationDist::Gaussian,
        Some(v) => InnovationDist::Ged { nu: v },
    };
    if !dist.is_valid() {
        return Err(Error::Domain {
            name: "nu",
            value: dist.nu(),
            domain: "nu > 1",
        }
        .into());
    }
    Ok(dist)
}

fn is_white_noise(arma: &ArmaSpec) -> bool {
    arma.mu == 0.0 && arma.ar.is_empty() && arma.ma.is_empty()
}

pub fn sim(a: &SimArgs, cfg: &Config, seed: u64, out: &mut OutDir) -> Result<(), CliError> {
    let (spec, arma) = load_model(&a.model, cfg)?;
    let n = a.n.or(cfg.sim.n).unwrap_or(1000);
    let path = simulate_sfiegarch(
        &spec,
        n,
        a.burn_in.or(cfg.sim.burn_in),
        a.truncation.or(cfg.sim.truncation),
        seed,
    )?;
    out.csv(
        "sim.csv",
        &["t", "x", "sigma2", "z"],
        (0..n).map(|t| vec![(t + 1).to_string(), num(path.x[t]), num(path.sigma2[t]), num(path.z[t])]),
    )?;
    if !is_white_noise(&arma) {
        let r = simulate_returns(&arma, &path.x);
        out.csv("returns.csv", &["t", "r"], r.iter().enumerate().map(|(t, v)| vec![(t + 1).to_string(), num(*v)]))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ParamRow<'a> {
    name: &'a str,
    estimate: f64,
    se: f64,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    n: usize,
    s: usize,
    p: usize,
    q: usize,
    loglik: f64,
    aic: f64,
    bic: f64,
    hqc: f64,
    params: Vec<ParamRow<'a>>,
    cov_robust: &'a [Vec<f64>],
    abs_mean: f64,
    ln_sigma2_next: f64,
    converged: bool,
    iterations: usize,
    pseudo_inverse_used: bool,
    mean_equation: Option<&'a ArmaFit>,
}

pub fn fit(a: &FitArgs, cfg: &Config, out: &mut OutDir) -> Result<(), CliError> {
    let fc = &cfg.fit;
    let column = a.column.clone().or(fc.column.clone());
    let r = series(&a.input, column.as_deref())?;
    let s = a.s.or(fc.s).unwrap_or(1);
    let p = a.p.or(fc.p).unwrap_or(0);
    let q = a.q.or(fc.q).unwrap_or(0);
    let innovation = innovation_for(a.nu.or(fc.nu))?;
    let mut fit_cfg = FitConfig {
        fixed_d: a.fixed_d.or(fc.fixed_d),
        innovation,
        abs_mean: Some(abs_mean(&innovation)?),
        ..Default::default()
    };
    if let Some(m) = a.max_iter.or(fc.max_iter) {
        fit_cfg.max_iter = m;
    }
    let lags = ArmaLags {
        ar: a.ar_lags.clone().or(fc.ar_lags.clone()).unwrap_or_default(),
        ma: a.ma_lags.clone().or(fc.ma_lags.clone()).unwrap_or_default(),
        include_mean: a.include_mean.or(fc.include_mean).unwrap_or(false),
    };
    let (arma_fit, fit) = if lags.ar.is_empty() && lags.ma.is_empty() && !lags.include_mean {
        (None, fit_sfiegarch(&r, s, p, q, &fit_cfg)?)
    } else {
        let level = a.elimination_level.or(fc.elimination_level).unwrap_or(0.05);
        let arma_cfg = ArmaFitConfig {
            elimination_level: (level > 0.0).then_some(level),
            ..Default::default()
        };
        let (af, fit) = fit_two_step(&r, &lags, &arma_cfg, s, p, q, &fit_cfg)?;
        (Some(af), fit)
    };
    let summary = FitSummary {
        n: r.len(),
        s,
        p,
        q,
        loglik: fit.loglik,
        aic: fit.aic,
        bic: fit.bic,
        hqc: fit.hqc,
        params: fit
            .param_names
            .iter()
            .zip(&fit.params)
            .zip(&fit.se)
            .map(|((name, &estimate), &se)| ParamRow { name, estimate, se })
            .collect(),
        cov_robust: &fit.cov_robust,
        abs_mean: fit.abs_mean,
        ln_sigma2_next: fit.ln_sigma2_next,
        converged: fit.converged,
        iterations: fit.iterations,
        pseudo_inverse_used: fit.pseudo_inverse_used,
        mean_equation: arma_fit.as_ref(),
    };
    if !fit.converged {
        log::warn!("optimizer stopped before convergence after {} iterations", fit.iterations);
    }
    out.json("fit.json", &summary)?;
    out.json("model.json", &ModelFile::new(&fit.spec_hat, &fit.arma_hat))?;
    out.csv(
        "residuals.csv",
        &["t", "r", "x", "z", "sigma2"],
        (0..r.len()).map(|t| {
            vec![
                (t + 1).to_string(),
                num(r[t]),
                num(fit.residuals_x[t]),
                num(fit.residuals_z[t]),
                num(fit.sigma2_fitted[t]),
            ]
        }),
    )
}

pub fn forecast(a: &ForecastArgs, cfg: &Config, out: &mut OutDir) -> Result<(), CliError> {
    let (spec, arma) = load_model(&a.model, cfg)?;
    let column = a.column.clone().or(cfg.forecast.column.clone());
    let r = series(&a.input, column.as_deref())?;
    let horizon = a.horizon.or(cfg.forecast.horizon).unwrap_or(10);
    let method = match a.method {
        Some(MethodArg::Sample) => EMethod::Sample,
        Some(MethodArg::Analytic) => EMethod::Analytic,
        None => cfg.forecast.method.unwrap_or_default(),
    };
    let x = arma_residuals(&arma, &r);
    let em = abs_mean(&spec.innovation)?;
    let lam = lambda_coeffs(&spec, x.len())?;
    let filtered = filter(&spec, &x, em, &lam)
        .ok_or_else(|| Error::Numerical("log-variance filter overflowed on the history".into()))?;
    let fc = Forecaster::new(&spec, &arma, &r, &x, &filtered.z, em, horizon, method)?;
    let sets = fc.forecast_all()?;
    out.csv(
        "forecast.csv",
        &["h", "r_hat", "r2_hat", "sigma2_hat", "sigma2_check", "sigma2_tilde", "mse_sigma2", "mse_ln"],
        sets.iter().map(|s| {
            vec![
                s.horizon.to_string(),
                num(s.r_hat),
                num(s.r2_hat),
                num(s.sigma2_hat),
                num(s.sigma2_check),
                num(s.sigma2_tilde),
                num(s.mse_sigma2),
                num(s.mse_ln),
            ]
        }),
    )?;
    out.json("forecast.json", &sets)
}

#[derive(Serialize)]
struct AcovSummary<'a> {
    report: &'a sfiegarch::acov_spectral::AcovReport,
    kurtosis: Option<f64>,
}

pub fn acov(a: &AcovArgs, cfg: &Config, out: &mut OutDir) -> Result<(), CliError> {
    let (spec, _) = load_model(&a.model, cfg)?;
    let max_lag = a.max_lag.or(cfg.acov.max_lag).unwrap_or(100);
    let report = acov_report(&spec, max_lag)?;
    let values = match a.series {
        SeriesArg::LnX2 => &report.gamma_ln_x2,
        SeriesArg::LnSigma2 => &report.gamma_ln_sigma2,
    };
    out.csv(
        "acov.csv",
        &["lag", "value"],
        values.iter().enumerate().map(|(h, v)| vec![h.to_string(), num(*v)]),
    )?;
    let kurtosis = kurtosis_asymmetry(&spec).ok().map(|(k, _)| k);
    out.json("acov.json", &AcovSummary { report: &report, kurtosis })
}

pub fn spectrum(a: &SpectrumArgs, cfg: &Config, out: &mut OutDir) -> Result<(), CliError> {
    let (spec, _) = load_model(&a.model, cfg)?;
    let points = a.points.or(cfg.spectrum.points).unwrap_or(512);
    if points < 2 {
        return Err(CliError::Usage("--points must be >= 2".into()));
    }
    let sp = Spectrum::new(&spec)?;
    let rows: Vec<Vec<String>> = (0..points)
        .into_par_iter()
        .map(|j| {
            let w = PI * j as f64 / (points - 1) as f64;
            let v = match a.series {
                SeriesArg::LnX2 => sp.ln_x2(w),
                SeriesArg::LnSigma2 => sp.ln_sigma2(w),
            };
            vec![num(w), num(if v.pole { f64::INFINITY } else { v.value })]
        })
        .collect();
    out.csv("spectrum.csv", &["freq", "value"], rows)
}

#[derive(Serialize)]
struct DiagSummary {
    descriptive: sfiegarch::data::Descriptive,
    portmanteau: Vec<sfiegarch::evaluate::PortmanteauRow>,
    portmanteau_squares: Vec<sfiegarch::evaluate::PortmanteauRow>,
    cpgram: sfiegarch::evaluate::CpgramResult,
    density_transform: Option<sfiegarch::evaluate::PitTable>,
}

fn portmanteau_rows(rows: &[sfiegarch::evaluate::PortmanteauRow], series: &str) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                series.to_string(),
                r.lag.to_string(),
                r.df.to_string(),
                num(r.bp),
                num(r.bp_pvalue),
                num(r.lb),
                num(r.lb_pvalue),
            ]
        })
        .collect()
}

pub fn diag(a: &DiagArgs, cfg: &Config, out: &mut OutDir) -> Result<(), CliError> {
    let dc = &cfg.diag;
    let column = a.column.clone().or(dc.column.clone());
    let x = series(&a.input, column.as_deref())?;
    let lags = a.lags.clone().or(dc.lags.clone()).unwrap_or_else(|| vec![5, 10, 20]);
    let fitted = a.fitted_params.or(dc.fitted_params).unwrap_or(0);
    let squares: Vec<f64> = x.iter().map(|v| v * v).collect();
    let density_transform = match &a.sigma2_column {
        Some(col) => {
            let sigma2 = series(&a.input, Some(col))?;
            let grid = a
                .nu_grid
                .clone()
                .or(dc.nu_grid.clone())
                .unwrap_or_else(|| vec![1.2, 1.5, 2.0, 2.5, 3.0]);
            Some(density_transform_test(&x, &sigma2, &grid)?)
        }
        None => None,
    };
    let summary = DiagSummary {
        descriptive: descriptive_stats(&x)?,
        portmanteau: portmanteau(&x, &lags, fitted)?,
        portmanteau_squares: portmanteau(&squares, &lags, 0)?,
        cpgram: cumulative_periodogram(&x)?,
        density_transform,
    };
    let mut rows = portmanteau_rows(&summary.portmanteau, "x");
    rows.extend(portmanteau_rows(&summary.portmanteau_squares, "x2"));
    out.csv("diag_portmanteau.csv", &["series", "lag", "df", "bp", "bp_pvalue", "lb", "lb_pvalue"], rows)?;
    out.csv(
        "periodogram.csv",
        &["freq", "value"],
        periodogram(&x)?.into_iter().map(|(w, v)| vec![num(w), num(v)]),
    )?;
    out.json("diag.json", &summary)
}

pub fn evaluate(a: &EvaluateArgs, cfg: &Config, out: &mut OutDir) -> Result<(), CliError> {
    let ec = &cfg.evaluate;
    let actual = series(&a.actual, a.actual_column.as_deref())?;
    let predicted = series(&a.forecast, a.forecast_column.as_deref())?;
    let benchmark = match &a.benchmark {
        Some(p) => Some(series(p, a.benchmark_column.as_deref())?),
        None => None,
    };
    let density = match &a.density {
        Some(p) => Some(DensityForecast {
            mu: series(p, Some("mu"))?,
            sigma2: series(p, Some("sigma2"))?,
            dist: innovation_for(a.nu.or(ec.nu))?,
        }),
        None => None,
    };
    let defaults = EvalOptions::default();
    let opts = EvalOptions {
        benchmark,
        horizon: a.horizon.or(ec.horizon).unwrap_or(defaults.horizon),
        n_fit: a.n_fit.or(ec.n_fit),
        hac_lags: a.hac_lags.or(ec.hac_lags).unwrap_or(defaults.hac_lags),
        lags: a.lags.clone().or(ec.lags.clone()).unwrap_or(defaults.lags),
        fitted_params: a.fitted_params.or(ec.fitted_params).unwrap_or(0),
        density,
    };
    let report = run_evaluation(&actual, &predicted, &opts)?;
    let e = &report.errors;
    out.csv(
        "evaluate_errors.csv",
        &["mae", "mpe", "max_ae", "mpe_skipped"],
        [vec![num(e.mae), opt(e.mpe), num(e.max_ae), e.mpe_skipped.to_string()]],
    )?;
    let mut tests = Vec::new();
    if let Some(dm) = &report.dm {
        tests.push(vec!["diebold_mariano".into(), num(dm.stat), num(dm.pvalue)]);
    }
    if let Some(mz) = &report.mz {
        tests.push(vec!["mincer_zarnowitz_wald".into(), num(mz.wald), num(mz.wald_pvalue)]);
    }
    if let Some(cp) = &report.cpgram {
        tests.push(vec!["cumulative_periodogram".into(), num(cp.stat), num(cp.pvalue)]);
    }
    if let Some(ks) = &report.ks_pit {
        tests.push(vec!["ks_pit".into(), num(ks.ks_stat), num(ks.pvalue)]);
    }
    out.csv("evaluate_tests.csv", &["test", "stat", "pvalue"], tests)?;
    if let Some(mz) = &report.mz {
        out.csv(
            "evaluate_mz.csv",
            &["gamma0", "se0", "gamma1", "se1", "lambda_correction", "wald", "wald_pvalue"],
            [vec![
                num(mz.gamma0),
                num(mz.se0),
                num(mz.gamma1),
                num(mz.se1),
                num(mz.lambda_correction),
                num(mz.wald),
                num(mz.wald_pvalue),
            ]],
        )?;
    }
    out.csv(
        "evaluate_portmanteau.csv",
        &["series", "lag", "df", "bp", "bp_pvalue", "lb", "lb_pvalue"],
        portmanteau_rows(&report.portmanteau, "error"),
    )?;
    out.json("evaluate.json", &report)
}

fn read_day_starts(path: &Path) -> Result<Vec<DateTime<chrono::FixedOffset>>, CliError> {
    let mut starts = Vec::new();
    for (i, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let t = DateTime::parse_from_rfc3339(text).map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("{}: {e}", path.display()),
        })?;
        starts.push(t);
    }
    Ok(starts)
}

pub fn ingest(a: &IngestArgs, cfg: &Config, out: &mut OutDir) -> Result<(), CliError> {
    let ic = &cfg.ingest;
    let mut ingest_cfg = IngestConfig::default();
    if let Some(scale) = a.scale.or(ic.scale) {
        ingest_cfg.scale = scale;
    }
    if let Some(f) = a.frequency.clone().or(ic.frequency.clone()) {
        ingest_cfg.frequency = f;
    }
    if let Some(p) = &a.day_starts {
        ingest_cfg.day_starts = Some(read_day_starts(p)?);
    }
    let mut ds = ingest_prices(open(&a.input)?, &ingest_cfg)?;
    let block = a.block.or(ic.block).unwrap_or(1);
    if block != 1 {
        let partial = match a.partial {
            Some(PartialArg::Drop) => Partial::Drop,
            Some(PartialArg::Keep) => Partial::Keep,
            None => ic.partial.unwrap_or_default(),
        };
        ds = aggregate_returns(&ds, block, partial)?;
    }
    out.csv(
        "returns.csv",
        &["timestamp", "day", "r"],
        (0..ds.len()).map(|t| vec![ds.timestamps[t].to_rfc3339(), ds.day[t].to_string(), num(ds.returns[t])]),
    )?;
    out.csv(
        "day_counts.csv",
        &["day", "count"],
        ds.day_counts().into_iter().enumerate().map(|(d, c)| vec![(d + 1).to_string(), c.to_string()]),
    )?;
    out.json("stats.json", &descriptive_stats(&ds.returns)?)
}
