//! Derivative-free simplex search followed by a quasi-Newton polish.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub initial_step: f64,
    pub bfgs_iter: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-8,
            initial_step: 0.1,
            bfgs_iter: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Nelder-Mead simplex minimization.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        sanitize(f(x))
    };
    if n == 0 {
        let fx = eval(x0);
        return OptimResult {
            x: vec![],
            fx,
            iterations: 0,
            evaluations: evals,
            converged: true,
        };
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        let step = if v[i].abs() > 1e-8 {
            opts.initial_step * v[i].abs().max(0.25)
        } else {
            opts.initial_step
        };
        v[i] += step;
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut iter = 0;
    let mut converged = false;
    while iter < opts.max_iter {
        iter += 1;
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        fv = idx.iter().map(|&i| fv[i]).collect();

        let spread = (fv[n] - fv[0]).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if fv[0].is_finite() && spread <= opts.tol * (fv[0].abs() + opts.tol) && size < 1e-6 {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < fv[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        if fr < fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + 0.5 * (*x - b);
            }
            fv[i] = eval(&simplex[i]);
        }
    }
    let best = (0..=n).min_by(|&a, &b| fv[a].total_cmp(&fv[b])).unwrap_or(0);
    OptimResult {
        x: simplex[best].clone(),
        fx: fv[best],
        iterations: iter,
        evaluations: evals,
        converged,
    }
}

/// Central-difference gradient.
pub fn numerical_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// BFGS with numerical gradients and backtracking Armijo line search.
pub fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut x = DVector::from_column_slice(x0);
    let mut fx = sanitize(f(x0));
    evals += 1;
    if n == 0 || !fx.is_finite() {
        return OptimResult {
            x: x0.to_vec(),
            fx,
            iterations: 0,
            evaluations: evals,
            converged: n == 0,
        };
    }
    let grad = |x: &DVector<f64>| DVector::from_vec(numerical_gradient(f, x.as_slice()));
    let mut g = grad(&x);
    evals += 2 * n;
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut converged = false;
    let mut iter = 0;
    while iter < opts.bfgs_iter {
        iter += 1;
        if g.amax() < 1e-10 {
            converged = true;
            break;
        }
        let mut dir = -(&hinv * &g);
        let mut slope = g.dot(&dir);
        if slope >= 0.0 {
            hinv = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = g.dot(&dir);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn = &x + t * &dir;
            let fnew = sanitize(f(xn.as_slice()));
            evals += 1;
            if fnew <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fnew));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            converged = true;
            break;
        };
        let gn = grad(&xn);
        evals += 2 * n;
        let sv = &xn - &x;
        let yv = &gn - &g;
        let sy = sv.dot(&yv);
        let df = fx - fnew;
        x = xn;
        fx = fnew;
        g = gn;
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let a = &i - rho * &sv * yv.transpose();
            let b = &i - rho * &yv * sv.transpose();
            hinv = &a * &hinv * &b + rho * &sv * sv.transpose();
        }
        if df.abs() <= opts.tol * (fx.abs() + opts.tol) && sv.amax() < 1e-7 {
            converged = true;
            break;
        }
    }
    OptimResult {
        x: x.as_slice().to_vec(),
        fx,
        iterations: iter,
        evaluations: evals,
        converged,
    }
}

/// Simplex search followed by BFGS polish; returns the better of the two.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let nm = nelder_mead(f, x0, opts);
    let polished = bfgs(f, &nm.x, opts);
    let iterations = nm.iterations + polished.iterations;
    let evaluations = nm.evaluations + polished.evaluations;
    if polished.fx <= nm.fx {
        OptimResult {
            iterations,
            evaluations,
            converged: polished.converged || nm.converged,
            ..polished
        }
    } else {
        OptimResult {
            iterations,
            evaluations,
            ..nm
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn minimizes_rosenbrock() {
        let r = minimize(&rosenbrock, &[-1.2, 1.0], &OptimOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn nelder_mead_handles_kink() {
        let f = |x: &[f64]| (x[0] - 0.3).abs() + (x[1] + 0.2).powi(2);
        let r = nelder_mead(&f, &[0.0, 0.0], &OptimOptions::default());
        assert!((r.x[0] - 0.3).abs() < 1e-5);
        assert!((r.x[1] + 0.2).abs() < 1e-3);
    }

    #[test]
    fn bfgs_quadratic() {
        let f = |x: &[f64]| 3.0 * (x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2) + x[0] * x[1];
        let r = bfgs(&f, &[0.0, 0.0], &OptimOptions::default());
        // Stationary point of the quadratic: 6(x0-1)+x1=0, 2(x1-2)+x0=0.
        let x0 = 8.0 / 11.0;
        let x1 = 2.0 - x0 / 2.0;
        assert!((r.x[0] - x0).abs() < 1e-6 && (r.x[1] - x1).abs() < 1e-6);
    }
}
