use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;

use super::{FitFlag, FitResult, Parameter};
use crate::linalg::{cholesky, cholesky_inverse, cholesky_solve};
use crate::{Error, Result};

/// A weighted residual vector `r(p)`; the fit minimizes `|r|^2`.
pub trait Residuals {
    /// Number of residuals.
    fn len(&self) -> usize;

    /// Whether there are no residuals.
    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `r(params)` into `out`.
    fn residuals(&self, params: &[f64], out: &mut [f64]);

    /// Writes the row-major `len x params.len()` Jacobian of the residuals,
    /// returning `false` when no analytic form exists.
    fn jacobian(&self, _params: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// Source of the Jacobian used by the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Central finite differences.
    #[default]
    Numeric,
    /// The residuals' analytic Jacobian, falling back to finite differences
    /// when none is provided.
    Analytic,
}

/// Iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Iteration limit.
    pub max_iterations: usize,
    /// Stop when an accepted step lowers chi-square by less than this
    /// fraction.
    pub rel_chi2_tol: f64,
    /// Stop when the step norm falls below this fraction of the parameter
    /// norm.
    pub step_tol: f64,
    /// Jacobian source.
    pub jacobian: JacobianMode,
    /// Inflate the covariance by the reduced chi-square when it exceeds one.
    pub scale_covariance: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 10_000,
            rel_chi2_tol: 1e-9,
            step_tol: 1e-12,
            jacobian: JacobianMode::Numeric,
            scale_covariance: true,
        }
    }
}

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e20;
const FD_REL_STEP: f64 = 1e-6;
const SINGULAR_TOL: f64 = 1e-14;

struct Engine<'a, R: ?Sized> {
    res: &'a R,
    params: &'a [Parameter],
    free: Vec<usize>,
    mode: JacobianMode,
}

impl<R: Residuals + ?Sized> Engine<'_, R> {
    fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut full: Vec<f64> = self.params.iter().map(|p| p.value).collect();
        for (&idx, &v) in self.free.iter().zip(free_values) {
            full[idx] = v;
        }
        full
    }

    fn clamp(&self, free_values: &mut [f64]) {
        for (&idx, v) in self.free.iter().zip(free_values.iter_mut()) {
            let p = &self.params[idx];
            *v = v.max(p.lower).min(p.upper);
        }
    }

    fn chi2(&self, full: &[f64], buf: &mut [f64]) -> f64 {
        self.res.residuals(full, buf);
        let s: f64 = buf.iter().map(|r| r * r).sum();
        if s.is_finite() {
            s
        } else {
            f64::INFINITY
        }
    }

    /// Jacobian of the residuals with respect to the free parameters.
    fn jacobian(&self, full: &[f64]) -> Vec<f64> {
        let m = self.res.len();
        let nf = self.free.len();
        if self.mode == JacobianMode::Analytic {
            let n = full.len();
            let mut all = vec![0.0; m * n];
            if self.res.jacobian(full, &mut all) {
                let mut j = vec![0.0; m * nf];
                for i in 0..m {
                    for (k, &idx) in self.free.iter().enumerate() {
                        j[i * nf + k] = all[i * n + idx];
                    }
                }
                return j;
            }
        }
        let mut j = vec![0.0; m * nf];
        let mut plus = vec![0.0; m];
        let mut minus = vec![0.0; m];
        let mut p = full.to_vec();
        for (k, &idx) in self.free.iter().enumerate() {
            let par = &self.params[idx];
            let h = FD_REL_STEP * (full[idx].abs().max(par.scale).max(1e-12));
            // One-sided near a bound.
            let (hi, lo) = (
                (full[idx] + h).min(par.upper),
                (full[idx] - h).max(par.lower),
            );
            p[idx] = hi;
            self.res.residuals(&p, &mut plus);
            p[idx] = lo;
            self.res.residuals(&p, &mut minus);
            p[idx] = full[idx];
            let span = hi - lo;
            for i in 0..m {
                j[i * nf + k] = (plus[i] - minus[i]) / span;
            }
        }
        j
    }
}

fn normal_equations(j: &[f64], r: &[f64], m: usize, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; n * n];
    let mut g = vec![0.0; n];
    for i in 0..m {
        let row = &j[i * n..(i + 1) * n];
        for p in 0..n {
            g[p] += row[p] * r[i];
            for q in 0..=p {
                a[p * n + q] += row[p] * row[q];
            }
        }
    }
    for p in 0..n {
        for q in 0..p {
            a[q * n + p] = a[p * n + q];
        }
    }
    (a, g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimizes `|r(p)|^2` over the free entries of `params`.
///
/// Never fails on non-convergence: the result carries `converged = false`
/// and [`FitFlag::MaxIterations`] instead.
pub fn solve<R: Residuals + ?Sized>(
    res: &R,
    params: &[Parameter],
    options: &FitOptions,
    model: &str,
) -> Result<FitResult> {
    let free: Vec<usize> = (0..params.len()).filter(|&i| !params[i].fixed).collect();
    let m = res.len();
    let nf = free.len();
    if nf == 0 || m <= nf {
        return Err(Error::domain("need at least one free parameter and more residuals than free parameters"));
    }
    let engine = Engine {
        res,
        params,
        free,
        mode: options.jacobian,
    };

    let mut x: Vec<f64> = engine.free.iter().map(|&i| params[i].value).collect();
    let mut buf = vec![0.0; m];
    let mut chi2 = engine.chi2(&engine.expand(&x), &mut buf);
    if !chi2.is_finite() {
        return Err(Error::domain("model is not finite at the initial parameters"));
    }
    let mut lambda = LAMBDA_INIT;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let full = engine.expand(&x);
        engine.res.residuals(&full, &mut buf);
        let jac = engine.jacobian(&full);
        let (a, g) = normal_equations(&jac, &buf, m, nf);
        let max_diag = (0..nf).map(|i| a[i * nf + i]).fold(0.0, f64::max);
        if max_diag == 0.0 {
            // Residuals do not depend on any free parameter.
            converged = true;
            break;
        }

        let mut accepted = None;
        while lambda <= LAMBDA_MAX {
            let mut damped = a.clone();
            for i in 0..nf {
                damped[i * nf + i] += lambda * a[i * nf + i].max(max_diag * 1e-12);
            }
            if let Some(l) = cholesky(&damped, nf, 0.0) {
                let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
                let step = cholesky_solve(&l, nf, &neg_g);
                let mut trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
                engine.clamp(&mut trial);
                let trial_chi2 = engine.chi2(&engine.expand(&trial), &mut buf);
                if trial_chi2 <= chi2 {
                    accepted = Some((trial, trial_chi2));
                    break;
                }
            }
            lambda *= 10.0;
        }

        let Some((trial, trial_chi2)) = accepted else {
            // No downhill step at any damping: a minimum to working precision.
            converged = true;
            break;
        };
        let step_norm = norm(&x.iter().zip(&trial).map(|(a, b)| b - a).collect::<Vec<_>>());
        let decrease = chi2 - trial_chi2;
        let x_norm = norm(&trial);
        x = trial;
        let prev = chi2;
        chi2 = trial_chi2;
        lambda = (lambda / 10.0).max(1e-12);
        if chi2 == 0.0
            || decrease <= options.rel_chi2_tol * prev
            || step_norm <= options.step_tol * (x_norm + options.step_tol)
        {
            converged = true;
            break;
        }
    }

    let mut flags = Vec::new();
    if !converged {
        flags.push(FitFlag::MaxIterations);
    }

    let full = engine.expand(&x);
    engine.res.residuals(&full, &mut buf);
    let jac = engine.jacobian(&full);
    let (a, _) = normal_equations(&jac, &buf, m, nf);
    let dof = m - nf;
    let reduced = chi2 / dof as f64;
    let n = params.len();
    let mut covariance = vec![0.0; n * n];
    match cholesky(&a, nf, SINGULAR_TOL) {
        Some(l) => {
            let inv = cholesky_inverse(&l, nf);
            let scale = if options.scale_covariance { reduced.max(1.0) } else { 1.0 };
            for (p, &ip) in engine.free.iter().enumerate() {
                for (q, &iq) in engine.free.iter().enumerate() {
                    covariance[ip * n + iq] = inv[p * nf + q] * scale;
                }
            }
        }
        None => {
            flags.push(FitFlag::SingularJacobian);
            for &ip in &engine.free {
                covariance[ip * n + ip] = f64::INFINITY;
            }
        }
    }
    let uncertainties = (0..n).map(|i| covariance[i * n + i].max(0.0).sqrt()).collect();

    Ok(FitResult {
        model: model.to_string(),
        names: params.iter().map(|p| p.name.clone()).collect(),
        estimates: full,
        uncertainties,
        covariance,
        chi2,
        dof,
        reduced_chi2: reduced,
        converged,
        iterations,
        flags,
        derived: Vec::new(),
    })
}
