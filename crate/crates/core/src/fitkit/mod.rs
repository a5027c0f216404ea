//! Damped least-squares fitting and the recipes built on it.
//!
//! [`least_squares`] minimizes `sum(((y - f(x)) / sigma)^2)` over the free
//! parameters of a [`Model`] with a Levenberg-Marquardt iteration.
//! Uncertainties come from the inverse normal-equations matrix at the
//! optimum, inflated by the reduced chi-square when it exceeds one unless
//! [`FitOptions::scale_covariance`] is off.
//!
//! The spectral and lifetime recipes treat samples whose errors are exactly
//! the shot noise of the observed counts ([`Sample::counts`]) specially: after
//! the first fit they refit once with errors `sqrt(max(f(x), 1))` taken from
//! the fitted model, which removes the downward bias that observed-count
//! weights cause at low counts.

mod lm;
mod models;
mod recipes;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;

use crate::{Error, Result};

pub use self::lm::{solve, FitOptions, JacobianMode, Residuals};
pub use self::models::{
    central_difference_gradient, ExponentialDecay, GaussianPeak, LinearThroughOrigin, LorentzianDoublet,
    LorentzianPeak, LorentzianPeakHalfWidth, Model,
};
pub use self::recipes::{
    fit_cb_joint, fit_cb_single, fit_inhomogeneous, fit_lifetime, fit_ple_doublet, fit_ple_line, CbFixed,
};

/// One observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Abscissa.
    pub x: f64,
    /// Observed value.
    pub y: f64,
    /// Standard error of `y`.
    pub sigma: f64,
}

impl Sample {
    /// Observation with shot-noise error `sqrt(max(y, 1))`.
    pub fn counts(x: f64, y: f64) -> Self {
        Sample {
            x,
            y,
            sigma: y.max(1.0).sqrt(),
        }
    }
}

/// Builds shot-noise weighted samples from paired slices.
pub fn shot_noise_samples(x: &[f64], y: &[f64]) -> Result<Vec<Sample>> {
    if x.len() != y.len() {
        return Err(Error::domain("x and y differ in length"));
    }
    Ok(x.iter().zip(y).map(|(&x, &y)| Sample::counts(x, y)).collect())
}

/// A model parameter with bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    /// Name reported in results.
    pub name: String,
    /// Initial value.
    pub value: f64,
    /// Lower bound.
    pub lower: f64,
    /// Upper bound.
    pub upper: f64,
    /// Held at `value` when set.
    pub fixed: bool,
    /// Typical magnitude, used to size finite-difference steps.
    pub scale: f64,
}

impl Parameter {
    /// Unbounded free parameter.
    pub fn free(name: &str, value: f64) -> Self {
        Parameter {
            name: name.to_string(),
            value,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            fixed: false,
            scale: value.abs().max(1e-3),
        }
    }

    /// Sets bounds.
    pub fn bounded(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    /// Marks the parameter as fixed.
    pub fn fixed(mut self) -> Self {
        self.fixed = true;
        self
    }

    /// Sets the finite-difference scale.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale.abs();
        self
    }
}

/// A model, its parameters and the data to fit.
#[derive(Debug, Clone)]
pub struct FitProblem<M> {
    /// Model evaluated at each sample abscissa.
    pub model: M,
    /// Parameters in the order the model expects.
    pub params: Vec<Parameter>,
    /// Observations.
    pub data: Vec<Sample>,
}

impl<M: Model> FitProblem<M> {
    /// Checks the problem invariants: parameter count matches the model, at
    /// least one free parameter, more data than free parameters, bounds
    /// containing the initial values, positive errors.
    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.model.n_params() {
            return Err(Error::domain("parameter count does not match the model"));
        }
        let free = self.params.iter().filter(|p| !p.fixed).count();
        if free == 0 {
            return Err(Error::domain("at least one free parameter is required"));
        }
        if self.data.len() <= free {
            return Err(Error::domain("need more data points than free parameters"));
        }
        for p in &self.params {
            if !(p.lower <= p.value && p.value <= p.upper) {
                return Err(Error::domain(alloc::format!("initial value of {} is outside its bounds", p.name)));
            }
        }
        if self.data.iter().any(|s| !(s.sigma > 0.0) || !s.y.is_finite() || !s.x.is_finite()) {
            return Err(Error::domain("data must be finite with positive errors"));
        }
        Ok(())
    }
}

impl<M: Model> Residuals for FitProblem<M> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn residuals(&self, params: &[f64], out: &mut [f64]) {
        for (r, s) in out.iter_mut().zip(&self.data) {
            *r = (s.y - self.model.eval(s.x, params)) / s.sigma;
        }
    }

    fn jacobian(&self, params: &[f64], out: &mut [f64]) -> bool {
        let n = params.len();
        let mut grad = alloc::vec![0.0; n];
        for (i, s) in self.data.iter().enumerate() {
            if !self.model.gradient(s.x, params, &mut grad) {
                return false;
            }
            for j in 0..n {
                out[i * n + j] = -grad[j] / s.sigma;
            }
        }
        true
    }
}

/// Fits a model to data with default options.
pub fn least_squares<M: Model>(problem: &FitProblem<M>) -> Result<FitResult> {
    least_squares_with(problem, &FitOptions::default())
}

/// Fits a model to data.
pub fn least_squares_with<M: Model>(problem: &FitProblem<M>, options: &FitOptions) -> Result<FitResult> {
    problem.validate()?;
    solve(problem, &problem.params, options, problem.model.name())
}

/// Conditions attached to a fit result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitFlag {
    /// The normal-equations matrix at the optimum is singular; uncertainties
    /// are infinite.
    SingularJacobian,
    /// The iteration limit was reached.
    MaxIterations,
    /// Two model components could not be separated.
    Degenerate,
    /// A decay fit found no significant decaying component.
    NoDecay,
}

impl FitFlag {
    /// Short identifier.
    pub fn as_str(self) -> &'static str {
        match self {
            FitFlag::SingularJacobian => "singular_jacobian",
            FitFlag::MaxIterations => "max_iterations",
            FitFlag::Degenerate => "degenerate",
            FitFlag::NoDecay => "no_decay",
        }
    }
}

/// A quantity computed from the fitted parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    /// Name.
    pub name: String,
    /// Value.
    pub value: f64,
    /// Propagated 1-sigma uncertainty.
    pub uncertainty: f64,
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Model identifier.
    pub model: String,
    /// Parameter names, in model order.
    pub names: Vec<String>,
    /// Best-fit values.
    pub estimates: Vec<f64>,
    /// 1-sigma uncertainties (zero for fixed parameters).
    pub uncertainties: Vec<f64>,
    /// Row-major covariance over all parameters.
    pub covariance: Vec<f64>,
    /// Minimized chi-square.
    pub chi2: f64,
    /// Degrees of freedom.
    pub dof: usize,
    /// `chi2 / dof`.
    pub reduced_chi2: f64,
    /// Whether a convergence criterion was met.
    pub converged: bool,
    /// Iterations used.
    pub iterations: usize,
    /// Diagnostics.
    pub flags: Vec<FitFlag>,
    /// Quantities derived from the parameters.
    pub derived: Vec<Derived>,
}

impl FitResult {
    /// Index of a parameter by name.
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Estimate and uncertainty of a parameter or derived quantity.
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.index(name)
            .map(|i| (self.estimates[i], self.uncertainties[i]))
            .or_else(|| {
                self.derived
                    .iter()
                    .find(|d| d.name == name)
                    .map(|d| (d.value, d.uncertainty))
            })
    }

    /// Covariance entry.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.names.len() + j]
    }

    /// Whether a flag is set.
    pub fn has_flag(&self, flag: FitFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Uncertainty of `sum(w_i p_i)` from the covariance.
    pub fn linear_uncertainty(&self, weights: &[(usize, f64)]) -> f64 {
        let mut var = 0.0;
        for &(i, wi) in weights {
            for &(j, wj) in weights {
                var += wi * wj * self.cov(i, j);
            }
        }
        var.max(0.0).sqrt()
    }
}
