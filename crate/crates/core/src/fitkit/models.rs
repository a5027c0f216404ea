#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;

/// A scalar model `f(x; p)`.
pub trait Model {
    /// Identifier reported in results.
    fn name(&self) -> &str;

    /// Number of parameters.
    fn n_params(&self) -> usize;

    /// Evaluates the model.
    fn eval(&self, x: f64, params: &[f64]) -> f64;

    /// Writes `df/dp` into `grad`, returning `false` when the model has no
    /// analytic gradient.
    fn gradient(&self, _x: f64, _params: &[f64], _grad: &mut [f64]) -> bool {
        false
    }
}

/// Central-difference estimate of `df/dp`, with steps relative to each
/// parameter's magnitude.
pub fn central_difference_gradient<M: Model + ?Sized>(model: &M, x: f64, params: &[f64], grad: &mut [f64]) {
    let mut p = params.to_vec();
    for i in 0..params.len() {
        let h = 1e-6 * params[i].abs().max(1e-3);
        p[i] = params[i] + h;
        let up = model.eval(x, &p);
        p[i] = params[i] - h;
        let down = model.eval(x, &p);
        p[i] = params[i];
        grad[i] = (up - down) / (2.0 * h);
    }
}

/// `y = slope * x`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearThroughOrigin;

impl Model for LinearThroughOrigin {
    fn name(&self) -> &str {
        "linear"
    }
    fn n_params(&self) -> usize {
        1
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x
    }
    fn gradient(&self, x: f64, _p: &[f64], g: &mut [f64]) -> bool {
        g[0] = x;
        true
    }
}

/// Lorentzian of squared half width `hw2` and its partials with respect to
/// center, `hw2` and amplitude.
#[inline]
fn lorentz_parts(x: f64, center: f64, hw2: f64, amplitude: f64) -> (f64, f64, f64, f64) {
    let d = x - center;
    let den = d * d + hw2;
    let shape = hw2 / den;
    let value = amplitude * shape;
    let d_center = amplitude * hw2 * 2.0 * d / (den * den);
    let d_hw2 = amplitude * d * d / (den * den);
    (value, d_center, d_hw2, shape)
}

/// Lorentzian peak on a constant offset; parameters
/// `[center, fwhm, amplitude, offset]`, amplitude being the peak height.
#[derive(Debug, Clone, Copy, Default)]
pub struct LorentzianPeak;

impl Model for LorentzianPeak {
    fn name(&self) -> &str {
        "lorentzian"
    }
    fn n_params(&self) -> usize {
        4
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let w = p[1];
        lorentz_parts(x, p[0], 0.25 * w * w, p[2]).0 + p[3]
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) -> bool {
        let w = p[1];
        let (_, dc, dh, shape) = lorentz_parts(x, p[0], 0.25 * w * w, p[2]);
        g[0] = dc;
        g[1] = dh * 0.5 * w;
        g[2] = shape;
        g[3] = 1.0;
        true
    }
}

/// [`LorentzianPeak`] parameterized by half width at half maximum:
/// `[center, half_width, amplitude, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LorentzianPeakHalfWidth;

impl Model for LorentzianPeakHalfWidth {
    fn name(&self) -> &str {
        "lorentzian_hwhm"
    }
    fn n_params(&self) -> usize {
        4
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        lorentz_parts(x, p[0], p[1] * p[1], p[2]).0 + p[3]
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) -> bool {
        let (_, dc, dh, shape) = lorentz_parts(x, p[0], p[1] * p[1], p[2]);
        g[0] = dc;
        g[1] = dh * 2.0 * p[1];
        g[2] = shape;
        g[3] = 1.0;
        true
    }
}

/// Two Lorentzians on a shared offset:
/// `[center_1, fwhm_1, amplitude_1, center_2, fwhm_2, amplitude_2, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LorentzianDoublet;

impl Model for LorentzianDoublet {
    fn name(&self) -> &str {
        "lorentzian_doublet"
    }
    fn n_params(&self) -> usize {
        7
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        lorentz_parts(x, p[0], 0.25 * p[1] * p[1], p[2]).0
            + lorentz_parts(x, p[3], 0.25 * p[4] * p[4], p[5]).0
            + p[6]
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) -> bool {
        for k in 0..2 {
            let o = 3 * k;
            let w = p[o + 1];
            let (_, dc, dh, shape) = lorentz_parts(x, p[o], 0.25 * w * w, p[o + 2]);
            g[o] = dc;
            g[o + 1] = dh * 0.5 * w;
            g[o + 2] = shape;
        }
        g[6] = 1.0;
        true
    }
}

/// Gaussian peak on a constant offset: `[center, sigma, amplitude, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianPeak;

impl Model for GaussianPeak {
    fn name(&self) -> &str {
        "gaussian"
    }
    fn n_params(&self) -> usize {
        4
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        let z = (x - p[0]) / p[1];
        p[2] * (-0.5 * z * z).exp() + p[3]
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) -> bool {
        let z = (x - p[0]) / p[1];
        let e = (-0.5 * z * z).exp();
        g[0] = p[2] * e * z / p[1];
        g[1] = p[2] * e * z * z / p[1];
        g[2] = e;
        g[3] = 1.0;
        true
    }
}

/// `amplitude * exp(-x / tau) + offset`: `[amplitude, tau, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialDecay;

impl Model for ExponentialDecay {
    fn name(&self) -> &str {
        "exponential_decay"
    }
    fn n_params(&self) -> usize {
        3
    }
    fn eval(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (-x / p[1]).exp() + p[2]
    }
    fn gradient(&self, x: f64, p: &[f64], g: &mut [f64]) -> bool {
        let e = (-x / p[1]).exp();
        g[0] = e;
        g[1] = p[0] * e * x / (p[1] * p[1]);
        g[2] = 1.0;
        true
    }
}
