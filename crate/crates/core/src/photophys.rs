//! Emitter photophysics and the closed-form two-emitter correlation model.
//!
//! Two emitters feed the two input ports of a 50:50 beamsplitter. The
//! normalized cross-correlation of the two output ports is
//!
//! ```text
//! g2(t) = 1/2 g2_single(t) + 1/2 (1 - chi |g1(t)|^2 cos(2 pi delta t))
//! g2_single(t) = 1 - (1 - c_b) exp(-|t| / tau0)
//! |g1(t)|^2    = (1 - c_b) exp(-|t| / tau_c)
//! ```
//!
//! where `c_b` is the background share of the coincidences, `chi` the
//! indistinguishability of the two sources and `delta` their detuning. A
//! measured curve is this expression convolved with the Gaussian timing
//! response of the detector pair.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;

use crate::{Error, Frequency, Rate, Result, Time};

/// Reference values of the two-emitter experiment this toolkit models.
pub mod nominal {
    use crate::{Frequency, Time};

    /// Excited-state lifetime.
    pub fn lifetime() -> Time {
        Time::from_ns(1.73)
    }

    /// Optical linewidth (FWHM) of the first emitter.
    pub fn fwhm_a() -> Frequency {
        Frequency::from_mhz(135.8)
    }

    /// Optical linewidth (FWHM) of the second emitter.
    pub fn fwhm_b() -> Frequency {
        Frequency::from_mhz(134.6)
    }

    /// Detuning between the two emitters.
    pub fn detuning() -> Frequency {
        Frequency::from_mhz(52.1)
    }

    /// Per-detector Gaussian timing jitter.
    pub fn detector_sigma() -> Time {
        Time::from_ps(150.0)
    }

    /// Background share of the coincidence events.
    pub const C_BACKGROUND: f64 = 0.12;

    /// Quoted coherence time.
    pub fn coherence_time() -> Time {
        Time::from_ns(1.18)
    }
}

/// Optional dark (metastable) state entered after an emission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shelving {
    /// Probability of entering the dark state after each emission.
    pub probability: f64,
    /// Mean dwell time in the dark state.
    pub duration: Time,
}

/// Photophysics of one emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    /// Excited-state lifetime.
    pub lifetime: Time,
    /// Transition frequency relative to a reference shared by both emitters.
    pub frequency_offset: Frequency,
    /// Lorentzian optical linewidth (FWHM).
    pub fwhm: Frequency,
    /// Detected photon rate under continuous excitation.
    pub emission_rate: Rate,
    /// Dark-state shelving, off when `None`.
    pub shelving: Option<Shelving>,
}

impl EmitterParams {
    /// Builds and validates an emitter without shelving.
    pub fn new(
        lifetime: Time,
        frequency_offset: Frequency,
        fwhm: Frequency,
        emission_rate: Rate,
    ) -> Result<Self> {
        let params = EmitterParams {
            lifetime,
            frequency_offset,
            fwhm,
            emission_rate,
            shelving: None,
        };
        params.validate()?;
        Ok(params)
    }

    /// Returns a copy with dark-state shelving enabled.
    pub fn with_shelving(mut self, probability: f64, duration: Time) -> Result<Self> {
        self.shelving = Some(Shelving {
            probability,
            duration,
        });
        self.validate()?;
        Ok(self)
    }

    /// Checks the physical constraints on the parameters.
    pub fn validate(&self) -> Result<()> {
        if !(self.lifetime.as_s() > 0.0) || !self.lifetime.as_s().is_finite() {
            return Err(Error::domain("emitter lifetime must be positive"));
        }
        let limit = transform_limited_linewidth(self.lifetime)?;
        if !(self.fwhm.as_hz() >= limit.as_hz() * (1.0 - LIMIT_TOLERANCE)) {
            return Err(Error::domain(format!(
                "linewidth {:.3} MHz is below the transform limit {:.3} MHz",
                self.fwhm.as_mhz(),
                limit.as_mhz()
            )));
        }
        if !(self.emission_rate.as_per_s() > 0.0) {
            return Err(Error::domain("emission rate must be positive"));
        }
        if let Some(shelf) = self.shelving {
            if !(0.0..1.0).contains(&shelf.probability) {
                return Err(Error::domain("shelving probability must lie in [0, 1)"));
            }
            if !(shelf.duration.as_s() > 0.0) {
                return Err(Error::domain("shelving duration must be positive"));
            }
        }
        Ok(())
    }

    /// Pure-dephasing rate implied by the lifetime and linewidth.
    pub fn dephasing_rate(&self) -> Result<Rate> {
        pure_dephasing_rate(self.lifetime, self.fwhm)
    }
}

/// Relative slack allowed when comparing a linewidth with the transform limit.
const LIMIT_TOLERANCE: f64 = 1e-12;

/// A pair of emitters on a beamsplitter together with the detection setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomExperiment {
    /// Emitter on input port 1.
    pub emitter_a: EmitterParams,
    /// Emitter on input port 2.
    pub emitter_b: EmitterParams,
    /// Indistinguishability: 1 for identical polarization, 0 for orthogonal.
    pub chi: f64,
    /// Background share of the coincidence events, shared by both arms.
    pub c_background: f64,
    /// Per-detector Gaussian timing jitter.
    pub detector_sigma: Time,
    /// Detuning override; derived from the emitter offsets when `None`.
    pub detuning_override: Option<Frequency>,
    /// Coherence-time override; derived from the mean linewidth when `None`.
    pub coherence_time_override: Option<Time>,
}

impl HomExperiment {
    /// Builds an experiment with derived detuning and coherence time.
    pub fn new(
        emitter_a: EmitterParams,
        emitter_b: EmitterParams,
        chi: f64,
        c_background: f64,
        detector_sigma: Time,
    ) -> Result<Self> {
        let exp = HomExperiment {
            emitter_a,
            emitter_b,
            chi,
            c_background,
            detector_sigma,
            detuning_override: None,
            coherence_time_override: None,
        };
        exp.validate()?;
        Ok(exp)
    }

    /// The reference two-emitter configuration: lifetimes 1.73 ns, linewidths
    /// 135.8 and 134.6 MHz, detuning 52.1 MHz, 150 ps detector jitter.
    pub fn nominal(chi: f64, c_background: f64, emission_rate: Rate) -> Result<Self> {
        let a = EmitterParams::new(
            nominal::lifetime(),
            Frequency::ZERO,
            nominal::fwhm_a(),
            emission_rate,
        )?;
        let b = EmitterParams::new(
            nominal::lifetime(),
            nominal::detuning(),
            nominal::fwhm_b(),
            emission_rate,
        )?;
        HomExperiment::new(a, b, chi, c_background, nominal::detector_sigma())
    }

    /// Checks all invariants.
    pub fn validate(&self) -> Result<()> {
        self.emitter_a.validate()?;
        self.emitter_b.validate()?;
        if !(0.0..=1.0).contains(&self.chi) {
            return Err(Error::domain("chi must lie in [0, 1]"));
        }
        check_background(self.c_background)?;
        if !(self.detector_sigma.as_s() >= 0.0) {
            return Err(Error::domain("detector jitter must be non-negative"));
        }
        if let Some(d) = self.detuning_override {
            if !(d.as_hz() >= 0.0) {
                return Err(Error::domain("detuning must be non-negative"));
            }
        }
        if let Some(tc) = self.coherence_time_override {
            if !(tc.as_s() > 0.0) {
                return Err(Error::domain("coherence time must be positive"));
            }
        }
        Ok(())
    }

    /// Detuning between the emitters.
    pub fn detuning(&self) -> Frequency {
        self.detuning_override
            .unwrap_or_else(|| (self.emitter_a.frequency_offset - self.emitter_b.frequency_offset).abs())
    }

    /// Coherence time: the override, or the value implied by the mean of the
    /// two linewidths.
    pub fn coherence_time(&self) -> Result<Time> {
        match self.coherence_time_override {
            Some(tc) => Ok(tc),
            None => coherence_time_from_fwhm((self.emitter_a.fwhm + self.emitter_b.fwhm) * 0.5),
        }
    }

    /// Lifetime entering the single-emitter antibunching term (mean of the
    /// two emitters).
    pub fn lifetime(&self) -> Time {
        (self.emitter_a.lifetime + self.emitter_b.lifetime) * 0.5
    }

    /// Closed-form model with parameters resolved once.
    pub fn model(&self) -> Result<HomModel> {
        self.validate()?;
        HomModel::new(
            self.lifetime(),
            self.coherence_time()?,
            self.detuning(),
            self.chi,
            self.c_background,
        )
    }
}

fn check_background(c_b: f64) -> Result<()> {
    if !(0.0..1.0).contains(&c_b) {
        return Err(Error::domain("background fraction must lie in [0, 1)"));
    }
    Ok(())
}

/// Transform-limited (lifetime-limited) linewidth `1 / (2 pi tau0)`.
pub fn transform_limited_linewidth(tau0: Time) -> Result<Frequency> {
    if !(tau0.as_s() > 0.0) {
        return Err(Error::domain("lifetime must be positive"));
    }
    Ok(Frequency::from_hz(1.0 / (2.0 * PI * tau0.as_s())))
}

/// Coherence time `1 / (2 pi fwhm)`, the decay constant of `|g1|^2`.
pub fn coherence_time_from_fwhm(fwhm: Frequency) -> Result<Time> {
    if !(fwhm.as_hz() > 0.0) {
        return Err(Error::domain("linewidth must be positive"));
    }
    Ok(Time::from_s(1.0 / (2.0 * PI * fwhm.as_hz())))
}

/// Pure-dephasing rate `pi fwhm - 1 / (2 tau0)`: the part of the field decay
/// rate not accounted for by spontaneous emission.
pub fn pure_dephasing_rate(tau0: Time, fwhm: Frequency) -> Result<Rate> {
    let limit = transform_limited_linewidth(tau0)?;
    if !(fwhm.as_hz() >= limit.as_hz() * (1.0 - LIMIT_TOLERANCE)) {
        return Err(Error::domain(format!(
            "linewidth {} MHz is below the transform limit {} MHz",
            fwhm.as_mhz(),
            limit.as_mhz()
        )));
    }
    let gamma = PI * fwhm.as_hz() - 0.5 / tau0.as_s();
    // Within rounding of the transform limit the excess rate is zero.
    let scale = PI * fwhm.as_hz();
    Ok(Rate::per_s(if gamma <= scale * 1e-12 { 0.0 } else { gamma }))
}

/// Single-emitter intensity autocorrelation `1 - (1 - c_b) exp(-|t| / tau0)`.
pub fn g2_single(tau: Time, tau0: Time, c_b: f64) -> Result<f64> {
    if !(tau0.as_s() > 0.0) {
        return Err(Error::domain("lifetime must be positive"));
    }
    check_background(c_b)?;
    Ok(1.0 - (1.0 - c_b) * (-(tau.as_s().abs()) / tau0.as_s()).exp())
}

/// Squared single-emitter field autocorrelation `(1 - c_b) exp(-|t| / tau_c)`.
pub fn g1_sq(tau: Time, tau_c: Time, c_b: f64) -> Result<f64> {
    if !(tau_c.as_s() > 0.0) {
        return Err(Error::domain("coherence time must be positive"));
    }
    check_background(c_b)?;
    Ok((1.0 - c_b) * (-(tau.as_s().abs()) / tau_c.as_s()).exp())
}

/// Unconvolved two-emitter correlation at delay `tau`.
pub fn g2_hom(tau: Time, exp: &HomExperiment) -> Result<f64> {
    Ok(exp.model()?.eval_ns(tau.as_ns()))
}

/// The unconvolved two-emitter model with every parameter resolved, for
/// repeated evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomModel {
    tau0_ns: f64,
    tau_c_ns: f64,
    detuning_per_ns: f64,
    chi: f64,
    c_b: f64,
}

impl HomModel {
    /// Validates and stores the model parameters.
    pub fn new(tau0: Time, tau_c: Time, detuning: Frequency, chi: f64, c_b: f64) -> Result<Self> {
        if !(tau0.as_s() > 0.0) || !(tau_c.as_s() > 0.0) {
            return Err(Error::domain("lifetime and coherence time must be positive"));
        }
        if !(0.0..=1.0).contains(&chi) {
            return Err(Error::domain("chi must lie in [0, 1]"));
        }
        check_background(c_b)?;
        if !(detuning.as_hz() >= 0.0) {
            return Err(Error::domain("detuning must be non-negative"));
        }
        Ok(HomModel {
            tau0_ns: tau0.as_ns(),
            tau_c_ns: tau_c.as_ns(),
            detuning_per_ns: detuning.as_hz() * 1e-9,
            chi,
            c_b,
        })
    }

    /// Same model with another background fraction.
    pub fn with_background(mut self, c_b: f64) -> Result<Self> {
        check_background(c_b)?;
        self.c_b = c_b;
        Ok(self)
    }

    /// Background fraction.
    pub fn background(&self) -> f64 {
        self.c_b
    }

    /// The background-free dip `1/2 exp(-|t|/tau0) + 1/2 chi exp(-|t|/tau_c) cos(2 pi delta t)`,
    /// so that `g2 = 1 - (1 - c_b) * dip`.
    pub fn dip_ns(&self, tau_ns: f64) -> f64 {
        let t = tau_ns.abs();
        0.5 * (-t / self.tau0_ns).exp()
            + 0.5 * self.chi * (-t / self.tau_c_ns).exp() * (2.0 * PI * self.detuning_per_ns * t).cos()
    }

    /// Correlation at a delay given in nanoseconds.
    pub fn eval_ns(&self, tau_ns: f64) -> f64 {
        1.0 - (1.0 - self.c_b) * self.dip_ns(tau_ns)
    }
}

/// Metadata carried along with a sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveMeta {
    /// Whether detector jitter has been applied.
    pub convolved: bool,
    /// Indistinguishability used to produce the curve.
    pub chi: f64,
    /// Background fraction used to produce the curve.
    pub c_background: f64,
}

/// A correlation function sampled on an ordered delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    /// Delays in picoseconds, strictly increasing.
    pub tau_ps: Vec<f64>,
    /// Correlation values.
    pub g2: Vec<f64>,
    /// Provenance.
    pub meta: CurveMeta,
}

/// Uniform delay grid symmetric about zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    /// Grid step.
    pub step: Time,
    /// The grid spans `[-half_width, half_width]`.
    pub half_width: Time,
}

impl Default for DelayGrid {
    /// 5 ps steps over +-20 ns.
    fn default() -> Self {
        DelayGrid {
            step: Time::from_ps(5.0),
            half_width: Time::from_ns(20.0),
        }
    }
}

impl DelayGrid {
    /// Grid points in picoseconds.
    pub fn points_ps(&self) -> Result<Vec<f64>> {
        let step = self.step.as_ps();
        if !(step > 0.0) || !(self.half_width.as_s() >= 0.0) {
            return Err(Error::domain("grid step must be positive and width non-negative"));
        }
        let n = (self.half_width.as_ps() / step + 1e-9).floor() as i64;
        Ok((-n..=n).map(|k| k as f64 * step).collect())
    }
}

impl CorrelationCurve {
    /// Grid spacing if the grid is uniform.
    pub fn uniform_step_ps(&self) -> Option<f64> {
        if self.tau_ps.len() < 2 {
            return None;
        }
        let step = self.tau_ps[1] - self.tau_ps[0];
        let tol = 1e-9 * step.abs().max(1.0);
        let uniform = self
            .tau_ps
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= tol.max(1e-9 * w[1].abs()));
        (uniform && step > 0.0).then_some(step)
    }

    /// Linear interpolation; values outside the grid take the edge value.
    pub fn interpolate(&self, tau_ps: f64) -> f64 {
        let n = self.tau_ps.len();
        if n == 0 {
            return f64::NAN;
        }
        if tau_ps <= self.tau_ps[0] {
            return self.g2[0];
        }
        if tau_ps >= self.tau_ps[n - 1] {
            return self.g2[n - 1];
        }
        let idx = self.tau_ps.partition_point(|&t| t <= tau_ps);
        let (t0, t1) = (self.tau_ps[idx - 1], self.tau_ps[idx]);
        let (y0, y1) = (self.g2[idx - 1], self.g2[idx]);
        y0 + (y1 - y0) * (tau_ps - t0) / (t1 - t0)
    }

    /// Mean of the curve over `[center - width/2, center + width/2]`, as a
    /// histogram bin of that width would record it.
    pub fn bin_average(&self, center_ps: f64, width_ps: f64) -> f64 {
        const SUBSAMPLES: usize = 64;
        let h = width_ps / SUBSAMPLES as f64;
        let lo = center_ps - 0.5 * width_ps;
        (0..SUBSAMPLES)
            .map(|k| self.interpolate(lo + (k as f64 + 0.5) * h))
            .sum::<f64>()
            / SUBSAMPLES as f64
    }
}

/// Samples the two-emitter model on `grid`, convolved with the detector
/// response when `convolved` is set.
pub fn hom_curve(exp: &HomExperiment, grid: &DelayGrid, convolved: bool) -> Result<CorrelationCurve> {
    let model = exp.model()?;
    let meta = CurveMeta {
        convolved: false,
        chi: exp.chi,
        c_background: exp.c_background,
    };
    if !convolved {
        let tau_ps = grid.points_ps()?;
        let g2 = tau_ps.iter().map(|&t| model.eval_ns(t * 1e-3)).collect();
        return Ok(CorrelationCurve { tau_ps, g2, meta });
    }
    // Extend the grid so edge padding never reaches the cropped window.
    let sigma_pair = exp.detector_sigma.as_ps() * SQRT_2;
    let margin = (KERNEL_HALF_WIDTH_SIGMAS * sigma_pair / grid.step.as_ps()).ceil() * grid.step.as_ps();
    let wide = DelayGrid {
        step: grid.step,
        half_width: grid.half_width + Time::from_ps(margin),
    };
    let tau_ps = wide.points_ps()?;
    let g2 = tau_ps.iter().map(|&t| model.eval_ns(t * 1e-3)).collect();
    let full = convolve_with_jitter(&CorrelationCurve { tau_ps, g2, meta }, exp.detector_sigma)?;
    let keep = grid.points_ps()?.len();
    let skip = (full.tau_ps.len() - keep) / 2;
    Ok(CorrelationCurve {
        tau_ps: full.tau_ps[skip..skip + keep].to_vec(),
        g2: full.g2[skip..skip + keep].to_vec(),
        meta: full.meta,
    })
}

/// Kernel truncation in units of the pair jitter.
const KERNEL_HALF_WIDTH_SIGMAS: f64 = 8.0;

/// Convolves a correlation curve with the timing response of a detector pair.
///
/// Each detector contributes independent Gaussian jitter of standard
/// deviation `detector_sigma`, so coincidence delays are smeared by a
/// Gaussian of `sqrt(2) * detector_sigma`. The discrete kernel is normalized
/// to unit sum and the curve is extended by its edge values.
///
/// The grid must resolve the kernel (`step <= detector_sigma / 10`). A
/// kernel narrower than a twelfth of a step has negligible weight off the
/// central sample and is applied as a delta.
pub fn convolve_with_jitter(curve: &CorrelationCurve, detector_sigma: Time) -> Result<CorrelationCurve> {
    let sigma = detector_sigma.as_ps();
    if !(sigma >= 0.0) {
        return Err(Error::domain("detector jitter must be non-negative"));
    }
    if curve.tau_ps.len() != curve.g2.len() {
        return Err(Error::domain("curve delays and values differ in length"));
    }
    let mut out = curve.clone();
    out.meta.convolved = true;
    if curve.tau_ps.len() < 2 {
        return Ok(out);
    }
    let step = curve
        .uniform_step_ps()
        .ok_or_else(|| Error::domain("jitter convolution needs a uniform, increasing delay grid"))?;
    if sigma <= step / 12.0 {
        return Ok(out);
    }
    if step > sigma / 10.0 * (1.0 + 1e-9) {
        return Err(Error::precision(format!(
            "grid step {step} ps is coarser than a tenth of the {sigma} ps detector jitter"
        )));
    }
    let sigma_pair = sigma * SQRT_2;
    let half = (KERNEL_HALF_WIDTH_SIGMAS * sigma_pair / step).ceil() as isize;
    let mut kernel: Vec<f64> = (-half..=half)
        .map(|k| {
            let x = k as f64 * step / sigma_pair;
            (-0.5 * x * x).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= norm);

    let n = curve.g2.len() as isize;
    for (i, value) in out.g2.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, w) in kernel.iter().enumerate() {
            let src = (i as isize + j as isize - half).clamp(0, n - 1);
            acc += w * curve.g2[src as usize];
        }
        *value = acc;
    }
    Ok(out)
}

/// Interference visibility `g2_perp(0) / (g2_par(0) + g2_perp(0))`.
pub fn hom_visibility(g2_par0: f64, g2_perp0: f64) -> Result<f64> {
    if !(g2_par0 >= 0.0) || !(g2_perp0 >= 0.0) {
        return Err(Error::domain("correlation values must be non-negative"));
    }
    let total = g2_par0 + g2_perp0;
    if total == 0.0 {
        return Err(Error::domain("visibility undefined when both correlations vanish"));
    }
    Ok(g2_perp0 / total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn exp_with(chi: f64, c_b: f64, detuning_mhz: f64) -> HomExperiment {
        let mut e = HomExperiment::nominal(chi, c_b, Rate::per_s(1e5)).unwrap();
        e.detuning_override = Some(Frequency::from_mhz(detuning_mhz));
        e
    }

    #[test]
    fn transform_limit() {
        let f = transform_limited_linewidth(Time::from_ns(1.73)).unwrap();
        assert!(close(f.as_mhz(), 91.997, 1e-3));
        let f = transform_limited_linewidth(Time::from_ns(1.0 / (2.0 * PI))).unwrap();
        assert!(close(f.as_mhz(), 1000.0, 1e-9));
        let f = transform_limited_linewidth(Time::from_s(1e30)).unwrap();
        assert!(f.as_mhz() < 1e-30);
        assert!(transform_limited_linewidth(Time::ZERO).is_err());
        assert!(transform_limited_linewidth(Time::from_ns(-1.0)).is_err());
    }

    #[test]
    fn coherence_time() {
        let t = coherence_time_from_fwhm(Frequency::from_mhz(135.2)).unwrap();
        assert!(close(t.as_ns(), 1.1772, 1e-4));
        let t = coherence_time_from_fwhm(Frequency::from_mhz(135.8)).unwrap();
        assert!(close(t.as_ns(), 1.1720, 1e-4));
        let t = coherence_time_from_fwhm(Frequency::from_ghz(1.0 / (2.0 * PI))).unwrap();
        assert!(close(t.as_ns(), 1.0, 1e-12));
        assert!(coherence_time_from_fwhm(Frequency::ZERO).is_err());
    }

    #[test]
    fn dephasing() {
        let g = pure_dephasing_rate(Time::from_ns(1.73), Frequency::from_mhz(135.2)).unwrap();
        assert!(close(g.as_per_ns(), 0.1357, 1e-4));
        let tau0 = Time::from_ns(1.73);
        let limit = transform_limited_linewidth(tau0).unwrap();
        assert_eq!(pure_dephasing_rate(tau0, limit).unwrap().as_per_s(), 0.0);
        assert!(pure_dephasing_rate(tau0, Frequency::from_mhz(92.0 - 0.01)).is_err());
    }

    #[test]
    fn consistency_chain_at_transform_limit() {
        let tau0 = Time::from_ns(2.5);
        let fwhm = transform_limited_linewidth(tau0).unwrap();
        let tc = coherence_time_from_fwhm(fwhm).unwrap();
        assert!(close(tc.as_s(), 1.0 / (2.0 * PI * fwhm.as_hz()), 1e-20));
        assert!(close(tc.as_ns(), tau0.as_ns(), 1e-12));
        assert_eq!(pure_dephasing_rate(tau0, fwhm).unwrap().as_per_s(), 0.0);
    }

    #[test]
    fn single_emitter_terms() {
        let t0 = Time::from_ns(1.73);
        assert_eq!(g2_single(Time::ZERO, t0, 0.0).unwrap(), 0.0);
        assert!(close(g2_single(Time::ZERO, t0, 0.12).unwrap(), 0.12, 1e-15));
        assert!(close(g2_single(t0, t0, 0.0).unwrap(), 0.6321, 1e-4));
        assert!(g2_single(Time::ZERO, Time::ZERO, 0.0).is_err());
        assert!(g2_single(Time::ZERO, t0, 1.0).is_err());

        let tc = Time::from_ns(1.18);
        assert_eq!(g1_sq(Time::ZERO, tc, 0.0).unwrap(), 1.0);
        assert!(close(g1_sq(Time::ZERO, tc, 0.12).unwrap(), 0.88, 1e-15));
        assert!(close(g1_sq(tc, tc, 0.0).unwrap(), 0.3679, 1e-4));
        assert!(g1_sq(Time::ZERO, tc, -0.1).is_err());
    }

    #[test]
    fn hom_endpoints() {
        let z = Time::ZERO;
        assert_eq!(g2_hom(z, &exp_with(1.0, 0.0, 52.1)).unwrap(), 0.0);
        assert!(close(g2_hom(z, &exp_with(0.0, 0.0, 52.1)).unwrap(), 0.5, 1e-15));
        assert!(close(g2_hom(z, &exp_with(1.0, 0.12, 52.1)).unwrap(), 0.12, 1e-15));
        assert!(close(g2_hom(z, &exp_with(0.0, 0.12, 52.1)).unwrap(), 0.56, 1e-15));
    }

    #[test]
    fn derived_parameters() {
        let e = HomExperiment::nominal(1.0, 0.12, Rate::per_s(1e5)).unwrap();
        assert!(close(e.detuning().as_mhz(), 52.1, 1e-9));
        assert!(close(e.coherence_time().unwrap().as_ns(), 1.1772, 1e-4));
    }

    #[test]
    fn rejects_unphysical_emitter() {
        let r = EmitterParams::new(
            Time::from_ns(1.73),
            Frequency::ZERO,
            Frequency::from_mhz(80.0),
            Rate::per_s(1.0),
        );
        assert!(matches!(r, Err(Error::Domain(_))));
        let ok = EmitterParams::new(
            Time::from_ns(1.73),
            Frequency::ZERO,
            Frequency::from_mhz(135.0),
            Rate::per_s(1.0),
        )
        .unwrap();
        assert!(ok.with_shelving(1.0, Time::from_ns(100.0)).is_err());
        assert!(ok.with_shelving(0.1, Time::ZERO).is_err());
        assert!(ok.with_shelving(0.1, Time::from_ns(100.0)).is_ok());
    }

    #[test]
    fn visibility() {
        assert!(close(hom_visibility(0.26, 0.66).unwrap(), 0.7174, 1e-4));
        assert_eq!(hom_visibility(0.0, 0.3).unwrap(), 1.0);
        assert_eq!(hom_visibility(0.4, 0.4).unwrap(), 0.5);
        assert!(hom_visibility(0.0, 0.0).is_err());
        assert!(hom_visibility(-0.1, 0.3).is_err());
    }

    fn sampled(exp: &HomExperiment) -> CorrelationCurve {
        hom_curve(exp, &DelayGrid::default(), false).unwrap()
    }

    #[test]
    fn zero_jitter_is_identity() {
        let c = sampled(&exp_with(1.0, 0.12, 52.1));
        let out = convolve_with_jitter(&c, Time::ZERO).unwrap();
        assert_eq!(out.g2, c.g2);
        assert!(out.meta.convolved);
    }

    #[test]
    fn constant_curve_is_preserved() {
        let tau_ps: Vec<f64> = (-400..=400).map(|k| k as f64 * 5.0).collect();
        let c = CorrelationCurve {
            g2: alloc::vec![1.0; tau_ps.len()],
            tau_ps,
            meta: CurveMeta::default(),
        };
        for sigma in [60.0, 150.0, 400.0] {
            let out = convolve_with_jitter(&c, Time::from_ps(sigma)).unwrap();
            assert!(out.g2.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let tau_ps: Vec<f64> = (-40..=40).map(|k| k as f64 * 50.0).collect();
        let c = CorrelationCurve {
            g2: alloc::vec![1.0; tau_ps.len()],
            tau_ps,
            meta: CurveMeta::default(),
        };
        assert!(matches!(
            convolve_with_jitter(&c, Time::from_ps(150.0)),
            Err(Error::Precision(_))
        ));
        assert!(matches!(
            convolve_with_jitter(&c, Time::from_ps(-1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn vanishing_jitter_limit() {
        let c = sampled(&exp_with(1.0, 0.12, 52.1));
        let out = convolve_with_jitter(&c, Time::from_ps(5.0 / 100.0)).unwrap();
        let sup = c.g2.iter().zip(&out.g2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-3);
    }

    #[test]
    fn convolution_preserves_window_integral() {
        // The dip lies well inside the window; the integral of g2 - 1 is
        // unchanged by a normalized kernel.
        let exp = exp_with(1.0, 0.12, 52.1);
        let grid = DelayGrid { step: Time::from_ps(5.0), half_width: Time::from_ns(60.0) };
        let raw = hom_curve(&exp, &grid, false).unwrap();
        let conv = convolve_with_jitter(&raw, Time::from_ps(150.0)).unwrap();
        let a: f64 = raw.g2.iter().map(|v| v - 1.0).sum();
        let b: f64 = conv.g2.iter().map(|v| v - 1.0).sum();
        assert!(((a - b) / a).abs() < 1e-6);
    }

    /// Independent oracle: direct quadrature of the model against the
    /// continuous pair-jitter Gaussian, no grid shared with the implementation.
    fn convolved_at_zero_by_quadrature(model: &HomModel, sigma_ps: f64) -> f64 {
        let s = sigma_ps * SQRT_2 * 1e-3;
        let n = 200_000;
        let lim = 12.0 * s;
        let h = 2.0 * lim / n as f64;
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for k in 0..=n {
            let t = -lim + k as f64 * h;
            let w = (-0.5 * (t / s) * (t / s)).exp() * if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += w * model.eval_ns(t);
            wsum += w;
        }
        acc / wsum
    }

    #[test]
    fn nominal_zero_delay_values_match_quadrature() {
        let par = HomExperiment::nominal(1.0, 0.12, Rate::per_s(1e5)).unwrap();
        let mut par_fixed = par;
        par_fixed.coherence_time_override = Some(nominal::coherence_time());
        let mut perp = par_fixed;
        perp.chi = 0.0;
        for (exp, lo, hi) in [(par_fixed, 0.21, 0.31), (perp, 0.58, 0.74)] {
            let oracle = convolved_at_zero_by_quadrature(&exp.model().unwrap(), 150.0);
            // The cusp at zero delay limits the default grid to O(step^2).
            for (step_ps, tol) in [(5.0, 2e-5), (1.0, 1e-6)] {
                let grid = DelayGrid {
                    step: Time::from_ps(step_ps),
                    half_width: Time::from_ns(5.0),
                };
                let curve = hom_curve(&exp, &grid, true).unwrap();
                let mid = curve.tau_ps.len() / 2;
                assert_eq!(curve.tau_ps[mid], 0.0);
                assert!(close(curve.g2[mid], oracle, tol), "{} vs {}", curve.g2[mid], oracle);
                assert!(curve.g2[mid] > lo && curve.g2[mid] < hi);
            }
        }
    }

    #[test]
    fn bin_average_of_linear_segment() {
        let c = CorrelationCurve {
            tau_ps: alloc::vec![0.0, 10.0, 20.0],
            g2: alloc::vec![0.0, 1.0, 1.0],
            meta: CurveMeta::default(),
        };
        assert!(close(c.bin_average(5.0, 10.0), 0.5, 1e-12));
        assert!(close(c.interpolate(-5.0), 0.0, 0.0));
        assert!(close(c.interpolate(15.0), 1.0, 1e-12));
    }
}
