use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;

use super::{
    least_squares_with, solve, Derived, ExponentialDecay, FitFlag, FitOptions, FitProblem, FitResult,
    GaussianPeak, JacobianMode, LorentzianDoublet, LorentzianPeak, Parameter, Residuals, Sample,
};
use crate::mcsim::CorrelationHistogram;
use crate::photophys::{convolve_with_jitter, nominal, CorrelationCurve, CurveMeta, HomModel};
use crate::{Error, Frequency, Result, Time};

fn analytic() -> FitOptions {
    FitOptions {
        jacobian: JacobianMode::Analytic,
        ..FitOptions::default()
    }
}

struct Moments {
    lo: f64,
    hi: f64,
    peak_x: f64,
    peak_y: f64,
    floor: f64,
    mean: f64,
    sd: f64,
    fwhm: f64,
}

fn moments(data: &[Sample]) -> Result<Moments> {
    if data.len() < 2 {
        return Err(Error::domain("too few samples"));
    }
    let lo = data.iter().map(|s| s.x).fold(f64::INFINITY, f64::min);
    let hi = data.iter().map(|s| s.x).fold(f64::NEG_INFINITY, f64::max);
    let peak = data
        .iter()
        .copied()
        .fold(data[0], |a, s| if s.y > a.y { s } else { a });
    let mut ys: Vec<f64> = data.iter().map(|s| s.y).collect();
    ys.sort_by(f64::total_cmp);
    let floor = ys[ys.len() / 10];
    let weight: f64 = data.iter().map(|s| (s.y - floor).max(0.0)).sum();
    let (mean, sd) = if weight > 0.0 {
        let mean = data.iter().map(|s| s.x * (s.y - floor).max(0.0)).sum::<f64>() / weight;
        let var = data
            .iter()
            .map(|s| (s.x - mean).powi(2) * (s.y - floor).max(0.0))
            .sum::<f64>()
            / weight;
        (mean, var.sqrt())
    } else {
        (0.5 * (lo + hi), 0.25 * (hi - lo))
    };
    let half = floor + 0.5 * (peak.y - floor);
    let above: Vec<f64> = data.iter().filter(|s| s.y >= half).map(|s| s.x).collect();
    let span = above.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - above.iter().copied().fold(f64::INFINITY, f64::min);
    let step = (hi - lo) / (data.len() - 1) as f64;
    Ok(Moments {
        lo,
        hi,
        peak_x: peak.x,
        peak_y: peak.y,
        floor,
        mean,
        sd: if sd > 0.0 { sd } else { hi - lo },
        fwhm: span.max(2.0 * step),
    })
}

fn is_shot_noise(data: &[Sample]) -> bool {
    data.iter().all(|s| s.sigma == s.y.max(1.0).sqrt())
}

fn fit<M: super::Model + Clone>(model: M, params: Vec<Parameter>, data: &[Sample]) -> Result<FitResult> {
    let problem = FitProblem {
        model,
        params,
        data: data.to_vec(),
    };
    let first = least_squares_with(&problem, &analytic())?;
    if !is_shot_noise(data) {
        return Ok(first);
    }
    let refined = FitProblem {
        data: data
            .iter()
            .map(|s| Sample {
                sigma: problem.model.eval(s.x, &first.estimates).max(1.0).sqrt(),
                ..*s
            })
            .collect(),
        params: problem
            .params
            .iter()
            .zip(&first.estimates)
            .map(|(p, &v)| Parameter {
                value: v.max(p.lower).min(p.upper),
                ..p.clone()
            })
            .collect(),
        model: problem.model.clone(),
    };
    let mut second = least_squares_with(&refined, &analytic())?;
    second.iterations += first.iterations;
    Ok(second)
}

/// Single Lorentzian plus offset: `[center, fwhm, amplitude, offset]`.
pub fn fit_ple_line(data: &[Sample]) -> Result<FitResult> {
    let m = moments(data)?;
    let width = m.hi - m.lo;
    let params = vec![
        Parameter::free("center", m.peak_x).with_scale(m.fwhm),
        Parameter::free("fwhm", m.fwhm).bounded(1e-9 * width, f64::INFINITY),
        Parameter::free("amplitude", (m.peak_y - m.floor).max(1.0)),
        Parameter::free("offset", m.floor).with_scale(m.peak_y.abs().max(1.0)),
    ];
    fit(LorentzianPeak, params, data)
}

/// Two Lorentzians plus a shared offset.
///
/// Lines are reported in order of increasing center as `center_1`, `fwhm_1`,
/// `amplitude_1`, `center_2`, `fwhm_2`, `amplitude_2`, `offset`, with the
/// derived `separation`. [`FitFlag::Degenerate`] is set when the two centers
/// are not resolved: a singular fit, 2-sigma center intervals that overlap,
/// or a separation below a thousandth of the mean width.
pub fn fit_ple_doublet(data: &[Sample]) -> Result<FitResult> {
    let single = fit_ple_line(data)?;
    let (c0, w0, a0, off0) = (
        single.estimates[0],
        single.estimates[1].abs(),
        single.estimates[2].max(1.0),
        single.estimates[3],
    );
    let width = moments(data)?.hi - moments(data)?.lo;
    let mut best: Option<FitResult> = None;
    for frac in [0.4, 0.2, 0.7] {
        let sep = frac * w0;
        let w = (w0 * w0 - sep * sep).max(0.25 * w0 * w0).sqrt();
        let params = vec![
            Parameter::free("center_1", c0 - 0.5 * sep).with_scale(w0),
            Parameter::free("fwhm_1", w).bounded(1e-9 * width, f64::INFINITY),
            Parameter::free("amplitude_1", 0.55 * a0).bounded(0.0, f64::INFINITY),
            Parameter::free("center_2", c0 + 0.5 * sep).with_scale(w0),
            Parameter::free("fwhm_2", w).bounded(1e-9 * width, f64::INFINITY),
            Parameter::free("amplitude_2", 0.55 * a0).bounded(0.0, f64::INFINITY),
            Parameter::free("offset", off0).with_scale(a0),
        ];
        let candidate = fit(LorentzianDoublet, params, data)?;
        let better = match &best {
            None => true,
            Some(b) => candidate.chi2 < b.chi2,
        };
        if better {
            best = Some(candidate);
        }
    }
    let mut result = best.expect("at least one start");
    if result.estimates[3] < result.estimates[0] {
        swap_lines(&mut result);
    }
    for i in [1, 4] {
        result.estimates[i] = result.estimates[i].abs();
    }
    let separation = result.estimates[3] - result.estimates[0];
    let sep_sigma = result.linear_uncertainty(&[(3, 1.0), (0, -1.0)]);
    result.derived.push(Derived {
        name: "separation".to_string(),
        value: separation,
        uncertainty: sep_sigma,
    });
    let (s1, s2) = (result.uncertainties[0], result.uncertainties[3]);
    let mean_width = 0.5 * (result.estimates[1] + result.estimates[4]);
    let degenerate = result.has_flag(FitFlag::SingularJacobian)
        || separation <= 2.0 * (s1 + s2)
        || separation < 1e-3 * mean_width;
    if degenerate {
        result.flags.push(FitFlag::Degenerate);
    }
    result.model = "ple_doublet".to_string();
    Ok(result)
}

fn swap_lines(r: &mut FitResult) {
    let n = r.names.len();
    let perm: [usize; 7] = [3, 4, 5, 0, 1, 2, 6];
    let est = r.estimates.clone();
    let unc = r.uncertainties.clone();
    let cov = r.covariance.clone();
    for i in 0..n {
        r.estimates[i] = est[perm[i]];
        r.uncertainties[i] = unc[perm[i]];
        for j in 0..n {
            r.covariance[i * n + j] = cov[perm[i] * n + perm[j]];
        }
    }
}

/// Gaussian distribution of center frequencies: `[center, sigma, amplitude]`
/// with no offset.
pub fn fit_inhomogeneous(data: &[Sample]) -> Result<FitResult> {
    let m = moments(data)?;
    let params = vec![
        Parameter::free("center", m.mean).with_scale(m.sd),
        Parameter::free("sigma", m.sd).bounded(1e-9 * (m.hi - m.lo), f64::INFINITY),
        Parameter::free("amplitude", m.peak_y.max(1.0)),
        Parameter::free("offset", 0.0).fixed(),
    ];
    let mut result = fit(GaussianPeak, params, data)?;
    result.estimates[1] = result.estimates[1].abs();
    result.model = "inhomogeneous".to_string();
    Ok(result)
}

/// `amplitude * exp(-t / tau) + offset` on a decay histogram.
///
/// Data with no significant decaying component are reported with
/// [`FitFlag::NoDecay`] and `converged = false`.
pub fn fit_lifetime(data: &[Sample]) -> Result<FitResult> {
    let m = moments(data)?;
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    let tail = &sorted[sorted.len() - (sorted.len() / 10).max(1)..];
    let offset = tail.iter().map(|s| s.y).sum::<f64>() / tail.len() as f64;
    let amplitude = sorted[0].y - offset;
    let area: f64 = sorted
        .windows(2)
        .map(|w| 0.5 * ((w[0].y - offset) + (w[1].y - offset)) * (w[1].x - w[0].x))
        .sum();
    let span = m.hi - m.lo;
    let tau = if amplitude.abs() > 0.0 && area / amplitude > 0.0 {
        (area / amplitude).min(span)
    } else {
        0.2 * span
    };
    let params = vec![
        Parameter::free("amplitude", amplitude).with_scale(m.peak_y.abs().max(1.0)),
        Parameter::free("tau", tau).bounded(1e-9 * span, f64::INFINITY),
        Parameter::free("offset", offset).with_scale(m.peak_y.abs().max(1.0)),
    ];
    let mut result = fit(ExponentialDecay, params, data)?;
    result.model = "lifetime".to_string();
    let (a, sa) = (result.estimates[0], result.uncertainties[0]);
    let st = result.uncertainties[1];
    let no_decay = result.has_flag(FitFlag::SingularJacobian)
        || !(a.abs() > 3.0 * sa)
        || !st.is_finite()
        || result.estimates[1] > 10.0 * span;
    if no_decay {
        result.flags.push(FitFlag::NoDecay);
        result.converged = false;
    }
    Ok(result)
}

/// Parameters held fixed in the background fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbFixed {
    /// Excited-state lifetime.
    pub lifetime: Time,
    /// Coherence time.
    pub coherence_time: Time,
    /// Emitter detuning.
    pub detuning: Frequency,
    /// Per-detector timing jitter.
    pub detector_sigma: Time,
    /// Only bins with `|tau|` up to this delay enter the fit.
    pub fit_half_width: Time,
}

impl CbFixed {
    /// The emitter parameters of the two-emitter experiment, fitting over +-20 ns.
    pub fn nominal() -> Self {
        CbFixed {
            lifetime: nominal::lifetime(),
            coherence_time: nominal::coherence_time(),
            detuning: nominal::detuning(),
            detector_sigma: nominal::detector_sigma(),
            fit_half_width: Time::from_ns(20.0),
        }
    }
}

impl Default for CbFixed {
    fn default() -> Self {
        CbFixed::nominal()
    }
}

/// One normalized histogram reduced to the bins inside the fit window, with
/// the jitter-convolved, bin-averaged background-free dip at each bin.
struct DipData {
    y: Vec<f64>,
    sigma: Vec<f64>,
    dip: Vec<f64>,
}

const CURVE_STEP_PS: f64 = 5.0;

fn dip_data(hist: &CorrelationHistogram, chi: f64, fixed: &CbFixed) -> Result<DipData> {
    let (Some(g2), Some(sigma)) = (hist.g2(), hist.g2_sigma()) else {
        return Err(Error::domain("background fit needs normalized histograms"));
    };
    if !(fixed.fit_half_width.as_s() > 0.0) {
        return Err(Error::domain("fit window must be positive"));
    }
    let model = HomModel::new(fixed.lifetime, fixed.coherence_time, fixed.detuning, chi, 0.0)?;
    let sigma_det = fixed.detector_sigma.as_ps();
    if !(sigma_det >= 0.0) {
        return Err(Error::domain("detector jitter must be non-negative"));
    }
    let step = if sigma_det > 0.0 {
        CURVE_STEP_PS.min(sigma_det / 10.0)
    } else {
        CURVE_STEP_PS
    };
    let width = hist.bin_width_ps() as f64;
    let reach = fixed.fit_half_width.as_ps() + width + 8.0 * core::f64::consts::SQRT_2 * sigma_det;
    let n = (reach / step).ceil() as i64;
    let tau_ps: Vec<f64> = (-n..=n).map(|k| k as f64 * step).collect();
    let g2_free = tau_ps.iter().map(|&t| 1.0 - model.dip_ns(t * 1e-3)).collect();
    let curve = convolve_with_jitter(
        &CorrelationCurve {
            tau_ps,
            g2: g2_free,
            meta: CurveMeta {
                convolved: false,
                chi,
                c_background: 0.0,
            },
        },
        fixed.detector_sigma,
    )?;

    let limit = fixed.fit_half_width.as_ps();
    let mut out = DipData {
        y: Vec::new(),
        sigma: Vec::new(),
        dip: Vec::new(),
    };
    for (i, &c) in hist.centers_ps().iter().enumerate() {
        if (c as f64).abs() <= limit {
            out.y.push(g2[i]);
            out.sigma.push(sigma[i]);
            out.dip.push(1.0 - curve.bin_average(c as f64, width));
        }
    }
    if out.y.is_empty() {
        return Err(Error::domain("no histogram bins inside the fit window"));
    }
    Ok(out)
}

struct BackgroundResiduals<'a> {
    sets: &'a [DipData],
}

impl Residuals for BackgroundResiduals<'_> {
    fn len(&self) -> usize {
        self.sets.iter().map(|s| s.y.len()).sum()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let keep = 1.0 - p[0];
        let mut k = 0;
        for set in self.sets {
            for i in 0..set.y.len() {
                out[k] = (set.y[i] - (1.0 - keep * set.dip[i])) / set.sigma[i];
                k += 1;
            }
        }
    }

    fn jacobian(&self, _p: &[f64], out: &mut [f64]) -> bool {
        let mut k = 0;
        for set in self.sets {
            for i in 0..set.y.len() {
                out[k] = -set.dip[i] / set.sigma[i];
                k += 1;
            }
        }
        true
    }
}

fn fit_background(sets: &[DipData], labels: &[&str], model: &str) -> Result<FitResult> {
    let res = BackgroundResiduals { sets };
    let params = [Parameter::free("c_b", 0.1).bounded(0.0, 1.0 - 1e-9).with_scale(0.1)];
    let mut result = solve(&res, &params, &analytic(), model)?;
    if sets.len() > 1 {
        let mut buf = vec![0.0; res.len()];
        res.residuals(&result.estimates, &mut buf);
        let mut start = 0;
        for (set, label) in sets.iter().zip(labels) {
            let n = set.y.len();
            let chi2: f64 = buf[start..start + n].iter().map(|r| r * r).sum();
            start += n;
            result.derived.push(Derived {
                name: alloc::format!("reduced_chi2_{label}"),
                value: chi2 / n as f64,
                uncertainty: 0.0,
            });
        }
    }
    Ok(result)
}

/// Fits one background fraction `c_b` shared by a co-polarized (`chi = 1`)
/// and a cross-polarized (`chi = 0`) correlation histogram.
///
/// Each histogram is compared with `1 - (1 - c_b) D(tau)`, where `D` is the
/// background-free dip convolved with the detector jitter and averaged over
/// each bin. The per-dataset reduced chi-squares are reported as the derived
/// `reduced_chi2_par` and `reduced_chi2_perp`.
pub fn fit_cb_joint(par: &CorrelationHistogram, perp: &CorrelationHistogram, fixed: &CbFixed) -> Result<FitResult> {
    let sets = [dip_data(par, 1.0, fixed)?, dip_data(perp, 0.0, fixed)?];
    fit_background(&sets, &["par", "perp"], "cb_joint")
}

/// Fits the background fraction to a single histogram taken at
/// indistinguishability `chi`.
pub fn fit_cb_single(hist: &CorrelationHistogram, chi: f64, fixed: &CbFixed) -> Result<FitResult> {
    let sets = [dip_data(hist, chi, fixed)?];
    fit_background(&sets, &[], "cb_single")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitkit::{LorentzianDoublet, Model};
    use crate::mcsim::{HistogramSpec, Normalization};

    fn doublet_samples(sep: f64) -> Vec<Sample> {
        let p = [-0.5 * sep, 135.8, 4000.0, 0.5 * sep, 134.6, 3600.0, 50.0];
        (0..401)
            .map(|i| {
                let x = -1000.0 + 5.0 * i as f64;
                Sample::counts(x, LorentzianDoublet.eval(x, &p))
            })
            .collect()
    }

    #[test]
    fn noiseless_doublet_is_exact() {
        let r = fit_ple_doublet(&doublet_samples(52.1)).unwrap();
        let truth = [-26.05, 135.8, 4000.0, 26.05, 134.6, 3600.0, 50.0];
        for (i, t) in truth.iter().enumerate() {
            assert!((r.estimates[i] - t).abs() <= 1e-6 * t.abs(), "{} {} vs {t}", r.names[i], r.estimates[i]);
        }
        assert!((r.get("separation").unwrap().0 - 52.1).abs() < 1e-6 * 52.1);
        assert!(!r.has_flag(FitFlag::Degenerate));
    }

    #[test]
    fn identical_lines_are_degenerate() {
        let r = fit_ple_doublet(&doublet_samples(0.0)).unwrap();
        assert!(r.has_flag(FitFlag::Degenerate));
    }

    #[test]
    fn noiseless_lifetime_is_exact() {
        let data: Vec<Sample> = (0..200)
            .map(|i| {
                let t = 0.05 * i as f64;
                Sample::counts(t, 1000.0 * (-t).exp() + 2.0)
            })
            .collect();
        let r = fit_lifetime(&data).unwrap();
        assert!(r.converged);
        assert!((r.estimates[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flat_decay_is_flagged() {
        let data: Vec<Sample> = (0..200)
            .map(|i| Sample::counts(0.05 * i as f64, 100.0 + if i % 2 == 0 { 3.0 } else { -3.0 }))
            .collect();
        let r = fit_lifetime(&data).unwrap();
        assert!(r.has_flag(FitFlag::NoDecay));
        assert!(!r.converged);
    }

    #[test]
    fn noiseless_gaussian_is_exact() {
        let data: Vec<Sample> = (0..121)
            .map(|i| {
                let x = -1500.0 + 25.0 * i as f64;
                Sample::counts(x, 80.0 * (-0.5 * ((x - 40.0) / 364.5).powi(2)).exp())
            })
            .collect();
        let r = fit_inhomogeneous(&data).unwrap();
        assert!((r.estimates[1] - 364.5).abs() < 1e-6 * 364.5);
        assert!((r.estimates[0] - 40.0).abs() < 1e-6);
    }

    fn synthetic_hist(chi: f64, c_b: f64, fixed: &CbFixed) -> CorrelationHistogram {
        let spec = HistogramSpec {
            bin_width_ps: 256,
            window_ps: 256 * 80,
        };
        let mut hist = CorrelationHistogram::empty(spec).unwrap();
        let level = 1e4;
        let d = dip_data(
            &CorrelationHistogram {
                normalization: Some(Normalization {
                    level: 1.0,
                    norm_min_ps: 0,
                    norm_max_ps: 1,
                }),
                ..hist.clone()
            },
            chi,
            &CbFixed {
                fit_half_width: Time::from_ns(1e3),
                ..*fixed
            },
        )
        .unwrap();
        for (c, dip) in hist.counts.iter_mut().zip(&d.dip) {
            *c = (level * (1.0 - (1.0 - c_b) * dip)).round() as u64;
        }
        hist.normalization = Some(Normalization {
            level,
            norm_min_ps: 15_000,
            norm_max_ps: 20_000,
        });
        hist
    }

    #[test]
    fn background_recovered_from_model_histograms() {
        let fixed = CbFixed::nominal();
        let par = synthetic_hist(1.0, 0.12, &fixed);
        let perp = synthetic_hist(0.0, 0.12, &fixed);
        let joint = fit_cb_joint(&par, &perp, &fixed).unwrap();
        assert!((joint.estimates[0] - 0.12).abs() < 2e-3, "{}", joint.estimates[0]);
        let single = fit_cb_single(&par, 1.0, &fixed).unwrap();
        assert!(joint.uncertainties[0] < single.uncertainties[0]);
        assert!(joint.get("reduced_chi2_par").is_some());
    }

    #[test]
    fn unnormalized_histogram_is_rejected() {
        let spec = HistogramSpec {
            bin_width_ps: 256,
            window_ps: 2560,
        };
        let h = CorrelationHistogram::empty(spec).unwrap();
        assert!(fit_cb_joint(&h, &h, &CbFixed::nominal()).is_err());
    }
}
