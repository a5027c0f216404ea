use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{ClickStream, Origin};
use crate::{Error, Result, Time};

/// How a background fraction `c_b` translates into a background click rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackgroundConvention {
    /// `c_b` is the share of coincidences involving at least one background
    /// click. This is the quantity the closed-form correlation model
    /// contains: a signal click fraction `s = sqrt(1 - c_b)` gives
    /// `g2 = 1 - s^2 (1 - g2_signal)`. Background rate per channel is
    /// `(1 / s - 1) * signal_rate`.
    #[default]
    CoincidenceFraction,
    /// `c_b` is the share of clicks that are background: background rate per
    /// channel is `c_b / (1 - c_b) * signal_rate`.
    ClickFraction,
}

impl BackgroundConvention {
    /// Background-to-signal click-rate ratio for a background fraction.
    pub fn rate_ratio(self, c_b: f64) -> f64 {
        match self {
            BackgroundConvention::CoincidenceFraction => 1.0 / (1.0 - c_b).sqrt() - 1.0,
            BackgroundConvention::ClickFraction => c_b / (1.0 - c_b),
        }
    }
}

/// Adds homogeneous Poisson background clicks to each stream.
///
/// The background rate of a channel is proportional to the realized signal
/// rate of that channel, with the ratio set by `convention`.
pub fn add_background<R: Rng + ?Sized>(
    streams: &mut [ClickStream],
    c_b: f64,
    convention: BackgroundConvention,
    rng: &mut R,
) -> Result<()> {
    if !(0.0..1.0).contains(&c_b) {
        return Err(Error::domain("background fraction must lie in [0, 1)"));
    }
    if c_b == 0.0 {
        return Ok(());
    }
    let ratio = convention.rate_ratio(c_b);
    for s in streams.iter_mut() {
        if s.duration_ps <= 0 {
            continue;
        }
        let signal = s.origins.iter().filter(|o| **o != Origin::Background).count() as f64;
        let mean = signal * ratio;
        if mean <= 0.0 {
            continue;
        }
        let n = Poisson::new(mean)
            .map_err(|_| Error::domain("invalid background mean"))?
            .sample(rng) as usize;
        s.times_ps.reserve(n);
        s.origins.reserve(n);
        for _ in 0..n {
            s.times_ps.push(rng.random_range(0..s.duration_ps));
            s.origins.push(Origin::Background);
        }
        s.sort_dedup();
    }
    Ok(())
}

/// Adds independent Gaussian timing jitter of standard deviation `sigma` to
/// every click, re-sorts, and drops clicks pushed outside `[0, duration]`.
pub fn apply_detector<R: Rng + ?Sized>(stream: &ClickStream, sigma: Time, rng: &mut R) -> Result<ClickStream> {
    let sigma_ps = sigma.as_ps();
    if !(sigma_ps >= 0.0) {
        return Err(Error::domain("detector jitter must be non-negative"));
    }
    if sigma_ps == 0.0 {
        return Ok(stream.clone());
    }
    let normal = Normal::new(0.0, sigma_ps).map_err(|_| Error::domain("invalid jitter"))?;
    let mut times = Vec::with_capacity(stream.len());
    let mut origins = Vec::with_capacity(stream.len());
    for (&t, &o) in stream.times_ps.iter().zip(&stream.origins) {
        let shifted = t + normal.sample(rng).round() as i64;
        if (0..=stream.duration_ps).contains(&shifted) {
            times.push(shifted);
            origins.push(o);
        }
    }
    let mut out = ClickStream {
        times_ps: times,
        origins,
        ..stream.clone()
    };
    out.sort_dedup();
    Ok(out)
}
