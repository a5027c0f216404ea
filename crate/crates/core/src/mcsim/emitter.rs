use alloc::vec::Vec;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, Geometric};

use super::check_excitation;
use crate::photophys::EmitterParams;
use crate::{Error, Rate, Result, Time};

/// Detected photon times of one emitter, before the beamsplitter.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonStream {
    /// Emitter that produced the photons.
    pub emitter: EmitterParams,
    /// Increasing detection times in picoseconds from the stream start.
    pub times_ps: Vec<f64>,
    /// Stream length in picoseconds.
    pub duration_ps: f64,
}

/// Sum of `n` independent exponentials with the given mean.
fn exp_sum<R: Rng + ?Sized>(n: u64, mean: f64, rng: &mut R) -> f64 {
    match n {
        0 => 0.0,
        1 => mean * <Exp1 as Distribution<f64>>::sample(&Exp1, rng),
        _ => Gamma::new(n as f64, mean)
            .expect("positive shape and scale")
            .sample(rng),
    }
}

/// Decay time of the simulated antibunching dip, `1 / (excitation_rate + 1 / lifetime)`.
pub fn antibunching_time(lifetime: Time, excitation_rate: Rate) -> Result<Time> {
    check_excitation(excitation_rate, lifetime)?;
    if !(lifetime.as_s() > 0.0) {
        return Err(Error::domain("lifetime must be positive"));
    }
    Ok(Time::from_s(1.0 / (excitation_rate.as_per_s() + 1.0 / lifetime.as_s())))
}

/// Generates the detected photons of one continuously pumped emitter.
///
/// The emitter is a renewal process: after each emission it optionally
/// shelves into a dark state (probability `p`, mean dwell `tau_shelf`),
/// waits an exponential time with rate `excitation_rate` to be re-excited,
/// then emits after an exponential time with mean `lifetime`. Each emitted
/// photon is detected independently with the probability that makes the mean
/// detected rate equal to `params.emission_rate`; the gaps between detected
/// photons are drawn directly as sums of whole cycles.
///
/// The antibunching dip of this process decays with rate
/// `excitation_rate + 1 / lifetime` (see [`antibunching_time`]), which
/// approaches the lifetime alone in the low-excitation regime.
pub fn simulate_emitter_stream<R: Rng + ?Sized>(
    params: &EmitterParams,
    excitation_rate: Rate,
    duration: Time,
    rng: &mut R,
) -> Result<PhotonStream> {
    params.validate()?;
    check_excitation(excitation_rate, params.lifetime)?;
    if !(duration.as_s() >= 0.0) {
        return Err(Error::domain("duration must be non-negative"));
    }
    let duration_ps = duration.as_ps();
    let mut stream = PhotonStream {
        emitter: *params,
        times_ps: Vec::new(),
        duration_ps,
    };
    let k = excitation_rate.as_per_s();
    if k == 0.0 || duration_ps == 0.0 {
        return Ok(stream);
    }

    let pump_ps = 1e12 / k;
    let lifetime_ps = params.lifetime.as_ps();
    let (p_shelf, shelf_ps) = params
        .shelving
        .map_or((0.0, 0.0), |s| (s.probability, s.duration.as_ps()));
    let cycle_ps = pump_ps + lifetime_ps + p_shelf * shelf_ps;
    let p_detect = params.emission_rate.as_per_s() * cycle_ps * 1e-12;
    if p_detect > 1.0 + 1e-12 {
        return Err(Error::domain(alloc::format!(
            "emission rate {:.4e}/s exceeds the {:.4e}/s the pump can sustain",
            params.emission_rate.as_per_s(),
            1e12 / cycle_ps
        )));
    }
    let p_detect = p_detect.min(1.0);
    let skipped = Geometric::new(p_detect).map_err(|_| Error::domain("invalid detection probability"))?;

    stream.times_ps.reserve((duration_ps / cycle_ps * p_detect * 1.05) as usize + 16);
    let mut t = 0.0;
    let mut first = true;
    loop {
        let cycles = 1 + if p_detect < 1.0 { skipped.sample(rng) } else { 0 };
        // The stream starts in the ground state, so its first cycle has no
        // preceding emission to shelve after.
        let shelf_trials = if first { cycles - 1 } else { cycles };
        first = false;
        let shelved = if p_shelf > 0.0 && shelf_trials > 0 {
            Binomial::new(shelf_trials, p_shelf)
                .expect("valid binomial")
                .sample(rng)
        } else {
            0
        };
        t += exp_sum(cycles, pump_ps, rng) + exp_sum(cycles, lifetime_ps, rng) + exp_sum(shelved, shelf_ps, rng);
        if t >= duration_ps {
            break;
        }
        stream.times_ps.push(t);
    }
    Ok(stream)
}
