//! Event-level Monte Carlo of the two-emitter interference experiment.
//!
//! The pipeline for one acquisition chunk is
//!
//! 1. [`simulate_emitter_stream`] for each emitter (renewal process),
//! 2. [`mix_at_beamsplitter`] routes every photon to one of two detectors,
//!    correlating the routing of nearby photon pairs from different emitters,
//! 3. [`add_background`] adds uncorrelated Poisson clicks,
//! 4. [`apply_detector`] adds Gaussian timing jitter,
//!
//! and [`correlate`] / [`normalize`] turn the two click streams into a
//! normalized coincidence histogram.
//!
//! Every random draw comes from a ChaCha8 stream selected by
//! `(seed, chunk, purpose)`, so results are bit-identical for a given seed and
//! chunk count regardless of how chunks are scheduled.

mod beamsplitter;
mod correlate;
mod detector;
mod emitter;

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::photophys::HomExperiment;
use crate::{Error, Rate, Result, Time};

pub use self::beamsplitter::{coherence_window, mix_at_beamsplitter};
pub use self::correlate::{
    correlate, correlate_span, normalize, CorrelationHistogram, HistogramSpec, Normalization, MIN_NORMALIZATION_BINS,
};
pub use self::detector::{add_background, apply_detector, BackgroundConvention};
pub use self::emitter::{antibunching_time, simulate_emitter_stream, PhotonStream};

/// Upper limit on `excitation_rate * lifetime`.
pub const MAX_EXCITATION_PER_LIFETIME: f64 = 0.1;

/// Detector output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Detector {
    /// Port 1.
    One,
    /// Port 2.
    Two,
}

impl Detector {
    /// Numeric id used in files (1 or 2).
    pub fn id(self) -> u8 {
        match self {
            Detector::One => 1,
            Detector::Two => 2,
        }
    }

    /// Parses a numeric id.
    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Detector::One),
            2 => Some(Detector::Two),
            _ => None,
        }
    }
}

/// Where a click came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// A photon from one of the emitters.
    Signal,
    /// Uncorrelated background light.
    Background,
    /// Not recorded (for example, streams read back from a file).
    Unknown,
}

/// Timestamped clicks of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickStream {
    /// Detector that recorded the clicks.
    pub channel: Detector,
    /// Strictly increasing click times in picoseconds, within `[0, duration_ps]`.
    pub times_ps: Vec<i64>,
    /// Origin of each click, aligned with `times_ps`.
    pub origins: Vec<Origin>,
    /// Acquisition length in picoseconds.
    pub duration_ps: i64,
    /// Seed of the run that produced the stream.
    pub seed: u64,
}

/// Click counts by origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Provenance {
    /// Emitter photons.
    pub signal: u64,
    /// Background clicks.
    pub background: u64,
    /// Clicks of unknown origin.
    pub unknown: u64,
}

impl ClickStream {
    /// An empty stream.
    pub fn empty(channel: Detector, duration_ps: i64, seed: u64) -> Self {
        ClickStream {
            channel,
            times_ps: Vec::new(),
            origins: Vec::new(),
            duration_ps,
            seed,
        }
    }

    /// Number of clicks.
    pub fn len(&self) -> usize {
        self.times_ps.len()
    }

    /// Whether there are no clicks.
    pub fn is_empty(&self) -> bool {
        self.times_ps.is_empty()
    }

    /// Counts by origin.
    pub fn provenance(&self) -> Provenance {
        let mut p = Provenance::default();
        for o in &self.origins {
            match o {
                Origin::Signal => p.signal += 1,
                Origin::Background => p.background += 1,
                Origin::Unknown => p.unknown += 1,
            }
        }
        p
    }

    /// Checks ordering and range invariants.
    pub fn validate(&self) -> Result<()> {
        if self.origins.len() != self.times_ps.len() {
            return Err(Error::domain("click origins and times differ in length"));
        }
        if self.duration_ps < 0 {
            return Err(Error::domain("duration must be non-negative"));
        }
        if self.times_ps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("click times must be strictly increasing"));
        }
        if let (Some(&first), Some(&last)) = (self.times_ps.first(), self.times_ps.last()) {
            if first < 0 || last > self.duration_ps {
                return Err(Error::domain("click time outside the acquisition window"));
            }
        }
        Ok(())
    }

    /// Sorts clicks by time and drops repeated timestamps, keeping the first.
    pub(crate) fn sort_dedup(&mut self) {
        if self.times_ps.windows(2).any(|w| w[1] < w[0]) {
            let mut paired: Vec<(i64, Origin)> = self
                .times_ps
                .iter()
                .copied()
                .zip(self.origins.iter().copied())
                .collect();
            paired.sort_by_key(|&(t, _)| t);
            self.times_ps = paired.iter().map(|p| p.0).collect();
            self.origins = paired.into_iter().map(|p| p.1).collect();
        }
        let mut keep = 0;
        for i in 0..self.times_ps.len() {
            if keep == 0 || self.times_ps[i] != self.times_ps[keep - 1] {
                self.times_ps[keep] = self.times_ps[i];
                self.origins[keep] = self.origins[i];
                keep += 1;
            }
        }
        self.times_ps.truncate(keep);
        self.origins.truncate(keep);
    }
}

/// Everything needed to run a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Emitters and detection setup.
    pub experiment: HomExperiment,
    /// Incoherent re-excitation rate of each emitter.
    pub excitation_rate: Rate,
    /// Acquisition length in picoseconds.
    pub duration_ps: i64,
    /// Master seed.
    pub rng_seed: u64,
    /// Number of independently seeded chunks the acquisition is split into.
    pub chunk_count: u32,
    /// Meaning of the experiment's background fraction.
    pub background: BackgroundConvention,
}

impl SimConfig {
    /// Checks the simulation invariants, including the low-excitation regime
    /// `excitation_rate <= 0.1 / lifetime` for both emitters.
    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        check_excitation(self.excitation_rate, self.experiment.emitter_a.lifetime)?;
        check_excitation(self.excitation_rate, self.experiment.emitter_b.lifetime)?;
        if self.duration_ps < 0 {
            return Err(Error::domain("duration must be non-negative"));
        }
        if self.chunk_count == 0 {
            return Err(Error::domain("chunk count must be at least 1"));
        }
        Ok(())
    }

    /// `[start, end)` of chunk `index` in picoseconds.
    pub fn chunk_bounds(&self, index: u32) -> (i64, i64) {
        let k = self.chunk_count.max(1) as i128;
        let d = self.duration_ps as i128;
        let at = |i: i128| (d * i / k) as i64;
        (at(index as i128), at(index as i128 + 1))
    }
}

pub(crate) fn check_excitation(rate: Rate, lifetime: Time) -> Result<()> {
    let r = rate.as_per_s();
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::domain("excitation rate must be non-negative"));
    }
    if r * lifetime.as_s() > MAX_EXCITATION_PER_LIFETIME * (1.0 + 1e-12) {
        return Err(Error::domain(alloc::format!(
            "excitation rate {r:.4e}/s exceeds the low-excitation limit 0.1/lifetime"
        )));
    }
    Ok(())
}

/// Independent random stream roles within a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    /// Emission times of emitter A.
    EmitterA = 0,
    /// Emission times of emitter B.
    EmitterB = 1,
    /// Beamsplitter routing and phase diffusion.
    Mixing = 2,
    /// Background clicks.
    Background = 3,
    /// Jitter of detector 1.
    Detector1 = 4,
    /// Jitter of detector 2.
    Detector2 = 5,
}

const PURPOSES_PER_CHUNK: u64 = 8;

/// Random generator for one `(seed, chunk, purpose)` triple.
pub fn stream_rng(seed: u64, chunk: u32, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64 * PURPOSES_PER_CHUNK + purpose as u64);
    rng
}

/// Simulates one chunk. Click times are absolute (offset by the chunk start)
/// and both streams report the full acquisition duration.
pub fn simulate_chunk(cfg: &SimConfig, index: u32) -> Result<[ClickStream; 2]> {
    cfg.validate()?;
    if index >= cfg.chunk_count {
        return Err(Error::domain("chunk index out of range"));
    }
    let (start, end) = cfg.chunk_bounds(index);
    let len = end - start;
    let exp = &cfg.experiment;
    let seed = cfg.rng_seed;
    let span = Time::from_ps(len as f64);

    let a = simulate_emitter_stream(
        &exp.emitter_a,
        cfg.excitation_rate,
        span,
        &mut stream_rng(seed, index, Purpose::EmitterA),
    )?;
    let b = simulate_emitter_stream(
        &exp.emitter_b,
        cfg.excitation_rate,
        span,
        &mut stream_rng(seed, index, Purpose::EmitterB),
    )?;
    let mut ports = mix_at_beamsplitter(&a, &b, exp, &mut stream_rng(seed, index, Purpose::Mixing))?;
    add_background(
        &mut ports,
        exp.c_background,
        cfg.background,
        &mut stream_rng(seed, index, Purpose::Background),
    )?;
    let mut out = ports.map(|mut s| {
        s.times_ps.iter_mut().for_each(|t| *t += start);
        s.duration_ps = cfg.duration_ps;
        s.seed = seed;
        s
    });
    let purposes = [Purpose::Detector1, Purpose::Detector2];
    for (s, purpose) in out.iter_mut().zip(purposes) {
        *s = apply_detector(s, exp.detector_sigma, &mut stream_rng(seed, index, purpose))?;
    }
    Ok(out)
}

/// Joins per-chunk streams (in chunk order) into one pair of streams.
pub fn merge_chunks(chunks: Vec<[ClickStream; 2]>, cfg: &SimConfig) -> [ClickStream; 2] {
    let mut out = [
        ClickStream::empty(Detector::One, cfg.duration_ps, cfg.rng_seed),
        ClickStream::empty(Detector::Two, cfg.duration_ps, cfg.rng_seed),
    ];
    for pair in chunks {
        for (dst, src) in out.iter_mut().zip(pair) {
            dst.times_ps.extend_from_slice(&src.times_ps);
            dst.origins.extend_from_slice(&src.origins);
        }
    }
    for s in &mut out {
        s.sort_dedup();
    }
    out
}

/// Runs every chunk in sequence and merges them.
pub fn simulate(cfg: &SimConfig) -> Result<[ClickStream; 2]> {
    cfg.validate()?;
    let chunks = (0..cfg.chunk_count)
        .map(|i| simulate_chunk(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_chunks(chunks, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photophys::HomExperiment;

    fn config(chunks: u32) -> SimConfig {
        let exp = HomExperiment::nominal(1.0, 0.12, Rate::per_s(2e6)).unwrap();
        SimConfig {
            experiment: exp,
            excitation_rate: Rate::per_s(0.01 / 1.73e-9),
            duration_ps: 20_000_000_000,
            rng_seed: 7,
            chunk_count: chunks,
            background: BackgroundConvention::CoincidenceFraction,
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate(&config(3)).unwrap();
        let b = simulate(&config(3)).unwrap();
        assert_eq!(a, b);
        let mut other = config(3);
        other.rng_seed = 8;
        assert_ne!(simulate(&other).unwrap(), a);
        for s in &a {
            s.validate().unwrap();
            assert_eq!(s.seed, 7);
        }
    }

    #[test]
    fn rejects_strong_pumping() {
        let mut cfg = config(1);
        cfg.excitation_rate = Rate::per_s(0.2 / 1.73e-9);
        assert!(matches!(simulate(&cfg), Err(Error::Domain(_))));
        cfg = config(0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_duration_is_empty() {
        let mut cfg = config(2);
        cfg.duration_ps = 0;
        let out = simulate(&cfg).unwrap();
        assert!(out.iter().all(|s| s.is_empty()));
    }

    #[test]
    fn chunk_bounds_tile_the_run() {
        let cfg = SimConfig { duration_ps: 1001, ..config(4) };
        let mut prev = 0;
        for i in 0..4 {
            let (s, e) = cfg.chunk_bounds(i);
            assert_eq!(s, prev);
            prev = e;
        }
        assert_eq!(prev, 1001);
    }

    #[test]
    fn sort_dedup_keeps_first() {
        let mut s = ClickStream {
            channel: Detector::One,
            times_ps: alloc::vec![5, 3, 3, 9],
            origins: alloc::vec![Origin::Signal, Origin::Background, Origin::Signal, Origin::Signal],
            duration_ps: 10,
            seed: 0,
        };
        s.sort_dedup();
        assert_eq!(s.times_ps, [3, 5, 9]);
        assert_eq!(s.origins[0], Origin::Background);
        s.validate().unwrap();
    }
}
