//! Lineshapes, the four zero-phonon lines and etalon filtering.
//!
//! Frequencies on spectra are in GHz relative to the transition `C`
//! reference; line positions follow from the ground- and excited-state
//! spin-orbit splittings:
//!
//! | line | offset         | upper level      |
//! |------|----------------|------------------|
//! | A    | `+l_u`         | upper excited    |
//! | B    | `+l_u - l_g`   | upper excited    |
//! | C    | `0`            | lower excited    |
//! | D    | `-l_g`         | lower excited    |

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;

use crate::{Error, Frequency, Result};

/// Planck constant over Boltzmann constant, in kelvin seconds.
pub const PLANCK_OVER_BOLTZMANN: f64 = 6.626_070_15e-34 / 1.380_649e-23;

/// Lower bound on the share of fluorescence emitted into the zero-phonon
/// lines. Kept for rate budgeting only; no sideband lineshape is modelled.
pub const ZPL_FRACTION: f64 = 0.70;

/// Lorentzian `amplitude (w/2)^2 / ((nu - center)^2 + (w/2)^2)`.
pub fn lorentzian(nu: f64, center: f64, fwhm: f64, amplitude: f64) -> Result<f64> {
    if !(fwhm > 0.0) {
        return Err(Error::domain("Lorentzian FWHM must be positive"));
    }
    Ok(lorentzian_unchecked(nu, center, fwhm, amplitude))
}

#[inline]
pub(crate) fn lorentzian_unchecked(nu: f64, center: f64, fwhm: f64, amplitude: f64) -> f64 {
    let hw2 = 0.25 * fwhm * fwhm;
    let d = nu - center;
    amplitude * hw2 / (d * d + hw2)
}

/// Gaussian `amplitude exp(-(nu - center)^2 / (2 sigma^2))`.
pub fn gaussian(nu: f64, center: f64, sigma: f64, amplitude: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::domain("Gaussian sigma must be positive"));
    }
    let z = (nu - center) / sigma;
    Ok(amplitude * (-0.5 * z * z).exp())
}

/// Population ratio of two levels split by `delta_e` at `temperature`:
/// `exp(-h delta_e / (k_B T))`.
pub fn boltzmann_ratio(delta_e: Frequency, temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0) {
        return Err(Error::domain("temperature must be positive"));
    }
    Ok((-PLANCK_OVER_BOLTZMANN * delta_e.as_hz() / temperature_k).exp())
}

/// Spin-orbit level structure of the emitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStructure {
    /// Absolute frequency of transition C.
    pub zpl_c_frequency: Frequency,
    /// Ground-state splitting.
    pub lambda_so_ground: Frequency,
    /// Excited-state splitting.
    pub lambda_so_excited: Frequency,
    /// Sample temperature in kelvin.
    pub temperature_k: f64,
}

impl LevelStructure {
    /// Nominal structure: C at 406.7001 THz, splittings 50 and 250 GHz, 5 K.
    pub fn nominal() -> Self {
        LevelStructure {
            zpl_c_frequency: Frequency::from_thz(406.7001),
            lambda_so_ground: Frequency::from_ghz(50.0),
            lambda_so_excited: Frequency::from_ghz(250.0),
            temperature_k: 5.0,
        }
    }

    /// Checks the invariants.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_so_ground.as_hz() > 0.0) || !(self.lambda_so_excited.as_hz() > 0.0) {
            return Err(Error::domain("spin-orbit splittings must be positive"));
        }
        if !(self.temperature_k > 0.0) {
            return Err(Error::domain("temperature must be positive"));
        }
        Ok(())
    }

    /// The four transitions with Boltzmann-weighted amplitudes.
    pub fn lines(&self, line_fwhm: Frequency) -> Result<Vec<SpectralLine>> {
        self.validate()?;
        if !(line_fwhm.as_hz() > 0.0) {
            return Err(Error::domain("line FWHM must be positive"));
        }
        let lu = self.lambda_so_excited.as_ghz();
        let lg = self.lambda_so_ground.as_ghz();
        let upper = boltzmann_ratio(self.lambda_so_excited, self.temperature_k)?;
        let w = line_fwhm.as_ghz();
        Ok([
            (LineLabel::A, lu, upper),
            (LineLabel::B, lu - lg, upper),
            (LineLabel::C, 0.0, 1.0),
            (LineLabel::D, -lg, 1.0),
        ]
        .into_iter()
        .map(|(label, center_ghz, amplitude)| SpectralLine {
            label,
            center_ghz,
            fwhm_ghz: w,
            amplitude,
        })
        .collect())
    }
}

/// Zero-phonon transition label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LineLabel {
    /// Upper excited to lower ground.
    A,
    /// Upper excited to upper ground.
    B,
    /// Lower excited to lower ground.
    C,
    /// Lower excited to upper ground.
    D,
}

impl LineLabel {
    /// Single-letter name.
    pub fn as_str(self) -> &'static str {
        match self {
            LineLabel::A => "A",
            LineLabel::B => "B",
            LineLabel::C => "C",
            LineLabel::D => "D",
        }
    }
}

/// One Lorentzian emission line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    /// Transition.
    pub label: LineLabel,
    /// Center, GHz from transition C.
    pub center_ghz: f64,
    /// Width, GHz.
    pub fwhm_ghz: f64,
    /// Peak height.
    pub amplitude: f64,
}

/// A sampled spectrum with the lines that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sample frequencies, GHz relative to transition C.
    pub freq_ghz: Vec<f64>,
    /// Intensity (arbitrary units) at each frequency.
    pub intensity: Vec<f64>,
    /// Contributing lines.
    pub lines: Vec<SpectralLine>,
}

impl Spectrum {
    /// Line with the given label.
    pub fn line(&self, label: LineLabel) -> Option<&SpectralLine> {
        self.lines.iter().find(|l| l.label == label)
    }

    /// Checks non-negativity and label uniqueness.
    pub fn validate(&self) -> Result<()> {
        if self.freq_ghz.len() != self.intensity.len() {
            return Err(Error::domain("frequency grid and intensities differ in length"));
        }
        if self.intensity.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::domain("intensities must be non-negative"));
        }
        if self.lines.iter().any(|l| !(l.amplitude >= 0.0)) {
            return Err(Error::domain("line amplitudes must be non-negative"));
        }
        for (i, a) in self.lines.iter().enumerate() {
            if self.lines[i + 1..].iter().any(|b| b.label == a.label) {
                return Err(Error::domain("duplicate line label"));
            }
        }
        Ok(())
    }
}

/// Uniform frequency grid, GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    /// First sample.
    pub start_ghz: f64,
    /// Last sample (inclusive when it lands on the grid).
    pub stop_ghz: f64,
    /// Spacing.
    pub step_ghz: f64,
}

impl FrequencyGrid {
    /// A grid spanning all four lines with 50 GHz margins.
    pub fn covering(ls: &LevelStructure, line_fwhm: Frequency) -> Self {
        FrequencyGrid {
            start_ghz: -ls.lambda_so_ground.as_ghz() - 50.0,
            stop_ghz: ls.lambda_so_excited.as_ghz() + 50.0,
            step_ghz: (line_fwhm.as_ghz() / 10.0).min(0.05),
        }
    }

    /// Sample points.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step_ghz > 0.0) || !(self.stop_ghz >= self.start_ghz) {
            return Err(Error::domain("invalid frequency grid"));
        }
        let n = ((self.stop_ghz - self.start_ghz) / self.step_ghz + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| self.start_ghz + k as f64 * self.step_ghz).collect())
    }
}

/// Zero-phonon emission spectrum on the default grid.
pub fn zpl_spectrum(ls: &LevelStructure, line_fwhm: Frequency) -> Result<Spectrum> {
    zpl_spectrum_on(ls, line_fwhm, &FrequencyGrid::covering(ls, line_fwhm))
}

/// Zero-phonon emission spectrum on a caller-supplied grid.
///
/// All four transitions are given equal dipole strength; the upper excited
/// branch (A, B) is weighted by its thermal population relative to the lower
/// branch (C, D).
pub fn zpl_spectrum_on(ls: &LevelStructure, line_fwhm: Frequency, grid: &FrequencyGrid) -> Result<Spectrum> {
    let lines = ls.lines(line_fwhm)?;
    let freq_ghz = grid.points()?;
    let intensity = freq_ghz
        .iter()
        .map(|&nu| {
            lines
                .iter()
                .map(|l| lorentzian_unchecked(nu, l.center_ghz, l.fwhm_ghz, l.amplitude))
                .sum()
        })
        .collect();
    Ok(Spectrum {
        freq_ghz,
        intensity,
        lines,
    })
}

/// A Fabry-Perot etalon described by its free spectral range and
/// transmission bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Etalon {
    /// Free spectral range.
    pub fsr: Frequency,
    /// Transmission FWHM.
    pub bandwidth: Frequency,
    /// Position of one transmission maximum, relative to transition C.
    pub peak_offset: Frequency,
    /// Number of identical etalons in series.
    pub stages: u32,
}

impl Etalon {
    /// 20 GHz free spectral range, 1 GHz bandwidth, peaked on transition C.
    pub fn nominal() -> Self {
        Etalon {
            fsr: Frequency::from_ghz(20.0),
            bandwidth: Frequency::from_ghz(1.0),
            peak_offset: Frequency::ZERO,
            stages: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        let (fsr, bw) = (self.fsr.as_hz(), self.bandwidth.as_hz());
        if !(bw > 0.0 && bw < fsr) {
            return Err(Error::domain("etalon bandwidth must lie in (0, FSR)"));
        }
        if self.stages == 0 {
            return Err(Error::domain("at least one etalon stage is required"));
        }
        Ok(())
    }

    /// Transmission at `nu` (relative to transition C).
    pub fn transmission(&self, nu: Frequency) -> Result<f64> {
        self.validate()?;
        let single = etalon_transmission(nu, self.fsr, self.bandwidth, self.peak_offset)?;
        Ok(single.powi(self.stages as i32))
    }
}

/// Airy transmission `1 / (1 + F sin^2(pi (nu - peak) / fsr))` with the
/// finesse coefficient `F = 1 / sin^2(pi bw / (2 fsr))` fixing the FWHM at
/// `bandwidth_fwhm`.
pub fn etalon_transmission(
    nu: Frequency,
    fsr: Frequency,
    bandwidth_fwhm: Frequency,
    peak_offset: Frequency,
) -> Result<f64> {
    let (fsr, bw) = (fsr.as_hz(), bandwidth_fwhm.as_hz());
    if !(bw > 0.0 && bw < fsr) {
        return Err(Error::domain("etalon bandwidth must lie in (0, FSR)"));
    }
    let half = (PI * bw / (2.0 * fsr)).sin();
    let finesse_coeff = 1.0 / (half * half);
    let s = (PI * (nu.as_hz() - peak_offset.as_hz()) / fsr).sin();
    Ok(1.0 / (1.0 + finesse_coeff * s * s))
}

/// Multiplies a spectrum pointwise by a transmission sampled on the same
/// grid. Line amplitudes are scaled by the transmission at their centers,
/// which the caller supplies through `line_transmission`.
pub fn apply_transmission(
    spec: &Spectrum,
    transmission: &[f64],
    line_transmission: impl Fn(&SpectralLine) -> f64,
) -> Result<Spectrum> {
    if transmission.len() != spec.intensity.len() {
        return Err(Error::domain("transmission grid does not match the spectrum grid"));
    }
    Ok(Spectrum {
        freq_ghz: spec.freq_ghz.clone(),
        intensity: spec
            .intensity
            .iter()
            .zip(transmission)
            .map(|(i, t)| i * t)
            .collect(),
        lines: spec
            .lines
            .iter()
            .map(|l| SpectralLine {
                amplitude: l.amplitude * line_transmission(l),
                ..*l
            })
            .collect(),
    })
}

/// Passes a spectrum through an etalon.
pub fn filter_spectrum(spec: &Spectrum, etalon: &Etalon) -> Result<Spectrum> {
    etalon.validate()?;
    let transmission = spec
        .freq_ghz
        .iter()
        .map(|&nu| etalon.transmission(Frequency::from_ghz(nu)))
        .collect::<Result<Vec<_>>>()?;
    apply_transmission(spec, &transmission, |l| {
        etalon
            .transmission(Frequency::from_ghz(l.center_ghz))
            .unwrap_or(0.0)
    })
}

/// Thermal broadening of transition C, anchored at 12 MHz at 4.75 K and
/// scaled as `(T / 4.75 K)^exponent`.
pub fn thermal_broadening_estimate(temperature_k: f64, exponent: f64) -> Result<Frequency> {
    const ANCHOR_MHZ: f64 = 12.0;
    const ANCHOR_K: f64 = 4.75;
    if !(temperature_k > 0.0) {
        return Err(Error::domain("temperature must be positive"));
    }
    Ok(Frequency::from_mhz(ANCHOR_MHZ * (temperature_k / ANCHOR_K).powf(exponent)))
}

/// Default scaling exponent for [`thermal_broadening_estimate`].
pub const THERMAL_BROADENING_EXPONENT: f64 = 3.0;

/// Gaussian distribution of emitter center frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InhomogeneousModel {
    /// Distribution center.
    pub center: Frequency,
    /// Gaussian width.
    pub sigma: Frequency,
    /// Peak count level.
    pub amplitude: f64,
}

impl InhomogeneousModel {
    /// Validated constructor.
    pub fn new(center: Frequency, sigma: Frequency, amplitude: f64) -> Result<Self> {
        if !(sigma.as_hz() > 0.0) || !(amplitude > 0.0) {
            return Err(Error::domain("sigma and amplitude must be positive"));
        }
        Ok(InhomogeneousModel {
            center,
            sigma,
            amplitude,
        })
    }

    /// Expected counts at `nu`.
    pub fn eval(&self, nu: Frequency) -> f64 {
        let z = (nu.as_hz() - self.center.as_hz()) / self.sigma.as_hz();
        self.amplitude * (-0.5 * z * z).exp()
    }
}
