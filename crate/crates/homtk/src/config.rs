//! JSON run configuration.
//!
//! Every section is optional and defaults to the nominal two-emitter setup.
//! Unknown keys are rejected and every dimensioned key carries its unit as a
//! suffix (`_ps`, `_ns`, `_mhz`, `_ghz`, `_thz`, `_per_s`, `_k`).

use std::path::Path;

use homtk_core::mcsim::{BackgroundConvention, HistogramSpec, SimConfig, MIN_NORMALIZATION_BINS};
use homtk_core::photophys::{nominal, DelayGrid, EmitterParams, HomExperiment};
use homtk_core::spectra::{Etalon, FrequencyGrid, LevelStructure};
use homtk_core::{Frequency, Rate, Time};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// The whole configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Exactly two emitters, on input ports 1 and 2.
    pub emitters: Vec<EmitterConfig>,
    /// Interference and detection setup.
    pub experiment: ExperimentConfig,
    /// Monte Carlo run.
    pub simulation: SimulationConfig,
    /// Coincidence histogram binning and normalization.
    pub histogram: HistogramConfig,
    /// Delay grid for model curves.
    pub grid: GridConfig,
    /// Level structure, etalon and frequency grid for spectra.
    pub spectrum: SpectrumConfig,
    /// Output locations.
    pub output: OutputConfig,
}

/// One emitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    /// Excited-state lifetime.
    pub lifetime_ns: f64,
    /// Transition frequency relative to a shared reference.
    pub frequency_offset_mhz: f64,
    /// Optical linewidth (FWHM).
    pub fwhm_mhz: f64,
    /// Detected photon rate.
    pub emission_rate_per_s: f64,
    /// Dark-state shelving; off when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shelving: Option<ShelvingConfig>,
}

/// Dark-state shelving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShelvingConfig {
    /// Probability of shelving after each emission.
    pub probability: f64,
    /// Mean dwell time.
    pub duration_ns: f64,
}

/// Background convention as written in the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundKind {
    /// Background share of coincidences.
    CoincidenceFraction,
    /// Background share of single clicks.
    ClickFraction,
}

impl From<BackgroundKind> for BackgroundConvention {
    fn from(kind: BackgroundKind) -> Self {
        match kind {
            BackgroundKind::CoincidenceFraction => BackgroundConvention::CoincidenceFraction,
            BackgroundKind::ClickFraction => BackgroundConvention::ClickFraction,
        }
    }
}

/// Interference and detection setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Indistinguishability in `[0, 1]`.
    pub chi: f64,
    /// Background fraction in `[0, 1)`.
    pub c_background: f64,
    /// How `c_background` is interpreted by the simulator.
    pub background_convention: BackgroundKind,
    /// Gaussian jitter of each detector.
    pub detector_sigma_ps: f64,
    /// Detuning; derived from the emitter offsets when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_mhz: Option<f64>,
    /// Coherence time; derived from the mean linewidth when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence_time_ns: Option<f64>,
}

/// Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Incoherent re-excitation rate of each emitter.
    pub excitation_rate_per_s: f64,
    /// Acquisition length.
    pub duration_ps: i64,
    /// Master seed.
    pub seed: u64,
    /// Number of independently seeded chunks.
    pub chunk_count: u32,
}

/// Coincidence histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramConfig {
    /// Bin width.
    pub bin_width_ps: i64,
    /// Largest bin center magnitude; also the upper edge of the normalization region.
    pub window_ps: i64,
    /// Lower edge of the normalization region.
    pub norm_min_ps: i64,
}

/// Delay grid for model curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Grid step.
    pub step_ps: f64,
    /// The grid spans `[-half_width_ps, half_width_ps]`.
    pub half_width_ps: f64,
}

/// Spectrum setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Absolute frequency of transition C.
    pub zpl_c_thz: f64,
    /// Ground-state spin-orbit splitting.
    pub lambda_so_ground_ghz: f64,
    /// Excited-state spin-orbit splitting.
    pub lambda_so_excited_ghz: f64,
    /// Sample temperature.
    pub temperature_k: f64,
    /// Width of each line.
    pub line_fwhm_ghz: f64,
    /// Filter etalon.
    pub etalon: EtalonConfig,
    /// Frequency grid; spans all lines when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<FrequencyGridConfig>,
}

/// Filter etalon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EtalonConfig {
    /// Free spectral range.
    pub fsr_ghz: f64,
    /// Transmission FWHM.
    pub bandwidth_ghz: f64,
    /// Position of a transmission maximum relative to transition C.
    pub peak_offset_ghz: f64,
    /// Identical etalons in series.
    pub stages: u32,
}

/// Frequency grid relative to transition C.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGridConfig {
    /// First sample.
    pub start_ghz: f64,
    /// Last sample.
    pub stop_ghz: f64,
    /// Spacing.
    pub step_ghz: f64,
}

/// Output locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Directory receiving files whose path is not given on the command line.
    pub directory: String,
    /// Also render an SVG next to every curve and spectrum CSV.
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            emitters: vec![
                EmitterConfig {
                    lifetime_ns: nominal::lifetime().as_ns(),
                    frequency_offset_mhz: 0.0,
                    fwhm_mhz: nominal::fwhm_a().as_mhz(),
                    emission_rate_per_s: 5e6,
                    shelving: None,
                },
                EmitterConfig {
                    lifetime_ns: nominal::lifetime().as_ns(),
                    frequency_offset_mhz: nominal::detuning().as_mhz(),
                    fwhm_mhz: nominal::fwhm_b().as_mhz(),
                    emission_rate_per_s: 5e6,
                    shelving: None,
                },
            ],
            experiment: ExperimentConfig::default(),
            simulation: SimulationConfig::default(),
            histogram: HistogramConfig::default(),
            grid: GridConfig::default(),
            spectrum: SpectrumConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            chi: 1.0,
            c_background: nominal::C_BACKGROUND,
            background_convention: BackgroundKind::CoincidenceFraction,
            detector_sigma_ps: nominal::detector_sigma().as_ps(),
            detuning_mhz: None,
            coherence_time_ns: None,
        }
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            excitation_rate_per_s: 0.01 / nominal::lifetime().as_s(),
            duration_ps: 1_000_000_000_000,
            seed: 1,
            chunk_count: 1,
        }
    }
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            bin_width_ps: 256,
            window_ps: 100_000,
            norm_min_ps: 50_000,
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            step_ps: 5.0,
            half_width_ps: 20_000.0,
        }
    }
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let ls = LevelStructure::nominal();
        SpectrumConfig {
            zpl_c_thz: ls.zpl_c_frequency.as_thz(),
            lambda_so_ground_ghz: ls.lambda_so_ground.as_ghz(),
            lambda_so_excited_ghz: ls.lambda_so_excited.as_ghz(),
            temperature_k: ls.temperature_k,
            line_fwhm_ghz: 1.0,
            etalon: EtalonConfig::default(),
            grid: None,
        }
    }
}

impl Default for EtalonConfig {
    fn default() -> Self {
        let e = Etalon::nominal();
        EtalonConfig {
            fsr_ghz: e.fsr.as_ghz(),
            bandwidth_ghz: e.bandwidth.as_ghz(),
            peak_offset_ghz: e.peak_offset.as_ghz(),
            stages: e.stages,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: ".".to_string(),
            svg: false,
        }
    }
}

fn invalid(origin: &str, field: &str, message: impl ToString) -> CliError {
    CliError::Config {
        location: origin.to_string(),
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn core_message(e: homtk_core::Error) -> String {
    match e {
        homtk_core::Error::Domain(m) | homtk_core::Error::Precision(m) => m,
    }
}

impl RunConfig {
    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates a configuration document. `origin` names the
    /// document in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = (inner.line(), inner.column());
            let mut message = inner.to_string();
            if let Some(cut) = message.rfind(" at line ") {
                message.truncate(cut);
            }
            CliError::Config {
                location: format!("{origin}:{line}:{column}"),
                field,
                message,
            }
        })?;
        cfg.validate(origin)?;
        Ok(cfg)
    }

    /// Checks every section, reporting the first offending field.
    pub fn validate(&self, origin: &str) -> Result<()> {
        self.experiment_checked(origin)?;
        self.sim_config_checked(origin)?;
        self.histogram_checked(origin)?;
        let g = &self.grid;
        if !(g.step_ps > 0.0 && g.step_ps.is_finite()) {
            return Err(invalid(origin, "grid.step_ps", "must be positive"));
        }
        if !(g.half_width_ps >= 0.0 && g.half_width_ps.is_finite()) {
            return Err(invalid(origin, "grid.half_width_ps", "must be non-negative"));
        }
        self.level_structure_checked(origin)?;
        self.etalon_checked(origin)?;
        if let Some(grid) = &self.spectrum.grid {
            if !(grid.step_ghz > 0.0) {
                return Err(invalid(origin, "spectrum.grid.step_ghz", "must be positive"));
            }
            if !(grid.stop_ghz >= grid.start_ghz) {
                return Err(invalid(origin, "spectrum.grid.stop_ghz", "must not be below start_ghz"));
            }
        }
        if !(self.spectrum.line_fwhm_ghz > 0.0) {
            return Err(invalid(origin, "spectrum.line_fwhm_ghz", "must be positive"));
        }
        Ok(())
    }

    fn emitter_checked(&self, origin: &str, index: usize) -> Result<EmitterParams> {
        let field = format!("emitters[{index}]");
        let e = &self.emitters[index];
        let mut params = EmitterParams::new(
            Time::from_ns(e.lifetime_ns),
            Frequency::from_mhz(e.frequency_offset_mhz),
            Frequency::from_mhz(e.fwhm_mhz),
            Rate::per_s(e.emission_rate_per_s),
        )
        .map_err(|err| invalid(origin, &field, core_message(err)))?;
        if let Some(s) = &e.shelving {
            params = params
                .with_shelving(s.probability, Time::from_ns(s.duration_ns))
                .map_err(|err| invalid(origin, &format!("{field}.shelving"), core_message(err)))?;
        }
        Ok(params)
    }

    fn experiment_checked(&self, origin: &str) -> Result<HomExperiment> {
        if self.emitters.len() != 2 {
            return Err(invalid(
                origin,
                "emitters",
                format!("exactly 2 emitters are required, found {}", self.emitters.len()),
            ));
        }
        let a = self.emitter_checked(origin, 0)?;
        let b = self.emitter_checked(origin, 1)?;
        let x = &self.experiment;
        if !(0.0..=1.0).contains(&x.chi) {
            return Err(invalid(origin, "experiment.chi", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&x.c_background) {
            return Err(invalid(origin, "experiment.c_background", "must lie in [0, 1)"));
        }
        if !(x.detector_sigma_ps >= 0.0 && x.detector_sigma_ps.is_finite()) {
            return Err(invalid(origin, "experiment.detector_sigma_ps", "must be non-negative"));
        }
        if let Some(d) = x.detuning_mhz {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(invalid(origin, "experiment.detuning_mhz", "must be non-negative"));
            }
        }
        if let Some(tc) = x.coherence_time_ns {
            if !(tc > 0.0 && tc.is_finite()) {
                return Err(invalid(origin, "experiment.coherence_time_ns", "must be positive"));
            }
        }
        let mut exp = HomExperiment::new(a, b, x.chi, x.c_background, Time::from_ps(x.detector_sigma_ps))
            .map_err(|err| invalid(origin, "experiment", core_message(err)))?;
        exp.detuning_override = x.detuning_mhz.map(Frequency::from_mhz);
        exp.coherence_time_override = x.coherence_time_ns.map(Time::from_ns);
        exp.validate()
            .map_err(|err| invalid(origin, "experiment", core_message(err)))?;
        Ok(exp)
    }

    fn sim_config_checked(&self, origin: &str) -> Result<SimConfig> {
        let experiment = self.experiment_checked(origin)?;
        let s = &self.simulation;
        if s.duration_ps < 0 {
            return Err(invalid(origin, "simulation.duration_ps", "must be non-negative"));
        }
        if s.chunk_count == 0 {
            return Err(invalid(origin, "simulation.chunk_count", "must be at least 1"));
        }
        let cfg = SimConfig {
            experiment,
            excitation_rate: Rate::per_s(s.excitation_rate_per_s),
            duration_ps: s.duration_ps,
            rng_seed: s.seed,
            chunk_count: s.chunk_count,
            background: self.experiment.background_convention.into(),
        };
        cfg.validate()
            .map_err(|err| invalid(origin, "simulation.excitation_rate_per_s", core_message(err)))?;
        Ok(cfg)
    }

    fn histogram_checked(&self, origin: &str) -> Result<(HistogramSpec, i64)> {
        let h = &self.histogram;
        if h.bin_width_ps <= 0 {
            return Err(invalid(origin, "histogram.bin_width_ps", "must be positive"));
        }
        if h.window_ps < h.bin_width_ps {
            return Err(invalid(origin, "histogram.window_ps", "must be at least one bin width"));
        }
        if h.norm_min_ps < 0 || h.norm_min_ps >= h.window_ps {
            return Err(invalid(origin, "histogram.norm_min_ps", "must lie in [0, window_ps)"));
        }
        let w = h.bin_width_ps;
        let half = h.window_ps / w;
        let first = (h.norm_min_ps + w - 1) / w;
        let bins = 2 * (half - first + 1).max(0) as usize - usize::from(first == 0);
        if bins < MIN_NORMALIZATION_BINS {
            return Err(invalid(
                origin,
                "histogram.norm_min_ps",
                format!("normalization region holds {bins} bins, at least {MIN_NORMALIZATION_BINS} required"),
            ));
        }
        Ok((
            HistogramSpec {
                bin_width_ps: h.bin_width_ps,
                window_ps: h.window_ps,
            },
            h.norm_min_ps,
        ))
    }

    fn level_structure_checked(&self, origin: &str) -> Result<LevelStructure> {
        let s = &self.spectrum;
        let ls = LevelStructure {
            zpl_c_frequency: Frequency::from_thz(s.zpl_c_thz),
            lambda_so_ground: Frequency::from_ghz(s.lambda_so_ground_ghz),
            lambda_so_excited: Frequency::from_ghz(s.lambda_so_excited_ghz),
            temperature_k: s.temperature_k,
        };
        ls.validate()
            .map_err(|err| invalid(origin, "spectrum", core_message(err)))?;
        Ok(ls)
    }

    fn etalon_checked(&self, origin: &str) -> Result<Etalon> {
        let e = &self.spectrum.etalon;
        if !(e.fsr_ghz > 0.0) {
            return Err(invalid(origin, "spectrum.etalon.fsr_ghz", "must be positive"));
        }
        if !(e.bandwidth_ghz > 0.0 && e.bandwidth_ghz < e.fsr_ghz) {
            return Err(invalid(origin, "spectrum.etalon.bandwidth_ghz", "must lie in (0, fsr_ghz)"));
        }
        if e.stages == 0 {
            return Err(invalid(origin, "spectrum.etalon.stages", "must be at least 1"));
        }
        Ok(Etalon {
            fsr: Frequency::from_ghz(e.fsr_ghz),
            bandwidth: Frequency::from_ghz(e.bandwidth_ghz),
            peak_offset: Frequency::from_ghz(e.peak_offset_ghz),
            stages: e.stages,
        })
    }

    /// The experiment described by `emitters` and `experiment`.
    pub fn experiment(&self) -> Result<HomExperiment> {
        self.experiment_checked("config")
    }

    /// Simulation settings.
    pub fn sim_config(&self) -> Result<SimConfig> {
        self.sim_config_checked("config")
    }

    /// Histogram binning and the lower edge of the normalization region.
    pub fn histogram(&self) -> Result<(HistogramSpec, i64)> {
        self.histogram_checked("config")
    }

    /// Delay grid for model curves.
    pub fn delay_grid(&self) -> DelayGrid {
        DelayGrid {
            step: Time::from_ps(self.grid.step_ps),
            half_width: Time::from_ps(self.grid.half_width_ps),
        }
    }

    /// Level structure for spectra.
    pub fn level_structure(&self) -> Result<LevelStructure> {
        self.level_structure_checked("config")
    }

    /// Filter etalon.
    pub fn etalon(&self) -> Result<Etalon> {
        self.etalon_checked("config")
    }

    /// Width of each spectral line.
    pub fn line_fwhm(&self) -> Frequency {
        Frequency::from_ghz(self.spectrum.line_fwhm_ghz)
    }

    /// Frequency grid for spectra.
    pub fn frequency_grid(&self, ls: &LevelStructure) -> FrequencyGrid {
        match &self.spectrum.grid {
            Some(g) => FrequencyGrid {
                start_ghz: g.start_ghz,
                stop_ghz: g.stop_ghz,
                step_ghz: g.step_ghz,
            },
            None => FrequencyGrid::covering(ls, self.line_fwhm()),
        }
    }
}
