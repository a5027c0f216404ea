//! Command-line interface.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use homtk_core::fitkit::{self, CbFixed, FitResult, Sample};
use homtk_core::mcsim::{antibunching_time, normalize, ClickStream, CorrelationHistogram};
use homtk_core::photophys::{hom_curve, hom_visibility};
use homtk_core::spectra::{filter_spectrum, zpl_spectrum_on};
use homtk_core::{Frequency, Time};

use crate::config::RunConfig;
use crate::error::{CliError, Result, EXIT_OK};
use crate::formats;
use crate::parallel;
use crate::svg::{self, Series};

/// Two-emitter interference toolkit: correlation models, photon-stream
/// simulation, coincidence histograms, spectra and fits.
#[derive(Debug, Parser)]
#[command(name = "homtk", version)]
pub struct Cli {
    /// Run configuration (JSON); nominal values when omitted.
    #[arg(long, short, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Subcommand to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the model g2 curve on the configured delay grid.
    ModelG2(ModelG2Args),
    /// Simulate click streams and their normalized coincidence histogram.
    Simulate(SimulateArgs),
    /// Build a normalized coincidence histogram from a click file.
    Correlate(CorrelateArgs),
    /// Fit a model to measured or simulated data.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Write the zero-phonon-line spectrum, optionally etalon filtered.
    Spectrum(SpectrumArgs),
    /// Print the interference visibility for zero-delay g2 values.
    Visibility(VisibilityArgs),
}

/// Arguments of `model-g2`.
#[derive(Debug, Args)]
pub struct ModelG2Args {
    /// Indistinguishability; the configured value when omitted.
    #[arg(long)]
    pub chi: Option<f64>,
    /// Convolve with the detector jitter (default).
    #[arg(long, overrides_with = "no_jitter")]
    pub jitter: bool,
    /// Use the jitter-free curve.
    #[arg(long, overrides_with = "jitter")]
    pub no_jitter: bool,
    /// Output CSV (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also render the curve as SVG.
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
}

/// Arguments of `simulate`.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Master seed, overriding the configuration.
    #[arg(long, env = "HOMTK_SEED")]
    pub seed: Option<u64>,
    /// Number of independently seeded chunks.
    #[arg(long)]
    pub chunks: Option<u32>,
    /// Acquisition length in picoseconds.
    #[arg(long)]
    pub duration_ps: Option<i64>,
    /// Indistinguishability, overriding the configuration.
    #[arg(long)]
    pub chi: Option<f64>,
    /// Click CSV (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    pub out_clicks: Option<PathBuf>,
    /// Histogram CSV (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    pub out_hist: Option<PathBuf>,
}

/// Arguments of `correlate`.
#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Click CSV.
    #[arg(value_name = "CLICKS")]
    pub clicks: PathBuf,
    /// Bin width, overriding the configuration.
    #[arg(long)]
    pub bin_width_ps: Option<i64>,
    /// Histogram half-width, overriding the configuration.
    #[arg(long)]
    pub window_ps: Option<i64>,
    /// Lower edge of the normalization region, overriding the configuration.
    #[arg(long)]
    pub norm_min_ps: Option<i64>,
    /// Histogram CSV (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Fit recipes.
#[derive(Debug, Subcommand)]
pub enum FitCommand {
    /// Lorentzian doublet (or single line) to a `freq_mhz,counts` scan.
    Ple(PleArgs),
    /// Gaussian distribution to a `freq_mhz,counts` histogram of emitter frequencies.
    Inhomo(DataArgs),
    /// Exponential decay to a `time_ps,counts` histogram.
    Lifetime(DataArgs),
    /// Background fraction from normalized coincidence histograms.
    Cb(CbArgs),
}

/// Input and output of a single-file fit.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Data CSV.
    #[arg(value_name = "DATA")]
    pub data: PathBuf,
    /// Result JSON (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Arguments of `fit ple`.
#[derive(Debug, Args)]
pub struct PleArgs {
    /// Input and output files.
    #[command(flatten)]
    pub io: DataArgs,
    /// Fit one Lorentzian instead of a doublet.
    #[arg(long)]
    pub single: bool,
}

/// Arguments of `fit cb`.
#[derive(Debug, Args)]
pub struct CbArgs {
    /// Histogram measured with identical polarizations.
    #[arg(long, value_name = "FILE", requires = "perp", conflicts_with = "hist")]
    pub par: Option<PathBuf>,
    /// Histogram measured with orthogonal polarizations.
    #[arg(long, value_name = "FILE", requires = "par", conflicts_with = "hist")]
    pub perp: Option<PathBuf>,
    /// A single histogram, fitted with `--chi`.
    #[arg(long, value_name = "FILE", requires = "chi")]
    pub hist: Option<PathBuf>,
    /// Indistinguishability of the single histogram.
    #[arg(long)]
    pub chi: Option<f64>,
    /// Antibunching time; defaults to that of the configured emitters.
    #[arg(long)]
    pub lifetime_ns: Option<f64>,
    /// Coherence time; defaults to the configured value.
    #[arg(long)]
    pub coherence_time_ns: Option<f64>,
    /// Detuning; defaults to the configured value.
    #[arg(long)]
    pub detuning_mhz: Option<f64>,
    /// Detector jitter; defaults to the configured value.
    #[arg(long)]
    pub detector_sigma_ps: Option<f64>,
    /// Only bins with `|tau|` up to this delay enter the fit.
    #[arg(long, default_value_t = 20.0)]
    pub fit_half_width_ns: f64,
    /// Result JSON (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

/// Arguments of `spectrum`.
#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Pass the spectrum through the configured etalon.
    #[arg(long)]
    pub etalon: bool,
    /// Temperature, overriding the configuration.
    #[arg(long)]
    pub temperature_k: Option<f64>,
    /// Spectrum CSV (`-` for standard output).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Line list JSON; next to the CSV when omitted.
    #[arg(long, value_name = "FILE")]
    pub out_lines: Option<PathBuf>,
    /// Also render the spectrum as SVG.
    #[arg(long, value_name = "FILE")]
    pub svg: Option<PathBuf>,
}

/// Arguments of `visibility`.
#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct VisibilityArgs {
    /// g2(0) with identical polarizations.
    pub g2_par: f64,
    /// g2(0) with orthogonal polarizations.
    pub g2_perp: f64,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match &cli.command {
        Command::ModelG2(a) => model_g2(&config, a),
        Command::Simulate(a) => simulate(&config, a),
        Command::Correlate(a) => correlate(&config, a),
        Command::Fit(f) => fit(&config, f),
        Command::Spectrum(a) => spectrum(&config, a),
        Command::Visibility(a) => {
            println!("{:.4}", hom_visibility(a.g2_par, a.g2_perp)?);
            Ok(())
        }
    }
}

fn output_path(config: &RunConfig, given: &Option<PathBuf>, default_name: &str) -> PathBuf {
    given
        .clone()
        .unwrap_or_else(|| Path::new(&config.output.directory).join(default_name))
}

fn svg_path(config: &RunConfig, given: &Option<PathBuf>, csv: &Path) -> Option<PathBuf> {
    given
        .clone()
        .or_else(|| (config.output.svg && csv != Path::new("-")).then(|| csv.with_extension("svg")))
}

fn write_svg(path: &Path, contents: &str) -> Result<()> {
    formats::write_file(path, |w| w.write_all(contents.as_bytes()))
}

fn report(path: &Path, what: &str) {
    if path != Path::new("-") {
        eprintln!("wrote {} ({what})", path.display());
    }
}

fn model_g2(config: &RunConfig, a: &ModelG2Args) -> Result<()> {
    let mut exp = config.experiment()?;
    if let Some(chi) = a.chi {
        exp.chi = chi;
        exp.validate()?;
    }
    let curve = hom_curve(&exp, &config.delay_grid(), !a.no_jitter)?;
    let out = output_path(config, &a.out, "g2.csv");
    formats::write_file(&out, |w| formats::write_curve(w, &curve))?;
    report(&out, &format!("{} points", curve.tau_ps.len()));
    if let Some(path) = svg_path(config, &a.svg, &out) {
        let label = format!("chi = {}", exp.chi);
        let doc = svg::plot(
            &[Series {
                label: &label,
                x: &curve.tau_ps,
                y: &curve.g2,
            }],
            "delay (ps)",
            "g2",
        );
        write_svg(&path, &doc)?;
    }
    Ok(())
}

fn spans() -> usize {
    4 * rayon::current_num_threads()
}

fn histogram_of(config: &RunConfig, streams: &[ClickStream; 2]) -> Result<CorrelationHistogram> {
    let (spec, norm_min) = config.histogram()?;
    let hist = parallel::correlate(&streams[0], &streams[1], spec, spans())?;
    match normalize(&hist, norm_min, spec.window_ps) {
        Ok(h) => Ok(h),
        Err(e) => {
            eprintln!("warning: histogram left unnormalized: {e}");
            Ok(hist)
        }
    }
}

fn simulate(config: &RunConfig, a: &SimulateArgs) -> Result<()> {
    let mut cfg = config.sim_config()?;
    if let Some(seed) = a.seed {
        cfg.rng_seed = seed;
    }
    if let Some(chunks) = a.chunks {
        cfg.chunk_count = chunks;
    }
    if let Some(d) = a.duration_ps {
        cfg.duration_ps = d;
    }
    if let Some(chi) = a.chi {
        cfg.experiment.chi = chi;
    }
    cfg.validate()?;
    let streams = parallel::simulate(&cfg)?;
    let clicks = output_path(config, &a.out_clicks, "clicks.csv");
    formats::write_file(&clicks, |w| formats::write_clicks(w, &streams))?;
    report(&clicks, &format!("{} + {} clicks", streams[0].len(), streams[1].len()));
    let hist = histogram_of(config, &streams)?;
    let out = output_path(config, &a.out_hist, "histogram.csv");
    formats::write_file(&out, |w| formats::write_histogram(w, &hist))?;
    report(&out, &format!("{} coincidences", hist.total()));
    Ok(())
}

fn correlate(config: &RunConfig, a: &CorrelateArgs) -> Result<()> {
    let mut config = config.clone();
    let h = &mut config.histogram;
    h.bin_width_ps = a.bin_width_ps.unwrap_or(h.bin_width_ps);
    h.window_ps = a.window_ps.unwrap_or(h.window_ps);
    h.norm_min_ps = a.norm_min_ps.unwrap_or(h.norm_min_ps);
    config.validate("command line")?;
    let streams = formats::read_clicks(&a.clicks)?;
    let hist = histogram_of(&config, &streams)?;
    let out = output_path(&config, &a.out, "histogram.csv");
    formats::write_file(&out, |w| formats::write_histogram(w, &hist))?;
    report(&out, &format!("{} coincidences", hist.total()));
    Ok(())
}

fn finish_fit(config: &RunConfig, out: &Option<PathBuf>, result: &FitResult) -> Result<()> {
    let out = output_path(config, out, "fit.json");
    formats::write_file(&out, |w| formats::write_fit_result(w, result))?;
    report(&out, &result.model);
    if result.converged {
        Ok(())
    } else {
        let flags: Vec<&str> = result.flags.iter().map(|f| f.as_str()).collect();
        Err(CliError::NotConverged(format!(
            "{} after {} iterations [{}]",
            result.model,
            result.iterations,
            flags.join(", ")
        )))
    }
}

fn cb_fixed(config: &RunConfig, a: &CbArgs) -> Result<CbFixed> {
    let sim = config.sim_config()?;
    let exp = sim.experiment;
    let lifetime = match a.lifetime_ns {
        Some(ns) => Time::from_ns(ns),
        None => antibunching_time(exp.lifetime(), sim.excitation_rate)?,
    };
    Ok(CbFixed {
        lifetime,
        coherence_time: match a.coherence_time_ns {
            Some(ns) => Time::from_ns(ns),
            None => exp.coherence_time()?,
        },
        detuning: a.detuning_mhz.map_or(exp.detuning(), Frequency::from_mhz),
        detector_sigma: a.detector_sigma_ps.map_or(exp.detector_sigma, Time::from_ps),
        fit_half_width: Time::from_ns(a.fit_half_width_ns),
    })
}

fn fit(config: &RunConfig, f: &FitCommand) -> Result<()> {
    match f {
        FitCommand::Ple(a) => {
            let data = formats::read_samples(&a.io.data, "freq_mhz")?;
            let result = if a.single {
                fitkit::fit_ple_line(&data)?
            } else {
                fitkit::fit_ple_doublet(&data)?
            };
            finish_fit(config, &a.io.out, &result)
        }
        FitCommand::Inhomo(a) => {
            let data = formats::read_samples(&a.data, "freq_mhz")?;
            finish_fit(config, &a.out, &fitkit::fit_inhomogeneous(&data)?)
        }
        FitCommand::Lifetime(a) => {
            let data: Vec<Sample> = formats::read_samples(&a.data, "time_ps")?
                .into_iter()
                .map(|s| Sample {
                    x: Time::from_ps(s.x).as_ns(),
                    ..s
                })
                .collect();
            finish_fit(config, &a.out, &fitkit::fit_lifetime(&data)?)
        }
        FitCommand::Cb(a) => {
            let fixed = cb_fixed(config, a)?;
            let result = match (&a.par, &a.perp, &a.hist, a.chi) {
                (Some(par), Some(perp), None, _) => {
                    let par = formats::read_histogram(par)?;
                    let perp = formats::read_histogram(perp)?;
                    fitkit::fit_cb_joint(&par, &perp, &fixed)?
                }
                (None, None, Some(hist), Some(chi)) => {
                    fitkit::fit_cb_single(&formats::read_histogram(hist)?, chi, &fixed)?
                }
                _ => {
                    return Err(CliError::Usage(
                        "give either --par and --perp, or --hist with --chi".to_string(),
                    ))
                }
            };
            finish_fit(config, &a.out, &result)
        }
    }
}

fn spectrum(config: &RunConfig, a: &SpectrumArgs) -> Result<()> {
    let mut ls = config.level_structure()?;
    if let Some(t) = a.temperature_k {
        ls.temperature_k = t;
    }
    let grid = config.frequency_grid(&ls);
    let mut spec = zpl_spectrum_on(&ls, config.line_fwhm(), &grid)?;
    if a.etalon {
        spec = filter_spectrum(&spec, &config.etalon()?)?;
    }
    let out = output_path(config, &a.out, "spectrum.csv");
    formats::write_file(&out, |w| formats::write_spectrum(w, &spec))?;
    report(&out, &format!("{} points", spec.freq_ghz.len()));
    let lines = match (&a.out_lines, out == Path::new("-")) {
        (Some(p), _) => Some(p.clone()),
        (None, false) => Some(out.with_extension("lines.json")),
        (None, true) => None,
    };
    if let Some(path) = lines {
        formats::write_file(&path, |w| formats::write_lines(w, &spec.lines))?;
        report(&path, &format!("{} lines", spec.lines.len()));
    }
    if let Some(path) = svg_path(config, &a.svg, &out) {
        let label = if a.etalon { "filtered" } else { "emission" };
        let doc = svg::plot(
            &[Series {
                label,
                x: &spec.freq_ghz,
                y: &spec.intensity,
            }],
            "detuning from C (GHz)",
            "intensity (arb.)",
        );
        write_svg(&path, &doc)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn jitter_flags() {
        let cli = Cli::try_parse_from(["homtk", "model-g2", "--no-jitter"]).unwrap();
        match cli.command {
            Command::ModelG2(a) => assert!(a.no_jitter),
            _ => unreachable!(),
        }
        let cli = Cli::try_parse_from(["homtk", "model-g2", "--no-jitter", "--jitter"]).unwrap();
        match cli.command {
            Command::ModelG2(a) => assert!(!a.no_jitter),
            _ => unreachable!(),
        }
    }

    #[test]
    fn cb_needs_a_complete_input_set() {
        assert!(Cli::try_parse_from(["homtk", "fit", "cb", "--par", "a.csv"]).is_err());
        assert!(Cli::try_parse_from(["homtk", "fit", "cb", "--hist", "a.csv"]).is_err());
        assert!(Cli::try_parse_from(["homtk", "fit", "cb", "--hist", "a", "--chi", "1", "--par", "b", "--perp", "c"]).is_err());
        assert!(Cli::try_parse_from(["homtk", "fit", "cb", "--par", "a", "--perp", "b"]).is_ok());
    }
}
