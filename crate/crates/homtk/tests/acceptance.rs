//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use homtk::parallel;
use homtk_core::fitkit::{fit_cb_joint, fit_inhomogeneous, fit_ple_doublet, CbFixed, FitResult, Sample};
use homtk_core::mcsim::{
    antibunching_time, normalize, BackgroundConvention, CorrelationHistogram, HistogramSpec, SimConfig,
};
use homtk_core::photophys::{
    coherence_time_from_fwhm, g2_hom, hom_curve, hom_visibility, nominal, transform_limited_linewidth, DelayGrid,
    HomExperiment,
};
use homtk_core::spectra::{boltzmann_ratio, Etalon, LevelStructure};
use homtk_core::{Frequency, Rate, Time};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

const EMISSION_RATE: f64 = 5e6;
const SPEC: HistogramSpec = HistogramSpec {
    bin_width_ps: 256,
    window_ps: 100_000,
};
const NORM_MIN_PS: i64 = 50_000;

fn excitation_rate() -> Rate {
    Rate::per_s(0.01 / nominal::lifetime().as_s())
}

fn sim_config(chi: f64, c_b: f64, sigma_ps: f64, duration_s: f64, seed: u64, chunks: u32) -> Result<SimConfig, String> {
    let mut exp = HomExperiment::nominal(chi, c_b, Rate::per_s(EMISSION_RATE)).map_err(err)?;
    exp.detector_sigma = Time::from_ps(sigma_ps);
    Ok(SimConfig {
        experiment: exp,
        excitation_rate: excitation_rate(),
        duration_ps: (duration_s * 1e12) as i64,
        rng_seed: seed,
        chunk_count: chunks,
        background: BackgroundConvention::CoincidenceFraction,
    })
}

fn simulated_histogram(cfg: &SimConfig) -> Result<CorrelationHistogram, String> {
    let [a, b] = parallel::simulate(cfg).map_err(err)?;
    let hist = parallel::correlate(&a, &b, SPEC, 4).map_err(err)?;
    normalize(&hist, NORM_MIN_PS, SPEC.window_ps).map_err(err)
}

fn criterion_1() -> Outcome {
    let eta = hom_visibility(0.26, 0.66).map_err(err)?;
    check((eta - 0.7174).abs() <= 1e-4, format!("eta = {eta:.6}"))
}

fn criterion_2() -> Outcome {
    let mut values = Vec::new();
    for (c_b, chi, expected) in [(0.0, 1.0, 0.0), (0.0, 0.0, 0.5), (0.12, 1.0, 0.12), (0.12, 0.0, 0.56)] {
        let exp = HomExperiment::nominal(chi, c_b, Rate::per_s(1e6)).map_err(err)?;
        let g = g2_hom(Time::ZERO, &exp).map_err(err)?;
        let ok = if c_b == 0.0 { g == expected } else { (g - expected).abs() <= 1e-12 };
        if !ok {
            return Err(format!("g2(0) = {g} for chi = {chi}, c_b = {c_b}; expected {expected}"));
        }
        values.push(format!("{g:.2}"));
    }
    Ok(format!("g2(0) = {}", values.join(", ")))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut g0 = [0.0; 2];
    for (slot, chi) in g0.iter_mut().zip([1.0, 0.0]) {
        let mut exp = HomExperiment::nominal(chi, 0.12, Rate::per_s(1e6)).map_err(err)?;
        exp.coherence_time_override = Some(Time::from_ns(1.18));
        let curve = hom_curve(&exp, &DelayGrid::default(), true).map_err(err)?;
        *slot = curve.interpolate(0.0);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let [par, perp] = g0;
    check(
        (par - 0.26).abs() <= 0.05 && (perp - 0.66).abs() <= 0.08 && elapsed < 1.0,
        format!("g2_par(0) = {par:.4}, g2_perp(0) = {perp:.4}, {elapsed:.3} s"),
    )
}

fn criterion_4() -> Outcome {
    let lw = transform_limited_linewidth(Time::from_ns(1.73)).map_err(err)?.as_mhz();
    let tc = coherence_time_from_fwhm(Frequency::from_mhz(135.2)).map_err(err)?.as_ns();
    check(
        (lw - 92.0).abs() <= 0.1 && (tc - 1.177).abs() <= 0.005,
        format!("linewidth = {lw:.3} MHz, coherence time = {tc:.4} ns"),
    )
}

/// Pearson chi-square of a normalized histogram against the model over
/// `|tau| <= 20 ns`, with the number of bins and coincidences used.
fn model_chi2(hist: &CorrelationHistogram, cfg: &SimConfig) -> Result<(f64, usize, u64), String> {
    let mut exp = cfg.experiment;
    let dip_time = antibunching_time(exp.lifetime(), cfg.excitation_rate).map_err(err)?;
    exp.emitter_a.lifetime = dip_time;
    exp.emitter_b.lifetime = dip_time;
    let grid = DelayGrid {
        step: Time::from_ps(5.0),
        half_width: Time::from_ns(25.0),
    };
    let convolved = exp.detector_sigma.as_ps() > 0.0;
    let curve = hom_curve(&exp, &grid, convolved).map_err(err)?;
    let level = hist.normalization.ok_or("histogram not normalized")?.level;
    let (mut chi2, mut bins, mut total) = (0.0, 0, 0);
    for (&center, &count) in hist.centers_ps().iter().zip(&hist.counts) {
        if center.abs() > 20_000 {
            continue;
        }
        let expected = level * curve.bin_average(center as f64, SPEC.bin_width_ps as f64);
        chi2 += (count as f64 - expected).powi(2) / expected.max(1.0);
        bins += 1;
        total += count;
    }
    Ok((chi2, bins, total))
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut seed = 500;
    for chi in [0.0, 1.0] {
        for c_b in [0.0, 0.12] {
            for sigma in [0.0, 150.0] {
                seed += 1;
                let cfg = sim_config(chi, c_b, sigma, 1.2, seed, 4)?;
                let hist = simulated_histogram(&cfg)?;
                let (chi2, bins, total) = model_chi2(&hist, &cfg)?;
                let red = chi2 / bins as f64;
                ok &= red < 1.5 && total >= 1_000_000;
                lines.push(format!("chi={chi} c_b={c_b} sigma={sigma}ps: {red:.3} ({total} coinc.)"));
            }
        }
    }
    check(ok, format!("reduced chi2 per set: {}", lines.join("; ")))
}

fn cb_fixed() -> Result<CbFixed, String> {
    Ok(CbFixed {
        lifetime: antibunching_time(nominal::lifetime(), excitation_rate()).map_err(err)?,
        coherence_time: coherence_time_from_fwhm(Frequency::from_mhz(135.2)).map_err(err)?,
        detuning: nominal::detuning(),
        detector_sigma: nominal::detector_sigma(),
        fit_half_width: Time::from_ns(20.0),
    })
}

fn criterion_6() -> Outcome {
    const SEEDS: u64 = 50;
    let fixed = cb_fixed()?;
    let mut within = 0;
    let mut zs = Vec::new();
    for seed in 0..SEEDS {
        let par = simulated_histogram(&sim_config(1.0, 0.12, 150.0, 0.3, 2 * seed + 1, 2)?)?;
        let perp = simulated_histogram(&sim_config(0.0, 0.12, 150.0, 0.3, 2 * seed, 2)?)?;
        let fit = fit_cb_joint(&par, &perp, &fixed).map_err(err)?;
        let (c, s) = fit.get("c_b").ok_or("no c_b in fit")?;
        let z = (c - 0.12) / s;
        if fit.converged && z.abs() <= 3.0 {
            within += 1;
        }
        zs.push(z);
    }
    let mean = zs.iter().sum::<f64>() / zs.len() as f64;
    let sd = (zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (zs.len() - 1) as f64).sqrt();
    let fraction = within as f64 / SEEDS as f64;
    check(
        fraction >= 0.95,
        format!("{within}/{SEEDS} seeds within 3 sigma; pull mean {mean:.2}, sd {sd:.2}"),
    )
}

fn z_score(fit: &FitResult, name: &str, truth: f64) -> Result<f64, String> {
    let (v, s) = fit.get(name).ok_or(format!("no {name} in fit"))?;
    Ok((v - truth) / s)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lorentz = |nu: f64, c: f64, w: f64| 1.0 / (1.0 + (2.0 * (nu - c) / w).powi(2));
    let (w1, w2, sep) = (135.8, 134.6, 52.1);
    let (c1, c2) = (-sep / 2.0, sep / 2.0);
    let scan: Vec<Sample> = (-120..=120)
        .map(|k| {
            let nu = 5.0 * k as f64;
            let mean = 10.0 + 500.0 * lorentz(nu, c1, w1) + 450.0 * lorentz(nu, c2, w2);
            Sample::counts(nu, Poisson::new(mean).unwrap().sample(&mut rng))
        })
        .collect();
    let ple = fit_ple_doublet(&scan).map_err(err)?;
    let z_ple = [
        z_score(&ple, "fwhm_1", w1)?,
        z_score(&ple, "fwhm_2", w2)?,
        z_score(&ple, "separation", sep)?,
    ];

    let (center, sigma) = (30.0, 364.5);
    let hist: Vec<Sample> = (-40..=40)
        .map(|k| {
            let nu = 50.0 * k as f64;
            let mean = 400.0 * (-0.5 * ((nu - center) / sigma).powi(2)).exp();
            let n = if mean > 0.0 { Poisson::new(mean).unwrap().sample(&mut rng) } else { 0.0 };
            Sample::counts(nu, n)
        })
        .collect();
    let inhomo = fit_inhomogeneous(&hist).map_err(err)?;
    let z_inh = [z_score(&inhomo, "sigma", sigma)?, z_score(&inhomo, "center", center)?];

    let ok = ple.converged && inhomo.converged && z_ple.iter().chain(&z_inh).all(|z| z.abs() <= 3.0);
    let (f1, f2, s) = (ple.get("fwhm_1").unwrap(), ple.get("fwhm_2").unwrap(), ple.get("separation").unwrap());
    let g = inhomo.get("sigma").unwrap();
    check(
        ok,
        format!(
            "fwhm {:.1}+-{:.1} / {:.1}+-{:.1} MHz, separation {:.1}+-{:.1} MHz, sigma {:.1}+-{:.1} MHz; pulls {:.2} {:.2} {:.2} {:.2}",
            f1.0, f1.1, f2.0, f2.1, s.0, s.1, g.0, g.1, z_ple[0], z_ple[1], z_ple[2], z_inh[0]
        ),
    )
}

fn criterion_8() -> Outcome {
    let ratio = boltzmann_ratio(Frequency::from_ghz(250.0), 5.0).map_err(err)?;
    let lines = LevelStructure::nominal().lines(Frequency::from_ghz(1.0)).map_err(err)?;
    let offsets: Vec<f64> = lines.iter().map(|l| l.center_ghz).collect();
    let etalon = Etalon::nominal();
    let half = etalon.transmission(etalon.fsr * 0.5).map_err(err)?;
    check(
        (ratio - 0.0907).abs() <= 0.0005 && offsets == [250.0, 200.0, 0.0, -50.0] && (half / 6.12e-3 - 1.0).abs() <= 0.01,
        format!("ratio = {ratio:.5}, offsets = {offsets:?} GHz, half-FSR transmission = {half:.4e}"),
    )
}

fn run_simulate(dir: &Path, tag: &str, seed: u64) -> Result<(Vec<u8>, Vec<u8>), String> {
    let clicks = dir.join(format!("{tag}_clicks.csv"));
    let hist = dir.join(format!("{tag}_hist.csv"));
    let status = Command::new(env!("CARGO_BIN_EXE_homtk"))
        .args(["simulate", "--seed", &seed.to_string(), "--chunks", "3", "--duration-ps", "20000000000"])
        .arg("--out-clicks")
        .arg(&clicks)
        .arg("--out-hist")
        .arg(&hist)
        .env_remove("HOMTK_SEED")
        .output()
        .map_err(err)?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    Ok((std::fs::read(clicks).map_err(err)?, std::fs::read(hist).map_err(err)?))
}

/// Two-sample chi-square between raw histograms, with degrees of freedom.
fn two_sample_chi2(a: &CorrelationHistogram, b: &CorrelationHistogram) -> (f64, usize) {
    let (na, nb) = (a.total() as f64, b.total() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut chi2 = 0.0;
    let mut dof: usize = 0;
    for (&x, &y) in a.counts.iter().zip(&b.counts) {
        if x + y > 0 {
            chi2 += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
            dof += 1;
        }
    }
    (chi2, dof.saturating_sub(1))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let first = run_simulate(dir.path(), "a", 42)?;
    let second = run_simulate(dir.path(), "b", 42)?;
    let other = run_simulate(dir.path(), "c", 43)?;
    let identical = first == second && first != other;

    let (mut chi2, mut dof) = (0.0, 0);
    for seed in 0..20 {
        let mono = sim_config(1.0, 0.12, 150.0, 0.1, 1000 + seed, 1)?;
        let chunked = SimConfig {
            chunk_count: 8,
            rng_seed: 2000 + seed,
            ..mono
        };
        let [a1, b1] = parallel::simulate(&mono).map_err(err)?;
        let [a2, b2] = parallel::simulate(&chunked).map_err(err)?;
        let h1 = parallel::correlate(&a1, &b1, SPEC, 4).map_err(err)?;
        let h2 = parallel::correlate(&a2, &b2, SPEC, 4).map_err(err)?;
        let (c, d) = two_sample_chi2(&h1, &h2);
        chi2 += c;
        dof += d;
    }
    let z = (chi2 - dof as f64) / (2.0 * dof as f64).sqrt();
    check(
        identical && z.abs() < 3.0,
        format!(
            "repeat runs byte-identical: {identical}; chunked vs monolithic chi2/dof = {:.4} over {dof} dof (z = {z:.2})",
            chi2 / dof as f64
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("visibility", criterion_1),
        ("jitter-free endpoints", criterion_2),
        ("convolved zero-delay values", criterion_3),
        ("transform limit and coherence time", criterion_4),
        ("simulation vs model", criterion_5),
        ("joint background fit coverage", criterion_6),
        ("spectral fit recovery", criterion_7),
        ("spectroscopy values", criterion_8),
        ("determinism and chunk merge", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        let id = format!("criterion_{n}");
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}) [{secs:.1} s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}) [{secs:.1} s]: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
