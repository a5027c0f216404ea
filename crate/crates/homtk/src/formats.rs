//! Readers and writers for the CSV and JSON file formats.
//!
//! Floating-point values are written with the shortest representation that
//! parses back to the same `f64`, so every file read back by these readers
//! reproduces the written values bit for bit. Leading `# key=value` lines
//! carry metadata.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use homtk_core::fitkit::{FitResult, Sample};
use homtk_core::mcsim::{ClickStream, CorrelationHistogram, Detector, HistogramSpec, Normalization, Origin};
use homtk_core::photophys::{CorrelationCurve, CurveMeta};
use homtk_core::spectra::{LineLabel, SpectralLine, Spectrum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Opens `path` for writing, or standard output for `-`.
pub fn create(path: &Path) -> Result<Box<dyn Write>> {
    if path == Path::new("-") {
        return Ok(Box::new(io::stdout().lock()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufWriter::new(file)))
}

/// Writes with `f` and flushes, attributing IO failures to `path`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut *w).and_then(|()| w.flush()).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    let mut text = String::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_string(&mut text))
        .map_err(|e| CliError::io(path, e))?;
    Ok(text)
}

/// Leading `# key=value` comments and the remaining CSV body.
struct Document<'a> {
    meta: Vec<(String, String, u64)>,
    body: &'a str,
    body_line: u64,
}

impl<'a> Document<'a> {
    fn split(text: &'a str, path: &Path) -> Result<Self> {
        let mut meta = Vec::new();
        let mut offset = 0;
        let mut line_no = 0u64;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim();
            if !trimmed.starts_with('#') {
                break;
            }
            line_no += 1;
            offset += line.len();
            let content = trimmed.trim_start_matches('#').trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| CliError::format(path, line_no, "expected `# key=value`"))?;
            meta.push((k.trim().to_string(), v.trim().to_string(), line_no));
        }
        Ok(Document {
            meta,
            body: &text[offset..],
            body_line: line_no,
        })
    }

    fn get<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<Option<T>> {
        match self.meta.iter().find(|(k, _, _)| k == key) {
            None => Ok(None),
            Some((_, v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::format(path, *line, format!("invalid value for `{key}`: {v}"))),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<T> {
        self.get(key, path)?
            .ok_or_else(|| CliError::format(path, 1, format!("missing `# {key}=` header")))
    }

    /// Data rows with their 1-based line numbers, after checking the header.
    fn rows(&self, path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(self.body.as_bytes());
        let line = |r: &csv::StringRecord| self.body_line + r.position().map_or(1, |p| p.line());
        let found = reader
            .headers()
            .map_err(|e| CliError::format(path, self.body_line + 1, e.to_string()))?
            .clone();
        let names: Vec<&str> = found.iter().collect();
        if names != header {
            return Err(CliError::format(
                path,
                self.body_line + 1,
                format!("expected header `{}`, found `{}`", header.join(","), names.join(",")),
            ));
        }
        let mut out = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line());
                CliError::format(path, self.body_line + row, e.to_string())
            })?;
            let row = line(&record);
            if record.len() != header.len() {
                return Err(CliError::format(
                    path,
                    row,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            out.push((row, record));
        }
        Ok(out)
    }
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, name: &str, row: u64, path: &Path) -> Result<T> {
    let raw = &record[i];
    raw.parse()
        .map_err(|_| CliError::format(path, row, format!("invalid {name}: `{raw}`")))
}

fn finite(v: f64, name: &str, row: u64, path: &Path) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::format(path, row, format!("{name} must be finite")))
    }
}

/// Writes a correlation curve as `tau_ps,g2`.
pub fn write_curve(w: &mut dyn Write, curve: &CorrelationCurve) -> io::Result<()> {
    writeln!(w, "# convolved={}", curve.meta.convolved)?;
    writeln!(w, "# chi={}", curve.meta.chi)?;
    writeln!(w, "# c_background={}", curve.meta.c_background)?;
    writeln!(w, "tau_ps,g2")?;
    for (t, g) in curve.tau_ps.iter().zip(&curve.g2) {
        writeln!(w, "{t},{g}")?;
    }
    Ok(())
}

/// Reads a `tau_ps,g2` curve.
pub fn read_curve(path: &Path) -> Result<CorrelationCurve> {
    let text = read_text(path)?;
    let doc = Document::split(&text, path)?;
    let meta = CurveMeta {
        convolved: doc.get("convolved", path)?.unwrap_or(false),
        chi: doc.get("chi", path)?.unwrap_or(f64::NAN),
        c_background: doc.get("c_background", path)?.unwrap_or(f64::NAN),
    };
    let mut curve = CorrelationCurve {
        tau_ps: Vec::new(),
        g2: Vec::new(),
        meta,
    };
    for (row, r) in doc.rows(path, &["tau_ps", "g2"])? {
        let t = finite(field(&r, 0, "tau_ps", row, path)?, "tau_ps", row, path)?;
        if curve.tau_ps.last().is_some_and(|&prev| t <= prev) {
            return Err(CliError::format(path, row, "tau_ps must be strictly increasing"));
        }
        curve.tau_ps.push(t);
        curve.g2.push(field(&r, 1, "g2", row, path)?);
    }
    Ok(curve)
}

/// Writes both detector streams as one `channel,time_ps` file sorted by time.
pub fn write_clicks(w: &mut dyn Write, streams: &[ClickStream; 2]) -> io::Result<()> {
    writeln!(w, "# duration_ps={}", streams[0].duration_ps)?;
    writeln!(w, "# seed={}", streams[0].seed)?;
    writeln!(w, "channel,time_ps")?;
    let (a, b) = (&streams[0].times_ps, &streams[1].times_ps);
    let (ca, cb) = (streams[0].channel.id(), streams[1].channel.id());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && (a[i], ca) <= (b[j], cb)) {
            writeln!(w, "{ca},{}", a[i])?;
            i += 1;
        } else {
            writeln!(w, "{cb},{}", b[j])?;
            j += 1;
        }
    }
    Ok(())
}

/// Reads a click file into the streams of detectors 1 and 2. Click origins
/// are not stored and read back as [`Origin::Unknown`].
pub fn read_clicks(path: &Path) -> Result<[ClickStream; 2]> {
    let text = read_text(path)?;
    let doc = Document::split(&text, path)?;
    let duration: i64 = doc.require("duration_ps", path)?;
    let seed: u64 = doc.require("seed", path)?;
    if duration < 0 {
        return Err(CliError::format(path, 1, "duration_ps must be non-negative"));
    }
    let mut out = [
        ClickStream::empty(Detector::One, duration, seed),
        ClickStream::empty(Detector::Two, duration, seed),
    ];
    let mut last: Option<i64> = None;
    for (row, r) in doc.rows(path, &["channel", "time_ps"])? {
        let channel: u8 = field(&r, 0, "channel", row, path)?;
        let t: i64 = field(&r, 1, "time_ps", row, path)?;
        let det = Detector::from_id(channel)
            .ok_or_else(|| CliError::format(path, row, format!("channel must be 1 or 2, found {channel}")))?;
        if !(0..=duration).contains(&t) {
            return Err(CliError::format(path, row, format!("time {t} outside [0, {duration}]")));
        }
        if last.is_some_and(|prev| t < prev) {
            return Err(CliError::format(path, row, "clicks must be sorted by time"));
        }
        last = Some(t);
        let s = &mut out[usize::from(det.id() - 1)];
        if s.times_ps.last().is_some_and(|&prev| prev == t) {
            return Err(CliError::format(path, row, "repeated click time on one channel"));
        }
        s.times_ps.push(t);
        s.origins.push(Origin::Unknown);
    }
    Ok(out)
}

/// Writes a histogram as `tau_ps,counts,g2,g2_sigma`. The last two columns
/// are empty for an unnormalized histogram.
pub fn write_histogram(w: &mut dyn Write, hist: &CorrelationHistogram) -> io::Result<()> {
    writeln!(w, "# bin_width_ps={}", hist.spec.bin_width_ps)?;
    writeln!(w, "# window_ps={}", hist.spec.window_ps)?;
    if let Some(n) = hist.normalization {
        writeln!(w, "# norm_min_ps={}", n.norm_min_ps)?;
        writeln!(w, "# norm_max_ps={}", n.norm_max_ps)?;
        writeln!(w, "# level={}", n.level)?;
    }
    writeln!(w, "tau_ps,counts,g2,g2_sigma")?;
    let g2 = hist.g2();
    let sigma = hist.g2_sigma();
    for (i, (tau, count)) in hist.centers_ps().iter().zip(&hist.counts).enumerate() {
        match (&g2, &sigma) {
            (Some(g), Some(s)) => writeln!(w, "{tau},{count},{},{}", g[i], s[i])?,
            _ => writeln!(w, "{tau},{count},,")?,
        }
    }
    Ok(())
}

/// Reads a histogram. The `g2` and `g2_sigma` columns are derived from the
/// counts and the normalization header and are not read.
pub fn read_histogram(path: &Path) -> Result<CorrelationHistogram> {
    let text = read_text(path)?;
    let doc = Document::split(&text, path)?;
    let spec = HistogramSpec {
        bin_width_ps: doc.require("bin_width_ps", path)?,
        window_ps: doc.require("window_ps", path)?,
    };
    let mut hist = CorrelationHistogram::empty(spec).map_err(|e| CliError::format(path, 1, e.to_string()))?;
    let level: Option<f64> = doc.get("level", path)?;
    if let Some(level) = level {
        if !(level > 0.0 && level.is_finite()) {
            return Err(CliError::format(path, 1, "level must be positive"));
        }
        hist.normalization = Some(Normalization {
            level,
            norm_min_ps: doc.require("norm_min_ps", path)?,
            norm_max_ps: doc.require("norm_max_ps", path)?,
        });
    }
    let centers = hist.centers_ps();
    let rows = doc.rows(path, &["tau_ps", "counts", "g2", "g2_sigma"])?;
    if rows.len() != centers.len() {
        let row = rows.last().map_or(doc.body_line + 1, |r| r.0);
        return Err(CliError::format(
            path,
            row,
            format!("expected {} bins, found {}", centers.len(), rows.len()),
        ));
    }
    for (i, (row, r)) in rows.iter().enumerate() {
        let tau: i64 = field(r, 0, "tau_ps", *row, path)?;
        if tau != centers[i] {
            return Err(CliError::format(
                path,
                *row,
                format!("bin center {tau} does not match the binning (expected {})", centers[i]),
            ));
        }
        hist.counts[i] = field(r, 1, "counts", *row, path)?;
    }
    Ok(hist)
}

/// Reads `x,counts` or `x,counts,sigma` fit input where `x` is the named
/// column. Without a `sigma` column the errors are the shot noise
/// `sqrt(max(counts, 1))`.
pub fn read_samples(path: &Path, x_name: &str) -> Result<Vec<Sample>> {
    let text = read_text(path)?;
    let doc = Document::split(&text, path)?;
    let with_sigma = doc
        .body
        .lines()
        .next()
        .is_some_and(|h| h.split(',').count() == 3);
    let header: Vec<&str> = if with_sigma {
        vec![x_name, "counts", "sigma"]
    } else {
        vec![x_name, "counts"]
    };
    let mut out = Vec::new();
    for (row, r) in doc.rows(path, &header)? {
        let x = finite(field(&r, 0, x_name, row, path)?, x_name, row, path)?;
        let y = finite(field(&r, 1, "counts", row, path)?, "counts", row, path)?;
        let sample = if with_sigma {
            let sigma: f64 = field(&r, 2, "sigma", row, path)?;
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(CliError::format(path, row, "sigma must be positive"));
            }
            Sample { x, y, sigma }
        } else {
            Sample::counts(x, y)
        };
        out.push(sample);
    }
    Ok(out)
}

/// Writes `x,counts` fit input.
pub fn write_samples(w: &mut dyn Write, x_name: &str, samples: &[Sample]) -> io::Result<()> {
    writeln!(w, "{x_name},counts,sigma")?;
    for s in samples {
        writeln!(w, "{},{},{}", s.x, s.y, s.sigma)?;
    }
    Ok(())
}

/// Writes a spectrum as `freq_ghz,intensity`.
pub fn write_spectrum(w: &mut dyn Write, spec: &Spectrum) -> io::Result<()> {
    writeln!(w, "freq_ghz,intensity")?;
    for (f, i) in spec.freq_ghz.iter().zip(&spec.intensity) {
        writeln!(w, "{f},{i}")?;
    }
    Ok(())
}

/// Reads a `freq_ghz,intensity` spectrum; lines are left empty.
pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let text = read_text(path)?;
    let doc = Document::split(&text, path)?;
    let mut spec = Spectrum {
        freq_ghz: Vec::new(),
        intensity: Vec::new(),
        lines: Vec::new(),
    };
    for (row, r) in doc.rows(path, &["freq_ghz", "intensity"])? {
        spec.freq_ghz.push(finite(field(&r, 0, "freq_ghz", row, path)?, "freq_ghz", row, path)?);
        spec.intensity.push(field(&r, 1, "intensity", row, path)?);
    }
    Ok(spec)
}

#[derive(Serialize, Deserialize)]
struct LineRecord {
    label: String,
    center_ghz: f64,
    fwhm_ghz: f64,
    amplitude: f64,
}

/// Writes a line list as a JSON array.
pub fn write_lines(w: &mut dyn Write, lines: &[SpectralLine]) -> io::Result<()> {
    let records: Vec<LineRecord> = lines
        .iter()
        .map(|l| LineRecord {
            label: l.label.as_str().to_string(),
            center_ghz: l.center_ghz,
            fwhm_ghz: l.fwhm_ghz,
            amplitude: l.amplitude,
        })
        .collect();
    serde_json::to_writer_pretty(&mut *w, &records)?;
    writeln!(w)
}

/// Reads a JSON line list.
pub fn read_lines(path: &Path) -> Result<Vec<SpectralLine>> {
    let text = read_text(path)?;
    let records: Vec<LineRecord> =
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.line() as u64, e.to_string()))?;
    records
        .into_iter()
        .map(|r| {
            let label = match r.label.as_str() {
                "A" => LineLabel::A,
                "B" => LineLabel::B,
                "C" => LineLabel::C,
                "D" => LineLabel::D,
                other => return Err(CliError::format(path, 1, format!("unknown line label `{other}`"))),
            };
            Ok(SpectralLine {
                label,
                center_ghz: r.center_ghz,
                fwhm_ghz: r.fwhm_ghz,
                amplitude: r.amplitude,
            })
        })
        .collect()
}

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn named(names: &[String], values: &[f64]) -> Value {
    Value::Object(names.iter().cloned().zip(values.iter().map(|&v| number(v))).collect())
}

/// JSON form of a fit result. Non-finite numbers are written as `null`.
pub fn fit_result_json(fit: &FitResult) -> Value {
    let mut derived = Map::new();
    for d in &fit.derived {
        derived.insert(
            d.name.clone(),
            serde_json::json!({ "value": number(d.value), "uncertainty": number(d.uncertainty) }),
        );
    }
    serde_json::json!({
        "model": fit.model,
        "estimates": named(&fit.names, &fit.estimates),
        "uncertainties": named(&fit.names, &fit.uncertainties),
        "reduced_chi2": number(fit.reduced_chi2),
        "converged": fit.converged,
        "iterations": fit.iterations,
        "chi2": number(fit.chi2),
        "dof": fit.dof,
        "flags": fit.flags.iter().map(|f| f.as_str()).collect::<Vec<_>>(),
        "derived": derived,
    })
}

/// Writes a fit result as pretty-printed JSON.
pub fn write_fit_result(w: &mut dyn Write, fit: &FitResult) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, &fit_result_json(fit))?;
    writeln!(w)
}

/// The serialized fields of a fit result.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSummary {
    /// Model identifier.
    pub model: String,
    /// Parameter names in file order.
    pub names: Vec<String>,
    /// Estimates, aligned with `names`.
    pub estimates: Vec<f64>,
    /// Uncertainties, aligned with `names`; `null` reads as infinity.
    pub uncertainties: Vec<f64>,
    /// Reduced chi-square.
    pub reduced_chi2: f64,
    /// Convergence flag.
    pub converged: bool,
    /// Iterations used.
    pub iterations: usize,
}

impl FitSummary {
    /// Estimate and uncertainty by name.
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.estimates[i], self.uncertainties[i]))
    }
}

/// Reads the fields of a fit-result JSON file.
pub fn read_fit_result(path: &Path) -> Result<FitSummary> {
    let text = read_text(path)?;
    let bad = |m: &str| CliError::format(path, 1, m.to_string());
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.line() as u64, e.to_string()))?;
    let obj = |key: &str| v.get(key).and_then(Value::as_object).ok_or_else(|| bad(&format!("missing `{key}`")));
    let (est, unc) = (obj("estimates")?, obj("uncertainties")?);
    let names: Vec<String> = est.keys().cloned().collect();
    let num = |x: Option<&Value>, missing: f64| match x {
        Some(Value::Null) => Ok(missing),
        Some(x) => x.as_f64().ok_or_else(|| bad("expected a number")),
        None => Err(bad("missing value")),
    };
    Ok(FitSummary {
        model: v.get("model").and_then(Value::as_str).ok_or_else(|| bad("missing `model`"))?.to_string(),
        estimates: names.iter().map(|n| num(est.get(n), f64::NAN)).collect::<Result<_>>()?,
        uncertainties: names.iter().map(|n| num(unc.get(n), f64::INFINITY)).collect::<Result<_>>()?,
        names,
        reduced_chi2: num(v.get("reduced_chi2"), f64::NAN)?,
        converged: v.get("converged").and_then(Value::as_bool).ok_or_else(|| bad("missing `converged`"))?,
        iterations: v
            .get("iterations")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing `iterations`"))? as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn write_to_temp(f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> tempfile::NamedTempFile {
        let file = tempfile::NamedTempFile::new().unwrap();
        write_file(file.path(), f).unwrap();
        file
    }

    #[test]
    fn curve_round_trip_is_exact() {
        let curve = CorrelationCurve {
            tau_ps: vec![-2.5, 0.0, 1.0 / 3.0, 1e6],
            g2: vec![0.1 + 0.2, 1e-300, 0.7174, f64::MIN_POSITIVE],
            meta: CurveMeta {
                convolved: true,
                chi: 1.0,
                c_background: 0.12,
            },
        };
        let f = write_to_temp(|w| write_curve(w, &curve));
        assert_eq!(read_curve(f.path()).unwrap(), curve);
    }

    #[test]
    fn clicks_round_trip_and_ordering() {
        let mut a = ClickStream::empty(Detector::One, 100, 9);
        let mut b = ClickStream::empty(Detector::Two, 100, 9);
        a.times_ps = vec![0, 5, 50];
        b.times_ps = vec![5, 7, 100];
        a.origins = vec![Origin::Unknown; 3];
        b.origins = vec![Origin::Unknown; 3];
        let f = write_to_temp(|w| write_clicks(w, &[a.clone(), b.clone()]));
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert!(text.starts_with("# duration_ps=100\n# seed=9\nchannel,time_ps\n1,0\n1,5\n2,5\n2,7\n"));
        assert_eq!(read_clicks(f.path()).unwrap(), [a, b]);
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let f = temp_with("# duration_ps=100\n# seed=1\nchannel,time_ps\n1,5\n2,x\n");
        match read_clicks(f.path()) {
            Err(CliError::Format { row, .. }) => assert_eq!(row, 5),
            other => panic!("{other:?}"),
        }
        let f = temp_with("# duration_ps=100\n# seed=1\nchannel,time_ps\n1,5\n3,6\n");
        assert!(matches!(read_clicks(f.path()), Err(CliError::Format { row: 5, .. })));
        let f = temp_with("# duration_ps=100\n# seed=1\nchannel,time_ps\n1,50\n2,6\n");
        assert!(matches!(read_clicks(f.path()), Err(CliError::Format { row: 5, .. })));
        let f = temp_with("tau_ps,g2\n0,1\n1,2,3\n");
        assert!(matches!(read_curve(f.path()), Err(CliError::Format { row: 3, .. })));
        let f = temp_with("tau,g2\n0,1\n");
        assert!(matches!(read_curve(f.path()), Err(CliError::Format { row: 1, .. })));
        let f = temp_with("# seed=1\nchannel,time_ps\n");
        assert!(matches!(read_clicks(f.path()), Err(CliError::Format { .. })));
    }

    #[test]
    fn histogram_round_trip_is_exact() {
        let spec = HistogramSpec {
            bin_width_ps: 1000,
            window_ps: 60_000,
        };
        let mut hist = CorrelationHistogram::empty(spec).unwrap();
        for (i, c) in hist.counts.iter_mut().enumerate() {
            *c = (i as u64 * 7919) % 101;
        }
        let raw = write_to_temp(|w| write_histogram(w, &hist));
        assert_eq!(read_histogram(raw.path()).unwrap(), hist);
        let norm = homtk_core::mcsim::normalize(&hist, 50_000, 60_000).unwrap();
        let f = write_to_temp(|w| write_histogram(w, &norm));
        assert_eq!(read_histogram(f.path()).unwrap(), norm);
    }

    #[test]
    fn histogram_rejects_wrong_binning() {
        let f = temp_with("# bin_width_ps=10\n# window_ps=20\ntau_ps,counts,g2,g2_sigma\n-20,1,,\n0,1,,\n20,1,,\n");
        assert!(matches!(read_histogram(f.path()), Err(CliError::Format { .. })));
        let f = temp_with("# bin_width_ps=10\n# window_ps=10\ntau_ps,counts,g2,g2_sigma\n-10,1,,\n5,1,,\n10,1,,\n");
        assert!(matches!(read_histogram(f.path()), Err(CliError::Format { row: 5, .. })));
    }

    #[test]
    fn spectrum_and_lines_round_trip() {
        let spec = Spectrum {
            freq_ghz: vec![-100.0, 0.05, 300.0],
            intensity: vec![0.0, 1.0 / 7.0, 2.5e-9],
            lines: vec![SpectralLine {
                label: LineLabel::B,
                center_ghz: 200.0,
                fwhm_ghz: 1.0,
                amplitude: 0.090_7,
            }],
        };
        let f = write_to_temp(|w| write_spectrum(w, &spec));
        let back = read_spectrum(f.path()).unwrap();
        assert_eq!((back.freq_ghz, back.intensity), (spec.freq_ghz.clone(), spec.intensity.clone()));
        let l = write_to_temp(|w| write_lines(w, &spec.lines));
        assert_eq!(read_lines(l.path()).unwrap(), spec.lines);
    }

    #[test]
    fn samples_with_and_without_sigma() {
        let f = temp_with("freq_mhz,counts\n-5,4\n0,0\n");
        let s = read_samples(f.path(), "freq_mhz").unwrap();
        assert_eq!(s, vec![Sample::counts(-5.0, 4.0), Sample::counts(0.0, 0.0)]);
        let samples = vec![Sample { x: 0.1, y: 2.0, sigma: 0.3 }];
        let g = write_to_temp(|w| write_samples(w, "time_ps", &samples));
        assert_eq!(read_samples(g.path(), "time_ps").unwrap(), samples);
        let bad = temp_with("freq_mhz,counts,sigma\n1,2,0\n");
        assert!(matches!(read_samples(bad.path(), "freq_mhz"), Err(CliError::Format { row: 2, .. })));
    }

    #[test]
    fn fit_result_json_fields() {
        let fit = FitResult {
            model: "m".into(),
            names: vec!["a".into(), "b".into()],
            estimates: vec![1.5, -0.25],
            uncertainties: vec![0.1, f64::INFINITY],
            covariance: vec![0.0; 4],
            chi2: 3.0,
            dof: 3,
            reduced_chi2: 1.0,
            converged: true,
            iterations: 7,
            flags: vec![homtk_core::fitkit::FitFlag::SingularJacobian],
            derived: Vec::new(),
        };
        let f = write_to_temp(|w| write_fit_result(w, &fit));
        let s = read_fit_result(f.path()).unwrap();
        assert_eq!(s.names, fit.names);
        assert_eq!(s.estimates, fit.estimates);
        assert_eq!(s.uncertainties, fit.uncertainties);
        assert_eq!((s.reduced_chi2, s.converged, s.iterations), (1.0, true, 7));
        let v: Value = serde_json::from_str(&std::fs::read_to_string(f.path()).unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(&keys[..6], ["model", "estimates", "uncertainties", "reduced_chi2", "converged", "iterations"]);
    }
}
