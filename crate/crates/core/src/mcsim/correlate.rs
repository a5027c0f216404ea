use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;

use super::ClickStream;
use crate::{Error, Result};

/// Binning of a coincidence histogram.
///
/// Bins have width `bin_width_ps` and are centered on multiples of it, from
/// `-K` to `K` bin widths where `K = window_ps / bin_width_ps` (rounded
/// down). Delays outside the outermost bins are not counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramSpec {
    /// Bin width in picoseconds.
    pub bin_width_ps: i64,
    /// Largest bin center magnitude in picoseconds.
    pub window_ps: i64,
}

impl HistogramSpec {
    fn validate(&self) -> Result<()> {
        if self.bin_width_ps <= 0 || self.window_ps <= 0 {
            return Err(Error::domain("bin width and window must be positive"));
        }
        Ok(())
    }

    fn half_bins(&self) -> i64 {
        self.window_ps / self.bin_width_ps
    }

    /// Bin index for a delay `t2 - t1`, if it falls in the histogram.
    #[inline]
    fn bin(&self, delay: i64, half: i64) -> Option<usize> {
        let w = self.bin_width_ps;
        let k = (2 * delay + w).div_euclid(2 * w);
        (-half..=half).contains(&k).then(|| (k + half) as usize)
    }

    /// Delays `d` with `-reach <= d < reach` can land in a bin.
    fn reach(&self) -> i64 {
        self.half_bins() * self.bin_width_ps + (self.bin_width_ps + 1) / 2
    }
}

/// How a histogram was normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Mean count per bin over the normalization region.
    pub level: f64,
    /// Lower edge of the region (bin-center magnitude), picoseconds.
    pub norm_min_ps: i64,
    /// Upper edge of the region (bin-center magnitude), picoseconds.
    pub norm_max_ps: i64,
}

/// Symmetric coincidence histogram of delays `t2 - t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationHistogram {
    /// Binning.
    pub spec: HistogramSpec,
    /// Raw counts, from the most negative bin to the most positive.
    pub counts: Vec<u64>,
    /// Set by [`normalize`].
    pub normalization: Option<Normalization>,
}

impl CorrelationHistogram {
    /// All-zero histogram.
    pub fn empty(spec: HistogramSpec) -> Result<Self> {
        spec.validate()?;
        Ok(CorrelationHistogram {
            spec,
            counts: vec![0; 2 * spec.half_bins() as usize + 1],
            normalization: None,
        })
    }

    /// Bin width in picoseconds.
    pub fn bin_width_ps(&self) -> i64 {
        self.spec.bin_width_ps
    }

    /// Bin centers in picoseconds.
    pub fn centers_ps(&self) -> Vec<i64> {
        let half = self.spec.half_bins();
        (-half..=half).map(|k| k * self.spec.bin_width_ps).collect()
    }

    /// Sum of all counts.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Normalized values, if normalized.
    pub fn g2(&self) -> Option<Vec<f64>> {
        let n = self.normalization?;
        Some(self.counts.iter().map(|&c| c as f64 / n.level).collect())
    }

    /// Shot-noise standard error of the normalized values, `sqrt(max(count, 1)) / level`.
    pub fn g2_sigma(&self) -> Option<Vec<f64>> {
        let n = self.normalization?;
        Some(
            self.counts
                .iter()
                .map(|&c| (c.max(1) as f64).sqrt() / n.level)
                .collect(),
        )
    }

    /// Adds the counts of a histogram with the same binning. Any
    /// normalization is dropped.
    pub fn merge(&mut self, other: &CorrelationHistogram) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::domain("cannot merge histograms with different binning"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.normalization = None;
        Ok(())
    }
}

/// Full cross-correlation: every pair `(t1, t2)` of clicks on the two
/// channels is counted at delay `t2 - t1`.
pub fn correlate(stream1: &ClickStream, stream2: &ClickStream, spec: HistogramSpec) -> Result<CorrelationHistogram> {
    let mut hist = CorrelationHistogram::empty(spec)?;
    let half = spec.half_bins();
    let reach = spec.reach();
    let s2 = &stream2.times_ps;
    let mut lo = 0;
    for &t1 in &stream1.times_ps {
        while lo < s2.len() && s2[lo] < t1 - reach {
            lo += 1;
        }
        for &t2 in &s2[lo..] {
            let d = t2 - t1;
            if d >= reach {
                break;
            }
            if let Some(b) = spec.bin(d, half) {
                hist.counts[b] += 1;
            }
        }
    }
    Ok(hist)
}

/// Counts the pairs whose earlier click lies in `[from_ps, to_ps)`.
///
/// Spans that tile the time axis partition the set of pairs, so summing
/// their histograms reproduces [`correlate`] exactly; spans can be processed
/// concurrently.
pub fn correlate_span(
    stream1: &ClickStream,
    stream2: &ClickStream,
    spec: HistogramSpec,
    from_ps: i64,
    to_ps: i64,
) -> Result<CorrelationHistogram> {
    let mut hist = CorrelationHistogram::empty(spec)?;
    let half = spec.half_bins();
    let reach = spec.reach();
    let (s1, s2) = (&stream1.times_ps, &stream2.times_ps);
    let range = |s: &[i64]| {
        let a = s.partition_point(|&t| t < from_ps);
        let b = s.partition_point(|&t| t < to_ps);
        a..b
    };
    // Pairs with t1 <= t2 and t1 in the span.
    for &t1 in &s1[range(s1)] {
        let start = s2.partition_point(|&t| t < t1);
        for &t2 in &s2[start..] {
            let d = t2 - t1;
            if d >= reach {
                break;
            }
            if let Some(b) = spec.bin(d, half) {
                hist.counts[b] += 1;
            }
        }
    }
    // Pairs with t2 < t1 and t2 in the span.
    for &t2 in &s2[range(s2)] {
        let start = s1.partition_point(|&t| t <= t2);
        for &t1 in &s1[start..] {
            let d = t2 - t1;
            if -d > reach {
                break;
            }
            if let Some(b) = spec.bin(d, half) {
                hist.counts[b] += 1;
            }
        }
    }
    Ok(hist)
}

/// Minimum number of bins required in the normalization region.
pub const MIN_NORMALIZATION_BINS: usize = 10;

/// Normalizes by the mean count of the bins whose center magnitude lies in
/// `[norm_min_ps, norm_max_ps]`, so that the normalized values average to
/// one over that region.
pub fn normalize(hist: &CorrelationHistogram, norm_min_ps: i64, norm_max_ps: i64) -> Result<CorrelationHistogram> {
    let (sum, n) = hist
        .centers_ps()
        .iter()
        .zip(&hist.counts)
        .filter(|(c, _)| (norm_min_ps..=norm_max_ps).contains(&c.abs()))
        .fold((0u64, 0usize), |(s, n), (_, &k)| (s + k, n + 1));
    if n < MIN_NORMALIZATION_BINS {
        return Err(Error::domain(alloc::format!(
            "normalization region holds {n} bins, at least {MIN_NORMALIZATION_BINS} required"
        )));
    }
    if sum == 0 {
        return Err(Error::domain("no coincidences in the normalization region"));
    }
    let mut out = hist.clone();
    out.normalization = Some(Normalization {
        level: sum as f64 / n as f64,
        norm_min_ps,
        norm_max_ps,
    });
    Ok(out)
}
