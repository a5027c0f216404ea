//! Multi-threaded drivers over the chunked simulator and the correlator.
//!
//! Results are bit-identical to the sequential functions in
//! `homtk_core::mcsim` for any thread count.

use homtk_core::mcsim::{
    correlate_span, merge_chunks, simulate_chunk, ClickStream, CorrelationHistogram, HistogramSpec, SimConfig,
};
use homtk_core::Result;
use rayon::prelude::*;

/// Simulates all chunks concurrently and merges them in chunk order.
pub fn simulate(cfg: &SimConfig) -> Result<[ClickStream; 2]> {
    cfg.validate()?;
    let chunks = (0..cfg.chunk_count)
        .into_par_iter()
        .map(|i| simulate_chunk(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_chunks(chunks, cfg))
}

/// Full cross-correlation split into `spans` time windows processed
/// concurrently. A pair belongs to the window holding its earlier click.
pub fn correlate(
    stream1: &ClickStream,
    stream2: &ClickStream,
    spec: HistogramSpec,
    spans: usize,
) -> Result<CorrelationHistogram> {
    let first = [&stream1.times_ps, &stream2.times_ps]
        .iter()
        .filter_map(|s| s.first().copied())
        .min()
        .unwrap_or(0);
    let last = [&stream1.times_ps, &stream2.times_ps]
        .iter()
        .filter_map(|s| s.last().copied())
        .max()
        .unwrap_or(0);
    let spans = spans.max(1) as i128;
    let (lo, hi) = (first as i128, last as i128 + 1);
    let edge = |k: i128| (lo + (hi - lo) * k / spans) as i64;
    let parts = (0..spans)
        .into_par_iter()
        .map(|k| correlate_span(stream1, stream2, spec, edge(k), edge(k + 1)))
        .collect::<Result<Vec<_>>>()?;
    let mut total = CorrelationHistogram::empty(spec)?;
    for part in &parts {
        total.merge(part)?;
    }
    Ok(total)
}

/// Simulates each chunk, correlates it on its own and sums the chunk
/// histograms. Pairs straddling a chunk boundary are not counted.
pub fn chunk_histograms(cfg: &SimConfig, spec: HistogramSpec) -> Result<CorrelationHistogram> {
    cfg.validate()?;
    let parts = (0..cfg.chunk_count)
        .into_par_iter()
        .map(|i| {
            let [a, b] = simulate_chunk(cfg, i)?;
            homtk_core::mcsim::correlate(&a, &b, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = CorrelationHistogram::empty(spec)?;
    for part in &parts {
        total.merge(part)?;
    }
    Ok(total)
}
