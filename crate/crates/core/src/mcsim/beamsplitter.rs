use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
#[allow(unused_imports)] // inherent methods shadow these when std is linked
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::emitter::PhotonStream;
use super::{ClickStream, Detector, Origin};
use crate::linalg::cholesky_semidefinite;
use crate::photophys::HomExperiment;
use crate::{Error, Result, Time};

/// Photons further apart than this are routed independently:
/// `10 * max(lifetime_a, lifetime_b, coherence_time)`.
pub fn coherence_window(exp: &HomExperiment) -> Result<Time> {
    let tc = exp.coherence_time()?;
    let longest = [exp.emitter_a.lifetime, exp.emitter_b.lifetime, tc]
        .into_iter()
        .fold(Time::ZERO, |m, t| if t > m { t } else { m });
    Ok(longest * 10.0)
}

/// Largest group of photons routed jointly; longer chains are cut.
const MAX_CLUSTER: usize = 48;

#[derive(Clone, Copy, PartialEq)]
enum Source {
    A,
    B,
}

/// Decay and dephasing rates entering the pair correlation, per picosecond.
struct PairModel {
    chi: f64,
    envelope_rate: f64,
    dephasing_a: f64,
    dephasing_b: f64,
    detuning: f64,
}

impl PairModel {
    fn new(exp: &HomExperiment) -> Result<Self> {
        let a = &exp.emitter_a;
        let b = &exp.emitter_b;
        let envelope_rate = 0.5 / a.lifetime.as_ps() + 0.5 / b.lifetime.as_ps();
        let natural_a = a.dephasing_rate()?.as_per_s() * 1e-12;
        let natural_b = b.dephasing_rate()?.as_per_s() * 1e-12;
        // The pair correlation must decay at 1 / coherence_time. Without an
        // override this holds for the emitters' own dephasing; with one, the
        // required excess is shared in proportion to it.
        let total = 1.0 / exp.coherence_time()?.as_ps();
        let required = total - envelope_rate;
        if required < -1e-12 * total {
            return Err(Error::domain(
                "coherence time exceeds the lifetime limit of the emitters",
            ));
        }
        let required = required.max(0.0);
        let natural = natural_a + natural_b;
        let (dephasing_a, dephasing_b) = if natural > 0.0 {
            (natural_a * required / natural, natural_b * required / natural)
        } else {
            (0.5 * required, 0.5 * required)
        };
        Ok(PairModel {
            chi: exp.chi,
            envelope_rate,
            dephasing_a,
            dephasing_b,
            detuning: exp.detuning().as_hz() * 1e-12,
        })
    }
}

/// Routes the photons of two emitters through a 50:50 beamsplitter.
///
/// Each photon leaves through port 1 or 2 with probability one half. For a
/// photon from A at `t_a` and one from B at `t_b` closer than the
/// [`coherence_window`], the routing is correlated so that they leave through
/// different ports with probability
///
/// ```text
/// 1/2 (1 - chi exp(-gamma |t_b - t_a|) cos(2 pi delta (t_b - t_a) + phi))
/// ```
///
/// where `gamma` is the mean spontaneous decay rate of the two emitters and
/// `phi` is the difference of the two emitters' diffusive phase increments
/// over `[t_a, t_b]`, each a Wiener process with variance `2 gamma* dt`.
/// Averaged over the phases this reproduces the interference term of the
/// closed-form model.
///
/// Pairwise routing correlations are imposed jointly on each cluster of
/// nearby photons with a Gaussian copula: port signs are taken from
/// correlated standard normals whose correlation is `sin(pi c / 2)`, which
/// makes the sign correlation exactly `c`. Photons of the same emitter stay
/// uncorrelated.
pub fn mix_at_beamsplitter<R: Rng + ?Sized>(
    stream_a: &PhotonStream,
    stream_b: &PhotonStream,
    exp: &HomExperiment,
    rng: &mut R,
) -> Result<[ClickStream; 2]> {
    exp.validate()?;
    if stream_a.emitter != exp.emitter_a || stream_b.emitter != exp.emitter_b {
        return Err(Error::domain("photon streams were not produced by the experiment's emitters"));
    }
    let model = PairModel::new(exp)?;
    let window = coherence_window(exp)?.as_ps();
    let duration = stream_a.duration_ps.max(stream_b.duration_ps);

    let photons = merge(&stream_a.times_ps, &stream_b.times_ps);
    let mut ports = vec![false; photons.len()];
    let mut start = 0;
    while start < photons.len() {
        let mut end = start + 1;
        while end < photons.len() && end - start < MAX_CLUSTER && photons[end].0 - photons[end - 1].0 <= window {
            end += 1;
        }
        let cluster = &photons[start..end];
        let mixed = cluster.iter().any(|p| p.1 == Source::A) && cluster.iter().any(|p| p.1 == Source::B);
        if mixed && model.chi > 0.0 {
            route_cluster(cluster, &model, rng, &mut ports[start..end]);
        } else {
            for p in &mut ports[start..end] {
                *p = rng.random::<bool>();
            }
        }
        start = end;
    }

    let mut out = [
        ClickStream::empty(Detector::One, duration.round() as i64, 0),
        ClickStream::empty(Detector::Two, duration.round() as i64, 0),
    ];
    for (&(t, _), &first_port) in photons.iter().zip(&ports) {
        let s = &mut out[if first_port { 0 } else { 1 }];
        s.times_ps.push(t.round() as i64);
        s.origins.push(Origin::Signal);
    }
    for s in &mut out {
        s.sort_dedup();
    }
    Ok(out)
}

fn merge(a: &[f64], b: &[f64]) -> Vec<(f64, Source)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            out.push((a[i], Source::A));
            i += 1;
        } else {
            out.push((b[j], Source::B));
            j += 1;
        }
    }
    out
}

fn route_cluster<R: Rng + ?Sized>(cluster: &[(f64, Source)], model: &PairModel, rng: &mut R, ports: &mut [bool]) {
    let n = cluster.len();
    // Wiener phase of each emitter sampled at every photon time in the cluster.
    let mut phase_a = vec![0.0; n];
    let mut phase_b = vec![0.0; n];
    for k in 1..n {
        let dt = cluster[k].0 - cluster[k - 1].0;
        let za: f64 = StandardNormal.sample(rng);
        let zb: f64 = StandardNormal.sample(rng);
        phase_a[k] = phase_a[k - 1] + za * (2.0 * model.dephasing_a * dt).sqrt();
        phase_b[k] = phase_b[k - 1] + zb * (2.0 * model.dephasing_b * dt).sqrt();
    }

    let mut corr = vec![0.0; n * n];
    for i in 0..n {
        corr[i * n + i] = 1.0;
        for j in i + 1..n {
            if cluster[i].1 == cluster[j].1 {
                continue;
            }
            let dt = cluster[j].0 - cluster[i].0;
            let phase = (phase_a[j] - phase_a[i]) - (phase_b[j] - phase_b[i]);
            let c = model.chi
                * (-model.envelope_rate * dt).exp()
                * (2.0 * PI * model.detuning * dt + phase).cos();
            let rho = (FRAC_PI_2 * c).sin();
            corr[i * n + j] = rho;
            corr[j * n + i] = rho;
        }
    }

    // Rare dense clusters can ask for an infeasible correlation pattern;
    // shrink it toward independence until it is positive semidefinite.
    let mut factor = None;
    for _ in 0..200 {
        if let Some(l) = cholesky_semidefinite(&corr, n, 1e-12) {
            factor = Some(l);
            break;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    corr[i * n + j] *= 0.95;
                }
            }
        }
    }
    let Some(l) = factor else {
        for p in ports.iter_mut() {
            *p = rng.random::<bool>();
        }
        return;
    };
    let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    for i in 0..n {
        let z: f64 = (0..=i).map(|k| l[i * n + k] * u[k]).sum();
        ports[i] = z > 0.0;
    }
}
