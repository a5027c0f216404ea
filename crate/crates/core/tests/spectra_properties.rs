use homtk_core::spectra::{
    boltzmann_ratio, etalon_transmission, filter_spectrum, zpl_spectrum, zpl_spectrum_on, Etalon, FrequencyGrid,
    LevelStructure, Spectrum,
};
use homtk_core::Frequency;
use proptest::prelude::*;

fn small_grid() -> FrequencyGrid {
    FrequencyGrid { start_ghz: -100.0, stop_ghz: 300.0, step_ghz: 0.5 }
}

proptest! {
    #[test]
    fn lines_are_ordered(lg in 1.0f64..200.0, extra in 1.0f64..500.0, t in 0.1f64..300.0) {
        let ls = LevelStructure {
            lambda_so_ground: Frequency::from_ghz(lg),
            lambda_so_excited: Frequency::from_ghz(lg + extra),
            temperature_k: t,
            ..LevelStructure::nominal()
        };
        let lines = ls.lines(Frequency::from_ghz(1.0)).unwrap();
        prop_assert!(lines.windows(2).all(|w| w[0].center_ghz > w[1].center_ghz));
    }

    #[test]
    fn boltzmann_monotone(d in 1.0f64..1000.0, t in 0.1f64..300.0, dt in 0.01f64..10.0, dd in 0.1f64..50.0) {
        let r = boltzmann_ratio(Frequency::from_ghz(d), t).unwrap();
        prop_assert!(r > 0.0 && r <= 1.0);
        prop_assert!(boltzmann_ratio(Frequency::from_ghz(d), t + dt).unwrap() > r);
        prop_assert!(boltzmann_ratio(Frequency::from_ghz(d + dd), t).unwrap() < r);
    }

    #[test]
    fn etalon_is_periodic(nu in -2000.0f64..2000.0, fsr in 5.0f64..100.0, frac in 0.001f64..0.5, peak in -10.0f64..10.0) {
        let fsr_f = Frequency::from_ghz(fsr);
        let bw = Frequency::from_ghz(frac * fsr);
        let p = Frequency::from_ghz(peak);
        let a = etalon_transmission(Frequency::from_ghz(nu), fsr_f, bw, p).unwrap();
        let b = etalon_transmission(Frequency::from_ghz(nu + fsr), fsr_f, bw, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{} {}", a, b);
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn filtering_is_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, t1 in 1.0f64..50.0, t2 in 1.0f64..50.0) {
        let a = zpl_spectrum_on(&LevelStructure { temperature_k: t1, ..LevelStructure::nominal() }, Frequency::from_ghz(5.0), &small_grid()).unwrap();
        let b = zpl_spectrum_on(&LevelStructure { temperature_k: t2, ..LevelStructure::nominal() }, Frequency::from_ghz(5.0), &small_grid()).unwrap();
        let combo = Spectrum {
            freq_ghz: a.freq_ghz.clone(),
            intensity: a.intensity.iter().zip(&b.intensity).map(|(x, y)| alpha * x + beta * y).collect(),
            lines: a.lines.clone(),
        };
        let e = Etalon::nominal();
        let fa = filter_spectrum(&a, &e).unwrap();
        let fb = filter_spectrum(&b, &e).unwrap();
        let fc = filter_spectrum(&combo, &e).unwrap();
        for i in 0..fc.intensity.len() {
            let expect = alpha * fa.intensity[i] + beta * fb.intensity[i];
            prop_assert!((fc.intensity[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }
}

#[test]
fn etalon_filtering_is_not_idempotent() {
    let s = zpl_spectrum_on(&LevelStructure::nominal(), Frequency::from_ghz(5.0), &small_grid()).unwrap();
    let e = Etalon::nominal();
    let once = filter_spectrum(&s, &e).unwrap();
    let twice = filter_spectrum(&once, &e).unwrap();
    assert!(once.intensity.iter().zip(&twice.intensity).any(|(a, b)| (a - b).abs() > 1e-6 * a.abs()));
}

#[test]
fn transmission_at_half_fsr() {
    let e = Etalon::nominal();
    let t = e.transmission(Frequency::from_ghz(10.0)).unwrap();
    assert!((t / 6.12e-3 - 1.0).abs() < 0.01, "{t}");
    let doubled = Etalon { stages: 2, ..e };
    assert!((doubled.transmission(Frequency::from_ghz(10.0)).unwrap() - t * t).abs() < 1e-15);
}

#[test]
fn hot_limit_equalizes_lines() {
    let hot = LevelStructure { temperature_k: 1e12, ..LevelStructure::nominal() };
    let s = zpl_spectrum(&hot, Frequency::from_ghz(5.0)).unwrap();
    assert!(s.lines.iter().all(|l| (l.amplitude - 1.0).abs() < 1e-9));
}
