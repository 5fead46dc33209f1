use std::io::Cursor;
use std::path::Path;

use factoring_spectrum::ensemble::{energy_records, records_from_csv, records_to_csv, sample_extended_ensemble};
use factoring_spectrum::inversion::{energy_t, invert_levels, InversionConfig};
use factoring_spectrum::primes::{load_zeros, CountingMode, PrimeCounter, ZetaZeroTable};
use factoring_spectrum::spacing_stats::{
    build_series, fit_spacings, synthetic_sample, unfold, Model, SpacingSample, UnfoldConfig,
};
use factoring_spectrum::spectrum::{scale_spectrum, SimulatorSpectrum};
use num_bigint::BigUint;
use num_traits::ToPrimitive;

fn zeros() -> ZetaZeroTable {
    load_zeros(Path::new(env!("CARGO_MANIFEST_DIR")).join("data/zeta_zeros_2000.txt")).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn records_survive_csv() {
    let batch = sample_extended_ensemble(24, 200, 3).unwrap();
    let counter = PrimeCounter::new(CountingMode::Sieve, 1 << 13, None).unwrap();
    let records = energy_records(&batch, &counter).unwrap();
    let csv = records_to_csv(&records);
    let back = records_from_csv(Cursor::new(csv.as_bytes()), Some(&counter)).unwrap();
    assert_eq!(records_to_csv(&back), csv);
}

#[test]
fn synthetic_levels_through_the_pipeline() {
    // cumulative sums of GUE spacings form a level sequence with GUE statistics
    let gaps = synthetic_sample(Model::Gue, 30_000, 8);
    let mut acc = 0.0;
    let levels: Vec<f64> = gaps
        .s
        .iter()
        .map(|g| {
            acc += g;
            acc
        })
        .collect();
    let series = factoring_spectrum::spacing_stats::KIndexSeries::from_sorted(levels, 40).unwrap();
    let s = unfold(&series, &UnfoldConfig { window: 200, ell_min: 1, ell_max: 1, seed: 2 }).unwrap();
    // ell = 1 reaches one level either side, i.e. two gaps
    assert!((s.mean() - 2.0).abs() < 0.02);
    let back = SpacingSample::from_csv(&gaps.to_csv()).unwrap();
    assert_eq!(fit_spacings(&back, 40).unwrap().best_model, Model::Gue);
}

#[test]
fn ensemble_series_has_expected_length() {
    let batch = sample_extended_ensemble(30, 3000, 4).unwrap();
    let counter = PrimeCounter::new(CountingMode::Sieve, 1 << 16, None).unwrap();
    let records = energy_records(&batch, &counter).unwrap();
    let series = build_series(&records, 30);
    assert_eq!(series.len(), 3000);
    let s = unfold(&series, &UnfoldConfig { window: 500, ..Default::default() }).unwrap();
    assert!(s.len() > 1900);
}

#[test]
fn truncated_energy_converges_in_median() {
    let zeros = zeros();
    let batch = sample_extended_ensemble(30, 100, 17).unwrap();
    let exact = InversionConfig::default();
    let ts = [100usize, 200, 400, 800];
    let mut errors = vec![Vec::new(); ts.len()];
    for s in &batch {
        let n = &s.n;
        let root = n.to_f64().unwrap().sqrt();
        for frac in [0.35, 0.6, 0.85, 1.0] {
            let x = root.powf(frac).floor().max(2.0);
            let e = energy_t(x, n, &exact, None).unwrap();
            for (k, &t) in ts.iter().enumerate() {
                let cfg = InversionConfig { t, use_exact_pi: false, ..Default::default() };
                errors[k].push((energy_t(x, n, &cfg, Some(&zeros)).unwrap() - e).abs());
            }
        }
    }
    let med: Vec<f64> = errors.into_iter().map(median).collect();
    for w in med.windows(2) {
        assert!(w[1] <= w[0], "{med:?}");
    }
}

#[test]
fn inversion_on_a_small_semiprime() {
    let n = BigUint::from(1009u64 * 2003);
    let cfg = InversionConfig::default();
    let e = energy_t(1009.0, &n, &cfg, None).unwrap();
    let r = invert_levels(&n, &[1.5, e], &cfg, None).unwrap();
    assert!(r.success);
    assert_eq!(r.x.as_deref(), Some("1009"));
    assert_eq!(r.level_index, Some(1));
}

#[test]
fn spectrum_scaling_round_trip() {
    let s = SimulatorSpectrum::build(40, 50, 8).unwrap();
    let back = scale_spectrum(&scale_spectrum(&s, 80).unwrap(), 40).unwrap();
    for (a, b) in s.lines.iter().zip(&back.lines) {
        assert!((a.energy - b.energy).abs() <= 1e-12 * a.energy);
    }
    let total: f64 = s.lines.iter().map(|l| l.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
}
