use std::path::Path;

use chrono::{Duration, TimeZone, Utc};
use orbjam::analysis::{
    compare_patterns, extract_runs, jamming_mask, run_histogram, series_runs, summarize_one, JammingAverage,
    JammingRun,
};
use orbjam::engine::{build_geometry_cache, eirp_grid, sweep_power, SinrSeries, StepRecord};
use orbjam::geometry::GroundStation;
use orbjam::io::parse_scenario;
use orbjam::rfmodel::GainPattern;
use orbjam::Scenario;
use proptest::prelude::*;

fn series(name: &str, sinr: &[f64]) -> SinrSeries {
    let t0 = Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap();
    SinrSeries {
        station: GroundStation::new(name, 10.0, 10.0, 0.0),
        step_s: 10.0,
        records: sinr
            .iter()
            .enumerate()
            .map(|(k, &v)| StepRecord {
                time: t0 + Duration::seconds(10 * k as i64),
                in_service: true,
                geo_index: Some(0),
                signal_dbw: -96.0,
                interference_dbw: -100.0,
                noise_dbw: -120.0,
                sinr_db: v,
                n_visible_interferers: 1,
                strongest_interferer_dbw: -100.0,
            })
            .collect(),
    }
}

proptest! {
    #[test]
    fn runs_and_histogram_conserve_counts(
        masks in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..300), 1..6),
        bin in 5.0..120.0f64,
    ) {
        let mut all = Vec::new();
        let mut jammed = 0usize;
        for m in &masks {
            jammed += m.iter().filter(|&&b| b).count();
            for r in extract_runs(m, 10.0) {
                prop_assert!(m[r.start_index..r.start_index + r.steps].iter().all(|&b| b));
                all.push(JammingRun {
                    start: Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap(),
                    length_s: r.length_s,
                    station: "s".into(),
                });
            }
        }
        let total_s: f64 = all.iter().map(|r| r.length_s).sum();
        prop_assert!((total_s - 10.0 * jammed as f64).abs() < 1e-9);
        prop_assert_eq!(run_histogram(&all, bin).unwrap().total(), all.len());
    }

    #[test]
    fn square_wave_runs_are_recovered(on in 1usize..20, off in 1usize..20, periods in 1usize..20) {
        let mask: Vec<bool> = (0..periods)
            .flat_map(|_| std::iter::repeat(true).take(on).chain(std::iter::repeat(false).take(off)))
            .collect();
        let runs = extract_runs(&mask, 10.0);
        prop_assert_eq!(runs.len(), periods);
        for (k, r) in runs.iter().enumerate() {
            prop_assert_eq!(r.start_index, k * (on + off));
            prop_assert_eq!(r.length_s, 10.0 * on as f64);
        }
    }

    #[test]
    fn summary_ignores_station_order(
        values in prop::collection::vec(prop::collection::vec(-5.0..30.0f64, 50), 2..6),
        seed in any::<u64>(),
    ) {
        let set: Vec<SinrSeries> = values.iter().enumerate().map(|(i, v)| series(&format!("s{i}"), v)).collect();
        let mut shuffled = set.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed % n as u64) as usize);
        shuffled.swap(0, n - 1);
        for avg in [JammingAverage::Pooled, JammingAverage::PerStation] {
            let a = summarize_one("x", &set, 10.0, avg).unwrap();
            let b = summarize_one("x", &shuffled, 10.0, avg).unwrap();
            prop_assert!((a.mean_sinr_db - b.mean_sinr_db).abs() < 1e-9);
            prop_assert!((a.mean_jamming_pct - b.mean_jamming_pct).abs() < 1e-9);
            prop_assert!((a.mean_jam_period_s - b.mean_jam_period_s).abs() < 1e-9);
        }
    }
}

fn two_hour_starlink() -> Scenario {
    let text = r#"
start = "2021-06-01T00:00:00Z"
station_preset = "aws10"
duration_s = 7200
step_s = 10

[victim]
preset = "inmarsat_gx"

[attacker]
preset = "starlink_first_group"
"#;
    parse_scenario(text, Path::new(".")).unwrap()
}

#[test]
fn sweep_is_monotone_in_eirp() {
    let s = two_hour_starlink();
    let cache = build_geometry_cache(&s).unwrap();
    let curves = sweep_power(&cache, &eirp_grid(0.0, 90.0, 1.0).unwrap(), &s).unwrap();
    for w in curves.pooled.windows(2) {
        assert!(w[1] >= w[0]);
    }
    for (_, pct) in &curves.per_station {
        for w in pct.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }
    assert_eq!(*curves.pooled.last().unwrap(), 100.0);
}

#[test]
fn dominated_pattern_never_adds_interference() {
    let s = two_hour_starlink();
    let erc = GainPattern::erc(44.0).unwrap();
    let cmp = compare_patterns(
        &s,
        &[GainPattern::itu_ref(44.0).unwrap(), erc, GainPattern::constant(44.0).unwrap()],
    )
    .unwrap();
    let [itu, erc, flat] = &cmp.outcomes[..] else { panic!("three outcomes") };
    for ((a, b), c) in itu.series.iter().zip(&erc.series).zip(&flat.series) {
        for ((ra, rb), rc) in a.records.iter().zip(&b.records).zip(&c.records) {
            assert!(ra.interference_dbw <= rb.interference_dbw);
            assert!(rb.interference_dbw <= rc.interference_dbw);
        }
    }
    for ((_, a), (_, b)) in erc.per_station_pct.iter().zip(&flat.per_station_pct) {
        assert!(a <= b);
    }
}

#[test]
fn series_runs_use_station_times() {
    let s = series("x", &[20.0, 5.0, 5.0, 20.0, 5.0]);
    let runs = series_runs(&s, 10.0);
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0].start, s.records[1].time);
    assert_eq!(runs[0].length_s, 20.0);
    assert_eq!(jamming_mask(&s, 10.0).jammed(), 3);
}
