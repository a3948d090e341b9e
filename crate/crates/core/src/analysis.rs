//! Jamming statistics and figure datasets derived from SINR series.

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{
    ecef_positions, run_scenario, Constellation, Scenario, SinrSeries, StationFrame,
};
use crate::error::{Error, Result};
use crate::geometry::GroundStation;
use crate::orbit::Orbit;
use crate::rfmodel::{
    db_to_watts, fspl_db, received_power_dbw, watts_to_db_or_floor, GainPattern, LinkParams,
};

/// How per-station jamming fractions are averaged into one figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammingAverage {
    /// Jammed steps over in-service steps, pooled across stations.
    #[default]
    Pooled,
    /// Mean of the per-station percentages.
    PerStation,
}

/// Per-step jamming flags for one series. No-service steps are `false` and
/// counted in `no_service`; they are excluded from fractions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JammingMask {
    pub flags: Vec<bool>,
    pub no_service: usize,
}

impl JammingMask {
    pub fn jammed(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn service_steps(&self) -> usize {
        self.flags.len() - self.no_service
    }

    /// Percentage of in-service steps that are jammed.
    pub fn percent(&self) -> Result<f64> {
        let n = self.service_steps();
        if n == 0 {
            return Err(Error::Domain("no in-service steps".into()));
        }
        Ok(100.0 * self.jammed() as f64 / n as f64)
    }
}

/// A step is jammed when its SINR is strictly below `threshold_db`.
pub fn jamming_mask(series: &SinrSeries, threshold_db: f64) -> JammingMask {
    let mut no_service = 0;
    let flags = series
        .records
        .iter()
        .map(|r| {
            if r.in_service {
                r.sinr_db < threshold_db
            } else {
                no_service += 1;
                false
            }
        })
        .collect();
    JammingMask { flags, no_service }
}

pub fn jamming_fraction(mask: &[bool]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::Domain("jamming fraction of an empty mask".into()));
    }
    Ok(100.0 * mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64)
}

/// A maximal run of consecutive jammed steps within a mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpan {
    pub start_index: usize,
    pub steps: usize,
    pub length_s: f64,
}

pub fn extract_runs(mask: &[bool], step_s: f64) -> Vec<RunSpan> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &m) in mask.iter().chain(std::iter::once(&false)).enumerate() {
        match (m, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let steps = i - s;
                runs.push(RunSpan {
                    start_index: s,
                    steps,
                    length_s: steps as f64 * step_s,
                });
                start = None;
            }
            _ => {}
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq)]
pub struct JammingRun {
    pub start: DateTime<Utc>,
    pub length_s: f64,
    pub station: String,
}

/// Jamming runs of one series, stamped with start times and station name.
pub fn series_runs(series: &SinrSeries, threshold_db: f64) -> Vec<JammingRun> {
    let mask = jamming_mask(series, threshold_db);
    extract_runs(&mask.flags, series.step_s)
        .into_iter()
        .map(|r| JammingRun {
            start: series.records[r.start_index].time,
            length_s: r.length_s,
            station: series.station.name.clone(),
        })
        .collect()
}

/// Counts of runs per `[k·bin_s, (k+1)·bin_s)` bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunHistogram {
    pub bin_s: u64,
    pub counts: Vec<usize>,
}

impl RunHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn run_histogram(runs: &[JammingRun], bin_s: f64) -> Result<RunHistogram> {
    if !(bin_s > 0.0) {
        return Err(Error::Domain(format!(
            "histogram bin width {bin_s} must be positive"
        )));
    }
    let mut counts: Vec<usize> = Vec::new();
    for r in runs {
        // tolerate float noise in lengths that are exact multiples of the bin
        let bin = ((r.length_s / bin_s) + 1e-9).floor() as usize;
        if counts.len() <= bin {
            counts.resize(bin + 1, 0);
        }
        counts[bin] += 1;
    }
    Ok(RunHistogram {
        bin_s: bin_s.round() as u64,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub constellation: String,
    pub mean_sinr_db: f64,
    pub mean_jamming_pct: f64,
    pub mean_jam_period_s: f64,
}

/// Summary statistics of one constellation's series set.
pub fn summarize_one(
    name: &str,
    series: &[SinrSeries],
    threshold_db: f64,
    averaging: JammingAverage,
) -> Result<SummaryRow> {
    if series.is_empty() {
        return Err(Error::Consistency(format!(
            "{name}: no series to summarize"
        )));
    }
    let shape = (series[0].records.len(), series[0].step_s);
    let mut sinr_sum = 0.0;
    let mut service = 0usize;
    let mut jammed = 0usize;
    let mut station_pcts = Vec::new();
    let mut run_total = 0.0;
    let mut run_count = 0usize;
    for s in series {
        if (s.records.len(), s.step_s) != shape {
            return Err(Error::Consistency(format!(
                "{name}: series for {} has a different shape",
                s.station.name
            )));
        }
        for r in s.in_service() {
            sinr_sum += r.sinr_db;
        }
        let mask = jamming_mask(s, threshold_db);
        service += mask.service_steps();
        jammed += mask.jammed();
        if mask.service_steps() > 0 {
            station_pcts.push(mask.percent()?);
        }
        for run in extract_runs(&mask.flags, s.step_s) {
            run_total += run.length_s;
            run_count += 1;
        }
    }
    if service == 0 {
        return Err(Error::Consistency(format!("{name}: no in-service steps")));
    }
    let mean_jamming_pct = match averaging {
        JammingAverage::Pooled => 100.0 * jammed as f64 / service as f64,
        JammingAverage::PerStation => station_pcts.iter().sum::<f64>() / station_pcts.len() as f64,
    };
    Ok(SummaryRow {
        constellation: name.to_string(),
        mean_sinr_db: sinr_sum / service as f64,
        mean_jamming_pct,
        mean_jam_period_s: if run_count == 0 {
            0.0
        } else {
            run_total / run_count as f64
        },
    })
}

/// One summary row per named series set; all sets must share a time grid.
pub fn summarize(
    sets: &[(String, Vec<SinrSeries>)],
    threshold_db: f64,
    averaging: JammingAverage,
) -> Result<Vec<SummaryRow>> {
    let mut shape = None;
    sets.iter()
        .map(|(name, series)| {
            for s in series {
                let this = (s.records.len(), s.step_s);
                if *shape.get_or_insert(this) != this {
                    return Err(Error::Consistency(format!(
                        "{name}: time grid differs from the other constellations"
                    )));
                }
            }
            summarize_one(name, series, threshold_db, averaging)
        })
        .collect()
}

/// Gains of several patterns sampled on a shared angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GainTable {
    pub labels: Vec<String>,
    pub phi_deg: Vec<f64>,
    /// `gains[pattern][sample]`
    pub gains: Vec<Vec<f64>>,
}

pub fn gain_table(
    patterns: &[GainPattern],
    phi_step_deg: f64,
    phi_max_deg: f64,
) -> Result<GainTable> {
    if !(phi_step_deg > 0.0) {
        return Err(Error::Domain("angle step must be positive".into()));
    }
    let n = (phi_max_deg / phi_step_deg + 1e-9).floor() as usize;
    let phi_deg: Vec<f64> = (0..=n).map(|k| k as f64 * phi_step_deg).collect();
    let gains = patterns
        .iter()
        .map(|p| {
            phi_deg
                .iter()
                .map(|&phi| p.gain_db(phi))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(GainTable {
        labels: patterns
            .iter()
            .map(|p| p.kind.label().to_string())
            .collect(),
        phi_deg,
        gains,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternOutcome {
    pub pattern: GainPattern,
    pub summary: SummaryRow,
    /// `(station, jamming %)`
    pub per_station_pct: Vec<(String, f64)>,
    /// Mean combined interference over in-service steps, dBW (mean taken in
    /// watts).
    pub mean_interference_dbw: f64,
    pub series: Vec<SinrSeries>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternComparison {
    pub gain_table: GainTable,
    pub outcomes: Vec<PatternOutcome>,
}

/// Run the same scenario under each receive pattern.
pub fn compare_patterns(
    scenario: &Scenario,
    patterns: &[GainPattern],
) -> Result<PatternComparison> {
    if patterns.len() < 2 {
        return Err(Error::config(
            "patterns",
            "at least two patterns are needed",
        ));
    }
    let gain_table = gain_table(patterns, 0.1, 90.0)?;
    let outcomes = patterns
        .iter()
        .map(|&pattern| {
            let s = scenario.with_pattern(pattern);
            let series = run_scenario(&s)?;
            let label = format!("{} ({})", s.attacker.name, pattern.kind.label());
            let summary = summarize_one(&label, &series, s.jam_threshold_db, s.jamming_average)?;
            let per_station_pct = series
                .iter()
                .map(|ser| {
                    Ok((
                        ser.station.name.clone(),
                        jamming_mask(ser, s.jam_threshold_db).percent()?,
                    ))
                })
                .collect::<Result<_>>()?;
            let (sum_w, n) = series.iter().flat_map(|ser| ser.in_service()).fold(
                (0.0, 0usize),
                |(acc, n), r| {
                    let w = if r.interference_dbw.is_finite() {
                        db_to_watts(r.interference_dbw)
                    } else {
                        0.0
                    };
                    (acc + w, n + 1)
                },
            );
            Ok(PatternOutcome {
                pattern,
                summary,
                per_station_pct,
                mean_interference_dbw: watts_to_db_or_floor(if n == 0 {
                    0.0
                } else {
                    sum_w / n as f64
                }),
                series,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PatternComparison {
        gain_table,
        outcomes,
    })
}

/// Default navigation constellation: 24 satellites in 6 planes at 20 200 km,
/// 55° inclination, 27 dBW at L1 with an isotropic receiver.
pub fn default_gnss(epoch: DateTime<Utc>) -> Result<Constellation> {
    let spec = crate::orbit::WalkerSpec {
        total_satellites: 24,
        planes: 6,
        phasing_factor: 1,
        inclination_deg: 55.0,
        altitude_km: 20_200.0,
    };
    Ok(Constellation {
        name: "gnss".into(),
        link: LinkParams {
            eirp_dbw: 27.0,
            frequency_hz: 1_575.42e6,
            bandwidth_hz: 2.046e6,
            atmos_atten_db: 0.0,
        },
        elements: crate::orbit::generate_walker(&spec, epoch)?,
    })
}

/// Mean received power from visible satellites at one station over time.
#[derive(Debug, Clone, PartialEq)]
pub struct GnssStationComparison {
    pub station: GroundStation,
    pub times: Vec<DateTime<Utc>>,
    /// Per-step mean over visible GNSS satellites (watts-averaged), dBW.
    pub gnss_dbw: Vec<Option<f64>>,
    pub cubesat_dbw: Vec<Option<f64>>,
    /// Mean of the per-step values over steps with at least one satellite.
    pub gnss_daily_mean_dbw: Option<f64>,
    pub cubesat_daily_mean_dbw: Option<f64>,
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-step mean received power through an isotropic receiver from every
/// satellite of `elements` above the scenario's elevation mask.
fn mean_visible_power(
    scenario: &Scenario,
    elements: &[crate::orbit::KeplerianElements],
    link: &LinkParams,
) -> Result<Vec<Vec<Option<f64>>>> {
    let orbits: Vec<Orbit> = elements.iter().map(Orbit::new).collect();
    let frames: Vec<StationFrame> = scenario.stations.iter().map(StationFrame::new).collect();
    let per_step: Vec<Vec<Option<f64>>> = (0..scenario.n_steps())
        .into_par_iter()
        .map(|k| {
            let pos = ecef_positions(&orbits, scenario.step_time(k))?;
            Ok(frames
                .iter()
                .map(|st| {
                    let (sum, n) = pos
                        .iter()
                        .filter_map(|p| st.look_above(p, scenario.elevation_mask_deg))
                        .fold((0.0, 0usize), |(acc, n), (_, range)| {
                            let fspl = fspl_db(range, link.frequency_hz).unwrap_or(f64::INFINITY);
                            (
                                acc + db_to_watts(received_power_dbw(link, 0.0, fspl)),
                                n + 1,
                            )
                        });
                    (n > 0).then(|| 10.0 * (sum / n as f64).log10())
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..frames.len())
        .map(|s| per_step.iter().map(|row| row[s]).collect())
        .collect())
}

/// Received power from the scenario's attacker constellation, re-tuned to
/// the GNSS carrier, against the GNSS constellation itself.
pub fn gnss_compare(
    cubesat_scenario: &Scenario,
    gnss: &Constellation,
) -> Result<Vec<GnssStationComparison>> {
    cubesat_scenario.validate()?;
    gnss.link.validate()?;
    let cubesat_link = LinkParams {
        eirp_dbw: cubesat_scenario.attacker.link.eirp_dbw,
        ..gnss.link
    };
    let g = mean_visible_power(cubesat_scenario, &gnss.elements, &gnss.link)?;
    let c = mean_visible_power(
        cubesat_scenario,
        &cubesat_scenario.attacker.elements,
        &cubesat_link,
    )?;
    let times: Vec<_> = (0..cubesat_scenario.n_steps())
        .map(|k| cubesat_scenario.step_time(k))
        .collect();
    Ok(cubesat_scenario
        .stations
        .iter()
        .zip(g.into_iter().zip(c))
        .map(|(st, (gnss_dbw, cubesat_dbw))| GnssStationComparison {
            station: st.clone(),
            times: times.clone(),
            gnss_daily_mean_dbw: mean_of(&gnss_dbw),
            cubesat_daily_mean_dbw: mean_of(&cubesat_dbw),
            gnss_dbw,
            cubesat_dbw,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::StepRecord;
    use chrono::{Duration, TimeZone};

    fn series_from(sinr: &[f64]) -> SinrSeries {
        let t0 = Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap();
        SinrSeries {
            station: GroundStation::new("s", 0.0, 0.0, 0.0),
            step_s: 10.0,
            records: sinr
                .iter()
                .enumerate()
                .map(|(k, &v)| StepRecord {
                    time: t0 + Duration::seconds(10 * k as i64),
                    in_service: v.is_finite(),
                    geo_index: Some(0),
                    signal_dbw: -96.0,
                    interference_dbw: f64::NEG_INFINITY,
                    noise_dbw: -120.0,
                    sinr_db: v,
                    n_visible_interferers: 0,
                    strongest_interferer_dbw: f64::NEG_INFINITY,
                })
                .collect(),
        }
    }

    #[test]
    fn mask_examples() {
        let m = jamming_mask(&series_from(&[12.0, 9.0, 9.0, 12.0]), 10.0);
        assert_eq!(m.flags, vec![false, true, true, false]);
        let m = jamming_mask(&series_from(&[23.98; 5]), 10.0);
        assert!(m.flags.iter().all(|f| !f));
        let m = jamming_mask(&series_from(&[10.0]), 10.0);
        assert_eq!(m.flags, vec![false]);
    }

    #[test]
    fn no_service_excluded_from_fraction() {
        let m = jamming_mask(&series_from(&[5.0, f64::NEG_INFINITY, 20.0, 5.0]), 10.0);
        assert_eq!(m.no_service, 1);
        assert_eq!(m.flags, vec![true, false, false, true]);
        assert!((m.percent().unwrap() - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fraction_examples() {
        assert_eq!(jamming_fraction(&[false; 4]).unwrap(), 0.0);
        assert_eq!(jamming_fraction(&[true, true, false, false]).unwrap(), 50.0);
        assert!(jamming_fraction(&[]).is_err());
    }

    #[test]
    fn run_examples() {
        let r = extract_runs(&[false, true, true, false], 10.0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].length_s, 20.0);
        assert_eq!(r[0].start_index, 1);
        let r = extract_runs(&[true; 6], 10.0);
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].length_s, 60.0);
        let r = extract_runs(&[true, false, true], 10.0);
        assert_eq!(
            r.iter().map(|r| r.length_s).collect::<Vec<_>>(),
            vec![10.0, 10.0]
        );
        assert!(extract_runs(&[], 10.0).is_empty());
    }

    #[test]
    fn histogram_example() {
        let t0 = Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap();
        let run = |len| JammingRun {
            start: t0,
            length_s: len,
            station: "s".into(),
        };
        let h = run_histogram(&[run(20.0), run(20.0), run(50.0)], 30.0).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        assert!(run_histogram(&[], 0.0).is_err());
        let h = run_histogram(&[run(30.0)], 30.0).unwrap();
        assert_eq!(h.counts, vec![0, 1]);
    }

    #[test]
    fn summary_of_quiet_series() {
        let s = series_from(&[23.98; 8]);
        let row = summarize_one("quiet", &[s.clone(), s], 10.0, JammingAverage::Pooled).unwrap();
        assert!((row.mean_sinr_db - 23.98).abs() < 1e-12);
        assert_eq!(row.mean_jamming_pct, 0.0);
        assert_eq!(row.mean_jam_period_s, 0.0);
    }

    #[test]
    fn summary_averaging_modes() {
        let a = series_from(&[5.0, 5.0, 20.0, 20.0]);
        let b = series_from(&[5.0, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY]);
        let pooled =
            summarize_one("x", &[a.clone(), b.clone()], 10.0, JammingAverage::Pooled).unwrap();
        let per = summarize_one("x", &[a, b], 10.0, JammingAverage::PerStation).unwrap();
        assert!((pooled.mean_jamming_pct - 60.0).abs() < 1e-12);
        assert!((per.mean_jamming_pct - 75.0).abs() < 1e-12);
        assert_eq!(pooled.mean_jam_period_s, 15.0);
    }

    #[test]
    fn summary_shape_mismatch() {
        let a = series_from(&[5.0, 5.0]);
        let b = series_from(&[5.0]);
        assert!(summarize_one("x", &[a.clone(), b.clone()], 10.0, JammingAverage::Pooled).is_err());
        let sets = vec![("a".to_string(), vec![a]), ("b".to_string(), vec![b])];
        assert!(summarize(&sets, 10.0, JammingAverage::Pooled).is_err());
    }

    #[test]
    fn gain_table_samples_zero_to_ninety() {
        let t = gain_table(
            &[
                GainPattern::erc(44.0).unwrap(),
                GainPattern::itu_ref(44.0).unwrap(),
            ],
            0.1,
            90.0,
        )
        .unwrap();
        assert_eq!(t.phi_deg.len(), 901);
        assert_eq!(t.gains[0][0], 44.0);
        assert_eq!(t.gains[1][0], 44.0);
        assert_eq!(*t.gains[0].last().unwrap(), -10.0);
    }
}
