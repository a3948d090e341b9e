//! Per-step interference simulation.
//!
//! Every step propagates all satellites once, then evaluates each station
//! independently: pick the strongest visible GEO carrier, point the dish at
//! it, and accumulate received power from every attacker above the elevation
//! mask. Work is split across steps with rayon; each (station, step) result
//! depends only on its inputs and interferers are accumulated in satellite
//! index order, so output is identical to a sequential run.

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::JammingAverage;
use crate::error::{Error, Result};
use crate::geometry::{self, GroundStation};
use crate::orbit::{duration_from_secs, KeplerianElements, Orbit};
use crate::rfmodel::{
    db_to_watts, fspl_db, noise_power_dbw, received_power_dbw, watts_to_db_or_floor, GainPattern,
    LinkParams, NoiseParams, PatternKind, FSPL_CONSTANT_DB,
};
use crate::vec3::{self, Vec3};

/// How interferer powers are combined into a single interference term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    /// `√(Σ I_j²)` over interferer powers in watts.
    #[default]
    Rss,
    /// Conventional `Σ I_j`.
    PowerSum,
}

impl Combiner {
    fn combine(self, watts: impl Iterator<Item = f64>) -> f64 {
        match self {
            Combiner::Rss => watts.map(|w| w * w).sum::<f64>().sqrt(),
            Combiner::PowerSum => watts.sum(),
        }
    }
}

/// SINR in dB of a carrier against noise and a set of interferers, all in dBW.
pub fn combine_sinr(
    carrier_dbw: f64,
    interferer_dbw: &[f64],
    noise_dbw: f64,
    combiner: Combiner,
) -> f64 {
    let i_w = combiner.combine(interferer_dbw.iter().map(|&p| db_to_watts(p)));
    sinr_from_parts(carrier_dbw, db_to_watts(noise_dbw), i_w)
}

fn sinr_from_parts(carrier_dbw: f64, noise_w: f64, interference_w: f64) -> f64 {
    carrier_dbw - 10.0 * (noise_w + interference_w).log10()
}

/// A set of satellites sharing one downlink configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub name: String,
    pub link: LinkParams,
    pub elements: Vec<KeplerianElements>,
}

/// Receive antenna settings as written in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaSpec {
    pub kind: PatternKind,
    pub g_max_dbi: f64,
}

impl TryFrom<AntennaSpec> for GainPattern {
    type Error = Error;

    fn try_from(spec: AntennaSpec) -> Result<Self> {
        GainPattern::new(spec.kind, spec.g_max_dbi)
    }
}

impl From<GainPattern> for AntennaSpec {
    fn from(p: GainPattern) -> Self {
        AntennaSpec {
            kind: p.kind,
            g_max_dbi: p.g_max_dbi,
        }
    }
}

/// Fully resolved simulation input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub victim: Constellation,
    pub attacker: Constellation,
    pub stations: Vec<GroundStation>,
    #[serde(serialize_with = "serialize_pattern")]
    pub pattern: GainPattern,
    pub noise: NoiseParams,
    pub start: DateTime<Utc>,
    pub duration_s: f64,
    pub step_s: f64,
    pub elevation_mask_deg: f64,
    pub jam_threshold_db: f64,
    pub combiner: Combiner,
    pub jamming_average: JammingAverage,
    /// Reference navigation constellation for the GNSS comparison.
    pub gnss: Option<Constellation>,
}

fn serialize_pattern<S: serde::Serializer>(
    p: &GainPattern,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    AntennaSpec::from(*p).serialize(s)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_s > 0.0 && self.step_s.is_finite()) {
            return Err(Error::config("step_s", "must be positive"));
        }
        if !(self.duration_s >= self.step_s && self.duration_s.is_finite()) {
            return Err(Error::config("duration_s", "must be at least one step"));
        }
        if !(-90.0..90.0).contains(&self.elevation_mask_deg) {
            return Err(Error::config("elevation_mask_deg", "must be in [-90, 90)"));
        }
        if !self.jam_threshold_db.is_finite() {
            return Err(Error::config("jam_threshold_db", "must be finite"));
        }
        if self.stations.is_empty() {
            return Err(Error::config(
                "stations",
                "at least one station is required",
            ));
        }
        if self.victim.elements.is_empty() {
            return Err(Error::config("victim", "constellation has no satellites"));
        }
        // an empty attacker gives the interference-free baseline
        for (role, c) in [("victim", &self.victim), ("attacker", &self.attacker)] {
            c.link.validate().map_err(|e| prefix_key(e, role))?;
            for el in &c.elements {
                el.validate().map_err(|e| prefix_key(e, role))?;
            }
        }
        for st in &self.stations {
            st.validate().map_err(|e| prefix_key(e, "stations"))?;
        }
        self.noise.validate().map_err(|e| prefix_key(e, "noise"))?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.duration_s / self.step_s + 1e-9).floor() as usize
    }

    pub fn step_time(&self, k: usize) -> DateTime<Utc> {
        self.start + duration_from_secs(self.step_s * k as f64)
    }

    pub fn noise_dbw(&self) -> f64 {
        noise_power_dbw(&self.noise)
    }

    /// SHA-256 over the canonical JSON encoding of every input.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Same scenario with a different attacker EIRP.
    pub fn with_attacker_eirp(&self, eirp_dbw: f64) -> Self {
        let mut s = self.clone();
        s.attacker.link.eirp_dbw = eirp_dbw;
        s
    }

    pub fn with_pattern(&self, pattern: GainPattern) -> Self {
        Scenario {
            pattern,
            ..self.clone()
        }
    }
}

pub(crate) fn prefix_key(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { key, message } => Error::Config {
            key: format!("{prefix}.{key}"),
            message,
        },
        other => other,
    }
}

/// One simulation step at one station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub time: DateTime<Utc>,
    /// False when no victim satellite is above the horizon.
    pub in_service: bool,
    pub geo_index: Option<usize>,
    pub signal_dbw: f64,
    /// Combined interference; −∞ when no attacker is visible.
    pub interference_dbw: f64,
    pub noise_dbw: f64,
    pub sinr_db: f64,
    pub n_visible_interferers: usize,
    pub strongest_interferer_dbw: f64,
}

impl StepRecord {
    /// SINR counting only the strongest interferer.
    pub fn sinr_strongest_only_db(&self) -> f64 {
        let i_w = if self.strongest_interferer_dbw.is_finite() {
            db_to_watts(self.strongest_interferer_dbw)
        } else {
            0.0
        };
        sinr_from_parts(self.signal_dbw, db_to_watts(self.noise_dbw), i_w)
    }

    fn no_service(time: DateTime<Utc>, noise_dbw: f64, n_visible: usize) -> Self {
        StepRecord {
            time,
            in_service: false,
            geo_index: None,
            signal_dbw: f64::NEG_INFINITY,
            interference_dbw: f64::NEG_INFINITY,
            noise_dbw,
            sinr_db: f64::NEG_INFINITY,
            n_visible_interferers: n_visible,
            strongest_interferer_dbw: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrSeries {
    pub station: GroundStation,
    pub step_s: f64,
    pub records: Vec<StepRecord>,
}

impl SinrSeries {
    pub fn in_service(&self) -> impl Iterator<Item = &StepRecord> {
        self.records.iter().filter(|r| r.in_service)
    }
}

pub(crate) struct StationFrame {
    origin: Vec3,
    up: Vec3,
}

impl StationFrame {
    pub(crate) fn new(st: &GroundStation) -> Self {
        Self {
            origin: geometry::geodetic_to_ecef(st),
            up: st.up(),
        }
    }

    /// Line of sight, range and elevation, or `None` when at or below the
    /// given elevation.
    #[inline]
    pub(crate) fn look_above(&self, sat: &Vec3, min_elevation_deg: f64) -> Option<(Vec3, f64)> {
        let los = vec3::sub(sat, &self.origin);
        let u = vec3::dot(&los, &self.up);
        if u <= 0.0 && min_elevation_deg >= 0.0 {
            return None;
        }
        let range = vec3::norm(&los);
        let elevation = (u / range).clamp(-1.0, 1.0).asin().to_degrees();
        if elevation > min_elevation_deg {
            Some((vec3::scale(&los, 1.0 / range), range))
        } else {
            None
        }
    }
}

/// Earth-fixed positions of every satellite at one instant.
pub(crate) fn ecef_positions(orbits: &[Orbit], t: DateTime<Utc>) -> Result<Vec<Vec3>> {
    let theta = -geometry::gmst_deg(t).to_radians();
    let (s, c) = theta.sin_cos();
    orbits
        .iter()
        .map(|o| {
            let p = o.position_at_time(t)?;
            Ok([c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]])
        })
        .collect()
}

/// Geometry of one station at one step, shared by the direct and the cached
/// RF evaluations.
struct StepGeometry {
    carrier: Option<(usize, f64)>,
    /// (satellite index, range km, off-boresight angle deg), index order.
    interferers: Vec<(usize, f64, f64)>,
}

fn step_geometry(
    st: &StationFrame,
    victims: &[Vec3],
    attackers: &[Vec3],
    victim_link: &LinkParams,
    pattern: &GainPattern,
    mask_deg: f64,
) -> StepGeometry {
    let boresight_gain = pattern.gain_unchecked(0.0);
    let mut best: Option<(usize, f64, Vec3, f64)> = None;
    for (i, sat) in victims.iter().enumerate() {
        if let Some((dir, range)) = st.look_above(sat, 0.0) {
            let fspl = fspl_db(range, victim_link.frequency_hz).unwrap_or(f64::INFINITY);
            let p = received_power_dbw(victim_link, boresight_gain, fspl);
            if best.map_or(true, |b| p > b.3) {
                best = Some((i, range, dir, p));
            }
        }
    }
    let Some((geo_idx, geo_range, boresight, _)) = best else {
        let interferers = attackers
            .iter()
            .enumerate()
            .filter_map(|(j, sat)| st.look_above(sat, mask_deg).map(|(_, r)| (j, r, f64::NAN)))
            .collect();
        return StepGeometry {
            carrier: None,
            interferers,
        };
    };
    let interferers = attackers
        .iter()
        .enumerate()
        .filter_map(|(j, sat)| {
            st.look_above(sat, mask_deg)
                .map(|(dir, range)| (j, range, geometry::unit_angle_deg(&boresight, &dir)))
        })
        .collect();
    StepGeometry {
        carrier: Some((geo_idx, geo_range)),
        interferers,
    }
}

struct Prepared {
    victims: Vec<Orbit>,
    attackers: Vec<Orbit>,
    stations: Vec<StationFrame>,
}

fn prepare(scenario: &Scenario) -> Result<Prepared> {
    scenario.validate()?;
    Ok(Prepared {
        victims: scenario.victim.elements.iter().map(Orbit::new).collect(),
        attackers: scenario.attacker.elements.iter().map(Orbit::new).collect(),
        stations: scenario.stations.iter().map(StationFrame::new).collect(),
    })
}

/// Evaluate `f` for every (step, station) pair, in parallel over steps, and
/// return results grouped per station in time order.
fn for_each_step<T, F>(scenario: &Scenario, prepared: &Prepared, f: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(usize, DateTime<Utc>, &StationFrame, StepGeometry) -> T + Sync,
{
    let n = scenario.n_steps();
    let per_step: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let t = scenario.step_time(k);
            let victims = ecef_positions(&prepared.victims, t)?;
            let attackers = ecef_positions(&prepared.attackers, t)?;
            Ok(prepared
                .stations
                .iter()
                .map(|st| {
                    let g = step_geometry(
                        st,
                        &victims,
                        &attackers,
                        &scenario.victim.link,
                        &scenario.pattern,
                        scenario.elevation_mask_deg,
                    );
                    f(k, t, st, g)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut by_station: Vec<Vec<T>> = (0..prepared.stations.len())
        .map(|_| Vec::with_capacity(n))
        .collect();
    for row in per_step {
        for (s, item) in row.into_iter().enumerate() {
            by_station[s].push(item);
        }
    }
    Ok(by_station)
}

/// Run the full simulation and return one SINR series per station.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<SinrSeries>> {
    let prepared = prepare(scenario)?;
    let noise_dbw = scenario.noise_dbw();
    let noise_w = db_to_watts(noise_dbw);
    let pattern = scenario.pattern;
    let vlink = scenario.victim.link;
    let alink = scenario.attacker.link;
    let combiner = scenario.combiner;

    let records = for_each_step(scenario, &prepared, |_, t, _, g| {
        let Some((geo_idx, geo_range)) = g.carrier else {
            return StepRecord::no_service(t, noise_dbw, g.interferers.len());
        };
        let signal = received_power_dbw(
            &vlink,
            pattern.gain_unchecked(0.0),
            fspl_db(geo_range, vlink.frequency_hz).unwrap_or(f64::INFINITY),
        );
        let mut strongest = f64::NEG_INFINITY;
        let powers = g.interferers.iter().map(|&(_, range, phi)| {
            let fspl = fspl_db(range, alink.frequency_hz).unwrap_or(f64::INFINITY);
            let p = received_power_dbw(&alink, pattern.gain_unchecked(phi), fspl);
            strongest = strongest.max(p);
            db_to_watts(p)
        });
        let i_w = combiner.combine(powers);
        StepRecord {
            time: t,
            in_service: true,
            geo_index: Some(geo_idx),
            signal_dbw: signal,
            interference_dbw: watts_to_db_or_floor(i_w),
            noise_dbw,
            sinr_db: sinr_from_parts(signal, noise_w, i_w),
            n_visible_interferers: g.interferers.len(),
            strongest_interferer_dbw: strongest,
        }
    })?;

    Ok(scenario
        .stations
        .iter()
        .zip(records)
        .map(|(st, records)| SinrSeries {
            station: st.clone(),
            step_s: scenario.step_s,
            records,
        })
        .collect())
}

/// Cached carrier geometry: `G(0) − 20·log10(d_km)` for the chosen GEO
/// satellite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedCarrier {
    pub index: u32,
    pub contribution_db: f64,
}

/// Cached interferer geometry: `G(φ) − 20·log10(d_km)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedInterferer {
    pub index: u32,
    pub contribution_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedStep {
    pub carrier: Option<CachedCarrier>,
    /// Visible attackers only, in satellite index order.
    pub interferers: Vec<CachedInterferer>,
}

/// Link-independent part of every received power in a scenario. Received
/// power at any EIRP and frequency is rebuilt as
/// `EIRP + contribution + 87.55221678 − 20·log10(f) − A`.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    pub fingerprint: String,
    pub start: DateTime<Utc>,
    pub step_s: f64,
    pub stations: Vec<GroundStation>,
    /// `[station][step]`
    pub steps: Vec<Vec<CachedStep>>,
}

pub fn build_geometry_cache(scenario: &Scenario) -> Result<GeometryCache> {
    let prepared = prepare(scenario)?;
    let pattern = scenario.pattern;
    let steps = for_each_step(scenario, &prepared, |_, _, _, g| {
        let carrier = g.carrier.map(|(idx, range)| CachedCarrier {
            index: idx as u32,
            contribution_db: pattern.gain_unchecked(0.0) - 20.0 * range.log10(),
        });
        let interferers = if carrier.is_some() {
            g.interferers
                .iter()
                .map(|&(j, range, phi)| CachedInterferer {
                    index: j as u32,
                    contribution_db: pattern.gain_unchecked(phi) - 20.0 * range.log10(),
                })
                .collect()
        } else {
            Vec::new()
        };
        CachedStep {
            carrier,
            interferers,
        }
    })?;
    Ok(GeometryCache {
        fingerprint: scenario.fingerprint(),
        start: scenario.start,
        step_s: scenario.step_s,
        stations: scenario.stations.clone(),
        steps,
    })
}

fn link_offset_db(link: &LinkParams) -> f64 {
    link.eirp_dbw + FSPL_CONSTANT_DB - 20.0 * link.frequency_hz.log10() - link.atmos_atten_db
}

struct StepPower {
    signal_dbw: f64,
    interference_w: f64,
    strongest_dbw: f64,
}

impl GeometryCache {
    fn check(&self, scenario: &Scenario) -> Result<()> {
        if self.fingerprint != scenario.fingerprint() {
            return Err(Error::Consistency(
                "geometry cache was built from a different scenario".into(),
            ));
        }
        Ok(())
    }

    /// Number of cached interferer entries over all stations and steps.
    pub fn n_entries(&self) -> usize {
        self.steps
            .iter()
            .flat_map(|s| s.iter())
            .map(|c| c.interferers.len())
            .sum()
    }

    fn step_power(
        step: &CachedStep,
        carrier_offset: f64,
        attacker_offset: f64,
        combiner: Combiner,
    ) -> Option<StepPower> {
        let carrier = step.carrier?;
        let mut strongest = f64::NEG_INFINITY;
        let i_w = combiner.combine(step.interferers.iter().map(|c| {
            let p = attacker_offset + c.contribution_db;
            strongest = strongest.max(p);
            db_to_watts(p)
        }));
        Some(StepPower {
            signal_dbw: carrier_offset + carrier.contribution_db,
            interference_w: i_w,
            strongest_dbw: strongest,
        })
    }

    /// Rebuild full SINR series for the scenario's links with the attacker
    /// EIRP replaced by `attacker_eirp_dbw`.
    pub fn reconstruct(
        &self,
        scenario: &Scenario,
        attacker_eirp_dbw: f64,
    ) -> Result<Vec<SinrSeries>> {
        self.check(scenario)?;
        let noise_dbw = scenario.noise_dbw();
        let noise_w = db_to_watts(noise_dbw);
        let carrier_offset = link_offset_db(&scenario.victim.link);
        let mut alink = scenario.attacker.link;
        alink.eirp_dbw = attacker_eirp_dbw;
        let attacker_offset = link_offset_db(&alink);

        Ok(self
            .stations
            .iter()
            .zip(&self.steps)
            .map(|(st, steps)| {
                let records = steps
                    .iter()
                    .enumerate()
                    .map(|(k, step)| {
                        let t = scenario.step_time(k);
                        match Self::step_power(
                            step,
                            carrier_offset,
                            attacker_offset,
                            scenario.combiner,
                        ) {
                            Some(p) => StepRecord {
                                time: t,
                                in_service: true,
                                geo_index: step.carrier.map(|c| c.index as usize),
                                signal_dbw: p.signal_dbw,
                                interference_dbw: watts_to_db_or_floor(p.interference_w),
                                noise_dbw,
                                sinr_db: sinr_from_parts(p.signal_dbw, noise_w, p.interference_w),
                                n_visible_interferers: step.interferers.len(),
                                strongest_interferer_dbw: p.strongest_dbw,
                            },
                            None => StepRecord::no_service(t, noise_dbw, 0),
                        }
                    })
                    .collect();
                SinrSeries {
                    station: st.clone(),
                    step_s: self.step_s,
                    records,
                }
            })
            .collect())
    }
}

/// Jamming percentage against attacker EIRP, per station and pooled.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurves {
    pub eirp_dbw: Vec<f64>,
    /// `(station name, jamming % per grid point)`
    pub per_station: Vec<(String, Vec<f64>)>,
    pub pooled: Vec<f64>,
}

impl SweepCurves {
    /// Lowest EIRP at which the pooled curve reaches `pct`, linearly
    /// interpolated between grid points.
    pub fn pooled_crossing(&self, pct: f64) -> Option<f64> {
        crossing(&self.eirp_dbw, &self.pooled, pct)
    }
}

pub(crate) fn crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    if y.first().is_some_and(|&y0| y0 >= level) {
        return x.first().copied();
    }
    x.windows(2).zip(y.windows(2)).find_map(|(xs, ys)| {
        (ys[0] < level && ys[1] >= level)
            .then(|| xs[0] + (level - ys[0]) / (ys[1] - ys[0]) * (xs[1] - xs[0]))
    })
}

/// Jamming fraction for every EIRP in `eirp_grid_dbw`, computed from cached
/// geometry.
pub fn sweep_power(
    cache: &GeometryCache,
    eirp_grid_dbw: &[f64],
    scenario: &Scenario,
) -> Result<SweepCurves> {
    cache.check(scenario)?;
    let noise_w = db_to_watts(scenario.noise_dbw());
    let carrier_offset = link_offset_db(&scenario.victim.link);
    let threshold = scenario.jam_threshold_db;
    let combiner = scenario.combiner;

    // (jammed, in service) per grid point per station
    let counts: Vec<Vec<(usize, usize)>> = eirp_grid_dbw
        .par_iter()
        .map(|&eirp| {
            let mut alink = scenario.attacker.link;
            alink.eirp_dbw = eirp;
            let attacker_offset = link_offset_db(&alink);
            cache
                .steps
                .iter()
                .map(|steps| {
                    steps.iter().fold((0, 0), |(jammed, service), step| {
                        match GeometryCache::step_power(
                            step,
                            carrier_offset,
                            attacker_offset,
                            combiner,
                        ) {
                            Some(p) => {
                                let sinr = sinr_from_parts(p.signal_dbw, noise_w, p.interference_w);
                                (jammed + usize::from(sinr < threshold), service + 1)
                            }
                            None => (jammed, service),
                        }
                    })
                })
                .collect()
        })
        .collect();

    let pct = |j: usize, s: usize| {
        if s == 0 {
            0.0
        } else {
            100.0 * j as f64 / s as f64
        }
    };
    let per_station = cache
        .stations
        .iter()
        .enumerate()
        .map(|(s, st)| {
            (
                st.name.clone(),
                counts.iter().map(|row| pct(row[s].0, row[s].1)).collect(),
            )
        })
        .collect();
    let pooled = counts
        .iter()
        .map(|row| {
            let (j, s) = row.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            pct(j, s)
        })
        .collect();
    Ok(SweepCurves {
        eirp_dbw: eirp_grid_dbw.to_vec(),
        per_station,
        pooled,
    })
}

/// Evenly spaced grid from `from` to `to` inclusive.
pub fn eirp_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::config("eirp_step", "must be positive"));
    }
    if !(to >= from) {
        return Err(Error::config("eirp_to", "must not be below eirp_from"));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + step * k as f64).collect())
}
