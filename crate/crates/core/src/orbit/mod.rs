//! Orbital elements, constellation generators and two-body propagation.

mod tle;

pub use tle::{format_tle, parse_tle, parse_tle_file, NamedTle};

use std::f64::consts::PI;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Earth's gravitational parameter, km³/s².
pub const MU_EARTH: f64 = 398_600.4418;
/// WGS-84 equatorial radius, km.
pub const EARTH_RADIUS_KM: f64 = 6378.137;
/// Length of one sidereal day, s.
pub const SIDEREAL_DAY_S: f64 = 86_164.0905;
/// Semi-major axis of a geostationary orbit, km.
pub const GEO_SEMI_MAJOR_AXIS_KM: f64 = 42_164.169;

const KEPLER_TOLERANCE: f64 = 1e-12;
const KEPLER_MAX_ITERATIONS: usize = 50;

/// Normalize an angle in degrees to `[0, 360)`.
pub fn normalize_deg(angle: f64) -> f64 {
    let r = angle.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Classical elements of one satellite. For circular orbits the argument of
/// latitude fully determines the in-plane position; for eccentric orbits it is
/// the mean argument of latitude (argument of perigee + mean anomaly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeplerianElements {
    pub semi_major_axis_km: f64,
    #[serde(default)]
    pub eccentricity: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    #[serde(default)]
    pub arg_perigee_deg: f64,
    pub arg_latitude_deg: f64,
    pub epoch: DateTime<Utc>,
}

impl KeplerianElements {
    /// Circular orbit with the given elements; angles are normalized.
    pub fn circular(
        semi_major_axis_km: f64,
        inclination_deg: f64,
        raan_deg: f64,
        arg_latitude_deg: f64,
        epoch: DateTime<Utc>,
    ) -> Self {
        Self {
            semi_major_axis_km,
            eccentricity: 0.0,
            inclination_deg,
            raan_deg: normalize_deg(raan_deg),
            arg_perigee_deg: 0.0,
            arg_latitude_deg: normalize_deg(arg_latitude_deg),
            epoch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        if !(self.semi_major_axis_km > EARTH_RADIUS_KM) {
            return bad(
                "semi_major_axis_km",
                format!(
                    "{} km is not above the Earth's surface",
                    self.semi_major_axis_km
                ),
            );
        }
        if !(0.0..1.0).contains(&self.eccentricity) {
            return bad(
                "eccentricity",
                format!("{} is outside [0, 1)", self.eccentricity),
            );
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return bad(
                "inclination_deg",
                format!("{} is outside [0, 180]", self.inclination_deg),
            );
        }
        for (key, v) in [
            ("raan_deg", self.raan_deg),
            ("arg_perigee_deg", self.arg_perigee_deg),
            ("arg_latitude_deg", self.arg_latitude_deg),
        ] {
            if !v.is_finite() {
                return bad(key, format!("{v} is not finite"));
            }
        }
        Ok(())
    }

    /// Mean motion, rad/s.
    pub fn mean_motion_rad_s(&self) -> f64 {
        (MU_EARTH / self.semi_major_axis_km.powi(3)).sqrt()
    }

    /// Orbital period, s.
    pub fn period_s(&self) -> f64 {
        2.0 * PI / self.mean_motion_rad_s()
    }

    /// The same orbit with its epoch moved forward by `dt_s` seconds.
    pub fn advance_epoch(&self, dt_s: f64) -> Self {
        let advance = (self.mean_motion_rad_s() * dt_s).to_degrees();
        Self {
            arg_latitude_deg: normalize_deg(self.arg_latitude_deg + advance),
            epoch: self.epoch + duration_from_secs(dt_s),
            ..*self
        }
    }
}

pub(crate) fn duration_from_secs(s: f64) -> Duration {
    Duration::nanoseconds((s * 1e9).round() as i64)
}

/// Seconds from `from` to `to` (negative when `to` is earlier).
pub(crate) fn seconds_between(from: DateTime<Utc>, to: DateTime<Utc>) -> f64 {
    let d = to - from;
    match d.num_nanoseconds() {
        Some(ns) => ns as f64 * 1e-9,
        None => d.num_milliseconds() as f64 * 1e-3,
    }
}

/// Walker-delta constellation description `i: T/P/F` at one altitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkerSpec {
    pub total_satellites: usize,
    pub planes: usize,
    pub phasing_factor: usize,
    pub inclination_deg: f64,
    pub altitude_km: f64,
}

impl WalkerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.planes == 0 {
            return Err(Error::config("planes", "must be at least 1"));
        }
        if self.total_satellites == 0 || self.total_satellites % self.planes != 0 {
            return Err(Error::config(
                "total_satellites",
                format!(
                    "{} satellites cannot be split evenly into {} planes",
                    self.total_satellites, self.planes
                ),
            ));
        }
        if self.phasing_factor >= self.planes {
            return Err(Error::config(
                "phasing_factor",
                format!("{} is outside [0, {})", self.phasing_factor, self.planes),
            ));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(Error::config(
                "inclination_deg",
                format!("{} is outside [0, 180]", self.inclination_deg),
            ));
        }
        if !(self.altitude_km > 0.0) {
            return Err(Error::config(
                "altitude_km",
                format!("{} must be positive", self.altitude_km),
            ));
        }
        Ok(())
    }

    pub fn per_plane(&self) -> usize {
        self.total_satellites / self.planes
    }
}

/// Generate the elements of a Walker-delta constellation, plane-major.
pub fn generate_walker(spec: &WalkerSpec, epoch: DateTime<Utc>) -> Result<Vec<KeplerianElements>> {
    spec.validate()?;
    let per_plane = spec.per_plane();
    let total = spec.total_satellites as f64;
    let raan_step = 360.0 / spec.planes as f64;
    let in_plane_step = 360.0 / per_plane as f64;
    let phase_step = 360.0 * spec.phasing_factor as f64 / total;
    let a = EARTH_RADIUS_KM + spec.altitude_km;

    let mut out = Vec::with_capacity(spec.total_satellites);
    for plane in 0..spec.planes {
        let raan = raan_step * plane as f64;
        for slot in 0..per_plane {
            let u = in_plane_step * slot as f64 + phase_step * plane as f64;
            out.push(KeplerianElements::circular(
                a,
                spec.inclination_deg,
                raan,
                u,
                epoch,
            ));
        }
    }
    Ok(out)
}

/// Ideal geostationary satellite above `longitude_deg` at `epoch`.
pub fn place_geo(longitude_deg: f64, epoch: DateTime<Utc>) -> Result<KeplerianElements> {
    if !(-180.0..=180.0).contains(&longitude_deg) {
        return Err(Error::Domain(format!(
            "GEO longitude {longitude_deg} is outside [-180, 180]"
        )));
    }
    let inertial_longitude = longitude_deg + crate::geometry::gmst_deg(epoch);
    Ok(KeplerianElements::circular(
        GEO_SEMI_MAJOR_AXIS_KM,
        0.0,
        0.0,
        inertial_longitude,
        epoch,
    ))
}

/// Inertial position of a satellite at an instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EciState {
    pub position_km: Vec3,
    pub time: DateTime<Utc>,
}

/// Propagate `elements` forward by `dt_s` seconds on a two-body orbit.
pub fn propagate(elements: &KeplerianElements, dt_s: f64) -> Result<EciState> {
    if !(dt_s >= 0.0) {
        return Err(Error::Domain(format!(
            "propagation interval {dt_s} s must be non-negative"
        )));
    }
    let orbit = Orbit::new(elements);
    Ok(EciState {
        position_km: orbit.position_at(dt_s)?,
        time: elements.epoch + duration_from_secs(dt_s),
    })
}

/// Precomputed orientation of one orbit, reused across time steps.
#[derive(Debug, Clone, Copy)]
pub struct Orbit {
    /// Unit vector towards the ascending node.
    p: Vec3,
    /// In-plane unit vector 90° ahead of `p`.
    q: Vec3,
    a: f64,
    e: f64,
    n: f64,
    u0: f64,
    arg_perigee: f64,
    epoch: DateTime<Utc>,
}

impl Orbit {
    pub fn new(el: &KeplerianElements) -> Self {
        let (so, co) = el.raan_deg.to_radians().sin_cos();
        let (si, ci) = el.inclination_deg.to_radians().sin_cos();
        Self {
            p: [co, so, 0.0],
            q: [-so * ci, co * ci, si],
            a: el.semi_major_axis_km,
            e: el.eccentricity,
            n: el.mean_motion_rad_s(),
            u0: el.arg_latitude_deg.to_radians(),
            arg_perigee: el.arg_perigee_deg.to_radians(),
            epoch: el.epoch,
        }
    }

    pub fn epoch(&self) -> DateTime<Utc> {
        self.epoch
    }

    /// Inertial position `dt_s` seconds after the epoch. Negative offsets
    /// propagate backwards.
    pub fn position_at(&self, dt_s: f64) -> Result<Vec3> {
        if self.e == 0.0 {
            let u = self.u0 + self.n * dt_s;
            let (su, cu) = u.sin_cos();
            return Ok([
                self.a * (self.p[0] * cu + self.q[0] * su),
                self.a * (self.p[1] * cu + self.q[1] * su),
                self.a * (self.p[2] * cu + self.q[2] * su),
            ]);
        }
        let mean_anomaly = (self.u0 - self.arg_perigee + self.n * dt_s).rem_euclid(2.0 * PI);
        let ecc_anomaly = solve_kepler(mean_anomaly, self.e)?;
        let (se, ce) = ecc_anomaly.sin_cos();
        let true_anomaly = ((1.0 - self.e * self.e).sqrt() * se).atan2(ce - self.e);
        let r = self.a * (1.0 - self.e * ce);
        let (su, cu) = (self.arg_perigee + true_anomaly).sin_cos();
        Ok([
            r * (self.p[0] * cu + self.q[0] * su),
            r * (self.p[1] * cu + self.q[1] * su),
            r * (self.p[2] * cu + self.q[2] * su),
        ])
    }

    pub fn position_at_time(&self, t: DateTime<Utc>) -> Result<Vec3> {
        self.position_at(seconds_between(self.epoch, t))
    }
}

/// Solve `M = E − e·sin E` for the eccentric anomaly by Newton iteration.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    let mut ecc = if e < 0.8 { mean_anomaly } else { PI };
    for _ in 0..KEPLER_MAX_ITERATIONS {
        let f = ecc - e * ecc.sin() - mean_anomaly;
        let delta = f / (1.0 - e * ecc.cos());
        ecc -= delta;
        if delta.abs() < KEPLER_TOLERANCE {
            return Ok(ecc);
        }
    }
    Err(Error::Numerical(format!(
        "Kepler's equation did not converge for e = {e}, M = {mean_anomaly} rad"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::norm;
    use chrono::TimeZone;

    fn epoch() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn walker_counts_and_spacing() {
        let spec = WalkerSpec {
            total_satellites: 396,
            planes: 11,
            phasing_factor: 1,
            inclination_deg: 53.0,
            altitude_km: 550.0,
        };
        let els = generate_walker(&spec, epoch()).unwrap();
        assert_eq!(els.len(), 396);
        assert_eq!(els.iter().filter(|e| e.raan_deg == 0.0).count(), 36);

        let small = WalkerSpec {
            total_satellites: 4,
            planes: 2,
            phasing_factor: 0,
            inclination_deg: 90.0,
            altitude_km: 550.0,
        };
        let els = generate_walker(&small, epoch()).unwrap();
        let raans: Vec<f64> = els.iter().map(|e| e.raan_deg).collect();
        assert_eq!(raans, vec![0.0, 0.0, 180.0, 180.0]);
        assert_eq!(els[1].arg_latitude_deg - els[0].arg_latitude_deg, 180.0);
        assert!(els.iter().all(|e| e.eccentricity == 0.0));
        assert!(els
            .iter()
            .all(|e| e.semi_major_axis_km == EARTH_RADIUS_KM + 550.0));
    }

    #[test]
    fn walker_starlink_layout() {
        let spec = WalkerSpec {
            total_satellites: 1584,
            planes: 72,
            phasing_factor: 1,
            inclination_deg: 53.2,
            altitude_km: 550.0,
        };
        let els = generate_walker(&spec, epoch()).unwrap();
        assert_eq!(els.len(), 1584);
        assert_eq!(els[22].raan_deg, 5.0);
        assert_eq!(els[21].raan_deg, 0.0);
        // inter-plane phase offset 360/1584 degrees
        let offset = els[22].arg_latitude_deg - els[0].arg_latitude_deg;
        assert!((offset - 360.0 / 1584.0).abs() < 1e-12);
    }

    #[test]
    fn walker_rejects_bad_specs() {
        let mut spec = WalkerSpec {
            total_satellites: 10,
            planes: 3,
            phasing_factor: 0,
            inclination_deg: 53.0,
            altitude_km: 550.0,
        };
        assert!(generate_walker(&spec, epoch()).unwrap_err().is_config());
        spec.planes = 5;
        spec.phasing_factor = 5;
        assert!(generate_walker(&spec, epoch()).unwrap_err().is_config());
    }

    #[test]
    fn propagate_zero_is_epoch_position() {
        let el = KeplerianElements::circular(6928.137, 53.0, 40.0, 10.0, epoch());
        let s = propagate(&el, 0.0).unwrap();
        let u = 10f64.to_radians();
        let (so, co) = 40f64.to_radians().sin_cos();
        let (si, ci) = 53f64.to_radians().sin_cos();
        let expected = [
            6928.137 * (co * u.cos() - so * ci * u.sin()),
            6928.137 * (so * u.cos() + co * ci * u.sin()),
            6928.137 * si * u.sin(),
        ];
        assert_eq!(s.position_km, expected);
        assert_eq!(s.time, epoch());
    }

    #[test]
    fn propagate_rejects_negative_interval() {
        let el = KeplerianElements::circular(6928.137, 53.0, 0.0, 0.0, epoch());
        assert!(matches!(propagate(&el, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn leo_period_matches_kepler_third_law() {
        let a: f64 = 6928.137;
        // independent evaluation of 2π√(a³/μ)
        let oracle = 2.0 * PI * (a * a * a / 398_600.4418).sqrt();
        assert!((oracle - 5739.0).abs() < 0.1);
        let el = KeplerianElements::circular(a, 53.0, 20.0, 33.0, epoch());
        assert!((el.period_s() - oracle).abs() < 1e-9);
        let p0 = propagate(&el, 0.0).unwrap().position_km;
        let p1 = propagate(&el, oracle).unwrap().position_km;
        assert!(norm(&crate::vec3::sub(&p0, &p1)) < 1e-6);
    }

    #[test]
    fn geo_returns_after_sidereal_day() {
        let el = place_geo(-55.0, epoch()).unwrap();
        assert!((el.semi_major_axis_km - EARTH_RADIUS_KM - 35_786.032).abs() < 1e-9);
        let oracle = 2.0 * PI * (GEO_SEMI_MAJOR_AXIS_KM.powi(3) / MU_EARTH).sqrt();
        assert!((oracle - SIDEREAL_DAY_S).abs() < 0.01);
        let p0 = propagate(&el, 0.0).unwrap().position_km;
        let p1 = propagate(&el, oracle).unwrap().position_km;
        assert!(norm(&crate::vec3::sub(&p0, &p1)) < 1e-3);
    }

    #[test]
    fn geo_rejects_out_of_range_longitude() {
        assert!(place_geo(181.0, epoch()).is_err());
    }

    #[test]
    fn eccentric_orbit_radius_bounds() {
        let el = KeplerianElements {
            semi_major_axis_km: 26_560.0,
            eccentricity: 0.7,
            inclination_deg: 63.4,
            raan_deg: 10.0,
            arg_perigee_deg: 270.0,
            arg_latitude_deg: 270.0,
            epoch: epoch(),
        };
        el.validate().unwrap();
        // starts at perigee
        let r0 = norm(&propagate(&el, 0.0).unwrap().position_km);
        assert!((r0 - 26_560.0 * 0.3).abs() < 1e-6);
        let half = propagate(&el, el.period_s() / 2.0).unwrap();
        assert!((norm(&half.position_km) - 26_560.0 * 1.7).abs() < 1e-6);
        for k in 0..50 {
            let r = norm(&propagate(&el, k as f64 * 731.0).unwrap().position_km);
            assert!(r >= 26_560.0 * 0.3 - 1e-6 && r <= 26_560.0 * 1.7 + 1e-6);
        }
    }

    #[test]
    fn kepler_solver_satisfies_equation() {
        for &e in &[0.0, 0.1, 0.5, 0.9, 0.99] {
            for k in 0..36 {
                let m = k as f64 * 10f64.to_radians();
                let ea = solve_kepler(m, e).unwrap();
                assert!((ea - e * ea.sin() - m).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn elements_validation() {
        let mut el = KeplerianElements::circular(6000.0, 53.0, 0.0, 0.0, epoch());
        assert!(el.validate().is_err());
        el.semi_major_axis_km = 7000.0;
        el.validate().unwrap();
        el.inclination_deg = 181.0;
        assert!(el.validate().is_err());
    }
}
