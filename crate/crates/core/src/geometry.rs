//! Earth rotation, station coordinates and look angles.

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::EciState;
use crate::vec3::{self, Vec3};

/// WGS-84 semi-major axis, km.
pub const WGS84_A_KM: f64 = 6378.137;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

/// Default minimum elevation for a satellite to count as visible, degrees.
pub const DEFAULT_ELEVATION_MASK_DEG: f64 = 15.0;

fn j2000() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2000, 1, 1, 12, 0, 0).unwrap()
}

/// Greenwich Mean Sidereal Time in degrees, `[0, 360)`, from the IAU 1982
/// polynomial with UT1 taken equal to UTC.
pub fn gmst_deg(t: DateTime<Utc>) -> f64 {
    let du = crate::orbit::seconds_between(j2000(), t) / 86_400.0;
    let tc = du / 36_525.0;
    // 876600 h = 3_155_760_000 s per Julian century of UT1 rotation, split
    // out of the polynomial to keep precision.
    let whole_days = du.floor();
    let frac_day_s = (du - whole_days) * 86_400.0;
    let seconds = 67_310.548_41
        + frac_day_s
        + (8_640_184.812_866 * tc + 0.093_104 * tc * tc - 6.2e-6 * tc * tc * tc);
    (seconds / 240.0).rem_euclid(360.0)
}

/// A receiving site on the WGS-84 ellipsoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStation {
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default)]
    pub altitude_m: f64,
}

impl GroundStation {
    pub fn new(
        name: impl Into<String>,
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
    ) -> Self {
        Self {
            name: name.into(),
            latitude_deg,
            longitude_deg,
            altitude_m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latitude_deg.abs() <= 90.0) {
            return Err(Error::config(
                "latitude_deg",
                format!("{} is outside [-90, 90]", self.latitude_deg),
            ));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::config(
                "longitude_deg",
                format!("{} is outside [-180, 180]", self.longitude_deg),
            ));
        }
        if !self.altitude_m.is_finite() {
            return Err(Error::config("altitude_m", "must be finite"));
        }
        Ok(())
    }

    /// Local up unit vector (ellipsoid normal) in ECEF.
    pub fn up(&self) -> Vec3 {
        let (slat, clat) = self.latitude_deg.to_radians().sin_cos();
        let (slon, clon) = self.longitude_deg.to_radians().sin_cos();
        [clat * clon, clat * slon, slat]
    }

    pub fn east(&self) -> Vec3 {
        let (slon, clon) = self.longitude_deg.to_radians().sin_cos();
        [-slon, clon, 0.0]
    }

    pub fn north(&self) -> Vec3 {
        let (slat, clat) = self.latitude_deg.to_radians().sin_cos();
        let (slon, clon) = self.longitude_deg.to_radians().sin_cos();
        [-slat * clon, -slat * slon, clat]
    }
}

/// Geodetic to Earth-fixed Cartesian coordinates, km.
pub fn geodetic_to_ecef(station: &GroundStation) -> Vec3 {
    let e2 = WGS84_F * (2.0 - WGS84_F);
    let (slat, clat) = station.latitude_deg.to_radians().sin_cos();
    let (slon, clon) = station.longitude_deg.to_radians().sin_cos();
    let n = WGS84_A_KM / (1.0 - e2 * slat * slat).sqrt();
    let h = station.altitude_m / 1000.0;
    [
        (n + h) * clat * clon,
        (n + h) * clat * slon,
        (n * (1.0 - e2) + h) * slat,
    ]
}

/// Rotate an inertial position into the Earth-fixed frame.
pub fn eci_to_ecef(state: &EciState) -> Vec3 {
    vec3::rotate_z(&state.position_km, -gmst_deg(state.time).to_radians())
}

/// Look angles from a station to a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Topocentric {
    /// Degrees from true North, clockwise, `[0, 360)`.
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub range_km: f64,
}

/// Azimuth, elevation and range from `station` to an Earth-fixed position.
pub fn topocentric(station: &GroundStation, sat_ecef: &Vec3) -> Result<Topocentric> {
    let los = vec3::sub(sat_ecef, &geodetic_to_ecef(station));
    let range = vec3::norm(&los);
    if !(range > 0.0) {
        return Err(Error::Geometry(format!(
            "target coincides with station {}",
            station.name
        )));
    }
    let e = vec3::dot(&los, &station.east());
    let n = vec3::dot(&los, &station.north());
    let u = vec3::dot(&los, &station.up());
    let elevation = (u / range).clamp(-1.0, 1.0).asin().to_degrees();
    let azimuth = e.atan2(n).to_degrees().rem_euclid(360.0);
    Ok(Topocentric {
        azimuth_deg: azimuth,
        elevation_deg: elevation,
        range_km: range,
    })
}

/// Earth-fixed position reached from `station` along the given look angles.
pub fn look_angles_to_ecef(station: &GroundStation, topo: &Topocentric) -> Vec3 {
    let (saz, caz) = topo.azimuth_deg.to_radians().sin_cos();
    let (sel, cel) = topo.elevation_deg.to_radians().sin_cos();
    let r = topo.range_km;
    let enu = [r * cel * saz, r * cel * caz, r * sel];
    let east = station.east();
    let north = station.north();
    let up = station.up();
    let origin = geodetic_to_ecef(station);
    let mut out = origin;
    for k in 0..3 {
        out[k] += enu[0] * east[k] + enu[1] * north[k] + enu[2] * up[k];
    }
    out
}

/// Angle at the station between the line of sight to the boresight target
/// and the line of sight to another target, degrees in `[0, 180]`.
pub fn off_boresight_angle(
    station: &GroundStation,
    boresight_sat_ecef: &Vec3,
    other_sat_ecef: &Vec3,
) -> Result<f64> {
    let origin = geodetic_to_ecef(station);
    angle_between_los(&origin, boresight_sat_ecef, other_sat_ecef)
}

pub(crate) fn angle_between_los(origin: &Vec3, a: &Vec3, b: &Vec3) -> Result<f64> {
    let la = vec3::sub(a, origin);
    let lb = vec3::sub(b, origin);
    let na = vec3::norm(&la);
    let nb = vec3::norm(&lb);
    if !(na > 0.0 && nb > 0.0) {
        return Err(Error::Geometry("zero-length line of sight".into()));
    }
    Ok(unit_angle_deg(
        &vec3::scale(&la, 1.0 / na),
        &vec3::scale(&lb, 1.0 / nb),
    ))
}

/// Angle between two unit vectors, degrees. Uses the atan2 form so that
/// small angles keep full precision.
pub(crate) fn unit_angle_deg(a: &Vec3, b: &Vec3) -> f64 {
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    vec3::norm(&cross).atan2(vec3::dot(a, b)).to_degrees()
}

/// Strictly above the elevation mask.
pub fn visible(topo: &Topocentric, mask_deg: f64) -> bool {
    topo.elevation_deg > mask_deg
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    fn station(lat: f64, lon: f64) -> GroundStation {
        GroundStation::new("test", lat, lon, 0.0)
    }

    #[test]
    fn gmst_at_j2000() {
        // Independent route: Meeus' degree form of the same polynomial.
        let t = 0.0f64;
        let d = 0.0f64;
        let oracle = 280.460_618_37 + 360.985_647_366_29 * d + 0.000_387_933 * t * t
            - t * t * t / 38_710_000.0;
        assert!((gmst_deg(j2000()) - oracle).abs() < 1e-6);
        assert!((gmst_deg(j2000()) - 280.4606).abs() < 0.001);
    }

    #[test]
    fn gmst_matches_degree_form_away_from_epoch() {
        let t = Utc.with_ymd_and_hms(2021, 6, 1, 7, 30, 0).unwrap();
        let d = crate::orbit::seconds_between(j2000(), t) / 86_400.0;
        let tc = d / 36_525.0;
        let oracle = (280.460_618_37 + 360.985_647_366_29 * d + 0.000_387_933 * tc * tc
            - tc * tc * tc / 38_710_000.0)
            .rem_euclid(360.0);
        assert!(
            (gmst_deg(t) - oracle).abs() < 1e-6,
            "{} vs {}",
            gmst_deg(t),
            oracle
        );
    }

    #[test]
    fn gmst_sidereal_periodicity() {
        let t = Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap();
        let g0 = gmst_deg(t);
        let g1 = gmst_deg(t + Duration::microseconds(86_164_090_500));
        let diff = (g1 - g0 + 180.0).rem_euclid(360.0) - 180.0;
        assert!(diff.abs() < 0.001);
        let half = gmst_deg(t + Duration::microseconds(43_082_045_000));
        let diff = (half - g0 - 180.0 + 180.0).rem_euclid(360.0) - 180.0;
        assert!(diff.abs() < 0.001);
    }

    #[test]
    fn ecef_reference_points() {
        let p = geodetic_to_ecef(&station(0.0, 0.0));
        assert!((p[0] - 6378.137).abs() < 1e-9 && p[1].abs() < 1e-9 && p[2].abs() < 1e-9);
        let p = geodetic_to_ecef(&station(90.0, 37.0));
        assert!(p[0].abs() < 1e-9 && p[1].abs() < 1e-9);
        assert!((p[2] - 6356.7523).abs() < 1e-4);
        let r = vec3::norm(&geodetic_to_ecef(&station(59.3, 18.1)));
        assert!(r > 6356.75 && r < 6378.14);
    }

    #[test]
    fn eci_to_ecef_rotation() {
        let t = Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap();
        let g = gmst_deg(t).to_radians();
        // choose an inertial vector lying on the Greenwich meridian
        let r = 7000.0;
        let state = EciState {
            position_km: [r * g.cos(), r * g.sin(), 0.0],
            time: t,
        };
        let out = eci_to_ecef(&state);
        assert!((out[0] - r).abs() < 1e-9 && out[1].abs() < 1e-9);
        // 90° further east in inertial space ends up at +y
        let quarter = vec3::rotate_z(&[r, 0.0, 0.0], -std::f64::consts::FRAC_PI_2);
        assert!(quarter[0].abs() < 1e-9 && (quarter[1] + r).abs() < 1e-9);
        assert!((vec3::norm(&out) - r).abs() < 1e-9);
    }

    #[test]
    fn zenith_and_horizon() {
        let st = station(30.0, 40.0);
        let up = st.up();
        let origin = geodetic_to_ecef(&st);
        let sat = vec3::add(&origin, &vec3::scale(&up, 550.0));
        let topo = topocentric(&st, &sat).unwrap();
        assert!((topo.elevation_deg - 90.0).abs() < 1e-9);
        assert!((topo.range_km - 550.0).abs() < 0.1);
        let below = vec3::add(
            &origin,
            &vec3::add(&vec3::scale(&st.north(), 1000.0), &vec3::scale(&up, -10.0)),
        );
        let topo = topocentric(&st, &below).unwrap();
        assert!(topo.elevation_deg < 0.0);
        assert!(topo.azimuth_deg.abs() < 1e-6);
        assert!(topocentric(&st, &origin).is_err());
    }

    #[test]
    fn geo_over_equatorial_station() {
        let st = station(0.0, 25.0);
        let (s, c) = 25f64.to_radians().sin_cos();
        let sat = [42_164.169 * c, 42_164.169 * s, 0.0];
        let topo = topocentric(&st, &sat).unwrap();
        assert!((topo.elevation_deg - 90.0).abs() < 1e-6);
        // closed-form slant range for a sub-satellite observer
        assert!((topo.range_km - (42_164.169 - 6378.137)).abs() < 1e-6);
        assert!((topo.range_km - 35_786.0).abs() < 1.0);
    }

    #[test]
    fn off_boresight_cases() {
        let st = station(10.0, 20.0);
        let origin = geodetic_to_ecef(&st);
        let zen = vec3::add(&origin, &vec3::scale(&st.up(), 36_000.0));
        let hor = vec3::add(&origin, &vec3::scale(&st.east(), 2000.0));
        assert_eq!(off_boresight_angle(&st, &zen, &zen).unwrap(), 0.0);
        assert!((off_boresight_angle(&st, &zen, &hor).unwrap() - 90.0).abs() < 1e-9);
        assert_eq!(
            off_boresight_angle(&st, &zen, &hor).unwrap(),
            off_boresight_angle(&st, &hor, &zen).unwrap()
        );
        assert!(off_boresight_angle(&st, &origin, &zen).is_err());
    }

    #[test]
    fn mask_is_strict() {
        let t = |el| Topocentric {
            azimuth_deg: 0.0,
            elevation_deg: el,
            range_km: 1000.0,
        };
        assert!(!visible(&t(15.0), 15.0));
        assert!(visible(&t(90.0), 89.9));
        assert!(!visible(&t(-5.0), DEFAULT_ELEVATION_MASK_DEG));
        assert!(visible(&t(15.000001), 15.0));
    }
}
