//! Built-in constellations and groundstation sets.
//!
//! Where a value is only an approximation of the real system the preset's
//! `provenance` string says so; `presets` on the command line prints it.

use std::path::PathBuf;

use chrono::{DateTime, Utc};

use crate::engine::Constellation;
use crate::error::{Error, Result};
use crate::geometry::GroundStation;
use crate::orbit::{generate_walker, parse_tle_file, place_geo, WalkerSpec};
use crate::rfmodel::LinkParams;

/// Where a constellation's satellites come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstellationSource {
    /// One or more Walker shells, generated in order. `max_satellites`
    /// truncates the generated list.
    Walker {
        shells: Vec<WalkerSpec>,
        max_satellites: Option<usize>,
    },
    TleFile(PathBuf),
    GeoLongitudes(Vec<f64>),
}

impl ConstellationSource {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstellationSource::Walker { .. } => "walker",
            ConstellationSource::TleFile(_) => "tle_file",
            ConstellationSource::GeoLongitudes(_) => "geo_longitudes",
        }
    }

    pub fn build(&self, epoch: DateTime<Utc>) -> Result<Vec<crate::orbit::KeplerianElements>> {
        match self {
            ConstellationSource::Walker {
                shells,
                max_satellites,
            } => {
                let mut out = Vec::new();
                for (i, shell) in shells.iter().enumerate() {
                    out.extend(
                        generate_walker(shell, epoch)
                            .map_err(|e| crate::engine::prefix_key(e, &format!("walker[{i}]")))?,
                    );
                }
                if let Some(max) = *max_satellites {
                    if max > out.len() {
                        return Err(Error::config(
                            "max_satellites",
                            format!("{max} exceeds the {} generated satellites", out.len()),
                        ));
                    }
                    out.truncate(max);
                }
                Ok(out)
            }
            ConstellationSource::TleFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Ok(parse_tle_file(&text)?
                    .into_iter()
                    .map(|t| t.elements)
                    .collect())
            }
            ConstellationSource::GeoLongitudes(lons) => lons
                .iter()
                .map(|&lon| {
                    place_geo(lon, epoch)
                        .map_err(|e| Error::config("geo_longitudes", e.to_string()))
                })
                .collect(),
        }
    }

    pub fn satellite_count(&self) -> Option<usize> {
        match self {
            ConstellationSource::Walker {
                shells,
                max_satellites,
            } => Some(
                max_satellites.unwrap_or_else(|| shells.iter().map(|s| s.total_satellites).sum()),
            ),
            ConstellationSource::TleFile(_) => None,
            ConstellationSource::GeoLongitudes(l) => Some(l.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationPreset {
    pub name: &'static str,
    pub source: ConstellationSource,
    pub link: LinkParams,
    /// EIRP listed in the constellation overview table when it differs from
    /// the derived figure used by default.
    pub alternate_eirp_dbw: Option<f64>,
    pub provenance: &'static str,
}

impl ConstellationPreset {
    pub fn build(&self, epoch: DateTime<Utc>) -> Result<Constellation> {
        Ok(Constellation {
            name: self.name.to_string(),
            link: self.link,
            elements: self.source.build(epoch)?,
        })
    }
}

fn walker(
    total: usize,
    planes: usize,
    phasing: usize,
    inclination: f64,
    altitude: f64,
) -> WalkerSpec {
    WalkerSpec {
        total_satellites: total,
        planes,
        phasing_factor: phasing,
        inclination_deg: inclination,
        altitude_km: altitude,
    }
}

fn shells(list: Vec<WalkerSpec>) -> ConstellationSource {
    ConstellationSource::Walker {
        shells: list,
        max_satellites: None,
    }
}

/// Default victim longitudes, degrees east.
pub const INMARSAT_GX_LONGITUDES: [f64; 5] = [-98.0, -55.0, 25.0, 63.0, 180.0];

pub fn builtin_presets() -> Vec<ConstellationPreset> {
    vec![
        ConstellationPreset {
            name: "inmarsat_gx",
            source: ConstellationSource::GeoLongitudes(INMARSAT_GX_LONGITUDES.to_vec()),
            link: LinkParams::ka(70.0),
            alternate_eirp_dbw: Some(80.0),
            provenance: "EIRP 70 dBW, 19.2 GHz, 250 MHz, 0.35 dB from the published link figures; \
                         five ideal geostationary slots at -98, -55, 25, 63, 180 E are an approximation \
                         of the real fleet",
        },
        ConstellationPreset {
            name: "dove",
            source: shells(vec![walker(150, 3, 1, 97.5, 530.0)]),
            link: LinkParams::ka(8.2),
            alternate_eirp_dbw: Some(15.0),
            provenance: "150 satellites at 530 km and EIRP 8.2 dBW are published figures; \
                         3 sun-synchronous planes at 97.5 deg are an approximation",
        },
        ConstellationPreset {
            name: "cubesat_walker",
            source: shells(vec![walker(396, 11, 1, 53.0, 550.0)]),
            link: LinkParams::ka(6.0),
            alternate_eirp_dbw: None,
            provenance: "396 = 11 x 36 at 550 km, EIRP 6 dBW (1 W into a 6 dBi patch); \
                         inclination 53 deg and phasing 1 are assumed",
        },
        ConstellationPreset {
            name: "starlink_first_group",
            source: shells(vec![walker(1584, 72, 1, 53.2, 550.0)]),
            link: LinkParams::ka(39.68),
            alternate_eirp_dbw: Some(45.0),
            provenance: "1584 = 72 x 22 at 550 km, 53.2 deg, EIRP 39.68 dBW as derived from the \
                         filed EIRP density; phasing 1 is assumed",
        },
        ConstellationPreset {
            name: "starlink_phase1",
            source: shells(vec![
                walker(1584, 72, 1, 53.0, 550.0),
                walker(1584, 72, 1, 53.2, 540.0),
                walker(720, 36, 1, 70.0, 570.0),
                walker(348, 6, 1, 97.6, 560.0),
                walker(172, 4, 1, 97.6, 560.0),
            ]),
            link: LinkParams::ka(39.68),
            alternate_eirp_dbw: Some(45.0),
            provenance: "4408 satellites at EIRP 39.68 dBW; the five-shell split \
                         (550/53, 540/53.2, 570/70, 560/97.6 x2) follows public filings and is an approximation",
        },
        ConstellationPreset {
            name: "oneweb_phase1",
            source: ConstellationSource::Walker {
                shells: vec![walker(720, 36, 1, 87.9, 1200.0)],
                max_satellites: Some(716),
            },
            link: LinkParams::ka(45.26),
            alternate_eirp_dbw: Some(51.0),
            provenance: "716 satellites at 1200 km, EIRP 45.26 dBW; generated as a polar \
                         36 x 20 Walker shell at 87.9 deg with the last 4 slots left empty (approximation)",
        },
        ConstellationPreset {
            name: "oneweb_phase2",
            source: shells(vec![walker(6372, 36, 1, 87.9, 1200.0)]),
            link: LinkParams::ka(45.26),
            alternate_eirp_dbw: Some(51.0),
            provenance: "6372 satellites at 1200 km, EIRP 45.26 dBW; single polar shell of \
                         36 planes x 177 at 87.9 deg is an approximation",
        },
    ]
}

pub fn preset(name: &str) -> Option<ConstellationPreset> {
    builtin_presets().into_iter().find(|p| p.name == name)
}

pub const STATION_PRESETS: [&str; 1] = ["aws10"];

/// Ten AWS Ground Station sites. Dublin, Stockholm, Honolulu and Manama
/// latitudes are the anchored ones; the other sites use approximate city
/// coordinates.
pub fn aws10() -> Vec<GroundStation> {
    [
        ("Salem_Oregon", 44.94, -123.03),
        ("Columbus_Ohio", 39.96, -83.00),
        ("Dublin_Ireland", 53.3, -6.26),
        ("Stockholm_Sweden", 59.3, 18.07),
        ("Manama_Bahrain", 26.2, 50.59),
        ("Honolulu_Hawaii", 21.3, -157.86),
        ("Sydney_Australia", -33.87, 151.21),
        ("CapeTown_SouthAfrica", -33.92, 18.42),
        ("Seoul_SouthKorea", 37.57, 126.98),
        ("PuntaArenas_Chile", -53.16, -70.91),
    ]
    .into_iter()
    .map(|(name, lat, lon)| GroundStation::new(name, lat, lon, 0.0))
    .collect()
}

pub fn station_preset(name: &str) -> Option<Vec<GroundStation>> {
    match name {
        "aws10" => Some(aws10()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn epoch() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn preset_counts_and_eirps() {
        let expect = [
            ("inmarsat_gx", 5, 70.0),
            ("dove", 150, 8.2),
            ("cubesat_walker", 396, 6.0),
            ("starlink_first_group", 1584, 39.68),
            ("starlink_phase1", 4408, 39.68),
            ("oneweb_phase1", 716, 45.26),
            ("oneweb_phase2", 6372, 45.26),
        ];
        let all = builtin_presets();
        assert_eq!(all.len(), expect.len());
        for (name, count, eirp) in expect {
            let p = preset(name).unwrap();
            assert_eq!(p.link.eirp_dbw, eirp, "{name}");
            assert_eq!(p.source.satellite_count(), Some(count), "{name}");
            let c = p.build(epoch()).unwrap();
            assert_eq!(c.elements.len(), count, "{name}");
            assert!(!p.provenance.is_empty());
        }
    }

    #[test]
    fn ka_link_defaults() {
        let p = preset("inmarsat_gx").unwrap();
        assert_eq!(p.link.frequency_hz, 19.2e9);
        assert_eq!(p.link.bandwidth_hz, 250e6);
        assert_eq!(p.link.atmos_atten_db, 0.35);
    }

    #[test]
    fn oneweb_altitude() {
        let c = preset("oneweb_phase1").unwrap().build(epoch()).unwrap();
        assert!(c
            .elements
            .iter()
            .all(|e| (e.semi_major_axis_km - 7578.137).abs() < 1e-9));
    }

    #[test]
    fn aws10_anchor_latitudes() {
        let st = aws10();
        assert_eq!(st.len(), 10);
        let lat = |n: &str| {
            st.iter()
                .find(|s| s.name.starts_with(n))
                .unwrap()
                .latitude_deg
        };
        assert_eq!(lat("Dublin"), 53.3);
        assert_eq!(lat("Stockholm"), 59.3);
        assert_eq!(lat("Honolulu"), 21.3);
        assert_eq!(lat("Manama"), 26.2);
        for s in &st {
            s.validate().unwrap();
        }
    }

    #[test]
    fn truncation_beyond_generated_is_rejected() {
        let src = ConstellationSource::Walker {
            shells: vec![walker(4, 2, 0, 50.0, 500.0)],
            max_satellites: Some(5),
        };
        assert!(src.build(epoch()).is_err());
    }
}
