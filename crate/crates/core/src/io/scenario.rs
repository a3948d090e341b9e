//! Scenario files: TOML with top-level run settings and one table per
//! constellation role.
//!
//! ```toml
//! start = "2021-06-01T00:00:00Z"
//! station_preset = "aws10"
//!
//! [victim]
//! preset = "inmarsat_gx"
//!
//! [attacker]
//! preset = "starlink_first_group"
//! eirp_dbw = 39.68
//! ```

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::presets::{self, ConstellationSource};
use crate::analysis::{default_gnss, JammingAverage};
use crate::engine::{prefix_key, AntennaSpec, Combiner, Constellation, Scenario};
use crate::error::{Error, Result};
use crate::geometry::{GroundStation, DEFAULT_ELEVATION_MASK_DEG};
use crate::orbit::{KeplerianElements, WalkerSpec};
use crate::rfmodel::{
    GainPattern, LinkParams, NoiseParams, PatternKind, DEFAULT_ATMOS_ATTEN_DB,
    DEFAULT_BANDWIDTH_HZ, DEFAULT_FREQUENCY_HZ, DEFAULT_G_MAX_DBI,
};

pub const DEFAULT_DURATION_S: f64 = 86_400.0;
pub const DEFAULT_STEP_S: f64 = 10.0;
pub const DEFAULT_JAM_THRESHOLD_DB: f64 = 10.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tle_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geo_longitudes: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_satellites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eirp_dbw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atmos_atten_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub walker: Option<Vec<WalkerSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<KeplerianElements>>,
}

/// Scenario file contents before preset expansion. Every key is optional
/// here so that all missing required keys can be reported at once.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<DateTime<Utc>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elevation_mask_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jam_threshold_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combiner: Option<Combiner>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jamming_average: Option<JammingAverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub station_preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stations: Option<Vec<GroundStation>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antenna: Option<AntennaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub victim: Option<ConstellationConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attacker: Option<ConstellationConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gnss: Option<ConstellationConfig>,
}

fn resolve_constellation(
    cfg: &ConstellationConfig,
    role: &str,
    epoch: DateTime<Utc>,
    base_dir: &Path,
) -> Result<Constellation> {
    let given: Vec<&str> = [
        ("preset", cfg.preset.is_some()),
        ("walker", cfg.walker.is_some()),
        ("tle_file", cfg.tle_file.is_some()),
        ("geo_longitudes", cfg.geo_longitudes.is_some()),
        ("elements", cfg.elements.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, set)| set.then_some(k))
    .collect();
    if given.len() != 1 {
        return Err(Error::config(
            role,
            format!(
                "exactly one of preset, walker, tle_file, geo_longitudes, elements is required (found {})",
                if given.is_empty() { "none".to_string() } else { given.join(", ") }
            ),
        ));
    }
    if cfg.max_satellites.is_some() && cfg.walker.is_none() {
        return Err(Error::config(
            format!("{role}.max_satellites"),
            "only applies to walker shells",
        ));
    }

    let (name, base_link, elements) = if let Some(preset_name) = &cfg.preset {
        let p = presets::preset(preset_name).ok_or_else(|| {
            Error::config(
                format!("{role}.preset"),
                format!("unknown preset {preset_name:?}"),
            )
        })?;
        let c = p.build(epoch).map_err(|e| prefix_key(e, role))?;
        (c.name, Some(c.link), c.elements)
    } else {
        let elements = if let Some(elements) = &cfg.elements {
            elements.clone()
        } else {
            let source = if let Some(shells) = &cfg.walker {
                for (i, shell) in shells.iter().enumerate() {
                    shell
                        .validate()
                        .map_err(|e| prefix_key(e, &format!("{role}.walker[{i}]")))?;
                }
                ConstellationSource::Walker {
                    shells: shells.clone(),
                    max_satellites: cfg.max_satellites,
                }
            } else if let Some(path) = &cfg.tle_file {
                ConstellationSource::TleFile(base_dir.join(path))
            } else {
                ConstellationSource::GeoLongitudes(cfg.geo_longitudes.clone().unwrap_or_default())
            };
            source.build(epoch).map_err(|e| prefix_key(e, role))?
        };
        (role.to_string(), None, elements)
    };

    let eirp_dbw = match (cfg.eirp_dbw, base_link) {
        (Some(e), _) => e,
        (None, Some(l)) => l.eirp_dbw,
        (None, None) => {
            return Err(Error::config(
                format!("{role}.eirp_dbw"),
                "required when no preset is given",
            ))
        }
    };
    let link = LinkParams {
        eirp_dbw,
        frequency_hz: cfg
            .frequency_hz
            .or(base_link.map(|l| l.frequency_hz))
            .unwrap_or(DEFAULT_FREQUENCY_HZ),
        bandwidth_hz: cfg
            .bandwidth_hz
            .or(base_link.map(|l| l.bandwidth_hz))
            .unwrap_or(DEFAULT_BANDWIDTH_HZ),
        atmos_atten_db: cfg
            .atmos_atten_db
            .or(base_link.map(|l| l.atmos_atten_db))
            .unwrap_or(DEFAULT_ATMOS_ATTEN_DB),
    };
    link.validate().map_err(|e| prefix_key(e, role))?;
    for (i, el) in elements.iter().enumerate() {
        el.validate()
            .map_err(|e| prefix_key(e, &format!("{role}.elements[{i}]")))?;
    }
    Ok(Constellation {
        name: cfg.name.clone().unwrap_or(name),
        link,
        elements,
    })
}

impl ScenarioConfig {
    /// Expand presets and defaults into a validated scenario. Relative TLE
    /// paths are resolved against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Scenario> {
        let mut missing = Vec::new();
        if self.start.is_none() {
            missing.push("start");
        }
        if self.victim.is_none() {
            missing.push("victim");
        }
        if self.attacker.is_none() {
            missing.push("attacker");
        }
        if self.station_preset.is_none() && self.stations.is_none() {
            missing.push("station_preset or stations");
        }
        if !missing.is_empty() {
            return Err(Error::config(
                missing.join(", "),
                format!("missing required keys: {}", missing.join(", ")),
            ));
        }
        let start = self.start.expect("checked above");

        let mut stations = Vec::new();
        if let Some(name) = &self.station_preset {
            stations.extend(presets::station_preset(name).ok_or_else(|| {
                Error::config("station_preset", format!("unknown station preset {name:?}"))
            })?);
        }
        stations.extend(self.stations.iter().flatten().cloned());

        let antenna = self.antenna.unwrap_or(AntennaSpec {
            kind: PatternKind::Erc,
            g_max_dbi: DEFAULT_G_MAX_DBI,
        });
        let pattern = GainPattern::try_from(antenna)?;

        let victim = resolve_constellation(
            self.victim.as_ref().expect("checked"),
            "victim",
            start,
            base_dir,
        )?;
        let attacker = resolve_constellation(
            self.attacker.as_ref().expect("checked"),
            "attacker",
            start,
            base_dir,
        )?;
        let gnss = self
            .gnss
            .as_ref()
            .map(|g| resolve_constellation(g, "gnss", start, base_dir))
            .transpose()?;

        let scenario = Scenario {
            victim,
            attacker,
            stations,
            pattern,
            noise: self.noise.unwrap_or_default(),
            start,
            duration_s: self.duration_s.unwrap_or(DEFAULT_DURATION_S),
            step_s: self.step_s.unwrap_or(DEFAULT_STEP_S),
            elevation_mask_deg: self
                .elevation_mask_deg
                .unwrap_or(DEFAULT_ELEVATION_MASK_DEG),
            jam_threshold_db: self.jam_threshold_db.unwrap_or(DEFAULT_JAM_THRESHOLD_DB),
            combiner: self.combiner.unwrap_or_default(),
            jamming_average: self.jamming_average.unwrap_or_default(),
            gnss,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Fully explicit config reproducing `scenario` without presets.
    pub fn from_scenario(scenario: &Scenario) -> Self {
        let explicit = |c: &Constellation| ConstellationConfig {
            name: Some(c.name.clone()),
            eirp_dbw: Some(c.link.eirp_dbw),
            frequency_hz: Some(c.link.frequency_hz),
            bandwidth_hz: Some(c.link.bandwidth_hz),
            atmos_atten_db: Some(c.link.atmos_atten_db),
            elements: Some(c.elements.clone()),
            ..Default::default()
        };
        ScenarioConfig {
            start: Some(scenario.start),
            duration_s: Some(scenario.duration_s),
            step_s: Some(scenario.step_s),
            elevation_mask_deg: Some(scenario.elevation_mask_deg),
            jam_threshold_db: Some(scenario.jam_threshold_db),
            combiner: Some(scenario.combiner),
            jamming_average: Some(scenario.jamming_average),
            station_preset: None,
            stations: Some(scenario.stations.clone()),
            antenna: Some(scenario.pattern.into()),
            noise: Some(scenario.noise),
            victim: Some(explicit(&scenario.victim)),
            attacker: Some(explicit(&scenario.attacker)),
            gnss: scenario.gnss.as_ref().map(explicit),
        }
    }
}

/// Parse scenario text. `base_dir` anchors relative file references.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let key = e
            .span()
            .map(|span| locate_key(text, span.start))
            .unwrap_or_else(|| "<root>".to_string());
        Error::config(key, message)
    })?;
    cfg.resolve(base_dir)
}

/// Best-effort `table.key` path for a byte offset, from the nearest
/// preceding table header and the key on that line.
fn locate_key(text: &str, offset: usize) -> String {
    let before = &text[..offset.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[line_start..]
        .find('\n')
        .map_or(text.len(), |i| line_start + i);
    let line = &text[line_start..line_end];
    let key = line.split('=').next().unwrap_or("").trim();
    let table = before[..line_start].lines().rev().find_map(|l| {
        let l = l.trim();
        l.starts_with('[')
            .then(|| l.trim_matches(|c| c == '[' || c == ']').to_string())
    });
    match (table, key.starts_with('[')) {
        (_, true) => key.trim_matches(|c| c == '[' || c == ']').to_string(),
        (Some(t), false) if !key.is_empty() => format!("{t}.{key}"),
        (None, false) if !key.is_empty() => key.to_string(),
        (Some(t), _) => t,
        (None, _) => "<root>".to_string(),
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, base)
}

/// Serialize a resolved scenario so that [`parse_scenario`] restores it.
pub fn scenario_to_toml(scenario: &Scenario) -> Result<String> {
    toml::to_string(&ScenarioConfig::from_scenario(scenario))
        .map_err(|e| Error::Consistency(format!("cannot serialize scenario: {e}")))
}

/// Default GNSS reference when the scenario does not configure one.
pub fn gnss_or_default(scenario: &Scenario) -> Result<Constellation> {
    match &scenario.gnss {
        Some(g) => Ok(g.clone()),
        None => default_gnss(scenario.start),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
start = "2021-06-01T00:00:00Z"
station_preset = "aws10"
duration_s = 3600
step_s = 60

[victim]
preset = "inmarsat_gx"

[attacker]
preset = "starlink_first_group"
"#;

    fn parse(text: &str) -> Result<Scenario> {
        parse_scenario(text, Path::new("."))
    }

    #[test]
    fn preset_expansion() {
        let s = parse(BASIC).unwrap();
        assert_eq!(s.attacker.elements.len(), 1584);
        assert_eq!(s.attacker.link.eirp_dbw, 39.68);
        assert_eq!(s.victim.elements.len(), 5);
        assert_eq!(s.stations.len(), 10);
        assert_eq!(s.n_steps(), 60);
        assert_eq!(s.pattern.kind, PatternKind::Erc);
        assert_eq!(s.elevation_mask_deg, 15.0);
        assert_eq!(s.jam_threshold_db, 10.0);
    }

    #[test]
    fn oneweb_preset_expansion() {
        let text = BASIC.replace("starlink_first_group", "oneweb_phase1");
        let s = parse(&text).unwrap();
        assert_eq!(s.attacker.link.eirp_dbw, 45.26);
        assert!((s.attacker.elements[0].semi_major_axis_km - 6378.137 - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn empty_file_lists_every_missing_key() {
        match parse("") {
            Err(Error::Config { message, .. }) => {
                for k in ["start", "victim", "attacker", "stations"] {
                    assert!(message.contains(k), "{message}");
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let text = format!("{BASIC}\nfoo = 1\n");
        match parse(&text) {
            Err(Error::Config { key, message }) => {
                assert!(message.contains("foo"), "{message}");
                assert_eq!(key, "attacker.foo");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_preset_rejected() {
        let text = BASIC.replace("starlink_first_group", "iridium");
        match parse(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "attacker.preset"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_violations_rejected() {
        let text = format!("{BASIC}frequency_hz = -5.0\n");
        match parse(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "attacker.frequency_hz"),
            other => panic!("unexpected {other:?}"),
        }
        let text = BASIC.replace("step_s = 60", "step_s = 0");
        assert!(matches!(parse(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn conflicting_sources_rejected() {
        let text = format!("{BASIC}geo_longitudes = [0.0]\n");
        assert!(matches!(parse(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn custom_walker_and_stations() {
        let text = r#"
start = "2021-06-01T00:00:00Z"

[[stations]]
name = "here"
latitude_deg = 10.0
longitude_deg = 20.0

[victim]
geo_longitudes = [20.0]
eirp_dbw = 70.0

[attacker]
name = "tiny"
eirp_dbw = 10.0

[[attacker.walker]]
total_satellites = 4
planes = 2
phasing_factor = 1
inclination_deg = 45.0
altitude_km = 600.0

[antenna]
kind = "itu_ref"
g_max_dbi = 40.0
"#;
        let s = parse(text).unwrap();
        assert_eq!(s.attacker.name, "tiny");
        assert_eq!(s.attacker.elements.len(), 4);
        assert_eq!(s.stations.len(), 1);
        assert_eq!(s.pattern.kind, PatternKind::ItuRef);
        assert_eq!(s.attacker.link.frequency_hz, DEFAULT_FREQUENCY_HZ);
    }

    #[test]
    fn bad_walker_shell_is_located() {
        let text = BASIC.replace(
            "preset = \"starlink_first_group\"",
            "eirp_dbw = 10.0\n\n[[attacker.walker]]\ntotal_satellites = 5\nplanes = 2\nphasing_factor = 1\ninclination_deg = 45.0\naltitude_km = 600.0",
        );
        match parse(&text) {
            Err(Error::Config { key, .. }) => assert!(key.starts_with("attacker.walker[0]"), "{key}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_eirp_for_custom_constellation() {
        let text = BASIC.replace(
            "preset = \"starlink_first_group\"",
            "geo_longitudes = [0.0]",
        );
        match parse(&text) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "attacker.eirp_dbw"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serialized_scenario_round_trips() {
        let mut s = parse(BASIC).unwrap();
        s.gnss = Some(default_gnss(s.start).unwrap());
        s.attacker.elements.truncate(30);
        let text = scenario_to_toml(&s).unwrap();
        let back = parse(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.fingerprint(), s.fingerprint());
    }
}
