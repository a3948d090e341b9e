//! Scenario loading, built-in presets and result emission.

pub mod emit;
pub mod presets;
pub mod scenario;

pub use emit::{emit_results, verify_manifest, Manifest, ResultBundle};
pub use presets::{builtin_presets, preset, station_preset, ConstellationPreset};
pub use scenario::{load_scenario, parse_scenario, scenario_to_toml, ScenarioConfig};
