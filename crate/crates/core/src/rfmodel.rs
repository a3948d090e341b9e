//! Link-budget arithmetic and receive antenna patterns.
//!
//! All powers are in dBW and gains in dBi unless a name says otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// `20·log10(4π·1000/c)` with c in m/s, so that path loss can be written
/// with distance in km: `FSPL = 20·log10(d_km) + 20·log10(f_hz) − FSPL_CONSTANT_DB`.
pub const FSPL_CONSTANT_DB: f64 = 87.552_216_78;

/// Default carrier frequency of the victim downlink, Hz.
pub const DEFAULT_FREQUENCY_HZ: f64 = 19.2e9;
pub const DEFAULT_BANDWIDTH_HZ: f64 = 250e6;
pub const DEFAULT_ATMOS_ATTEN_DB: f64 = 0.35;
pub const DEFAULT_SYSTEM_TEMP_K: f64 = 290.0;
pub const DEFAULT_G_MAX_DBI: f64 = 44.0;

/// One constellation's downlink parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub eirp_dbw: f64,
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub atmos_atten_db: f64,
}

impl LinkParams {
    /// Ka-band link at the default frequency, bandwidth and attenuation.
    pub fn ka(eirp_dbw: f64) -> Self {
        Self {
            eirp_dbw,
            frequency_hz: DEFAULT_FREQUENCY_HZ,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            atmos_atten_db: DEFAULT_ATMOS_ATTEN_DB,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eirp_dbw.is_finite() {
            return Err(Error::config("eirp_dbw", "must be finite"));
        }
        if !(self.frequency_hz > 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::config("frequency_hz", "must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        if !(self.atmos_atten_db >= 0.0 && self.atmos_atten_db.is_finite()) {
            return Err(Error::config("atmos_atten_db", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub system_temp_k: f64,
    pub bandwidth_hz: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            system_temp_k: DEFAULT_SYSTEM_TEMP_K,
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.system_temp_k > 0.0 && self.system_temp_k.is_finite()) {
            return Err(Error::config("system_temp_k", "must be positive"));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::config("bandwidth_hz", "must be positive"));
        }
        Ok(())
    }
}

pub fn db_to_watts(dbw: f64) -> f64 {
    10f64.powf(dbw / 10.0)
}

pub fn watts_to_db(watts: f64) -> Result<f64> {
    if !(watts > 0.0) {
        return Err(Error::Domain(format!("cannot express {watts} W in dBW")));
    }
    Ok(10.0 * watts.log10())
}

/// Like [`watts_to_db`] but maps zero power to −∞.
pub(crate) fn watts_to_db_or_floor(watts: f64) -> f64 {
    if watts > 0.0 {
        10.0 * watts.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Free-space path loss in dB for a distance in km and a frequency in Hz.
pub fn fspl_db(distance_km: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_km > 0.0) || !(frequency_hz > 0.0) {
        return Err(Error::Domain(format!(
            "path loss needs positive distance and frequency, got {distance_km} km, {frequency_hz} Hz"
        )));
    }
    Ok(20.0 * distance_km.log10() + 20.0 * frequency_hz.log10() - FSPL_CONSTANT_DB)
}

/// Received power: EIRP plus receive gain minus path and atmospheric loss.
pub fn received_power_dbw(link: &LinkParams, gain_dbi: f64, fspl: f64) -> f64 {
    link.eirp_dbw + gain_dbi - fspl - link.atmos_atten_db
}

/// Thermal noise power `k·T·B` in dBW.
pub fn noise_power_dbw(noise: &NoiseParams) -> f64 {
    10.0 * (BOLTZMANN * noise.system_temp_k * noise.bandwidth_hz).log10()
}

/// Convert an EIRP density in dBW per `reference_hz` to a total EIRP over
/// `bandwidth_hz`.
pub fn eirp_from_density(density_dbw: f64, reference_hz: f64, bandwidth_hz: f64) -> f64 {
    density_dbw + 10.0 * (bandwidth_hz / reference_hz).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// Piecewise earth-station pattern used for Ka-band user terminals.
    Erc,
    /// `32 − 25·log10(φ)` reference envelope bounded by the main beam.
    ItuRef,
    /// Flat gain at `g_max_dbi` in every direction.
    Constant,
}

impl PatternKind {
    pub fn label(&self) -> &'static str {
        match self {
            PatternKind::Erc => "erc",
            PatternKind::ItuRef => "itu",
            PatternKind::Constant => "constant",
        }
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "erc" => Ok(PatternKind::Erc),
            "itu" | "itu_ref" => Ok(PatternKind::ItuRef),
            "constant" => Ok(PatternKind::Constant),
            other => Err(Error::config(
                "antenna.kind",
                format!("unknown pattern {other:?} (expected erc, itu or constant)"),
            )),
        }
    }
}

/// Receive gain as a function of off-boresight angle.
///
/// The dish size is not a free parameter: `D/λ` follows from the peak gain
/// through `20·log10(D/λ) = G_max − 7.7`, and the first sidelobe level `G_1`
/// and the main-lobe edge `φ_m` follow from `D/λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainPattern {
    pub kind: PatternKind,
    pub g_max_dbi: f64,
    pub d_over_lambda: f64,
    pub g1_dbi: f64,
    pub phi_m_deg: f64,
}

impl GainPattern {
    pub fn new(kind: PatternKind, g_max_dbi: f64) -> Result<Self> {
        if !g_max_dbi.is_finite() {
            return Err(Error::config("antenna.g_max_dbi", "must be finite"));
        }
        let d_over_lambda = 10f64.powf((g_max_dbi - 7.7) / 20.0);
        let g1_dbi = 2.0 + 15.0 * d_over_lambda.log10();
        if kind != PatternKind::Constant && !(g_max_dbi > g1_dbi) {
            return Err(Error::config(
                "antenna.g_max_dbi",
                format!("{g_max_dbi} dBi is too small for a dish pattern"),
            ));
        }
        let phi_m_deg = if g_max_dbi > g1_dbi {
            20.0 / d_over_lambda * (g_max_dbi - g1_dbi).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            kind,
            g_max_dbi,
            d_over_lambda,
            g1_dbi,
            phi_m_deg,
        })
    }

    pub fn erc(g_max_dbi: f64) -> Result<Self> {
        Self::new(PatternKind::Erc, g_max_dbi)
    }

    pub fn itu_ref(g_max_dbi: f64) -> Result<Self> {
        Self::new(PatternKind::ItuRef, g_max_dbi)
    }

    pub fn constant(g_max_dbi: f64) -> Result<Self> {
        Self::new(PatternKind::Constant, g_max_dbi)
    }

    /// Start of the sidelobe region, `100·λ/D` degrees.
    pub fn sidelobe_start_deg(&self) -> f64 {
        100.0 / self.d_over_lambda
    }

    fn main_lobe(&self, phi: f64) -> f64 {
        let x = self.d_over_lambda * phi / 20.0;
        self.g_max_dbi - x * x
    }

    /// Gain at `phi_deg` in `[0, 180]`.
    pub fn gain_db(&self, phi_deg: f64) -> Result<f64> {
        if !(0.0..=180.0).contains(&phi_deg) {
            return Err(Error::Domain(format!(
                "off-boresight angle {phi_deg}° is outside [0, 180]"
            )));
        }
        Ok(self.gain_unchecked(phi_deg))
    }

    pub(crate) fn gain_unchecked(&self, phi: f64) -> f64 {
        match self.kind {
            PatternKind::Constant => self.g_max_dbi,
            PatternKind::Erc => {
                if phi < self.phi_m_deg {
                    self.main_lobe(phi)
                } else if phi < self.sidelobe_start_deg() {
                    self.g1_dbi
                } else if phi < 48.0 {
                    // large dishes reach the far-sidelobe level before 48°
                    (52.0 - 10.0 * self.d_over_lambda.log10() - 25.0 * phi.log10()).max(-10.0)
                } else {
                    -10.0
                }
            }
            PatternKind::ItuRef => {
                if phi >= 48.0 {
                    return -10.0;
                }
                if phi == 0.0 {
                    return self.g_max_dbi;
                }
                // envelope capped by the dish's own main lobe and plateau
                let envelope = 32.0 - 25.0 * phi.log10();
                let inner = if phi < self.phi_m_deg {
                    self.main_lobe(phi)
                } else if phi < self.sidelobe_start_deg() {
                    self.g1_dbi
                } else {
                    f64::INFINITY
                };
                envelope.min(inner).max(-10.0)
            }
        }
    }
}
