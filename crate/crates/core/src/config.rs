//! The full network parameter record.

use serde::{Deserialize, Serialize};

use crate::channel::{effective_gain, ChannelConfig, Lobe};
use crate::dbm_to_watts;
use crate::error::{Error, Result};
use crate::geometry::{self, GeometryConfig, EARTH_RADIUS_KM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub geometry: GeometryConfig,
    pub channel: ChannelConfig,
    /// λ_S, SAPs per km².
    pub sap_density: f64,
    /// λ_U, UTs per km².
    pub ut_density: f64,
    /// ρ_d, W.
    pub tx_power_data: f64,
    /// ρ_p, W.
    pub tx_power_pilot: f64,
    /// σ², W.
    pub noise_power: f64,
    /// τ_p, symbols.
    pub pilot_len: u32,
    /// τ_c, symbols.
    pub coherence_len: u32,
}

impl NetworkConfig {
    /// Reference deployment: 500 km shell, 75° dome, 2 GHz, m = 2.
    pub fn reference() -> Self {
        NetworkConfig {
            geometry: GeometryConfig {
                earth_radius_km: EARTH_RADIUS_KM,
                shell_radius_km: EARTH_RADIUS_KM + 500.0,
                dome_angle_rad: 75f64.to_radians(),
            },
            channel: ChannelConfig::default(),
            sap_density: 1e-5,
            ut_density: 3e-6,
            tx_power_data: dbm_to_watts(33.0),
            tx_power_pilot: dbm_to_watts(30.0),
            noise_power: dbm_to_watts(-100.0),
            pilot_len: 200,
            coherence_len: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.channel.validate()?;
        for (name, v) in [("sap_density", self.sap_density), ("ut_density", self.ut_density)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be nonnegative"));
            }
        }
        for (name, v) in [
            ("tx_power_data", self.tx_power_data),
            ("tx_power_pilot", self.tx_power_pilot),
            ("noise_power", self.noise_power),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.pilot_len >= self.coherence_len {
            return Err(Error::param("pilot_len", "must be shorter than coherence_len"));
        }
        Ok(())
    }

    pub fn gain_main(&self) -> f64 {
        effective_gain(Lobe::Main, &self.channel).expect("validated carrier")
    }

    pub fn gain_side(&self) -> f64 {
        effective_gain(Lobe::Side, &self.channel).expect("validated carrier")
    }

    /// |Φ|_avg, the mean number of UTs per SAP service area.
    pub fn avg_users_per_sap(&self) -> f64 {
        geometry::avg_users_per_sap(&self.geometry, self.ut_density)
    }

    /// |Φ|_avg clamped below at one: a serving SAP serves at least the typical UT.
    pub fn power_split(&self) -> f64 {
        self.avg_users_per_sap().max(1.0)
    }
}
