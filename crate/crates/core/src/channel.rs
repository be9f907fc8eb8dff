//! Path loss, two-level antenna gain and Nakagami-m small-scale fading.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::db_to_linear;
use crate::error::{Error, Result};
use crate::specfun::ln_gamma_pos;

/// Speed of light in km/s, so that the free-space factor is in the same
/// length unit as the distances it multiplies.
pub const SPEED_OF_LIGHT_KM_S: f64 = 299_792.458;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// α
    pub path_loss_exponent: f64,
    /// β₀, linear loss at 1 km.
    pub reference_loss: f64,
    pub carrier_hz: f64,
    pub tx_gain_mainlobe_db: f64,
    pub tx_gain_sidelobe_db: f64,
    pub rx_gain_db: f64,
    pub nakagami_m: f64,
    /// Ω = E|h|²
    pub omega: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            path_loss_exponent: 2.0,
            reference_loss: 1.0,
            carrier_hz: 2e9,
            tx_gain_mainlobe_db: 30.0,
            tx_gain_sidelobe_db: 20.0,
            rx_gain_db: 0.0,
            nakagami_m: 2.0,
            omega: 1.0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent >= 0.0) || !self.path_loss_exponent.is_finite() {
            return Err(Error::param("path_loss_exponent", "must be nonnegative"));
        }
        if !(self.reference_loss > 0.0) || !self.reference_loss.is_finite() {
            return Err(Error::param("reference_loss", "must be positive"));
        }
        if !(self.carrier_hz > 0.0) || !self.carrier_hz.is_finite() {
            return Err(Error::param("carrier_hz", "must be positive"));
        }
        for (name, v) in [
            ("tx_gain_mainlobe_db", self.tx_gain_mainlobe_db),
            ("tx_gain_sidelobe_db", self.tx_gain_sidelobe_db),
            ("rx_gain_db", self.rx_gain_db),
        ] {
            // -inf dB is a legal way to switch a lobe off.
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::param(name, "must be a finite dB value or -inf"));
            }
        }
        if !(self.nakagami_m >= 0.5) || !self.nakagami_m.is_finite() {
            return Err(Error::param("nakagami_m", "must be at least 0.5"));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::param("omega", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lobe {
    Main,
    Side,
}

/// β = β₀ d^(-α).
pub fn path_loss(d_km: f64, c: &ChannelConfig) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(Error::param("d_km", format!("{d_km} must be positive")));
    }
    Ok(path_loss_unchecked(d_km, c))
}

#[inline]
pub(crate) fn path_loss_unchecked(d_km: f64, c: &ChannelConfig) -> f64 {
    if c.path_loss_exponent == 2.0 {
        c.reference_loss / (d_km * d_km)
    } else {
        c.reference_loss * d_km.powf(-c.path_loss_exponent)
    }
}

/// G = G_t G_r (c / 4π f_c)².
pub fn effective_gain(lobe: Lobe, c: &ChannelConfig) -> Result<f64> {
    if !(c.carrier_hz > 0.0) {
        return Err(Error::param("carrier_hz", "must be positive"));
    }
    let gt_db = match lobe {
        Lobe::Main => c.tx_gain_mainlobe_db,
        Lobe::Side => c.tx_gain_sidelobe_db,
    };
    let wavelength_factor = SPEED_OF_LIGHT_KM_S / (4.0 * PI * c.carrier_hz);
    Ok(db_to_linear(gt_db + c.rx_gain_db) * wavelength_factor * wavelength_factor)
}

/// Nakagami-m parameter matching a Rician K-factor.
pub fn rician_k_to_m(k: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::param("k", "must be nonnegative"));
    }
    Ok((k + 1.0) * (k + 1.0) / (2.0 * k + 1.0))
}

/// Density of the Nakagami-m amplitude at x.
pub fn nakagami_pdf(x: f64, m: f64, omega: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln = LN_2 + m * (m / omega).ln() - ln_gamma_pos(m) + (2.0 * m - 1.0) * x.ln() - m * x * x / omega;
    ln.exp()
}

const LN_2: f64 = std::f64::consts::LN_2;

/// Amplitude sampler: |h| = √g with g ~ Gamma(m, Ω/m).
#[derive(Debug, Clone, Copy)]
pub struct NakagamiSampler {
    gamma: Gamma<f64>,
}

impl NakagamiSampler {
    pub fn new(c: &ChannelConfig) -> Result<Self> {
        if !(c.nakagami_m >= 0.5) {
            return Err(Error::param("nakagami_m", "must be at least 0.5"));
        }
        let gamma = Gamma::new(c.nakagami_m, c.omega / c.nakagami_m)
            .map_err(|e| Error::param("omega", e.to_string()))?;
        Ok(NakagamiSampler { gamma })
    }

    #[inline]
    pub fn amplitude<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gamma.sample(rng).sqrt()
    }

    /// |h|².
    #[inline]
    pub fn power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gamma.sample(rng)
    }
}

pub fn sample_nakagami_amplitude<R: Rng + ?Sized>(c: &ChannelConfig, rng: &mut R) -> Result<f64> {
    Ok(NakagamiSampler::new(c)?.amplitude(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn path_loss_values() {
        let mut c = ChannelConfig::default();
        assert_eq!(path_loss(1.0, &c).unwrap(), 1.0);
        assert!((path_loss(10.0, &c).unwrap() - 0.01).abs() < 1e-18);
        c.path_loss_exponent = 2.5;
        c.reference_loss = 3.0;
        let via_log = (3f64.ln() - 2.5 * 500f64.ln()).exp();
        assert!((path_loss(500.0, &c).unwrap() - via_log).abs() <= 1e-12 * via_log);
        assert!(path_loss(0.0, &c).is_err());
    }

    #[test]
    fn gain_values() {
        let mut c = ChannelConfig {
            tx_gain_mainlobe_db: 0.0,
            ..Default::default()
        };
        let g0 = effective_gain(Lobe::Main, &c).unwrap();
        // (c/4πf)² with c in metres is 1.425e-4; kilometres scale it by 1e-6.
        let metres = (299_792_458.0 / (4.0 * PI * 2e9)).powi(2);
        assert!((metres - 1.425e-4).abs() < 1e-6);
        assert!((g0 - metres * 1e-6).abs() <= 1e-12 * g0);
        c.tx_gain_mainlobe_db = 30.0;
        let gm = effective_gain(Lobe::Main, &c).unwrap();
        assert!((gm / g0 - 1000.0).abs() < 1e-9);
        let gs = effective_gain(Lobe::Side, &c).unwrap();
        assert!((gm / gs - 10.0).abs() < 1e-12);
        c.carrier_hz = 0.0;
        assert!(effective_gain(Lobe::Main, &c).is_err());
    }

    #[test]
    fn gain_depends_only_on_total_db() {
        let a = ChannelConfig {
            tx_gain_mainlobe_db: 25.0,
            rx_gain_db: 5.0,
            ..Default::default()
        };
        let b = ChannelConfig {
            tx_gain_mainlobe_db: 5.0,
            rx_gain_db: 25.0,
            ..Default::default()
        };
        let (ga, gb) = (effective_gain(Lobe::Main, &a).unwrap(), effective_gain(Lobe::Main, &b).unwrap());
        assert!((ga - gb).abs() <= 1e-14 * ga);
    }

    #[test]
    fn rician_mapping() {
        assert_eq!(rician_k_to_m(0.0).unwrap(), 1.0);
        assert!((rician_k_to_m(1.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        let k = 1e6;
        let m = rician_k_to_m(k).unwrap();
        assert!((m - (k / 2.0 + 0.75)).abs() <= 1e-4 * m);
        assert!(rician_k_to_m(-0.1).is_err());
    }

    #[test]
    fn pdf_integrates_to_one() {
        for &m in &[0.5, 1.0, 2.0, 4.0] {
            let r = crate::quadrature::integrate(|x| nakagami_pdf(x, m, 1.0), 0.0, 10.0, &Default::default())
                .unwrap();
            assert!((r.value - 1.0).abs() < 1e-8, "m={m}: {}", r.value);
        }
    }

    #[test]
    fn second_moment_is_omega() {
        let c = ChannelConfig::default();
        let s = NakagamiSampler::new(&c).unwrap();
        let mut rng = trial_rng(11, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.power(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.005, "{mean}");
    }
}
