//! Walker-style constellations with fixed or randomised plane phasing, and
//! coverage seen from an observer at a given latitude.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::SphericalPoint;
use crate::montecarlo::{coverage_from_samples, sinr_of, snapshot_from_points, Csi, EmpiricalCoverage};
use crate::rng::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkerShell {
    pub inclination_deg: f64,
    pub num_planes: u32,
    pub sats_per_plane: u32,
    pub altitude_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// Evenly spaced planes and slots with one-slot inter-plane phasing.
    Fixed,
    /// Random RAAN offset and in-plane phase per plane.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkerSpec {
    pub shells: Vec<WalkerShell>,
    pub phase_mode: PhaseMode,
}

impl WalkerSpec {
    pub fn validate(&self) -> Result<()> {
        for s in &self.shells {
            if s.num_planes < 1 || s.sats_per_plane < 1 {
                return Err(Error::param("shells", "plane and satellite counts must be at least 1"));
            }
            if !(0.0..=90.0).contains(&s.inclination_deg) {
                return Err(Error::param("inclination_deg", "must lie in [0°, 90°]"));
            }
            if !(s.altitude_km > 0.0) {
                return Err(Error::param("altitude_km", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn total_satellites(&self) -> usize {
        self.shells
            .iter()
            .map(|s| s.num_planes as usize * s.sats_per_plane as usize)
            .sum()
    }

    /// Shells sharing one altitude whose satellites-per-plane count makes
    /// the total match a Poisson process of `density` on that shell.
    pub fn matched_to_density(
        inclinations_deg: &[f64],
        num_planes: u32,
        altitude_km: f64,
        earth_radius_km: f64,
        density: f64,
        phase_mode: PhaseMode,
    ) -> Self {
        let rs = earth_radius_km + altitude_km;
        let target = 4.0 * PI * rs * rs * density;
        let per_plane = (target / (inclinations_deg.len() as f64 * num_planes as f64)).round().max(1.0) as u32;
        WalkerSpec {
            shells: inclinations_deg
                .iter()
                .map(|&i| WalkerShell {
                    inclination_deg: i,
                    num_planes,
                    sats_per_plane: per_plane,
                    altitude_km,
                })
                .collect(),
            phase_mode,
        }
    }
}

fn orbit_point(raan: f64, incl: f64, arg_lat: f64, radius_km: f64) -> SphericalPoint {
    let (so, co) = raan.sin_cos();
    let (si, ci) = incl.sin_cos();
    let (su, cu) = arg_lat.sin_cos();
    SphericalPoint {
        direction: [co * cu - so * su * ci, so * cu + co * su * ci, su * si],
        radius_km,
    }
}

/// Satellite positions of `spec` at one instant, all at R_E + altitude.
pub fn generate<R: Rng + ?Sized>(spec: &WalkerSpec, earth_radius_km: f64, rng: &mut R) -> Result<Vec<SphericalPoint>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.total_satellites());
    for shell in &spec.shells {
        let radius = earth_radius_km + shell.altitude_km;
        let incl = shell.inclination_deg.to_radians();
        let (p, s) = (shell.num_planes as f64, shell.sats_per_plane as f64);
        for j in 0..shell.num_planes {
            let (raan, phase) = match spec.phase_mode {
                PhaseMode::Fixed => (2.0 * PI * j as f64 / p, 2.0 * PI * j as f64 / (p * s)),
                PhaseMode::Random => (
                    2.0 * PI * (j as f64 + rng.random::<f64>()) / p,
                    2.0 * PI * rng.random::<f64>(),
                ),
            };
            for k in 0..shell.sats_per_plane {
                let u = phase + 2.0 * PI * k as f64 / s;
                out.push(orbit_point(raan, incl, u, radius));
            }
        }
    }
    Ok(out)
}

fn observer_at(lat_deg: f64, cfg: &NetworkConfig) -> SphericalPoint {
    SphericalPoint::from_lat_lon(lat_deg.to_radians(), 0.0, cfg.geometry.earth_radius_km)
}

/// Coverage over a fixed set of satellites; only the fading changes between
/// trials. Service and horizon distances come from `cfg.geometry`.
pub fn coverage_from_points(
    points: &[SphericalPoint],
    observer_lat_deg: f64,
    cfg: &NetworkConfig,
    thresholds_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<EmpiricalCoverage> {
    cfg.validate()?;
    if trials < 1 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let observer = observer_at(observer_lat_deg, cfg);
    let samples = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let snap = snapshot_from_points(points, &observer, cfg, &mut rng)?;
            sinr_of(&snap, cfg, Csi::Perfect)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(coverage_from_samples(&samples, thresholds_db))
}

/// Coverage of a Walker constellation seen from latitude `observer_lat_deg`
/// (longitude 0). In random mode the plane phases are redrawn every trial;
/// in fixed mode the geometry is generated once.
pub fn coverage_at_latitude(
    spec: &WalkerSpec,
    observer_lat_deg: f64,
    cfg: &NetworkConfig,
    thresholds_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<EmpiricalCoverage> {
    spec.validate()?;
    let re = cfg.geometry.earth_radius_km;
    match spec.phase_mode {
        PhaseMode::Fixed => {
            let points = generate(spec, re, &mut trial_rng(seed, u64::MAX))?;
            coverage_from_points(&points, observer_lat_deg, cfg, thresholds_db, trials, seed)
        }
        PhaseMode::Random => {
            cfg.validate()?;
            if trials < 1 {
                return Err(Error::param("trials", "must be at least 1"));
            }
            let observer = observer_at(observer_lat_deg, cfg);
            let samples = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = trial_rng(seed, i as u64);
                    let points = generate(spec, re, &mut rng)?;
                    let snap = snapshot_from_points(&points, &observer, cfg, &mut rng)?;
                    sinr_of(&snap, cfg, Csi::Perfect)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(coverage_from_samples(&samples, thresholds_db))
        }
    }
}
