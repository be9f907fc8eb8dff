//! Concentric-sphere geometry: Poisson sampling on spheres and the distance
//! and visibility statistics seen from a typical UT at the north pole.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used throughout, km.
pub const EARTH_RADIUS_KM: f64 = 6371.393;

/// Slack for range checks on distances that are computed from the same
/// radii by different formulas, km.
const RANGE_SLACK_KM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub earth_radius_km: f64,
    pub shell_radius_km: f64,
    /// Dome angle η measured from the local zenith.
    pub dome_angle_rad: f64,
}

impl GeometryConfig {
    pub fn new(earth_radius_km: f64, shell_radius_km: f64, dome_angle_rad: f64) -> Result<Self> {
        let g = GeometryConfig {
            earth_radius_km,
            shell_radius_km,
            dome_angle_rad,
        };
        g.validate()?;
        Ok(g)
    }

    /// Shell at `altitude_km` above the standard Earth radius.
    pub fn with_altitude(altitude_km: f64, dome_angle_deg: f64) -> Result<Self> {
        Self::new(
            EARTH_RADIUS_KM,
            EARTH_RADIUS_KM + altitude_km,
            dome_angle_deg.to_radians(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.earth_radius_km > 0.0) || !self.earth_radius_km.is_finite() {
            return Err(Error::param("earth_radius_km", "must be positive"));
        }
        if !(self.shell_radius_km > self.earth_radius_km) || !self.shell_radius_km.is_finite() {
            return Err(Error::param("shell_radius_km", "must exceed the Earth radius"));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.dome_angle_rad) {
            return Err(Error::param("dome_angle", "must lie in [0°, 90°]"));
        }
        Ok(())
    }

    pub fn altitude_km(&self) -> f64 {
        self.shell_radius_km - self.earth_radius_km
    }
}

/// A point on a sphere centred at the Earth's centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    pub direction: [f64; 3],
    pub radius_km: f64,
}

impl SphericalPoint {
    /// Normalises `direction`; panics on a zero vector.
    pub fn new(direction: [f64; 3], radius_km: f64) -> Self {
        let n = norm(direction);
        assert!(n > 0.0, "direction must be nonzero");
        SphericalPoint {
            direction: [direction[0] / n, direction[1] / n, direction[2] / n],
            radius_km,
        }
    }

    pub fn from_lat_lon(lat_rad: f64, lon_rad: f64, radius_km: f64) -> Self {
        let (sl, cl) = lat_rad.sin_cos();
        let (so, co) = lon_rad.sin_cos();
        SphericalPoint {
            direction: [cl * co, cl * so, sl],
            radius_km,
        }
    }

    pub fn position(&self) -> [f64; 3] {
        let r = self.radius_km;
        [self.direction[0] * r, self.direction[1] * r, self.direction[2] * r]
    }

    pub fn latitude_rad(&self) -> f64 {
        self.direction[2].clamp(-1.0, 1.0).asin()
    }

    pub fn longitude_rad(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }

    pub fn distance_to(&self, other: &SphericalPoint) -> f64 {
        // Law of cosines is accurate here: the radii differ by hundreds of km.
        let c = dot(self.direction, other.direction);
        let (a, b) = (self.radius_km, other.radius_km);
        (a * a + b * b - 2.0 * a * b * c).max(0.0).sqrt()
    }

    /// Height of `other` above the tangent plane at `self`.
    pub fn height_of(&self, other: &SphericalPoint) -> f64 {
        other.radius_km * dot(self.direction, other.direction) - self.radius_km
    }
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBounds {
    pub r_s_min_km: f64,
    pub r_s_max_km: f64,
    pub r_max_km: f64,
}

/// Uniform direction: cos(colatitude) uniform on [lo, 1], longitude uniform.
fn direction_in_cap<R: Rng + ?Sized>(cos_lo: f64, rng: &mut R) -> [f64; 3] {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let z = 1.0 - (1.0 - cos_lo) * u;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = (2.0 * PI * v).sin_cos();
    [rho * c, rho * s, z]
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let p = Poisson::new(mean).expect("positive finite mean");
    p.sample(rng) as usize
}

/// Homogeneous Poisson process on the full sphere.
pub fn sample_sphere_ppp<R: Rng + ?Sized>(
    density_per_km2: f64,
    radius_km: f64,
    rng: &mut R,
) -> Result<Vec<SphericalPoint>> {
    sample_cap_ppp(density_per_km2, radius_km, -1.0, rng)
}

/// Restriction of the spherical Poisson process to the polar cap with
/// cos(colatitude) ≥ `cos_lo`. Points outside the cap are never generated.
pub fn sample_cap_ppp<R: Rng + ?Sized>(
    density_per_km2: f64,
    radius_km: f64,
    cos_lo: f64,
    rng: &mut R,
) -> Result<Vec<SphericalPoint>> {
    if !(density_per_km2 >= 0.0) || !density_per_km2.is_finite() {
        return Err(Error::param("density", format!("{density_per_km2} must be nonnegative")));
    }
    if !(radius_km > 0.0) {
        return Err(Error::param("radius_km", "must be positive"));
    }
    let cos_lo = cos_lo.clamp(-1.0, 1.0);
    let area = 2.0 * PI * radius_km * radius_km * (1.0 - cos_lo);
    let n = poisson_count(density_per_km2 * area, rng);
    Ok((0..n)
        .map(|_| SphericalPoint {
            direction: direction_in_cap(cos_lo, rng),
            radius_km,
        })
        .collect())
}

/// Minimum, maximum-service and horizon distances from the typical UT.
pub fn service_bounds(g: &GeometryConfig) -> DistanceBounds {
    let (re, rs) = (g.earth_radius_km, g.shell_radius_km);
    let (sin_eta, cos_eta) = g.dome_angle_rad.sin_cos();
    DistanceBounds {
        r_s_min_km: rs - re,
        // q − R_E cos η written as (R_S² − R_E²)/(q + R_E cos η).
        r_s_max_km: (rs - re) * (rs + re) / ((rs * rs - re * re * sin_eta * sin_eta).sqrt() + re * cos_eta),
        r_max_km: ((rs - re) * (rs + re)).sqrt(),
    }
}

/// Shared cap-measure term R_S − R_E sin²η − √(R_S² − R_E² sin²η) cos η,
/// rearranged to avoid cancellation at small η.
fn cap_term(g: &GeometryConfig) -> f64 {
    let (re, rs) = (g.earth_radius_km, g.shell_radius_km);
    let (sin_eta, cos_eta) = g.dome_angle_rad.sin_cos();
    let q = (rs * rs - re * re * sin_eta * sin_eta).sqrt();
    let b = service_bounds(g);
    let sum = b.r_s_max_km + b.r_s_min_km;
    sin_eta * sin_eta * sum * sum / (2.0 * (1.0 + cos_eta) * (q + rs))
}

/// CDF of the distance from the typical UT to a service SAP.
pub fn distance_cdf(d_km: f64, g: &GeometryConfig) -> f64 {
    let b = service_bounds(g);
    if d_km < b.r_s_min_km {
        return 0.0;
    }
    if d_km >= b.r_s_max_km {
        return 1.0;
    }
    let denom = 2.0 * g.earth_radius_km * cap_term(g);
    if denom <= 0.0 {
        // η = 0: the service region is the single zenith point.
        return 1.0;
    }
    let lo = b.r_s_min_km;
    ((d_km - lo) * (d_km + lo) / denom).clamp(0.0, 1.0)
}

pub fn distance_pdf(d_km: f64, g: &GeometryConfig) -> f64 {
    let b = service_bounds(g);
    let denom = g.earth_radius_km * cap_term(g);
    if d_km < b.r_s_min_km || d_km > b.r_s_max_km || denom <= 0.0 {
        return 0.0;
    }
    d_km / denom
}

/// Inverse of [`distance_cdf`]; `u` in [0, 1].
pub fn distance_quantile(u: f64, g: &GeometryConfig) -> f64 {
    let b = service_bounds(g);
    let lo2 = b.r_s_min_km * b.r_s_min_km;
    let hi2 = b.r_s_max_km * b.r_s_max_km;
    (lo2 + u.clamp(0.0, 1.0) * (hi2 - lo2)).sqrt()
}

/// Smallest height above the UT's tangent plane at which a SAP is still
/// inside the service dome (H_v).
pub fn min_vertical_height(g: &GeometryConfig) -> f64 {
    if g.dome_angle_rad >= FRAC_PI_2 {
        return 0.0;
    }
    let (re, rs) = (g.earth_radius_km, g.shell_radius_km);
    let c2 = g.dome_angle_rad.cos().powi(2);
    c2 * ((re * re + (rs * rs - re * re) / c2).sqrt() - re)
}

fn check_range(r_km: f64, g: &GeometryConfig) -> Result<DistanceBounds> {
    let b = service_bounds(g);
    if !(r_km >= b.r_s_min_km - RANGE_SLACK_KM && r_km <= b.r_max_km + RANGE_SLACK_KM) {
        return Err(Error::param(
            "r_km",
            format!("{r_km} outside [{}, {}]", b.r_s_min_km, b.r_max_km),
        ));
    }
    Ok(b)
}

/// Height H_r above the tangent plane of a shell point at distance r.
pub fn vertical_height_of(r_km: f64, g: &GeometryConfig) -> Result<f64> {
    check_range(r_km, g)?;
    let (re, rs) = (g.earth_radius_km, g.shell_radius_km);
    Ok(((rs - re) * (rs + re) - r_km * r_km) / (2.0 * re))
}

/// Area of the spherical cap of shell points within distance r of the UT.
pub fn cap_area(r_km: f64, g: &GeometryConfig) -> Result<f64> {
    let h = vertical_height_of(r_km, g)?;
    let (re, rs) = (g.earth_radius_km, g.shell_radius_km);
    Ok(2.0 * PI * (rs - re - h) * rs)
}

pub fn cap_area_derivative(r_km: f64, g: &GeometryConfig) -> Result<f64> {
    check_range(r_km, g)?;
    Ok(2.0 * PI * g.shell_radius_km / g.earth_radius_km * r_km)
}

/// Mean number of UTs inside one SAP's service area.
pub fn avg_users_per_sap(g: &GeometryConfig, ut_density: f64) -> f64 {
    let re = g.earth_radius_km;
    2.0 * PI * re * re / g.shell_radius_km * ut_density * cap_term(g)
}

/// Mean number of service SAPs of the typical UT.
pub fn mean_service_count(g: &GeometryConfig, sap_density: f64) -> f64 {
    2.0 * PI * g.shell_radius_km * sap_density * cap_term(g)
}

/// Mean number of visible but non-serving SAPs.
pub fn mean_interferer_count(g: &GeometryConfig, sap_density: f64) -> f64 {
    let b = service_bounds(g);
    let rs = g.shell_radius_km;
    PI * rs / g.earth_radius_km * sap_density * (b.r_max_km.powi(2) - b.r_s_max_km.powi(2))
}

/// cos(colatitude) of the horizon circle on the shell: points with a larger
/// value are above the UT's horizon.
pub fn horizon_cos(g: &GeometryConfig) -> f64 {
    g.earth_radius_km / g.shell_radius_km
}
