//! Closed-form pipeline: Laplace functional of the desired-signal amplitude,
//! Euler-summed Bromwich inversion, mean interference, coverage probability
//! and capacity.
//!
//! The aggregate amplitude Ŝ = Σ β^{1/2}|h| over service SAPs has Laplace
//! transform exp(-2πλ_S (R_S/R_E) Θ(s)) by the probability generating
//! functional of the SAP process, where
//!
//! ```text
//! Θ(s) = ∫_{r_S,min}^{r_S,max} (1 - E[exp(-s β(r)^{1/2} |h|)]) r dr
//! ```
//!
//! and the inner expectation is the Nakagami amplitude transform from
//! [`crate::specfun`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::path_loss_unchecked;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{self, service_bounds};
use crate::quadrature::{integrate, QuadControl};
use crate::specfun::{NakagamiLaplace, SeriesControl};

/// Parameters of the Euler-summed inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IltControl {
    #[serde(rename = "a")]
    pub ilt_a: f64,
    #[serde(rename = "b")]
    pub ilt_b: u32,
    #[serde(rename = "c")]
    pub ilt_c: u32,
}

impl Default for IltControl {
    fn default() -> Self {
        IltControl {
            ilt_a: 18.4,
            ilt_b: 11,
            ilt_c: 15,
        }
    }
}

impl IltControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.ilt_a > 0.0) || !self.ilt_a.is_finite() {
            return Err(Error::param("ilt_a", "must be positive"));
        }
        if self.ilt_b < 1 {
            return Err(Error::param("ilt_b", "must be at least 1"));
        }
        if self.ilt_c < 1 {
            return Err(Error::param("ilt_c", "must be at least 1"));
        }
        Ok(())
    }
}

/// Inverted CDF value before and after clamping to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IltOutcome {
    pub probability: f64,
    pub raw: f64,
}

impl IltOutcome {
    pub fn clamped(&self) -> bool {
        self.raw != self.probability
    }

    /// Distance by which the raw sum left [0, 1]. Above 0.05 the transform
    /// or the inversion parameters should be distrusted.
    pub fn overshoot(&self) -> f64 {
        (self.raw - self.probability).abs()
    }
}

/// CDF at `x` of a nonnegative variable with Laplace transform `transform`:
///
/// ```text
/// F(x) ≈ 2^-B e^{A/2} / x · Σ_{b=0}^{B} C(B,b) Σ_{c=0}^{C+b} (-1)^c / D_c · Re[L(s_c)/s_c],
/// s_c = (A + 2πic) / 2x,  D_0 = 2, D_c = 1.
/// ```
pub fn invert_laplace_cdf_detailed<F>(x: f64, mut transform: F, ctl: &IltControl) -> Result<IltOutcome>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    ctl.validate()?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::param("x", format!("{x} must be positive and finite")));
    }
    let nterms = (ctl.ilt_c + ctl.ilt_b) as usize + 1;
    let mut partial = Vec::with_capacity(nterms);
    let mut acc = 0.0;
    for c in 0..nterms {
        let s = Complex64::new(ctl.ilt_a, 2.0 * PI * c as f64) / (2.0 * x);
        let term = (transform(s)? / s).re;
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        let weight = if c == 0 { 0.5 } else { 1.0 };
        acc += sign * weight * term;
        partial.push(acc);
    }
    let b = ctl.ilt_b as usize;
    let mut binom = 1.0;
    let mut euler = 0.0;
    for k in 0..=b {
        euler += binom * partial[ctl.ilt_c as usize + k];
        binom = binom * (b - k) as f64 / (k + 1) as f64;
    }
    let raw = euler * (0.5 * ctl.ilt_a - b as f64 * std::f64::consts::LN_2).exp() / x;
    if !raw.is_finite() {
        return Err(Error::NonConvergence {
            what: "inverse Laplace sum",
            partial: raw,
            error: f64::INFINITY,
        });
    }
    Ok(IltOutcome {
        probability: raw.clamp(0.0, 1.0),
        raw,
    })
}

pub fn invert_laplace_cdf<F>(x: f64, transform: F, ctl: &IltControl) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    invert_laplace_cdf_detailed(x, transform, ctl).map(|o| o.probability)
}

/// Laplace transform of the aggregate amplitude Ŝ, with everything that does
/// not depend on s precomputed.
#[derive(Debug, Clone)]
pub struct DssTransform {
    cfg: NetworkConfig,
    factor: f64,
    r_lo: f64,
    r_hi: f64,
    amplitude: NakagamiLaplace,
    quad: QuadControl,
}

impl DssTransform {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        Self::with_controls(cfg, SeriesControl::default(), QuadControl::default())
    }

    pub fn with_controls(cfg: &NetworkConfig, series: SeriesControl, quad: QuadControl) -> Result<Self> {
        cfg.validate()?;
        let g = &cfg.geometry;
        let b = service_bounds(g);
        Ok(DssTransform {
            cfg: *cfg,
            factor: 2.0 * PI * cfg.sap_density * g.shell_radius_km / g.earth_radius_km,
            r_lo: b.r_s_min_km,
            r_hi: b.r_s_max_km,
            amplitude: NakagamiLaplace::new(cfg.channel.nakagami_m, cfg.channel.omega, series)?,
            quad,
        })
    }

    /// Θ(s).
    pub fn theta(&self, s: Complex64) -> Result<Complex64> {
        let mut failure = None;
        let ch = &self.cfg.channel;
        let integrand = |r: f64| {
            let a = s * path_loss_unchecked(r, ch).sqrt();
            match self.amplitude.one_minus(a) {
                Ok(e) => e * r,
                Err(err) => {
                    failure.get_or_insert(err);
                    Complex64::new(0.0, 0.0)
                }
            }
        };
        let res = integrate(integrand, self.r_lo, self.r_hi, &self.quad)?;
        if let Some(err) = failure {
            return Err(err);
        }
        Ok(res.value)
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        if !(s.re > 0.0) {
            return Err(Error::domain("laplace_dss", "Re(s) must be positive"));
        }
        if self.factor == 0.0 || self.r_hi <= self.r_lo {
            return Ok(Complex64::new(1.0, 0.0));
        }
        Ok((-self.factor * self.theta(s)?).exp())
    }
}

/// L_Ŝ(s) for a single s; prefer [`DssTransform`] for repeated use.
pub fn laplace_dss(s: Complex64, cfg: &NetworkConfig) -> Result<Complex64> {
    DssTransform::new(cfg)?.eval(s)
}

/// ∫_a^b r^{1-α} dr, with the logarithmic form at α = 2.
fn power_integral(a: f64, b: f64, alpha: f64) -> f64 {
    if alpha == 2.0 {
        return (b / a).ln();
    }
    let e = 2.0 - alpha;
    // a^e (exp(e ln(b/a)) - 1) / e avoids cancellation near α = 2.
    a.powf(e) * (e * (b / a).ln()).exp_m1() / e
}

/// Mean multi-user interference at the typical UT, normalised by ρ_d G_ml.
pub fn avg_mui(cfg: &NetworkConfig) -> f64 {
    let g = &cfg.geometry;
    let b = service_bounds(g);
    let phi = cfg.power_split();
    let ch = &cfg.channel;
    2.0 * PI * cfg.sap_density * g.shell_radius_km * ch.omega * ch.reference_loss / g.earth_radius_km
        * ((phi - 1.0) / phi)
        * power_integral(b.r_s_min_km, b.r_s_max_km, ch.path_loss_exponent)
}

/// Mean inter-satellite interference from visible non-serving SAPs,
/// normalised by ρ_d G_ml.
pub fn avg_isi(cfg: &NetworkConfig) -> f64 {
    let g = &cfg.geometry;
    let b = service_bounds(g);
    if b.r_max_km <= b.r_s_max_km {
        return 0.0;
    }
    let ch = &cfg.channel;
    let ratio = cfg.gain_side() / cfg.gain_main();
    2.0 * PI * cfg.sap_density * g.shell_radius_km * ch.omega * ch.reference_loss / g.earth_radius_km
        * ratio
        * power_integral(b.r_s_max_km, b.r_max_km, ch.path_loss_exponent)
}

/// Coverage evaluator for one configuration; thresholds can be swept
/// without recomputing the interference terms.
#[derive(Debug, Clone)]
pub struct CoverageModel {
    transform: DssTransform,
    ilt: IltControl,
    interference: f64,
    noise_term: f64,
    sqrt_phi: f64,
    p_empty: f64,
}

impl CoverageModel {
    pub fn new(cfg: &NetworkConfig, ilt: &IltControl) -> Result<Self> {
        ilt.validate()?;
        let transform = DssTransform::new(cfg)?;
        Ok(CoverageModel {
            transform,
            ilt: *ilt,
            interference: avg_mui(cfg) + avg_isi(cfg),
            noise_term: cfg.noise_power / (cfg.tx_power_data * cfg.gain_main()),
            sqrt_phi: cfg.power_split().sqrt(),
            p_empty: (-geometry::mean_service_count(&cfg.geometry, cfg.sap_density)).exp(),
        })
    }

    pub fn transform(&self) -> &DssTransform {
        &self.transform
    }

    /// P(S > x) for the normalised amplitude S = Ŝ / √|Φ|.
    pub fn dss_ccdf(&self, x: f64) -> Result<IltOutcome> {
        if !(x > 0.0) {
            return Err(Error::param("x", "must be positive"));
        }
        let cdf = invert_laplace_cdf_detailed(self.sqrt_phi * x, |s| self.transform.eval(s), &self.ilt)?;
        Ok(IltOutcome {
            probability: 1.0 - cdf.probability,
            raw: 1.0 - cdf.raw,
        })
    }

    /// Amplitude threshold x* = √(γ (I_ser + I_int) + γ σ² / (ρ_d G_ml)).
    pub fn threshold_amplitude(&self, gamma_lin: f64) -> f64 {
        (gamma_lin * (self.interference + self.noise_term)).sqrt()
    }

    /// P(SINR > γ); γ ≤ 0 gives the probability of a nonempty service set.
    pub fn coverage(&self, gamma_lin: f64) -> Result<IltOutcome> {
        if gamma_lin.is_nan() {
            return Err(Error::param("gamma_th", "must not be NaN"));
        }
        let x = self.threshold_amplitude(gamma_lin.max(0.0));
        if !(x > 0.0) {
            let p = 1.0 - self.p_empty;
            return Ok(IltOutcome { probability: p, raw: p });
        }
        if x.is_infinite() {
            return Ok(IltOutcome { probability: 0.0, raw: 0.0 });
        }
        self.dss_ccdf(x)
    }
}

pub fn dss_ccdf(x: f64, cfg: &NetworkConfig, ctl: &IltControl) -> Result<f64> {
    CoverageModel::new(cfg, ctl)?.dss_ccdf(x).map(|o| o.probability)
}

/// Coverage probability at linear threshold γ_th.
pub fn coverage_probability(gamma_th: f64, cfg: &NetworkConfig, ctl: &IltControl) -> Result<f64> {
    if !(gamma_th > 0.0) {
        return Err(Error::param("gamma_th", "must be positive"));
    }
    CoverageModel::new(cfg, ctl)?.coverage(gamma_th).map(|o| o.probability)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveSource {
    Analytic,
    MonteCarlo,
}

/// Coverage probability against SINR threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub thresholds_db: Vec<f64>,
    pub coverage: Vec<f64>,
    /// 95% half-widths; zero for analytic curves.
    pub half_width: Vec<f64>,
    pub source: CurveSource,
    /// Number of points whose inverted value was clamped into [0, 1].
    pub clamp_events: usize,
}

impl CoverageCurve {
    /// Linear interpolation in dB. Below the grid the first value is held;
    /// above it the curve is extended to zero over one grid step.
    pub fn interpolate_db(&self, gamma_db: f64) -> f64 {
        let t = &self.thresholds_db;
        let c = &self.coverage;
        if t.is_empty() {
            return 0.0;
        }
        if gamma_db <= t[0] {
            return c[0];
        }
        let last = t.len() - 1;
        if gamma_db >= t[last] {
            let step = if last > 0 { t[last] - t[last - 1] } else { 1.0 };
            let f = ((gamma_db - t[last]) / step).min(1.0);
            return c[last] * (1.0 - f);
        }
        let i = t.partition_point(|&x| x <= gamma_db) - 1;
        let f = (gamma_db - t[i]) / (t[i + 1] - t[i]);
        c[i] + f * (c[i + 1] - c[i])
    }
}

pub fn analytic_coverage_curve(cfg: &NetworkConfig, thresholds_db: &[f64], ctl: &IltControl) -> Result<CoverageCurve> {
    let model = CoverageModel::new(cfg, ctl)?;
    let mut coverage = Vec::with_capacity(thresholds_db.len());
    let mut clamp_events = 0;
    for &t in thresholds_db {
        let o = model.coverage(crate::db_to_linear(t))?;
        if o.clamped() {
            clamp_events += 1;
        }
        coverage.push(o.probability);
    }
    Ok(CoverageCurve {
        thresholds_db: thresholds_db.to_vec(),
        coverage,
        half_width: vec![0.0; thresholds_db.len()],
        source: CurveSource::Analytic,
        clamp_events,
    })
}

/// Width of the panels used to walk the t-axis of the capacity integral.
const SE_PANEL: f64 = 0.5;
const SE_TAIL: f64 = 1e-6;
const SE_MAX_T: f64 = 128.0;

/// ∫_0^∞ P_cov(2^t - 1) dt for an arbitrary coverage function, integrated
/// panel by panel until the integrand stays below 1e-6 on three consecutive
/// panels.
pub fn spectral_efficiency_from<F>(mut pcov: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let ctl = QuadControl {
        rel_tol: 1e-8,
        abs_tol: 1e-11,
        max_evals: 1 << 14,
    };
    let mut total = 0.0;
    let mut quiet = 0;
    let mut t0 = 0.0;
    while t0 < SE_MAX_T {
        let t1 = t0 + SE_PANEL;
        let mut failure = None;
        let mut peak: f64 = 0.0;
        let f = |t: f64| -> f64 {
            match pcov(t.exp2() - 1.0) {
                Ok(v) => {
                    peak = peak.max(v.abs());
                    v
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let r = integrate(f, t0, t1, &ctl)?;
        if let Some(e) = failure {
            return Err(e);
        }
        total += r.value;
        if peak < SE_TAIL {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        t0 = t1;
    }
    Err(Error::NonConvergence {
        what: "spectral efficiency tail",
        partial: total,
        error: f64::NAN,
    })
}

/// Spectral efficiency of the cell-free downlink from the analytic coverage.
pub fn spectral_efficiency(cfg: &NetworkConfig, ctl: &IltControl) -> Result<f64> {
    let model = CoverageModel::new(cfg, ctl)?;
    spectral_efficiency_from(|g| model.coverage(g).map(|o| o.probability))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    CellFree,
    NearestSatellite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    pub bandwidth_hz: f64,
    pub num_users: u64,
    pub scheme: Scheme,
}

impl CapacityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            return Err(Error::param("bandwidth_hz", "must be positive"));
        }
        if self.num_users < 1 {
            return Err(Error::param("num_users", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub scheme: Scheme,
    pub num_users: u64,
    pub spectral_efficiency: f64,
    pub system_bps: f64,
    pub per_user_bps: f64,
}

/// UT density that spreads `num_users` uniformly over the Earth.
pub fn ut_density_for(num_users: u64, earth_radius_km: f64) -> f64 {
    num_users as f64 / (4.0 * PI * earth_radius_km * earth_radius_km)
}

/// Capacity from a known spectral efficiency. The cell-free scheme pays the
/// pilot overhead (τ_c - τ_p)/τ_c.
pub fn capacity_from_efficiency(se: f64, cfg: &NetworkConfig, cap: &CapacityConfig) -> Result<CapacityResult> {
    cap.validate()?;
    let overhead = match cap.scheme {
        Scheme::CellFree => (cfg.coherence_len - cfg.pilot_len) as f64 / cfg.coherence_len as f64,
        Scheme::NearestSatellite => 1.0,
    };
    let n = cap.num_users as f64;
    let system = n * cap.bandwidth_hz * overhead * se;
    Ok(CapacityResult {
        scheme: cap.scheme,
        num_users: cap.num_users,
        spectral_efficiency: se,
        system_bps: system,
        per_user_bps: system / n,
    })
}

/// System and per-user capacity with `num_users` UTs spread over the Earth.
/// The UT density of `cfg` is replaced by the one implied by `num_users`.
/// The nearest-satellite scheme integrates the supplied Monte Carlo
/// coverage curve.
pub fn system_capacity(
    cfg: &NetworkConfig,
    cap: &CapacityConfig,
    ctl: &IltControl,
    baseline: Option<&CoverageCurve>,
) -> Result<CapacityResult> {
    cap.validate()?;
    let mut cfg = *cfg;
    cfg.ut_density = ut_density_for(cap.num_users, cfg.geometry.earth_radius_km);
    let se = match cap.scheme {
        Scheme::CellFree => spectral_efficiency(&cfg, ctl)?,
        Scheme::NearestSatellite => {
            let curve = baseline.ok_or_else(|| {
                Error::param("baseline", "nearest-satellite capacity needs a Monte Carlo coverage curve")
            })?;
            spectral_efficiency_from(|g| {
                Ok(if g > 0.0 {
                    curve.interpolate_db(crate::linear_to_db(g))
                } else {
                    curve.coverage.first().copied().unwrap_or(0.0)
                })
            })?
        }
    };
    capacity_from_efficiency(se, &cfg, cap)
}
