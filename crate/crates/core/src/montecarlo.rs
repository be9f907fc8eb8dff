//! Snapshot simulator: Poisson SAPs around a typical UT, Nakagami fading,
//! optional uplink pilot training, conjugate beamforming and the SINR
//! decomposition into desired signal, multi-user and inter-satellite
//! interference.
//!
//! Each SAP l that serves the typical UT also serves n_l - 1 other UTs and
//! splits ρ_d evenly among them. By Slivnyak's theorem the other UTs in a
//! SAP's service area are again Poisson with mean |Φ|_avg, so
//! n_l = 1 + Poisson(|Φ|_avg). Co-served users of different SAPs are drawn
//! independently.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{CoverageCurve, CurveSource};
use crate::channel::{path_loss_unchecked, NakagamiSampler};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::geometry::{distance_quantile, horizon_cos, poisson_count, sample_cap_ppp, service_bounds, SphericalPoint};
use crate::rng::{trial_rng, TrialRng};
use crate::db_to_linear;

/// Quantile of the standard normal used for 95% intervals.
const Z95: f64 = 1.959_963_984_540_054;

/// One SAP-to-UT link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub sap: SphericalPoint,
    pub distance_km: f64,
    /// Large-scale gain β.
    pub beta: f64,
    /// Small-scale fading h = |h| e^{iθ}.
    pub fading: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub service: Vec<Link>,
    pub interfering: Vec<Link>,
    /// |Φ_l^U| for each service SAP, including the typical UT.
    pub users_per_sap: Vec<u32>,
}

impl Snapshot {
    pub fn is_outage(&self) -> bool {
        self.service.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub ds_power: f64,
    pub mui_power: f64,
    pub isi_power: f64,
    pub noise_power: f64,
    /// 0 for an outage; `f64::MAX` when every impairment vanishes.
    pub sinr: f64,
    pub outage: bool,
}

/// Result of uplink pilot training on the service links of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingResult {
    /// ĥ/|ĥ| for each service link of the typical UT.
    pub estimated_phase: Vec<Complex64>,
    pub typical_pilot: u32,
    /// Pilot index of each co-served UT, per service SAP.
    pub co_user_pilots: Vec<Vec<u32>>,
    pub pool_size: u32,
}

impl TrainingResult {
    /// Number of service links whose estimate mixes in another UT's channel.
    pub fn contaminated_links(&self) -> usize {
        self.co_user_pilots
            .iter()
            .filter(|p| p.contains(&self.typical_pilot))
            .count()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Csi<'a> {
    Perfect,
    Trained(&'a TrainingResult),
    NoBeamforming,
}

/// CSI model of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum CsiMode {
    Perfect,
    /// Pilot training with a pool of `pool_size` orthogonal pilots.
    Trained { pool_size: u32 },
    NoBeamforming,
}

fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * rng.random::<f64>())
}

fn draw_fading<R: Rng + ?Sized>(s: &NakagamiSampler, rng: &mut R) -> Complex64 {
    let a = s.amplitude(rng);
    unit_phase(rng) * a
}

/// Splits `points` into service and interfering links as seen from
/// `observer`, drawing fading for each.
fn classify<R: Rng + ?Sized>(
    points: impl IntoIterator<Item = SphericalPoint>,
    observer: &SphericalPoint,
    cfg: &NetworkConfig,
    sampler: &NakagamiSampler,
    rng: &mut R,
) -> (Vec<Link>, Vec<Link>) {
    let b = service_bounds(&cfg.geometry);
    let mut service = Vec::new();
    let mut interfering = Vec::new();
    for p in points {
        // Above the horizon means positive height over the tangent plane.
        if observer.height_of(&p) <= 0.0 {
            continue;
        }
        let d = observer.distance_to(&p);
        let link = Link {
            sap: p,
            distance_km: d,
            beta: path_loss_unchecked(d, &cfg.channel),
            fading: draw_fading(sampler, rng),
        };
        if d <= b.r_s_max_km {
            service.push(link);
        } else {
            interfering.push(link);
        }
    }
    (service, interfering)
}

fn draw_user_counts<R: Rng + ?Sized>(n: usize, cfg: &NetworkConfig, rng: &mut R) -> Vec<u32> {
    let mean = cfg.avg_users_per_sap();
    (0..n).map(|_| 1 + poisson_count(mean, rng) as u32).collect()
}

fn north_pole(cfg: &NetworkConfig) -> SphericalPoint {
    SphericalPoint {
        direction: [0.0, 0.0, 1.0],
        radius_km: cfg.geometry.earth_radius_km,
    }
}

/// Samples SAPs, classifies them relative to the typical UT at the north
/// pole, draws per-SAP user counts and per-link fading.
pub fn draw_snapshot<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Result<Snapshot> {
    let sampler = NakagamiSampler::new(&cfg.channel)?;
    draw_snapshot_with(cfg, &sampler, rng)
}

fn draw_snapshot_with<R: Rng + ?Sized>(cfg: &NetworkConfig, sampler: &NakagamiSampler, rng: &mut R) -> Result<Snapshot> {
    let g = &cfg.geometry;
    // Only the cap above the UT's horizon can contribute.
    let saps = sample_cap_ppp(cfg.sap_density, g.shell_radius_km, horizon_cos(g), rng)?;
    let ut = north_pole(cfg);
    let (service, interfering) = classify(saps, &ut, cfg, sampler, rng);
    let users_per_sap = draw_user_counts(service.len(), cfg, rng);
    Ok(Snapshot {
        service,
        interfering,
        users_per_sap,
    })
}

/// Snapshot for an explicit set of satellites seen from `observer`.
pub fn snapshot_from_points<R: Rng + ?Sized>(
    points: &[SphericalPoint],
    observer: &SphericalPoint,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<Snapshot> {
    let sampler = NakagamiSampler::new(&cfg.channel)?;
    let (service, interfering) = classify(points.iter().copied(), observer, cfg, &sampler, rng);
    let users_per_sap = draw_user_counts(service.len(), cfg, rng);
    Ok(Snapshot {
        service,
        interfering,
        users_per_sap,
    })
}

/// Effective desired-signal amplitude factor of one link under `csi`,
/// i.e. h ĥ*/|ĥ|.
fn beamformed(link: &Link, csi: &Csi<'_>, index: usize) -> Complex64 {
    match csi {
        Csi::Perfect => Complex64::new(link.fading.norm(), 0.0),
        Csi::Trained(t) => link.fading * t.estimated_phase[index].conj(),
        Csi::NoBeamforming => link.fading,
    }
}

/// Complex desired-signal amplitude Σ (1/√n_l) β^{1/2} h ĥ*/|ĥ|, without
/// the √(ρ_d G_ml) factor.
pub fn ds_amplitude(snapshot: &Snapshot, csi: Csi<'_>) -> Complex64 {
    let mut ds = Complex64::new(0.0, 0.0);
    for (i, (link, &n)) in snapshot.service.iter().zip(&snapshot.users_per_sap).enumerate() {
        ds += beamformed(link, &csi, i) * (link.beta / n as f64).sqrt();
    }
    ds
}

/// SINR decomposition of one snapshot.
pub fn sinr_of(snapshot: &Snapshot, cfg: &NetworkConfig, csi: Csi<'_>) -> Result<SinrSample> {
    if let Csi::Trained(t) = csi {
        if t.estimated_phase.len() != snapshot.service.len() {
            return Err(Error::param("training", "does not match the snapshot's service links"));
        }
    }
    let gm = cfg.gain_main();
    let gs = cfg.gain_side();
    let rho = cfg.tx_power_data;
    let noise = cfg.noise_power;
    let isi: f64 = snapshot
        .interfering
        .iter()
        .map(|l| l.beta * l.fading.norm_sqr())
        .sum::<f64>()
        * rho
        * gs;
    if snapshot.is_outage() {
        return Ok(SinrSample {
            ds_power: 0.0,
            mui_power: 0.0,
            isi_power: isi,
            noise_power: noise,
            sinr: 0.0,
            outage: true,
        });
    }
    let ds_power = rho * gm * ds_amplitude(snapshot, csi).norm_sqr();
    // Each co-served UT k' receives β|h|² ρ_d G_ml / n_l from SAP l at the
    // typical UT; its beamforming phase is independent of h_lk.
    let mui: f64 = snapshot
        .service
        .iter()
        .zip(&snapshot.users_per_sap)
        .map(|(l, &n)| l.beta * l.fading.norm_sqr() * (n - 1) as f64 / n as f64)
        .sum::<f64>()
        * rho
        * gm;
    let denom = mui + isi + noise;
    let sinr = if denom > 0.0 { ds_power / denom } else { f64::MAX };
    Ok(SinrSample {
        ds_power,
        mui_power: mui,
        isi_power: isi,
        noise_power: noise,
        sinr,
        outage: false,
    })
}

/// Uplink training of the typical UT's service links.
///
/// Each UT picks a pilot uniformly from a pool of `pool_size` orthogonal
/// pilots. SAP l projects its received pilot signal on the typical UT's
/// pilot, ȳ = √(τ_p ρ_p) τ_p Σ_{co-pilot k'} g_lk' + w with w ~ CN(0, τ_p σ²),
/// and forms the LMMSE estimate ĝ = E{ȳ g*}/E{|ȳ|²} ȳ, where expectations
/// run over the fading. Co-pilot UTs' channels are drawn with the service
/// distance law, which by symmetry is also the law of a UT's distance to a
/// SAP that serves it.
pub fn uplink_train<R: Rng + ?Sized>(
    snapshot: &Snapshot,
    cfg: &NetworkConfig,
    pool_size: u32,
    rng: &mut R,
) -> Result<TrainingResult> {
    if pool_size < 1 {
        return Err(Error::param("pool_size", "must be at least 1"));
    }
    if pool_size > cfg.pilot_len {
        return Err(Error::param("pool_size", "cannot exceed pilot_len"));
    }
    let sampler = NakagamiSampler::new(&cfg.channel)?;
    let tau = cfg.pilot_len as f64;
    let amp = (tau * cfg.tx_power_pilot).sqrt() * tau;
    let noise_sd = (tau * cfg.noise_power / 2.0).sqrt();
    let typical_pilot = rng.random_range(0..pool_size);
    let mut estimated_phase = Vec::with_capacity(snapshot.service.len());
    let mut co_user_pilots = Vec::with_capacity(snapshot.service.len());
    for (link, &n) in snapshot.service.iter().zip(&snapshot.users_per_sap) {
        let pilots: Vec<u32> = (1..n).map(|_| rng.random_range(0..pool_size)).collect();
        let mut sum = link.fading * link.beta.sqrt();
        let mut beta_sum = link.beta;
        for _ in pilots.iter().filter(|&&p| p == typical_pilot) {
            let d = distance_quantile(rng.random(), &cfg.geometry);
            let beta = path_loss_unchecked(d, &cfg.channel);
            sum += draw_fading(&sampler, rng) * beta.sqrt();
            beta_sum += beta;
        }
        let w = Complex64::new(gauss(rng), gauss(rng)) * noise_sd;
        let y = sum * amp + w;
        let omega = cfg.channel.omega;
        let scale = amp * link.beta * omega / (amp * amp * beta_sum * omega + tau * cfg.noise_power);
        let g_hat = y * scale;
        let norm = g_hat.norm();
        estimated_phase.push(if norm > 0.0 { g_hat / norm } else { Complex64::new(1.0, 0.0) });
        co_user_pilots.push(pilots);
    }
    Ok(TrainingResult {
        estimated_phase,
        typical_pilot,
        co_user_pilots,
        pool_size,
    })
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// SINR of one trial under `mode`, drawn from its own substream.
fn trial_sample(cfg: &NetworkConfig, sampler: &NakagamiSampler, mode: CsiMode, rng: &mut TrialRng) -> Result<SinrSample> {
    let snap = draw_snapshot_with(cfg, sampler, rng)?;
    match mode {
        CsiMode::Perfect => sinr_of(&snap, cfg, Csi::Perfect),
        CsiMode::NoBeamforming => sinr_of(&snap, cfg, Csi::NoBeamforming),
        CsiMode::Trained { pool_size } => {
            let t = uplink_train(&snap, cfg, pool_size, rng)?;
            sinr_of(&snap, cfg, Csi::Trained(&t))
        }
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 1 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    Ok(())
}

/// SINR samples of `trials` independent snapshots. Trial i uses substream i
/// of `seed`, so the output does not depend on the thread count.
pub fn simulate_sinr(cfg: &NetworkConfig, trials: usize, mode: CsiMode, seed: u64) -> Result<Vec<SinrSample>> {
    cfg.validate()?;
    check_trials(trials)?;
    let sampler = NakagamiSampler::new(&cfg.channel)?;
    (0..trials)
        .into_par_iter()
        .map(|i| trial_sample(cfg, &sampler, mode, &mut trial_rng(seed, i as u64)))
        .collect()
}

/// Wilson score interval (low, high) for k successes in n trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Empirical coverage with its 95% Wilson interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCoverage {
    pub curve: CoverageCurve,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub outages: usize,
}

/// Coverage estimate P(SINR > γ) from a shared set of samples, so the curve
/// is nonincreasing in γ by construction.
pub fn coverage_from_samples(samples: &[SinrSample], thresholds_db: &[f64]) -> EmpiricalCoverage {
    let mut sinrs: Vec<f64> = samples.iter().map(|s| s.sinr).collect();
    sinrs.sort_by(f64::total_cmp);
    let n = sinrs.len();
    let mut coverage = Vec::with_capacity(thresholds_db.len());
    let mut half_width = Vec::with_capacity(thresholds_db.len());
    let mut ci_low = Vec::with_capacity(thresholds_db.len());
    let mut ci_high = Vec::with_capacity(thresholds_db.len());
    for &t in thresholds_db {
        let g = db_to_linear(t);
        let k = n - sinrs.partition_point(|&s| s <= g);
        let (lo, hi) = wilson_interval(k, n);
        coverage.push(k as f64 / n as f64);
        half_width.push(0.5 * (hi - lo));
        ci_low.push(lo);
        ci_high.push(hi);
    }
    EmpiricalCoverage {
        curve: CoverageCurve {
            thresholds_db: thresholds_db.to_vec(),
            coverage,
            half_width,
            source: CurveSource::MonteCarlo,
            clamp_events: 0,
        },
        ci_low,
        ci_high,
        outages: samples.iter().filter(|s| s.outage).count(),
    }
}

/// Fraction of snapshots with SINR above each threshold. Outages count as
/// not covered.
pub fn estimate_coverage(
    cfg: &NetworkConfig,
    thresholds_db: &[f64],
    trials: usize,
    mode: CsiMode,
    seed: u64,
) -> Result<EmpiricalCoverage> {
    let samples = simulate_sinr(cfg, trials, mode, seed)?;
    Ok(coverage_from_samples(&samples, thresholds_db))
}

/// SINR when only the nearest visible SAP serves the UT at full power with
/// main-lobe gain and every other visible SAP interferes through its side
/// lobe. An outage is declared when the nearest SAP lies outside the dome.
pub fn nearest_satellite_sinr(snapshot: &Snapshot, cfg: &NetworkConfig) -> SinrSample {
    let all = snapshot.service.iter().chain(&snapshot.interfering);
    let nearest = snapshot
        .service
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.distance_km.total_cmp(&b.1.distance_km));
    let rho = cfg.tx_power_data;
    let noise = cfg.noise_power;
    let total_rx: f64 = all.map(|l| l.beta * l.fading.norm_sqr()).sum();
    match nearest {
        None => SinrSample {
            ds_power: 0.0,
            mui_power: 0.0,
            isi_power: total_rx * rho * cfg.gain_side(),
            noise_power: noise,
            sinr: 0.0,
            outage: true,
        },
        Some((_, link)) => {
            let own = link.beta * link.fading.norm_sqr();
            let ds = rho * cfg.gain_main() * own;
            let isi = rho * cfg.gain_side() * (total_rx - own).max(0.0);
            let denom = isi + noise;
            SinrSample {
                ds_power: ds,
                mui_power: 0.0,
                isi_power: isi,
                noise_power: noise,
                sinr: if denom > 0.0 { ds / denom } else { f64::MAX },
                outage: false,
            }
        }
    }
}

pub fn simulate_nearest_sinr(cfg: &NetworkConfig, trials: usize, seed: u64) -> Result<Vec<SinrSample>> {
    cfg.validate()?;
    check_trials(trials)?;
    let sampler = NakagamiSampler::new(&cfg.channel)?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let snap = draw_snapshot_with(cfg, &sampler, &mut rng)?;
            Ok(nearest_satellite_sinr(&snap, cfg))
        })
        .collect()
}

pub fn nearest_satellite_coverage(
    cfg: &NetworkConfig,
    thresholds_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<EmpiricalCoverage> {
    let samples = simulate_nearest_sinr(cfg, trials, seed)?;
    Ok(coverage_from_samples(&samples, thresholds_db))
}

/// Sorted samples of the normalised desired-signal amplitude
/// S = |Σ (1/√n_l) β^{1/2} h ĥ*/|ĥ||.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DssSamples {
    pub sorted: Vec<f64>,
}

impl DssSamples {
    /// Fraction of samples strictly above `x`.
    pub fn ccdf(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        (n - self.sorted.partition_point(|&s| s <= x)) as f64 / n as f64
    }

    /// `points` abscissae spread between the 0.5% and 99.5% sample quantiles.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        let n = self.sorted.len();
        if n == 0 || points == 0 {
            return Vec::new();
        }
        let lo = self.sorted[(n as f64 * 0.005) as usize];
        let hi = self.sorted[((n as f64 * 0.995) as usize).min(n - 1)];
        if points == 1 {
            return vec![lo];
        }
        (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect()
    }

    /// (grid, ccdf) pairs on the automatic grid.
    pub fn curve(&self, points: usize) -> Vec<(f64, f64)> {
        self.grid(points).into_iter().map(|x| (x, self.ccdf(x))).collect()
    }
}

pub fn empirical_dss(cfg: &NetworkConfig, trials: usize, mode: CsiMode, seed: u64) -> Result<DssSamples> {
    cfg.validate()?;
    check_trials(trials)?;
    let sampler = NakagamiSampler::new(&cfg.channel)?;
    let mut sorted: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = trial_rng(seed, i as u64);
            let snap = draw_snapshot_with(cfg, &sampler, &mut rng)?;
            Ok(match mode {
                CsiMode::Perfect => ds_amplitude(&snap, Csi::Perfect).norm(),
                CsiMode::NoBeamforming => ds_amplitude(&snap, Csi::NoBeamforming).norm(),
                CsiMode::Trained { pool_size } => {
                    let t = uplink_train(&snap, cfg, pool_size, &mut rng)?;
                    ds_amplitude(&snap, Csi::Trained(&t)).norm()
                }
            })
        })
        .collect::<Result<_>>()?;
    sorted.sort_by(f64::total_cmp);
    Ok(DssSamples { sorted })
}

/// Empirical CCDF of the desired-signal amplitude on an automatic grid.
pub fn empirical_dss_ccdf(cfg: &NetworkConfig, trials: usize, mode: CsiMode, seed: u64) -> Result<Vec<(f64, f64)>> {
    Ok(empirical_dss(cfg, trials, mode, seed)?.curve(200))
}

/// Mean UT count in one SAP's service area, measured by dropping UTs on the
/// Earth around a SAP at the zenith of the north pole. Used as an
/// independent check of the closed form.
pub fn mc_users_per_sap(cfg: &NetworkConfig, trials: usize, seed: u64) -> Result<f64> {
    check_trials(trials)?;
    let g = &cfg.geometry;
    let sap = SphericalPoint {
        direction: [0.0, 0.0, 1.0],
        radius_km: g.shell_radius_km,
    };
    let b = service_bounds(g);
    // UTs that can see the SAP lie in the cap cos θ ≥ R_E/R_S.
    let counts: Result<Vec<usize>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let uts = sample_cap_ppp(cfg.ut_density, g.earth_radius_km, horizon_cos(g), &mut rng)?;
            Ok(uts.iter().filter(|u| u.distance_to(&sap) <= b.r_s_max_km && u.height_of(&sap) > 0.0).count())
        })
        .collect();
    let counts = counts?;
    Ok(counts.iter().sum::<usize>() as f64 / trials as f64)
}

/// Mean of service and interfering SAP counts over `trials` snapshots.
pub fn mean_link_counts(cfg: &NetworkConfig, trials: usize, seed: u64) -> Result<(f64, f64)> {
    check_trials(trials)?;
    let sampler = NakagamiSampler::new(&cfg.channel)?;
    let counts: Result<Vec<(usize, usize)>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let snap = draw_snapshot_with(cfg, &sampler, &mut trial_rng(seed, i as u64))?;
            Ok((snap.service.len(), snap.interfering.len()))
        })
        .collect();
    let counts = counts?;
    let n = trials as f64;
    Ok((
        counts.iter().map(|c| c.0).sum::<usize>() as f64 / n,
        counts.iter().map(|c| c.1).sum::<usize>() as f64 / n,
    ))
}
