//! Experiment file schema, resolution to engine configs and validation.

use std::f64::consts::PI;

use leocf_core::analytic::IltControl;
use leocf_core::channel::ChannelConfig;
use leocf_core::constellation::PhaseMode;
use leocf_core::geometry::{GeometryConfig, EARTH_RADIUS_KM};
use leocf_core::montecarlo::CsiMode;
use leocf_core::{dbm_to_watts, NetworkConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiments: Vec<Experiment>,
}

/// Network parameters as written in a config file. Power and gain fields
/// carry their unit in the name; everything else is linear. Fields left out
/// take the reference deployment's value, except the two densities.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub earth_radius_km: Option<f64>,
    pub altitude_km: Option<f64>,
    pub dome_angle_deg: Option<f64>,
    /// λ_S, per km².
    pub sap_density: Option<f64>,
    /// λ_U, per km².
    pub ut_density: Option<f64>,
    pub path_loss_exponent: Option<f64>,
    pub reference_loss: Option<f64>,
    pub carrier_hz: Option<f64>,
    pub tx_gain_mainlobe_db: Option<f64>,
    pub tx_gain_sidelobe_db: Option<f64>,
    pub rx_gain_db: Option<f64>,
    pub nakagami_m: Option<f64>,
    pub omega: Option<f64>,
    pub tx_power_data_dbm: Option<f64>,
    pub tx_power_pilot_dbm: Option<f64>,
    pub noise_power_dbm: Option<f64>,
    pub pilot_len: Option<u32>,
    pub coherence_len: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Analytic,
    MonteCarlo,
    NearestBaseline,
    Walker,
}

impl Engine {
    pub fn label(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::MonteCarlo => "monte-carlo",
            Engine::NearestBaseline => "nearest-baseline",
            Engine::Walker => "walker",
        }
    }
}

/// The one parameter an experiment varies. A threshold sweep varies only
/// the SINR threshold; the others are evaluated over `thresholds_db`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    ThresholdDb(Vec<f64>),
    NakagamiM(Vec<f64>),
    DomeAngleDeg(Vec<f64>),
    AltitudeKm(Vec<f64>),
    SapCount(Vec<u64>),
    UtCount(Vec<u64>),
    PilotLen(Vec<u32>),
}

impl Sweep {
    pub fn column(&self) -> Option<&'static str> {
        match self {
            Sweep::ThresholdDb(_) => None,
            Sweep::NakagamiM(_) => Some("nakagami_m"),
            Sweep::DomeAngleDeg(_) => Some("dome_angle_deg"),
            Sweep::AltitudeKm(_) => Some("altitude_km"),
            Sweep::SapCount(_) => Some("sap_count"),
            Sweep::UtCount(_) => Some("ut_count"),
            Sweep::PilotLen(_) => Some("pilot_len"),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Sweep::ThresholdDb(v) | Sweep::NakagamiM(v) | Sweep::DomeAngleDeg(v) | Sweep::AltitudeKm(v) => v.len(),
            Sweep::SapCount(v) | Sweep::UtCount(v) => v.len(),
            Sweep::PilotLen(v) => v.len(),
        }
    }

    /// Value of point `i` as written to the CSV.
    pub fn value_text(&self, i: usize) -> String {
        match self {
            Sweep::ThresholdDb(v) | Sweep::NakagamiM(v) | Sweep::DomeAngleDeg(v) | Sweep::AltitudeKm(v) => {
                v[i].to_string()
            }
            Sweep::SapCount(v) | Sweep::UtCount(v) => v[i].to_string(),
            Sweep::PilotLen(v) => v[i].to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputKind {
    #[default]
    Coverage,
    Dss,
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", deny_unknown_fields)]
pub enum CsiChoice {
    #[default]
    Perfect,
    /// Pool size defaults to the pilot length.
    Trained { pool_size: Option<u32> },
    NoBeamforming,
}

impl CsiChoice {
    pub fn resolve(self, pilot_len: u32) -> CsiMode {
        match self {
            CsiChoice::Perfect => CsiMode::Perfect,
            CsiChoice::NoBeamforming => CsiMode::NoBeamforming,
            CsiChoice::Trained { pool_size } => CsiMode::Trained {
                pool_size: pool_size.unwrap_or(pilot_len),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacitySection {
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkerSection {
    pub inclinations_deg: Vec<f64>,
    pub num_planes: u32,
    /// Defaults to the count that matches the Poisson mean at `sap_density`.
    pub sats_per_plane: Option<u32>,
    pub phase_mode: PhaseMode,
    pub observer_lat_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    #[serde(default)]
    pub base: BaseConfig,
    pub sweep: Sweep,
    pub engines: Vec<Engine>,
    #[serde(default)]
    pub output: OutputKind,
    #[serde(default = "default_thresholds")]
    pub thresholds_db: Vec<f64>,
    #[serde(default)]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ilt: IltControl,
    #[serde(default)]
    pub csi: CsiChoice,
    pub capacity: Option<CapacitySection>,
    pub walker: Option<WalkerSection>,
    /// Grid size for DSS output.
    #[serde(default = "default_dss_points")]
    pub dss_points: usize,
}

fn default_thresholds() -> Vec<f64> {
    (-5..=15).map(f64::from).collect()
}

fn default_dss_points() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Issues<'a> {
    prefix: &'a str,
    list: Vec<Issue>,
}

impl Issues<'_> {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.list.push(Issue {
            path: format!("{}.{field}", self.prefix),
            message: message.into(),
        });
    }
}

fn check_range(out: &mut Issues<'_>, field: &str, v: Option<f64>, lo: f64, hi: f64, unit: &str) {
    if let Some(v) = v {
        if !(lo..=hi).contains(&v) {
            out.push(field, format!("{v} outside [{lo}{unit}, {hi}{unit}]"));
        }
    }
}

fn check_positive(out: &mut Issues<'_>, field: &str, v: Option<f64>) {
    if let Some(v) = v {
        if !(v > 0.0) || !v.is_finite() {
            out.push(field, format!("{v} must be positive and finite"));
        }
    }
}

fn check_finite(out: &mut Issues<'_>, field: &str, v: Option<f64>) {
    if let Some(v) = v {
        if !v.is_finite() {
            out.push(field, format!("{v} must be finite"));
        }
    }
}

impl BaseConfig {
    fn check(&self, out: &mut Issues<'_>) {
        for (field, v) in [("sap_density", self.sap_density), ("ut_density", self.ut_density)] {
            match v {
                None => out.push(field, "missing mandatory field"),
                Some(x) if !(x >= 0.0) || !x.is_finite() => out.push(field, format!("{x} must be nonnegative")),
                _ => {}
            }
        }
        check_range(out, "dome_angle_deg", self.dome_angle_deg, 0.0, 90.0, "°");
        check_positive(out, "earth_radius_km", self.earth_radius_km);
        check_positive(out, "altitude_km", self.altitude_km);
        check_positive(out, "reference_loss", self.reference_loss);
        check_positive(out, "carrier_hz", self.carrier_hz);
        check_positive(out, "omega", self.omega);
        if let Some(a) = self.path_loss_exponent {
            if !(a >= 0.0) || !a.is_finite() {
                out.push("path_loss_exponent", format!("{a} must be nonnegative"));
            }
        }
        if let Some(m) = self.nakagami_m {
            if !(m >= 0.5) || !m.is_finite() {
                out.push("nakagami_m", format!("{m} must be at least 0.5"));
            }
        }
        for (field, v) in [
            ("tx_power_data_dbm", self.tx_power_data_dbm),
            ("tx_power_pilot_dbm", self.tx_power_pilot_dbm),
            ("noise_power_dbm", self.noise_power_dbm),
        ] {
            check_finite(out, field, v);
        }
        for (field, v) in [
            ("tx_gain_mainlobe_db", self.tx_gain_mainlobe_db),
            ("tx_gain_sidelobe_db", self.tx_gain_sidelobe_db),
            ("rx_gain_db", self.rx_gain_db),
        ] {
            check_finite(out, field, v);
        }
        let reference = NetworkConfig::reference();
        let tp = self.pilot_len.unwrap_or(reference.pilot_len);
        let tc = self.coherence_len.unwrap_or(reference.coherence_len);
        if tp < 1 {
            out.push("pilot_len", "must be at least 1");
        }
        if tp >= tc {
            out.push("pilot_len", format!("pilot_len {tp} must be shorter than coherence_len {tc}"));
        }
    }

    /// Engine parameters; call only after [`validate`] reported no issues.
    pub fn resolve(&self) -> NetworkConfig {
        let r = NetworkConfig::reference();
        let re = self.earth_radius_km.unwrap_or(EARTH_RADIUS_KM);
        let alt = self.altitude_km.unwrap_or(r.geometry.altitude_km());
        let eta = self
            .dome_angle_deg
            .map(f64::to_radians)
            .unwrap_or(r.geometry.dome_angle_rad);
        let c = r.channel;
        NetworkConfig {
            geometry: GeometryConfig {
                earth_radius_km: re,
                shell_radius_km: re + alt,
                dome_angle_rad: eta,
            },
            channel: ChannelConfig {
                path_loss_exponent: self.path_loss_exponent.unwrap_or(c.path_loss_exponent),
                reference_loss: self.reference_loss.unwrap_or(c.reference_loss),
                carrier_hz: self.carrier_hz.unwrap_or(c.carrier_hz),
                tx_gain_mainlobe_db: self.tx_gain_mainlobe_db.unwrap_or(c.tx_gain_mainlobe_db),
                tx_gain_sidelobe_db: self.tx_gain_sidelobe_db.unwrap_or(c.tx_gain_sidelobe_db),
                rx_gain_db: self.rx_gain_db.unwrap_or(c.rx_gain_db),
                nakagami_m: self.nakagami_m.unwrap_or(c.nakagami_m),
                omega: self.omega.unwrap_or(c.omega),
            },
            sap_density: self.sap_density.unwrap_or(0.0),
            ut_density: self.ut_density.unwrap_or(0.0),
            tx_power_data: self.tx_power_data_dbm.map(dbm_to_watts).unwrap_or(r.tx_power_data),
            tx_power_pilot: self.tx_power_pilot_dbm.map(dbm_to_watts).unwrap_or(r.tx_power_pilot),
            noise_power: self.noise_power_dbm.map(dbm_to_watts).unwrap_or(r.noise_power),
            pilot_len: self.pilot_len.unwrap_or(r.pilot_len),
            coherence_len: self.coherence_len.unwrap_or(r.coherence_len),
        }
    }
}

/// Network config of sweep point `i`.
pub fn sweep_point(base: &NetworkConfig, sweep: &Sweep, i: usize) -> NetworkConfig {
    let mut cfg = *base;
    let re = cfg.geometry.earth_radius_km;
    match sweep {
        Sweep::ThresholdDb(_) => {}
        Sweep::NakagamiM(v) => cfg.channel.nakagami_m = v[i],
        Sweep::DomeAngleDeg(v) => cfg.geometry.dome_angle_rad = v[i].to_radians(),
        Sweep::AltitudeKm(v) => cfg.geometry.shell_radius_km = re + v[i],
        Sweep::SapCount(v) => {
            let rs = cfg.geometry.shell_radius_km;
            cfg.sap_density = v[i] as f64 / (4.0 * PI * rs * rs);
        }
        Sweep::UtCount(v) => cfg.ut_density = v[i] as f64 / (4.0 * PI * re * re),
        Sweep::PilotLen(v) => cfg.pilot_len = v[i],
    }
    cfg
}

fn check_experiment(e: &Experiment, prefix: &str, out: &mut Vec<Issue>) {
    let mut is = Issues {
        prefix: &format!("{prefix}.base"),
        list: Vec::new(),
    };
    e.base.check(&mut is);
    out.append(&mut is.list);
    let mut is = Issues { prefix, list: Vec::new() };
    if e.name.is_empty() || !e.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        is.push("name", "must be nonempty and use only letters, digits, '-' and '_'");
    }
    if e.sweep.len() == 0 {
        is.push("sweep", "must be nonempty");
    }
    if e.engines.is_empty() {
        is.push("engines", "must name at least one engine");
    }
    let mc = e
        .engines
        .iter()
        .any(|g| matches!(g, Engine::MonteCarlo | Engine::NearestBaseline | Engine::Walker));
    if mc && e.trials < 1 {
        is.push("trials", "must be at least 1 when a Monte Carlo engine is selected");
    }
    if !matches!(e.sweep, Sweep::ThresholdDb(_)) && e.thresholds_db.is_empty() {
        is.push("thresholds_db", "must be nonempty");
    }
    let thresholds: &[f64] = match &e.sweep {
        Sweep::ThresholdDb(v) => v,
        _ => &e.thresholds_db,
    };
    if thresholds.iter().any(|t| !t.is_finite()) {
        is.push("thresholds_db", "values must be finite");
    }
    if let Err(err) = e.ilt.validate() {
        is.push("ilt", err.to_string());
    }
    match &e.sweep {
        Sweep::NakagamiM(v) if v.iter().any(|&m| !(m >= 0.5) || !m.is_finite()) => {
            is.push("sweep.nakagami_m", "values must be at least 0.5")
        }
        Sweep::DomeAngleDeg(v) if v.iter().any(|&x| !(0.0..=90.0).contains(&x)) => {
            is.push("sweep.dome_angle_deg", "values outside [0°, 90°]")
        }
        Sweep::AltitudeKm(v) if v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) => {
            is.push("sweep.altitude_km", "values must be positive")
        }
        Sweep::UtCount(v) if v.contains(&0) && e.output == OutputKind::Capacity => {
            is.push("sweep.ut_count", "capacity needs at least one user")
        }
        Sweep::PilotLen(v) => {
            let tc = e.base.coherence_len.unwrap_or(NetworkConfig::reference().coherence_len);
            if v.iter().any(|&p| p < 1 || p >= tc) {
                is.push("sweep.pilot_len", format!("values must lie in [1, coherence_len = {tc})"));
            }
        }
        _ => {}
    }
    if let CsiChoice::Trained { pool_size: Some(t) } = e.csi {
        let tp_min = match &e.sweep {
            Sweep::PilotLen(v) => v.iter().copied().min().unwrap_or(0),
            _ => e.base.pilot_len.unwrap_or(NetworkConfig::reference().pilot_len),
        };
        if t < 1 || t > tp_min {
            is.push("csi.pool_size", format!("{t} must lie in [1, pilot_len = {tp_min}]"));
        }
    }
    match e.output {
        OutputKind::Capacity => {
            if !matches!(e.sweep, Sweep::UtCount(_)) {
                is.push("sweep", "capacity output needs a ut_count sweep");
            }
            let mut engines = e.engines.clone();
            engines.sort();
            engines.dedup();
            if engines != [Engine::Analytic, Engine::NearestBaseline] {
                is.push("engines", "capacity output takes exactly the analytic and nearest-baseline engines");
            }
            match &e.capacity {
                None => is.push("capacity", "missing section for capacity output"),
                Some(c) if !(c.bandwidth_hz > 0.0) || !c.bandwidth_hz.is_finite() => {
                    is.push("capacity.bandwidth_hz", "must be positive")
                }
                _ => {}
            }
        }
        OutputKind::Dss => {
            if e.engines.iter().any(|g| matches!(g, Engine::NearestBaseline | Engine::Walker)) {
                is.push("engines", "DSS output supports the analytic and monte-carlo engines only");
            }
            if e.dss_points < 2 {
                is.push("dss_points", "must be at least 2");
            }
        }
        OutputKind::Coverage => {}
    }
    if e.engines.contains(&Engine::Walker) {
        match &e.walker {
            None => is.push("walker", "missing section for the walker engine"),
            Some(w) => {
                if w.inclinations_deg.is_empty() {
                    is.push("walker.inclinations_deg", "must be nonempty");
                }
                if w.inclinations_deg.iter().any(|i| !(0.0..=90.0).contains(i)) {
                    is.push("walker.inclinations_deg", "values outside [0°, 90°]");
                }
                if w.num_planes < 1 {
                    is.push("walker.num_planes", "must be at least 1");
                }
                if w.sats_per_plane == Some(0) {
                    is.push("walker.sats_per_plane", "must be at least 1");
                }
                if !(-90.0..=90.0).contains(&w.observer_lat_deg) {
                    is.push("walker.observer_lat_deg", "outside [-90°, 90°]");
                }
            }
        }
    }
    out.append(&mut is.list);
}

/// Full schema and range report. An empty list means the file can be run.
pub fn validate(file: &ConfigFile) -> Vec<Issue> {
    let mut out = Vec::new();
    if file.experiments.is_empty() {
        out.push(Issue {
            path: "experiments".into(),
            message: "must contain at least one experiment".into(),
        });
    }
    let mut names = std::collections::BTreeSet::new();
    for (i, e) in file.experiments.iter().enumerate() {
        let prefix = format!("experiments[{i}]");
        if !names.insert(e.name.as_str()) {
            out.push(Issue {
                path: format!("{prefix}.name"),
                message: format!("duplicate experiment name {:?}", e.name),
            });
        }
        check_experiment(e, &prefix, &mut out);
        if out.is_empty() {
            // Cross-check every resolved sweep point against the engine's
            // own validation.
            let base = e.base.resolve();
            for k in 0..e.sweep.len() {
                if let Err(err) = sweep_point(&base, &e.sweep, k).validate() {
                    out.push(Issue {
                        path: format!("{prefix}.sweep[{k}]"),
                        message: err.to_string(),
                    });
                }
            }
        }
    }
    out
}
