//! Executes validated experiments and writes their CSV files.

use std::path::{Path, PathBuf};

use leocf_core::analytic::{
    analytic_coverage_curve, system_capacity, CapacityConfig, CoverageCurve, CoverageModel, IltControl, Scheme,
};
use leocf_core::constellation::{coverage_at_latitude, WalkerSpec};
use leocf_core::montecarlo::{empirical_dss, estimate_coverage, nearest_satellite_coverage, CsiMode, EmpiricalCoverage};
use leocf_core::rng::derive_seed;
use leocf_core::NetworkConfig;
use serde::Serialize;

use crate::config::{sweep_point, Engine, Experiment, OutputKind, Sweep, WalkerSection};

/// Version of the CSV column layouts below.
pub const SCHEMA_VERSION: u32 = 1;

/// Threshold grid over which the nearest-satellite coverage is integrated
/// for capacity.
fn capacity_grid() -> Vec<f64> {
    (-60..=80).map(|i| i as f64 * 0.5).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub experiment: String,
    pub engines: Vec<&'static str>,
    pub columns: Vec<String>,
    pub rows: usize,
    pub partial: bool,
}

#[derive(Debug)]
pub enum RunError {
    Numeric(leocf_core::Error),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Numeric(e) => write!(f, "numeric failure: {e}"),
            RunError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<leocf_core::Error> for RunError {
    fn from(e: leocf_core::Error) -> Self {
        RunError::Numeric(e)
    }
}

/// Rows of one output file, accumulated before writing.
struct Table {
    file: String,
    engines: Vec<&'static str>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: String, engines: Vec<&'static str>, lead: Option<&str>, columns: &[&str]) -> Self {
        let columns = lead.into_iter().chain(columns.iter().copied()).map(String::from).collect();
        Table {
            file,
            engines,
            columns,
            rows: Vec::new(),
        }
    }

    fn write(&self, dir: &Path) -> Result<(), RunError> {
        let path = dir.join(&self.file);
        let io = |e: csv::Error| RunError::Io(format!("writing {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(io)?;
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()
            .map_err(|e| RunError::Io(format!("writing {}: {e}", path.display())))
    }
}

/// Finite values print in shortest round-trip form; anything else is an
/// outage marker.
pub fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "outage".to_string()
    }
}

pub struct ExperimentOutcome {
    pub records: Vec<OutputRecord>,
    pub error: Option<RunError>,
}

/// Runs one experiment and writes its files into `dir`. On a numeric
/// failure the rows computed so far are still written and flagged partial.
pub fn run_experiment(e: &Experiment, seed: u64, dir: &Path) -> ExperimentOutcome {
    let mut tables = Vec::new();
    let result = match e.output {
        OutputKind::Coverage => coverage(e, seed, &mut tables),
        OutputKind::Dss => dss(e, seed, &mut tables),
        OutputKind::Capacity => capacity(e, seed, &mut tables),
    };
    let expected_rows = tables.iter().map(|t| t.rows.len()).max().unwrap_or(0);
    let mut records = Vec::new();
    let mut error = result.err();
    for t in &tables {
        if let Err(io) = t.write(dir) {
            error.get_or_insert(io);
            continue;
        }
        records.push(OutputRecord {
            file: t.file.clone(),
            experiment: e.name.clone(),
            engines: t.engines.clone(),
            columns: t.columns.clone(),
            rows: t.rows.len(),
            partial: error.is_some() || t.rows.len() < expected_rows,
        });
    }
    ExperimentOutcome { records, error }
}

fn thresholds(e: &Experiment) -> &[f64] {
    match &e.sweep {
        Sweep::ThresholdDb(v) => v,
        _ => &e.thresholds_db,
    }
}

fn has(e: &Experiment, g: Engine) -> bool {
    e.engines.contains(&g)
}

fn walker_spec(w: &WalkerSection, cfg: &NetworkConfig) -> WalkerSpec {
    let g = &cfg.geometry;
    let mut spec = WalkerSpec::matched_to_density(
        &w.inclinations_deg,
        w.num_planes,
        g.altitude_km(),
        g.earth_radius_km,
        cfg.sap_density,
        w.phase_mode,
    );
    if let Some(n) = w.sats_per_plane {
        for s in &mut spec.shells {
            s.sats_per_plane = n;
        }
    }
    spec
}

fn empirical_rows(table: &mut Table, lead: &Option<String>, est: &EmpiricalCoverage) {
    for (i, t) in est.curve.thresholds_db.iter().enumerate() {
        let mut row: Vec<String> = lead.iter().cloned().collect();
        row.extend([
            fmt_value(*t),
            fmt_value(est.curve.coverage[i]),
            fmt_value(est.ci_low[i]),
            fmt_value(est.ci_high[i]),
        ]);
        table.rows.push(row);
    }
}

fn coverage(e: &Experiment, seed: u64, tables: &mut Vec<Table>) -> Result<(), RunError> {
    let base = e.base.resolve();
    let th = thresholds(e).to_vec();
    let lead_col = e.sweep.column();
    let points = if matches!(e.sweep, Sweep::ThresholdDb(_)) { 1 } else { e.sweep.len() };
    let name = &e.name;
    let engine_table = |g: Engine, cols: &[&str]| Table::new(format!("{name}_{}.csv", g.label()), vec![g.label()], lead_col, cols);
    let mut analytic_t = has(e, Engine::Analytic).then(|| engine_table(Engine::Analytic, &["threshold_db", "coverage_analytic"]));
    let mut mc_t = has(e, Engine::MonteCarlo)
        .then(|| engine_table(Engine::MonteCarlo, &["threshold_db", "coverage_mc", "ci_low", "ci_high"]));
    let mut nearest_t = has(e, Engine::NearestBaseline)
        .then(|| engine_table(Engine::NearestBaseline, &["threshold_db", "coverage_nearest", "ci_low", "ci_high"]));
    let mut walker_t = has(e, Engine::Walker)
        .then(|| engine_table(Engine::Walker, &["threshold_db", "coverage_walker", "ci_low", "ci_high"]));
    let mut joint_t = (analytic_t.is_some() && mc_t.is_some()).then(|| {
        Table::new(
            format!("{name}.csv"),
            vec![Engine::Analytic.label(), Engine::MonteCarlo.label()],
            lead_col,
            &["threshold_db", "coverage_analytic", "coverage_mc", "ci_low", "ci_high"],
        )
    });

    let result = (|| -> Result<(), RunError> {
        for k in 0..points {
            let cfg = sweep_point(&base, &e.sweep, k);
            let lead = lead_col.map(|_| e.sweep.value_text(k));
            let point_seed = derive_seed(seed, k as u64);
            let curve: Option<CoverageCurve> = match &mut analytic_t {
                Some(t) => {
                    let c = analytic_coverage_curve(&cfg, &th, &e.ilt)?;
                    for (i, x) in th.iter().enumerate() {
                        let mut row: Vec<String> = lead.iter().cloned().collect();
                        row.extend([fmt_value(*x), fmt_value(c.coverage[i])]);
                        t.rows.push(row);
                    }
                    Some(c)
                }
                None => None,
            };
            if let Some(t) = &mut mc_t {
                let est = estimate_coverage(&cfg, &th, e.trials, e.csi.resolve(cfg.pilot_len), point_seed)?;
                empirical_rows(t, &lead, &est);
                if let (Some(j), Some(c)) = (&mut joint_t, &curve) {
                    for (i, x) in th.iter().enumerate() {
                        let mut row: Vec<String> = lead.iter().cloned().collect();
                        row.extend([
                            fmt_value(*x),
                            fmt_value(c.coverage[i]),
                            fmt_value(est.curve.coverage[i]),
                            fmt_value(est.ci_low[i]),
                            fmt_value(est.ci_high[i]),
                        ]);
                        j.rows.push(row);
                    }
                }
            }
            if let Some(t) = &mut nearest_t {
                let est = nearest_satellite_coverage(&cfg, &th, e.trials, point_seed)?;
                empirical_rows(t, &lead, &est);
            }
            if let Some(t) = &mut walker_t {
                let w = e.walker.as_ref().expect("validated walker section");
                let spec = walker_spec(w, &cfg);
                let est = coverage_at_latitude(&spec, w.observer_lat_deg, &cfg, &th, e.trials, point_seed)?;
                empirical_rows(t, &lead, &est);
            }
        }
        Ok(())
    })();
    tables.extend([analytic_t, mc_t, nearest_t, walker_t, joint_t].into_iter().flatten());
    result
}

/// Grid spanning the analytic DSS CCDF from 0.999 down to 0.001.
fn analytic_dss_grid(model: &CoverageModel, points: usize) -> Result<Vec<f64>, RunError> {
    let ccdf = |x: f64| model.dss_ccdf(x).map(|o| o.probability);
    let mut x = 1e-12;
    while ccdf(x)? >= 0.999 {
        x *= 2.0;
        if x > 1e12 {
            break;
        }
    }
    let lo = x / 2.0;
    while ccdf(x)? > 1e-3 && x < 1e12 {
        x *= 2.0;
    }
    let hi = x;
    Ok((0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect())
}

fn dss(e: &Experiment, seed: u64, tables: &mut Vec<Table>) -> Result<(), RunError> {
    let base = e.base.resolve();
    let lead_col = e.sweep.column();
    let points = if matches!(e.sweep, Sweep::ThresholdDb(_)) { 1 } else { e.sweep.len() };
    let name = &e.name;
    let mut analytic_t = has(e, Engine::Analytic).then(|| {
        Table::new(format!("{name}_analytic.csv"), vec!["analytic"], lead_col, &["dss", "ccdf_analytic"])
    });
    let mut mc_t = has(e, Engine::MonteCarlo).then(|| {
        Table::new(format!("{name}_monte-carlo.csv"), vec!["monte-carlo"], lead_col, &["dss", "ccdf_mc"])
    });
    let mut joint_t = (analytic_t.is_some() && mc_t.is_some()).then(|| {
        Table::new(
            format!("{name}.csv"),
            vec!["analytic", "monte-carlo"],
            lead_col,
            &["dss", "ccdf_analytic", "ccdf_mc"],
        )
    });
    let result = (|| -> Result<(), RunError> {
        for k in 0..points {
            let cfg = sweep_point(&base, &e.sweep, k);
            let lead = lead_col.map(|_| e.sweep.value_text(k));
            let samples = match mc_t {
                Some(_) => Some(empirical_dss(&cfg, e.trials, e.csi.resolve(cfg.pilot_len), derive_seed(seed, k as u64))?),
                None => None,
            };
            let model = match analytic_t {
                Some(_) => Some(CoverageModel::new(&cfg, &e.ilt)?),
                None => None,
            };
            let grid = match (&samples, &model) {
                (Some(s), _) => s.grid(e.dss_points),
                (None, Some(m)) => analytic_dss_grid(m, e.dss_points)?,
                (None, None) => Vec::new(),
            };
            for &x in &grid {
                let a = model.as_ref().map(|m| m.dss_ccdf(x).map(|o| o.probability)).transpose()?;
                let c = samples.as_ref().map(|s| s.ccdf(x));
                let row = |vals: &[f64]| -> Vec<String> {
                    lead.iter().cloned().chain(std::iter::once(fmt_value(x))).chain(vals.iter().map(|v| fmt_value(*v))).collect()
                };
                if let (Some(t), Some(a)) = (&mut analytic_t, a) {
                    t.rows.push(row(&[a]));
                }
                if let (Some(t), Some(c)) = (&mut mc_t, c) {
                    t.rows.push(row(&[c]));
                }
                if let (Some(t), Some(a), Some(c)) = (&mut joint_t, a, c) {
                    t.rows.push(row(&[a, c]));
                }
            }
        }
        Ok(())
    })();
    tables.extend([analytic_t, mc_t, joint_t].into_iter().flatten());
    result
}

fn capacity(e: &Experiment, seed: u64, tables: &mut Vec<Table>) -> Result<(), RunError> {
    let base = e.base.resolve();
    let Sweep::UtCount(counts) = &e.sweep else {
        unreachable!("validated capacity sweep");
    };
    let bw = e.capacity.as_ref().expect("validated capacity section").bandwidth_hz;
    let mut t = Table::new(
        format!("{}.csv", e.name),
        vec!["analytic", "nearest-baseline"],
        None,
        &["n_users", "system_capacity_cf", "system_capacity_nearest", "per_user_cf", "per_user_nearest"],
    );
    let grid = capacity_grid();
    let result = (|| -> Result<(), RunError> {
        for (k, &n) in counts.iter().enumerate() {
            let cfg = sweep_point(&base, &e.sweep, k);
            let cap = |scheme| CapacityConfig {
                bandwidth_hz: bw,
                num_users: n,
                scheme,
            };
            let cf = system_capacity(&cfg, &cap(Scheme::CellFree), &e.ilt, None)?;
            let near_curve = nearest_satellite_coverage(&cfg, &grid, e.trials, derive_seed(seed, k as u64))?.curve;
            let near = system_capacity(&cfg, &cap(Scheme::NearestSatellite), &e.ilt, Some(&near_curve))?;
            t.rows.push(vec![
                n.to_string(),
                fmt_value(cf.system_bps),
                fmt_value(near.system_bps),
                fmt_value(cf.per_user_bps),
                fmt_value(near.per_user_bps),
            ]);
        }
        Ok(())
    })();
    tables.push(t);
    result
}

/// Resolved parameters of one experiment, as recorded in the manifest.
#[derive(Debug, Serialize)]
pub struct ResolvedExperiment<'a> {
    pub name: &'a str,
    pub network: NetworkConfig,
    pub sweep: &'a Sweep,
    pub engines: &'a [Engine],
    pub output: OutputKind,
    pub thresholds_db: &'a [f64],
    pub trials: usize,
    pub seed: u64,
    pub ilt: IltControl,
    pub csi: CsiMode,
    pub capacity_bandwidth_hz: Option<f64>,
    pub walker: Option<WalkerSpec>,
    pub observer_lat_deg: Option<f64>,
}

pub fn resolve_for_manifest(e: &Experiment, seed: u64) -> ResolvedExperiment<'_> {
    let network = e.base.resolve();
    ResolvedExperiment {
        name: &e.name,
        network,
        sweep: &e.sweep,
        engines: &e.engines,
        output: e.output,
        thresholds_db: thresholds(e),
        trials: e.trials,
        seed,
        ilt: e.ilt,
        csi: e.csi.resolve(network.pilot_len),
        capacity_bandwidth_hz: e.capacity.as_ref().map(|c| c.bandwidth_hz),
        walker: e.walker.as_ref().map(|w| walker_spec(w, &network)),
        observer_lat_deg: e.walker.as_ref().map(|w| w.observer_lat_deg),
    }
}

pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("LEOCF_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("leocf-out"))
}
