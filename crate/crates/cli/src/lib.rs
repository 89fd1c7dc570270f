//! Experiment orchestration: sweep expansion, seeded batch runs, benchmark
//! schemes, and deterministic CSV/JSON outputs.
//!
//! The results file is byte-reproducible for identical specs and seeds; wall
//! clock timings go to a separate file so they never perturb that contract.

pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use bdisac::error::Error as CoreError;
use bdisac::pdd::{self, PddConfig, TraceRecord};
use bdisac::reflection::ReflectionMatrix;
use bdisac::scenario::{build_channels, ChannelSet, ScenarioConfig, ScenarioFile};
use bdisac::{metrics, tdma};

pub use presets::{base_scenario, preset, PRESET_NAMES};

// ─── Experiment description ────────────────────────────────────────────────────

/// Sweepable scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    MX,
    MZ,
    SnrDb,
    GammaPcrb,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::MX => "m_x",
            SweepParam::MZ => "m_z",
            SweepParam::SnrDb => "snr_db",
            SweepParam::GammaPcrb => "gamma_pcrb",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// Reflection design schemes the harness can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Optimized,
    Isotropic,
    Random100,
    Tdma,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Optimized => "optimized",
            Scheme::Isotropic => "isotropic",
            Scheme::Random100 => "random100",
            Scheme::Tdma => "tdma",
        }
    }
}

/// Whether a batch evaluates the sensing-only objective or the joint design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Sensing,
    Isac,
}

impl RunMode {
    pub fn name(&self) -> &'static str {
        match self {
            RunMode::Sensing => "sensing",
            RunMode::Isac => "isac",
        }
    }
}

/// A full experiment: scene, algorithm settings, optional sweep, seeds and
/// schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub pdd: PddConfig,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

impl ExperimentSpec {
    pub fn validate(&self, mode: RunMode) -> Result<(), String> {
        if self.seeds.is_empty() {
            return Err("at least one seed is required".into());
        }
        if self.schemes.is_empty() {
            return Err("at least one scheme is required".into());
        }
        if mode == RunMode::Sensing && self.schemes.contains(&Scheme::Tdma) {
            return Err("the tdma scheme needs communication users (isac mode)".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err("sweep value list is empty".into());
            }
            for &v in &sweep.values {
                match sweep.param {
                    SweepParam::MX | SweepParam::MZ => {
                        if v < 1.0 || v.fract() != 0.0 {
                            return Err(format!(
                                "{} sweep values must be positive integers, got {v}",
                                sweep.param.name()
                            ));
                        }
                    }
                    SweepParam::GammaPcrb => {
                        if v <= 0.0 || v.is_nan() {
                            return Err(format!("gamma_pcrb sweep value {v} must be positive"));
                        }
                    }
                    SweepParam::SnrDb => {}
                }
            }
        }
        self.scenario.validate().map_err(|e| e.to_string())
    }
}

/// Applies one sweep value to a scenario. Element-count sweeps keep the
/// group count and re-split the surface uniformly; the SNR sweep moves every
/// transmit power against the fixed noise floor.
pub fn apply_sweep(
    base: &ScenarioConfig,
    param: SweepParam,
    value: f64,
) -> Result<ScenarioConfig, String> {
    let mut cfg = base.clone();
    match param {
        SweepParam::MX | SweepParam::MZ => {
            let count = value as usize;
            if param == SweepParam::MX {
                cfg.m_x = count;
            } else {
                cfg.m_z = count;
            }
            let m = cfg.m_total();
            let groups = base.group_sizes.len();
            if !m.is_multiple_of(groups) {
                return Err(format!(
                    "cannot split {m} elements into {groups} equal groups"
                ));
            }
            cfg.group_sizes = vec![m / groups; groups];
        }
        SweepParam::SnrDb => {
            let p = cfg.sigma2 * 10f64.powf(value / 10.0);
            cfg.p0 = p;
            for u in &mut cfg.users {
                u.power = p;
            }
        }
        SweepParam::GammaPcrb => {
            cfg.gamma_pcrb = value;
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

// ─── Per-cell evaluation ───────────────────────────────────────────────────────

/// Result of one (sweep value, seed, scheme) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub sweep_index: usize,
    pub sweep_value: Option<f64>,
    pub seed: u64,
    pub scheme: Scheme,
    pub status: String,
    pub feasible: bool,
    pub pcrb: f64,
    pub f_o: f64,
    pub min_rate: f64,
    pub rates: Vec<f64>,
    pub q_star: Option<f64>,
    pub iterations: usize,
    pub runtime_s: f64,
    pub phi: Vec<(String, ReflectionMatrix)>,
    pub trace: Vec<TraceRecord>,
}

/// Stream salt separating auxiliary draws from the channel realization, so
/// adding schemes never shifts the channels of a seed.
const SCHEME_SEED_SALT: u64 = 0x52414e44_30303130;

fn random100_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ SCHEME_SEED_SALT)
}

/// Best of exactly `count` random symmetric-unitary reflections. In sensing
/// mode the winner has the lowest PCRB; in joint mode it is the highest
/// min-rate among threshold-feasible samples, falling back to the highest
/// min-rate overall when none is feasible.
pub fn best_random_reflection(
    count: usize,
    mode: RunMode,
    ch: &ChannelSet,
    cfg: &ScenarioConfig,
    rng: &mut impl rand::Rng,
) -> Result<(ReflectionMatrix, metrics::IsacMetrics), CoreError> {
    let mut best: Option<(ReflectionMatrix, metrics::IsacMetrics)> = None;
    for _ in 0..count {
        let cand = ReflectionMatrix::random(&cfg.group_sizes, rng);
        let m = metrics::evaluate(&cand, ch, cfg)?;
        let better = match &best {
            None => true,
            Some((_, b)) => match mode {
                RunMode::Sensing => m.pcrb < b.pcrb,
                RunMode::Isac => (m.feasible, m.min_rate) > (b.feasible, b.min_rate),
            },
        };
        if better {
            best = Some((cand, m));
        }
    }
    Ok(best.expect("count >= 1"))
}

/// Everything one cell produces: status, feasibility, metrics, the TDMA
/// fraction when applicable, an iteration count, labelled reflection
/// matrices and the optimizer trace.
type CellOutcome = (
    String,
    bool,
    metrics::IsacMetrics,
    Option<f64>,
    usize,
    Vec<(String, ReflectionMatrix)>,
    Vec<TraceRecord>,
);

fn evaluate_cell(
    mode: RunMode,
    cfg: &ScenarioConfig,
    pdd_cfg: &PddConfig,
    seed: u64,
    scheme: Scheme,
) -> Result<CellOutcome, CoreError> {
    let ch = build_channels(cfg, &mut ChaCha8Rng::seed_from_u64(seed))?;
    match scheme {
        Scheme::Isotropic => {
            let phi = ReflectionMatrix::identity(&cfg.group_sizes);
            let m = metrics::evaluate(&phi, &ch, cfg)?;
            let feas = m.feasible;
            Ok(("ok".into(), feas, m, None, 0, vec![("phi".into(), phi)], vec![]))
        }
        Scheme::Random100 => {
            let mut rng = random100_rng(seed);
            let (phi, m) = best_random_reflection(100, mode, &ch, cfg, &mut rng)?;
            let feas = m.feasible;
            Ok(("ok".into(), feas, m, None, 100, vec![("phi".into(), phi)], vec![]))
        }
        Scheme::Optimized => match mode {
            RunMode::Sensing => {
                let (phi, _, trace) = pdd::solve_sensing_only(&ch, cfg, pdd_cfg)?;
                let m = metrics::evaluate(&phi, &ch, cfg)?;
                let feas = m.feasible;
                let iters = trace.last().map(|t| t.outer + 1).unwrap_or(0);
                Ok(("ok".into(), feas, m, None, iters, vec![("phi".into(), phi)], trace))
            }
            RunMode::Isac => match pdd::solve_isac(&ch, cfg, pdd_cfg) {
                Ok((phi, m, trace)) => {
                    let feas = m.feasible;
                    let iters = trace.last().map(|t| t.outer + 1).unwrap_or(0);
                    Ok(("ok".into(), feas, m, None, iters, vec![("phi".into(), phi)], trace))
                }
                Err(CoreError::InfeasibleThreshold { floor, .. }) => {
                    let phi = ReflectionMatrix::identity(&cfg.group_sizes);
                    let mut m = metrics::evaluate(&phi, &ch, cfg)?;
                    m.pcrb = floor;
                    m.rates.clear();
                    m.min_rate = f64::NAN;
                    Ok((
                        "infeasible_threshold".into(),
                        false,
                        m,
                        None,
                        0,
                        vec![],
                        vec![],
                    ))
                }
                Err(e) => Err(e),
            },
        },
        Scheme::Tdma => match tdma::plan_tdma(&ch, cfg, pdd_cfg) {
            Ok(plan) => {
                let m = metrics::IsacMetrics {
                    pcrb: plan.pcrb,
                    rates: plan.rates.clone(),
                    min_rate: plan.min_rate,
                    f_o: if plan.pcrb > 0.0 {
                        1.0 / plan.pcrb - ch.f_p
                    } else {
                        f64::NAN
                    },
                    feasible: plan.feasible,
                };
                let feas = plan.feasible;
                Ok((
                    "ok".into(),
                    feas,
                    m,
                    Some(plan.q),
                    0,
                    vec![
                        ("phi_s".into(), plan.phi_s.clone()),
                        ("phi_c".into(), plan.phi_c.clone()),
                    ],
                    vec![],
                ))
            }
            Err(CoreError::InfeasibleThreshold { floor, .. }) => {
                let m = metrics::IsacMetrics {
                    pcrb: floor,
                    rates: vec![],
                    min_rate: f64::NAN,
                    f_o: f64::NAN,
                    feasible: false,
                };
                Ok(("infeasible_threshold".into(), false, m, None, 0, vec![], vec![]))
            }
            Err(e) => Err(e),
        },
    }
}

// ─── Batch driver ──────────────────────────────────────────────────────────────

/// Summary of a completed batch.
#[derive(Debug)]
pub struct RunSummary {
    pub cells: Vec<CellResult>,
    pub results_path: PathBuf,
}

/// Runs every (sweep value x seed x scheme) cell and writes `results.csv`,
/// `runtimes.csv`, `manifest.json`, per-run traces and reflection matrices
/// under `out_dir`. Cells run concurrently up to `workers` threads
/// (`0` = rayon default); row order and bytes are independent of the worker
/// count. Infeasible cells are recorded with a status, not aborted.
pub fn run(
    mode: RunMode,
    spec: &ExperimentSpec,
    out_dir: &Path,
    workers: usize,
) -> Result<RunSummary, String> {
    spec.validate(mode)?;
    std::fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;

    let sweep_values: Vec<Option<f64>> = match &spec.sweep {
        None => vec![None],
        Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
    };
    let mut cells = Vec::new();
    for (vi, value) in sweep_values.iter().enumerate() {
        for &seed in &spec.seeds {
            for &scheme in &spec.schemes {
                cells.push((vi, *value, seed, scheme));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    let results: Vec<Result<CellResult, String>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(vi, value, seed, scheme)| {
                let cfg = match (value, &spec.sweep) {
                    (Some(v), Some(sweep)) => apply_sweep(&spec.scenario, sweep.param, v)?,
                    _ => spec.scenario.clone(),
                };
                let start = Instant::now();
                let outcome = evaluate_cell(mode, &cfg, &spec.pdd, seed, scheme);
                let runtime = start.elapsed().as_secs_f64();
                let (status, feasible, m, q_star, iterations, phi, trace) = match outcome {
                    Ok(parts) => parts,
                    Err(e) => (
                        format!("error: {e}"),
                        false,
                        metrics::IsacMetrics {
                            pcrb: f64::NAN,
                            rates: vec![],
                            min_rate: f64::NAN,
                            f_o: f64::NAN,
                            feasible: false,
                        },
                        None,
                        0,
                        vec![],
                        vec![],
                    ),
                };
                Ok(CellResult {
                    sweep_index: vi,
                    sweep_value: value,
                    seed,
                    scheme,
                    status,
                    feasible,
                    pcrb: m.pcrb,
                    f_o: m.f_o,
                    min_rate: m.min_rate,
                    rates: m.rates,
                    q_star,
                    iterations,
                    runtime_s: runtime,
                    phi,
                    trace,
                })
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    rows.sort_by(|a, b| {
        (a.sweep_index, a.seed, a.scheme.name()).cmp(&(b.sweep_index, b.seed, b.scheme.name()))
    });

    let results_path = output::write_outputs(mode, spec, &rows, out_dir).map_err(|e| e.to_string())?;
    Ok(RunSummary {
        cells: rows,
        results_path,
    })
}

/// Writes the SDMA-versus-TDMA comparison table for a threshold grid.
pub fn run_compare(
    spec: &ExperimentSpec,
    out_dir: &Path,
) -> Result<PathBuf, String> {
    if spec.scenario.users.is_empty() {
        return Err("the comparison needs communication users".into());
    }
    let gammas: Vec<f64> = match &spec.sweep {
        Some(Sweep {
            param: SweepParam::GammaPcrb,
            values,
        }) => values.clone(),
        _ => return Err("compare requires a gamma_pcrb sweep".into()),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;
    let mut all_rows = Vec::new();
    for &seed in &spec.seeds {
        let ch = build_channels(&spec.scenario, &mut ChaCha8Rng::seed_from_u64(seed))
            .map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SCHEME_SEED_SALT);
        let rows = tdma::compare_sdma_tdma(
            &ch,
            &spec.scenario,
            &spec.pdd,
            &gammas,
            20_000,
            &mut rng,
        )
        .map_err(|e| e.to_string())?;
        all_rows.push((seed, rows));
    }
    output::write_compare(&all_rows, out_dir).map_err(|e| e.to_string())
}

/// Evaluates the sensing beampattern of the optimized, isotropic and
/// best-random reflections on a uniform grid over `[0, pi)` and writes one
/// long-format CSV.
pub fn run_beampattern(
    spec: &ExperimentSpec,
    out_dir: &Path,
    resolution: usize,
) -> Result<PathBuf, String> {
    if resolution < 2 {
        return Err("beampattern resolution must be at least 2 points".into());
    }
    std::fs::create_dir_all(out_dir).map_err(|e| e.to_string())?;
    let grid: Vec<f64> = (0..resolution)
        .map(|i| i as f64 * std::f64::consts::PI / resolution as f64)
        .collect();
    let mut sections = Vec::new();
    for &seed in &spec.seeds {
        let ch = build_channels(&spec.scenario, &mut ChaCha8Rng::seed_from_u64(seed))
            .map_err(|e| e.to_string())?;
        let mut schemes: Vec<(&str, ReflectionMatrix)> = Vec::new();
        let (phi_opt, _, _) =
            pdd::solve_isac(&ch, &spec.scenario, &spec.pdd).map_err(|e| e.to_string())?;
        schemes.push(("optimized", phi_opt));
        schemes.push((
            "isotropic",
            ReflectionMatrix::identity(&spec.scenario.group_sizes),
        ));
        let mut rng = random100_rng(seed);
        let (phi_rand, _) =
            best_random_reflection(100, RunMode::Isac, &ch, &spec.scenario, &mut rng)
                .map_err(|e| e.to_string())?;
        schemes.push(("random100", phi_rand));
        for (name, phi) in schemes {
            let pattern = metrics::sensing_beampattern(&phi, &ch, &spec.scenario, &grid)
                .map_err(|e| e.to_string())?;
            sections.push((seed, name.to_string(), pattern));
        }
    }
    output::write_beampattern(&sections, out_dir).map_err(|e| e.to_string())
}

/// Applies `key=value` overrides (dotted paths into the serialized spec,
/// values parsed as TOML literals, internal units) on top of a spec.
pub fn apply_overrides(spec: &ExperimentSpec, overrides: &[String]) -> Result<ExperimentSpec, String> {
    if overrides.is_empty() {
        return Ok(spec.clone());
    }
    let mut value =
        toml::Value::try_from(spec).map_err(|e| format!("spec serialization: {e}"))?;
    for entry in overrides {
        let (path, raw) = entry
            .split_once('=')
            .ok_or_else(|| format!("override '{entry}' is not key=value"))?;
        let parsed: toml::Value = format!("v = {raw}")
            .parse::<toml::Table>()
            .map_err(|e| format!("override '{entry}': {e}"))?
            .remove("v")
            .expect("key v just inserted");
        let mut node = &mut value;
        let parts: Vec<&str> = path.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if i + 1 == parts.len() {
                let table = node
                    .as_table_mut()
                    .ok_or_else(|| format!("override '{entry}': {part} is not a table"))?;
                table.insert((*part).to_string(), parsed.clone());
            } else {
                node = node
                    .as_table_mut()
                    .and_then(|t| t.get_mut(*part))
                    .ok_or_else(|| format!("override '{entry}': unknown path element {part}"))?;
            }
        }
    }
    value
        .try_into()
        .map_err(|e| format!("override result does not parse: {e}"))
}

/// On-disk experiment file: a unit-aware scenario plus the plain remainder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    pub scenario: ScenarioFile,
    #[serde(default)]
    pub pdd: PddConfig,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    pub seeds: Vec<u64>,
    pub schemes: Vec<Scheme>,
}

/// Parses an experiment TOML file.
pub fn load_spec(text: &str) -> Result<ExperimentSpec, String> {
    let file: SpecFile = toml::from_str(text).map_err(|e| format!("experiment file: {e}"))?;
    Ok(ExperimentSpec {
        scenario: file.scenario.into_config().map_err(|e| e.to_string())?,
        pdd: file.pdd,
        sweep: file.sweep,
        seeds: file.seeds,
        schemes: file.schemes,
    })
}
