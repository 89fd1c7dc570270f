//! Deterministic result files: CSV tables, the run manifest, convergence
//! traces and reflection-matrix text files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use bdisac::linalg::{CMat, Complex64};
use bdisac::pdd::TraceRecord;
use bdisac::reflection::ReflectionMatrix;
use bdisac::scenario::watt_to_dbm;
use bdisac::tdma::CompareRow;

use crate::{CellResult, ExperimentSpec, RunMode};

/// Fixed 12-significant-digit float formatting used in every CSV.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.11e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn join_semicolon(values: &[f64]) -> String {
    values.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(";")
}

fn join_usize(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

fn cell_tag(row: &CellResult) -> String {
    format!("v{}_s{}_{}", row.sweep_index, row.seed, row.scheme.name())
}

/// Writes `results.csv`, `runtimes.csv`, `manifest.json`, trace files and
/// reflection matrices. Returns the results path.
pub fn write_outputs(
    mode: RunMode,
    spec: &ExperimentSpec,
    rows: &[CellResult],
    out_dir: &Path,
) -> std::io::Result<PathBuf> {
    let results_path = out_dir.join("results.csv");
    {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&results_path)?));
        w.write_record([
            "mode",
            "sweep_param",
            "sweep_value",
            "seed",
            "scheme",
            "n_bs",
            "m_x",
            "m_z",
            "group_sizes",
            "k",
            "p0_w",
            "user_powers_w",
            "sigma2_w",
            "block_len",
            "gamma_pcrb",
            "status",
            "feasible",
            "pcrb",
            "f_o",
            "min_rate",
            "rates",
            "q_star",
            "iterations",
        ])?;
        let sweep_param = spec
            .sweep
            .as_ref()
            .map(|s| s.param.name().to_string())
            .unwrap_or_default();
        for row in rows {
            let cfg = match (row.sweep_value, &spec.sweep) {
                (Some(v), Some(sweep)) => crate::apply_sweep(&spec.scenario, sweep.param, v)
                    .expect("sweep value validated before running"),
                _ => spec.scenario.clone(),
            };
            w.write_record([
                mode.name().to_string(),
                sweep_param.clone(),
                fmt_opt(row.sweep_value),
                row.seed.to_string(),
                row.scheme.name().to_string(),
                cfg.n_bs.to_string(),
                cfg.m_x.to_string(),
                cfg.m_z.to_string(),
                join_usize(&cfg.group_sizes),
                cfg.num_users().to_string(),
                fmt(cfg.p0),
                join_semicolon(&cfg.users.iter().map(|u| u.power).collect::<Vec<_>>()),
                fmt(cfg.sigma2),
                cfg.block_len.to_string(),
                fmt(cfg.gamma_pcrb),
                row.status.clone(),
                row.feasible.to_string(),
                fmt(row.pcrb),
                fmt(row.f_o),
                fmt(row.min_rate),
                join_semicolon(&row.rates),
                fmt_opt(row.q_star),
                row.iterations.to_string(),
            ])?;
        }
        w.flush()?;
    }

    // Wall-clock timings live apart from the deterministic results.
    {
        let mut w =
            csv::Writer::from_writer(BufWriter::new(File::create(out_dir.join("runtimes.csv"))?));
        w.write_record(["sweep_value", "seed", "scheme", "runtime_s"])?;
        for row in rows {
            w.write_record([
                fmt_opt(row.sweep_value),
                row.seed.to_string(),
                row.scheme.name().to_string(),
                format!("{:.6}", row.runtime_s),
            ])?;
        }
        w.flush()?;
    }

    let trace_dir = out_dir.join("traces");
    let phi_dir = out_dir.join("phi");
    std::fs::create_dir_all(&trace_dir)?;
    std::fs::create_dir_all(&phi_dir)?;
    for row in rows {
        if !row.trace.is_empty() {
            write_trace(&row.trace, &trace_dir.join(format!("{}.csv", cell_tag(row))))?;
        }
        for (label, phi) in &row.phi {
            let name = if row.phi.len() == 1 {
                format!("{}.txt", cell_tag(row))
            } else {
                format!("{}_{label}.txt", cell_tag(row))
            };
            write_reflection(phi, &phi_dir.join(name))?;
        }
    }

    write_manifest(mode, spec, out_dir)?;
    Ok(results_path)
}

/// One record per inner iteration of a PDD run.
pub fn write_trace(trace: &[TraceRecord], path: &Path) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record([
        "outer",
        "inner",
        "al_objective",
        "violation",
        "rho",
        "min_rate",
        "pcrb",
    ])?;
    for r in trace {
        w.write_record([
            r.outer.to_string(),
            r.inner.to_string(),
            fmt(r.al_objective),
            fmt(r.violation),
            fmt(r.rho),
            fmt(r.min_rate),
            fmt(r.pcrb),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Run manifest: tool version, config hash and the full spec for
/// reproduction. No timestamps, so reruns produce identical bytes.
fn write_manifest(mode: RunMode, spec: &ExperimentSpec, out_dir: &Path) -> std::io::Result<()> {
    let payload = serde_json::json!({
        "mode": mode.name(),
        "spec": spec,
    });
    let canonical = serde_json::to_vec(&payload)?;
    let hash = Sha256::digest(&canonical);
    let manifest = serde_json::json!({
        "tool": "bdisac",
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": format!("{hash:x}"),
        "mode": mode.name(),
        "seeds": spec.seeds,
        "schemes": spec.schemes.iter().map(|s| s.name()).collect::<Vec<_>>(),
        "sweep": spec.sweep,
        "spec": spec,
    });
    let mut f = BufWriter::new(File::create(out_dir.join("manifest.json"))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.flush()
}

/// Reflection-matrix text format: a header with the dimension and group
/// sizes, then the dense matrix as rows of `re,im` pairs at full precision.
pub fn write_reflection(phi: &ReflectionMatrix, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "M {}", phi.dim())?;
    writeln!(
        w,
        "group_sizes {}",
        phi.group_sizes()
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    let full = phi.full();
    for i in 0..full.nrows() {
        let row: Vec<String> = (0..full.ncols())
            .map(|j| format!("{:.17e},{:.17e}", full[(i, j)].re, full[(i, j)].im))
            .collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()
}

/// Parses a file produced by [`write_reflection`].
pub fn read_reflection(path: &Path) -> std::io::Result<ReflectionMatrix> {
    let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string());
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| bad("missing M header"))??;
    let m: usize = header
        .strip_prefix("M ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad("malformed M header"))?;
    let groups_line = lines.next().ok_or_else(|| bad("missing group_sizes"))??;
    let group_sizes: Vec<usize> = groups_line
        .strip_prefix("group_sizes ")
        .ok_or_else(|| bad("malformed group_sizes"))?
        .split_whitespace()
        .map(|v| v.parse().map_err(|_| bad("bad group size")))
        .collect::<Result<_, _>>()?;
    if group_sizes.iter().sum::<usize>() != m {
        return Err(bad("group sizes do not sum to M"));
    }
    let mut full = CMat::zeros(m, m);
    for i in 0..m {
        let line = lines.next().ok_or_else(|| bad("missing matrix row"))??;
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != m {
            return Err(bad("wrong entry count in matrix row"));
        }
        for (j, e) in entries.iter().enumerate() {
            let (re, im) = e.split_once(',').ok_or_else(|| bad("entry is not re,im"))?;
            full[(i, j)] = Complex64::new(
                re.parse().map_err(|_| bad("bad real part"))?,
                im.parse().map_err(|_| bad("bad imaginary part"))?,
            );
        }
    }
    let mut blocks = Vec::with_capacity(group_sizes.len());
    let mut off = 0;
    for &s in &group_sizes {
        blocks.push(full.view((off, off), (s, s)).into_owned());
        off += s;
    }
    ReflectionMatrix::from_blocks(blocks)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}

/// SDMA-versus-TDMA table, one row per (seed, threshold).
pub fn write_compare(rows: &[(u64, Vec<CompareRow>)], out_dir: &Path) -> std::io::Result<PathBuf> {
    let path = out_dir.join("compare.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    w.write_record([
        "seed",
        "gamma_pcrb",
        "sdma_bound",
        "sdma_mc",
        "sdma_mc_se",
        "tdma_rate",
        "q_star",
        "feasible_sdma",
        "feasible_tdma",
    ])?;
    for (seed, table) in rows {
        for r in table {
            w.write_record([
                seed.to_string(),
                fmt(r.gamma_pcrb),
                fmt(r.sdma_bound),
                fmt(r.sdma_mc),
                fmt(r.sdma_mc_se),
                fmt(r.tdma_rate),
                fmt(r.q_star),
                r.feasible_sdma.to_string(),
                r.feasible_tdma.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}

/// One beampattern section: seed, scheme name, and (angle, power) samples.
pub type BeampatternSection = (u64, String, Vec<(f64, f64)>);

/// Long-format beampattern export in degrees and dBm.
pub fn write_beampattern(
    sections: &[BeampatternSection],
    out_dir: &Path,
) -> std::io::Result<PathBuf> {
    let path = out_dir.join("beampattern.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path)?));
    w.write_record(["seed", "scheme", "theta_deg", "power_dbm"])?;
    for (seed, scheme, pattern) in sections {
        for &(theta, power) in pattern {
            let dbm = if power > 0.0 {
                fmt(watt_to_dbm(power))
            } else {
                "-inf".to_string()
            };
            w.write_record([
                seed.to_string(),
                scheme.clone(),
                fmt(theta.to_degrees()),
                dbm,
            ])?;
        }
    }
    w.flush()?;
    Ok(path)
}
