//! Running a resolved configuration and writing its result.
//!
//! JSON files carry the resolved configuration and the library version next
//! to the data. CSV and binary outputs cannot hold that header, so when they
//! go to a file a sibling `<file>.json` carries it instead.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use superbergman::grassmann::SubsetIndex;
use superbergman::oracle::{assemble_super_toeplitz, diagonality_defect, write_matrix_binary, BasisIndex, OracleOptions};
use superbergman::spectra::{build_table, SpectralOptions, SpectralTable};

use crate::config::{Format, RunConfig};
use crate::suites::{run_suite, Check};
use crate::{CliError, ExitCode, VERSION};

#[derive(Serialize)]
struct GammaReport<'a> {
    version: &'static str,
    config: &'a RunConfig,
    failures: usize,
    table: &'a SpectralTable,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    version: &'static str,
    config: &'a RunConfig,
    passed: bool,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct BlockInfo {
    #[serde(rename = "I")]
    row_set: SubsetIndex,
    #[serde(rename = "J")]
    col_set: SubsetIndex,
    row: usize,
    col: usize,
    rows: usize,
    cols: usize,
}

#[derive(Serialize)]
struct MatrixDiagnostics {
    interior_degree: u32,
    diagonality_defect_interior: f64,
    diagonality_defect_full: f64,
    hermitian_defect: f64,
}

#[derive(Serialize)]
struct MatrixReport<'a> {
    version: &'static str,
    config: &'a RunConfig,
    dim: usize,
    basis: &'a [BasisIndex],
    blocks: Vec<BlockInfo>,
    diagnostics: MatrixDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    re: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    im: Option<Vec<Vec<f64>>>,
}

fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

fn emit(out: Option<&Path>, bytes: &[u8], meta: Option<&[u8]>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes)?;
            if let Some(meta) = meta {
                std::fs::write(sidecar(path), meta)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Config(format!("csv: {e}"))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Runs the command described by `config`; the returned code is 0, 2 or 3.
pub fn execute(config: &RunConfig, out: Option<&Path>, diag: &mut dyn Write, verbosity: u8) -> Result<ExitCode, CliError> {
    match config.command.as_str() {
        "gamma" => gamma(config, out, diag, verbosity),
        "verify" => verify(config, out, diag, verbosity),
        "matrix" => matrix(config, out, diag, verbosity),
        other => Err(CliError::Config(format!("unknown command {other}"))),
    }
}

fn gamma(config: &RunConfig, out: Option<&Path>, diag: &mut dyn Write, verbosity: u8) -> Result<ExitCode, CliError> {
    let built = config.symbol.build(config.case, config.p, config.q)?;
    let symbol = built
        .invariant()
        .ok_or_else(|| CliError::Config("gamma needs an invariant symbol".into()))?;
    let options = SpectralOptions {
        strict_paper: config.strict_paper,
        force_quadrature: config.force_quadrature,
        ..SpectralOptions::default()
    };
    let xi = config.xi_grid.as_deref().unwrap_or(&[]);
    let table = build_table(symbol, config.nu, config.n_max, xi, &config.u, &options)?;
    let failures = table.failures();
    let report = GammaReport { version: VERSION, config, failures, table: &table };
    match config.format {
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(["M", "n", "xi", "value", "err", "failure"]).map_err(csv_error)?;
            for e in &table.entries {
                let n: Vec<String> = e.n.0.iter().map(|x| x.to_string()).collect();
                writer
                    .write_record([
                        e.m.to_string(),
                        n.join(" "),
                        fmt_opt(e.xi),
                        fmt_opt(e.value),
                        fmt_opt(e.err),
                        e.failure.clone().unwrap_or_default(),
                    ])
                    .map_err(csv_error)?;
            }
            let bytes = writer.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
            let meta = json_bytes(&GammaReport { table: &SpectralTable { entries: Vec::new(), ..table.clone() }, ..report })?;
            emit(out, &bytes, Some(&meta))?;
        }
        _ => emit(out, &json_bytes(&report)?, None)?,
    }
    if verbosity > 0 {
        let _ = writeln!(diag, "{} entries, {failures} without convergence", table.entries.len());
    }
    Ok(if failures > 0 { ExitCode::NonConvergence } else { ExitCode::Success })
}

fn verify(config: &RunConfig, out: Option<&Path>, diag: &mut dyn Write, verbosity: u8) -> Result<ExitCode, CliError> {
    let checks = run_suite(config)?;
    let passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport { version: VERSION, config, passed, checks: &checks };
    match config.format {
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(["suite", "name", "value", "tolerance", "passed", "note"]).map_err(csv_error)?;
            for c in &checks {
                let suite = serde_json::to_value(c.suite).map_err(|e| CliError::Config(e.to_string()))?;
                writer
                    .write_record([
                        suite.as_str().unwrap_or_default().to_string(),
                        c.name.clone(),
                        c.value.to_string(),
                        c.tolerance.to_string(),
                        c.passed.to_string(),
                        c.note.clone().unwrap_or_default(),
                    ])
                    .map_err(csv_error)?;
            }
            let bytes = writer.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
            emit(out, &bytes, Some(&json_bytes(&report)?))?;
        }
        _ => emit(out, &json_bytes(&report)?, None)?,
    }
    for c in &checks {
        if verbosity > 1 || (!c.passed && verbosity > 0) {
            let status = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(diag, "{status} {}: {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
        }
    }
    Ok(if passed { ExitCode::Success } else { ExitCode::VerificationFailed })
}

fn matrix(config: &RunConfig, out: Option<&Path>, diag: &mut dyn Write, verbosity: u8) -> Result<ExitCode, CliError> {
    let symbol = config.symbol.build(config.case, config.p, config.q)?.to_ball();
    let spec = superbergman::bergman::WeightedSpaceSpec::ball(config.p, config.q, config.nu)?;
    let options = OracleOptions {
        convention: config.convention.unwrap_or(superbergman::oracle::Convention::Printed),
        ..OracleOptions::default()
    };
    let t = assemble_super_toeplitz(&symbol, &spec, config.n_max, &options)?;
    let interior = config.interior.unwrap_or(config.n_max);
    let blocks = t
        .block_map()
        .into_iter()
        .map(|((i, j), [row, col, rows, cols])| BlockInfo { row_set: i, col_set: j, row, col, rows, cols })
        .collect();
    let diagnostics = MatrixDiagnostics {
        interior_degree: interior,
        diagonality_defect_interior: diagonality_defect(&t, interior),
        diagonality_defect_full: diagonality_defect(&t, config.n_max),
        hermitian_defect: t.hermitian_defect(),
    };
    let mut report = MatrixReport {
        version: VERSION,
        config,
        dim: t.dim(),
        basis: &t.basis,
        blocks,
        diagnostics,
        re: None,
        im: None,
    };
    match config.format {
        Format::Bin => {
            let mut bytes = Vec::new();
            write_matrix_binary(&t.data, &mut bytes)?;
            emit(out, &bytes, Some(&json_bytes(&report)?))?;
        }
        _ => {
            let rows = |part: fn(&num_complex::Complex64) -> f64| -> Vec<Vec<f64>> {
                (0..t.dim()).map(|i| (0..t.dim()).map(|j| part(&t.data[(i, j)])).collect()).collect()
            };
            report.re = Some(rows(|c| c.re));
            report.im = Some(rows(|c| c.im));
            emit(out, &json_bytes(&report)?, None)?;
        }
    }
    if verbosity > 0 {
        let _ = writeln!(diag, "matrix of dimension {}", t.dim());
    }
    Ok(ExitCode::Success)
}
