use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use superbergman::oracle::Convention;
use superbergman::spectra::default_xi_grid;
use superbergman::symbols::MasgCase;

use crate::presets::Preset;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "superbergman", version, about = "Spectra and truncated matrices of super Toeplitz operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral table of an invariant symbol.
    Gamma(GammaArgs),
    /// Run a verification suite and write a report.
    Verify(VerifyArgs),
    /// Truncated super Toeplitz matrix of a symbol.
    Matrix(MatrixArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long = "p", default_value_t = 1)]
    pub p: usize,
    #[arg(long = "q", default_value_t = 0)]
    pub q: usize,
    /// Weight parameter; defaults to p + 1.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long = "nmax", default_value_t = 8)]
    pub n_max: u32,
    /// quasi-elliptic | quasi-parabolic | quasi-hyperbolic | nilpotent | quasi-nilpotent:k
    #[arg(long, default_value = "quasi-elliptic")]
    pub case: String,
    /// Symbol preset, `name(:param)*`.
    #[arg(long, default_value = "one")]
    pub symbol: String,
    /// Comma-separated values or `log:lo:hi:count`.
    #[arg(long)]
    pub xi: Option<String>,
    /// Comma-separated Fourier variable for the translation classes.
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub strict_paper: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Overrides every check's tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Progress on stderr: 0 silent, 1 summary, 2 per step.
    #[arg(long)]
    pub verbosity: Option<u8>,
}

#[derive(Debug, Clone, Args)]
pub struct GammaArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Skip closed forms.
    #[arg(long)]
    pub force_quadrature: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    /// Second symbol of the commutator check.
    #[arg(long)]
    pub partner: Option<String>,
    #[arg(long)]
    pub interior: Option<u32>,
    #[arg(long, value_enum, default_value_t = ConventionArg::Printed)]
    pub convention: ConventionArg,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub interior: Option<u32>,
    #[arg(long, value_enum, default_value_t = ConventionArg::Printed)]
    pub convention: ConventionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identity,
    Kernel,
    Cayley,
    Commute,
    Diagonal,
    Bargmann,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Printed,
    Berezin,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Printed => Convention::Printed,
            ConventionArg::Berezin => Convention::Berezin,
        }
    }
}

impl Cli {
    fn common(&self) -> &CommonArgs {
        match &self.command {
            Command::Gamma(a) => &a.common,
            Command::Verify(a) => &a.common,
            Command::Matrix(a) => &a.common,
        }
    }

    pub fn out(&self) -> Option<&std::path::Path> {
        self.common().out.as_deref()
    }

    pub fn threads(&self) -> Option<usize> {
        self.common()
            .threads
            .or_else(|| std::env::var("SUPERBERGMAN_THREADS").ok()?.parse().ok())
            .filter(|&t| t > 0)
    }

    pub fn verbosity(&self) -> u8 {
        self.common()
            .verbosity
            .or_else(|| std::env::var("SUPERBERGMAN_VERBOSITY").ok()?.parse().ok())
            .unwrap_or(0)
    }
}

/// Everything that determines the numbers in an output file. Thread count,
/// verbosity and the output path are left out: they do not change results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub p: usize,
    pub q: usize,
    pub nu: f64,
    pub n_max: u32,
    pub case: MasgCase,
    pub symbol: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<f64>,
    pub strict_paper: bool,
    pub force_quadrature: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<Convention>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub format: Format,
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("cannot read {what} list '{text}'"));
    if let Some(rest) = text.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else { return Err(bad()) };
        let (lo, hi): (f64, f64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        let count: usize = count.parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && count >= 1) {
            return Err(bad());
        }
        let (a, b) = (lo.ln(), hi.ln());
        return Ok((0..count)
            .map(|i| if count == 1 { lo } else { (a + (b - a) * i as f64 / (count - 1) as f64).exp() })
            .collect());
    }
    let values = text
        .split(',')
        .map(|x| x.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(bad)?;
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

/// Interior degree used when none is given: wide enough to be informative,
/// far enough from the truncation edge that cut-off effects stay small.
pub fn default_interior(p: usize, n_max: u32) -> u32 {
    if p == 1 {
        2 * n_max / 5
    } else {
        (n_max / 5).max(1)
    }
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
        let c = cli.common();
        let case: MasgCase = c.case.parse().map_err(|e: superbergman::Error| CliError::Config(e.to_string()))?;
        let symbol: Preset = c.symbol.parse()?;
        if c.q > 16 {
            return Err(CliError::Config("q must be at most 16".into()));
        }
        case.validate(c.p).map_err(|e| CliError::Config(e.to_string()))?;
        let nu = c.nu.unwrap_or(c.p as f64 + 1.0);
        if !(nu.is_finite() && nu > c.p as f64) {
            return Err(CliError::Config(format!("nu = {nu} must exceed p = {}", c.p)));
        }
        if let Some(t) = c.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Config("tolerance must be positive".into()));
            }
        }
        let xi_grid = match (&c.xi, case.has_xi()) {
            (Some(text), true) => Some(parse_list(text, "xi")?),
            (None, true) => Some(default_xi_grid()),
            (Some(_), false) => return Err(CliError::Config(format!("class {case} takes no xi"))),
            (None, false) => None,
        };
        if xi_grid.as_ref().is_some_and(|g| g.iter().any(|&x| x <= 0.0)) {
            return Err(CliError::Config("xi values must be positive".into()));
        }
        let fourier = case.fourier_len(c.p);
        let u = match &c.u {
            Some(text) => parse_list(text, "u")?,
            None => vec![0.0; fourier],
        };
        if u.len() != fourier {
            return Err(CliError::Config(format!("class {case} at p = {} needs {fourier} u values", c.p)));
        }
        let mut config = RunConfig {
            command: String::new(),
            p: c.p,
            q: c.q,
            nu,
            n_max: c.n_max,
            case,
            symbol,
            partner: None,
            xi_grid,
            u,
            strict_paper: c.strict_paper,
            force_quadrature: false,
            seed: c.seed,
            suite: None,
            interior: None,
            convention: None,
            tolerance: c.tol,
            format: Format::Json,
        };
        // Every preset is built once here so that a bad combination fails
        // before any file is touched.
        symbol.build(case, c.p, c.q)?;
        let check_interior = |interior: Option<u32>| -> Result<u32, CliError> {
            let value = interior.unwrap_or_else(|| default_interior(c.p, c.n_max));
            if value > c.n_max {
                return Err(CliError::Config("interior degree exceeds nmax".into()));
            }
            Ok(value)
        };
        match &cli.command {
            Command::Gamma(a) => {
                config.command = "gamma".into();
                config.force_quadrature = a.force_quadrature;
                config.format = c.format.unwrap_or(Format::Json);
                if config.format == Format::Bin {
                    return Err(CliError::Config("gamma writes json or csv".into()));
                }
                if symbol.is_ball_only() {
                    return Err(CliError::Config("gamma needs an invariant symbol".into()));
                }
            }
            Command::Verify(a) => {
                config.command = "verify".into();
                config.suite = Some(a.suite);
                config.convention = Some(a.convention.into());
                config.interior = Some(check_interior(a.interior)?);
                config.format = c.format.unwrap_or(Format::Json);
                if config.format == Format::Bin {
                    return Err(CliError::Config("verify writes json or csv".into()));
                }
                let partner = match &a.partner {
                    Some(text) => text.parse()?,
                    None => symbol.default_partner(c.seed),
                };
                partner.build(case, c.p, c.q)?;
                config.partner = Some(partner);
            }
            Command::Matrix(a) => {
                config.command = "matrix".into();
                config.convention = Some(a.convention.into());
                config.interior = Some(check_interior(a.interior)?);
                config.format = c.format.unwrap_or(Format::Json);
                if config.format == Format::Csv {
                    return Err(CliError::Config("matrix writes json or bin".into()));
                }
            }
        }
        Ok(config)
    }
}
