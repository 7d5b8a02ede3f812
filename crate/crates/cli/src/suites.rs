//! Verification suites run by `verify`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use superbergman::bergman::{reproduce_check, super_inner_product, SuperPolynomial, WeightedSpaceSpec};
use superbergman::domains::{
    berezinian, cayley, cayley_berezinian, cayley_inv, cayley_inv_berezinian, cayley_jacobian,
    pairing_transfer_residuals, BallPoint, SuperBallPoint,
};
use superbergman::oracle::{
    assemble_super_toeplitz, bargmann_qe_adjoint, bargmann_qe_forward, basis, commutator_norm, diagonality_defect,
    sequence_norm_sq, BasisIndex, OracleOptions,
};
use superbergman::spectra::{build_table, SpectralOptions};
use superbergman::symbols::MasgCase;

use crate::config::{RunConfig, Suite};
use crate::presets::Preset;
use crate::CliError;

/// One measured quantity against its bound. Every check passes when
/// `value ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(suite: Suite, name: &str, value: f64, tolerance: f64) -> Check {
        Check {
            suite,
            name: name.to_string(),
            value,
            tolerance,
            passed: value <= tolerance,
            note: None,
        }
    }

    fn note(mut self, note: impl Into<String>) -> Check {
        self.note = Some(note.into());
        self
    }
}

const SAMPLE_RADIUS: f64 = 0.9;

/// A point drawn uniformly from the ball of radius `radius`.
pub fn random_ball_point(rng: &mut impl Rng, p: usize, radius: f64) -> BallPoint {
    loop {
        let z: Vec<Complex64> = (0..p)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm_sq: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        if norm_sq < 1.0 {
            return BallPoint::new(z.into_iter().map(|c| c * radius).collect());
        }
    }
}

fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random coefficients on every `(M, n)` with `|n| ≤ degree`.
pub fn random_super_polynomial(rng: &mut impl Rng, p: usize, q: usize, degree: u32) -> SuperPolynomial {
    let mut out = SuperPolynomial::zero(p, q);
    for index in basis(p, q, degree) {
        out.add_term(index.m, index.n, random_complex(rng)).expect("dimensions match");
    }
    out
}

/// Random finitely supported sequence on the truncated basis.
pub fn random_sequence(rng: &mut impl Rng, p: usize, q: usize, n_max: u32) -> BTreeMap<BasisIndex, Complex64> {
    basis(p, q, n_max).into_iter().map(|b| (b, random_complex(rng))).collect()
}

struct Context<'a> {
    config: &'a RunConfig,
    spec: WeightedSpaceSpec,
    rng: ChaCha8Rng,
}

impl Context<'_> {
    fn tol(&self, default: f64) -> f64 {
        self.config.tolerance.unwrap_or(default)
    }

    fn options(&self) -> OracleOptions {
        OracleOptions {
            convention: self.config.convention.unwrap_or(superbergman::oracle::Convention::Printed),
            ..OracleOptions::default()
        }
    }

    fn interior(&self) -> u32 {
        self.config.interior.unwrap_or(self.config.n_max)
    }
}

pub fn run_suite(config: &RunConfig) -> Result<Vec<Check>, CliError> {
    let spec = WeightedSpaceSpec::ball(config.p, config.q, config.nu)?;
    let mut ctx = Context { config, spec, rng: ChaCha8Rng::seed_from_u64(config.seed) };
    let suite = config.suite.unwrap_or(Suite::All);
    let order = match suite {
        Suite::All => vec![Suite::Identity, Suite::Kernel, Suite::Cayley, Suite::Commute, Suite::Diagonal, Suite::Bargmann],
        single => vec![single],
    };
    let mut checks = Vec::new();
    for s in order {
        let found = match s {
            Suite::Identity => identity(&mut ctx)?,
            Suite::Kernel => kernel(&mut ctx)?,
            Suite::Cayley => cayley_suite(&mut ctx)?,
            Suite::Commute => commute(&mut ctx)?,
            // Diagonality only applies to the quasi-elliptic class; under
            // `all` other classes skip it.
            Suite::Diagonal if suite == Suite::All && config.case != MasgCase::QuasiElliptic => Vec::new(),
            Suite::Diagonal => diagonal(&mut ctx)?,
            Suite::Bargmann => bargmann(&mut ctx)?,
            Suite::All => unreachable!("expanded above"),
        };
        checks.extend(found);
    }
    Ok(checks)
}

fn identity(ctx: &mut Context) -> Result<Vec<Check>, CliError> {
    let c = ctx.config;
    let one = Preset::One.build(c.case, c.p, c.q)?.to_ball();
    let t = assemble_super_toeplitz(&one, &ctx.spec, c.n_max, &ctx.options())?;
    let interior = ctx.interior();
    let full = t.identity_defect(c.n_max);
    Ok(vec![Check::new(Suite::Identity, "identity-defect", t.identity_defect(interior), ctx.tol(1e-10))
        .note(format!("interior degree {interior}; full truncation defect {full:e}"))])
}

fn kernel(ctx: &mut Context) -> Result<Vec<Check>, CliError> {
    let c = ctx.config;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let psi = random_super_polynomial(&mut ctx.rng, c.p, c.q, 4);
        let z = random_ball_point(&mut ctx.rng, c.p, SAMPLE_RADIUS);
        worst = worst.max(reproduce_check(&ctx.spec, &psi, &z)?);
    }
    Ok(vec![Check::new(Suite::Kernel, "reproducing-residual", worst, ctx.tol(1e-10))
        .note("20 random degree-4 polynomials at 20 random points")])
}

/// Largest roundtrip error, pairing-transfer residuals and Berezinian
/// mismatch over random points.
pub fn cayley_measurements(rng: &mut impl Rng, p: usize, q: usize, strict_paper: bool) -> Result<[f64; 5], CliError> {
    let mut roundtrip = 0.0f64;
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let z = random_ball_point(rng, p, SAMPLE_RADIUS);
        let back = cayley_inv(&cayley(&z)?)?;
        let err = z.z.iter().zip(&back.z).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = z.z.iter().map(|c| c.norm()).fold(1.0, f64::max);
        roundtrip = roundtrip.max(err / scale);
        let a = SuperBallPoint { even: z, odd: (0..q).map(|_| random_complex(rng)).collect() };
        let b = SuperBallPoint {
            even: random_ball_point(rng, p, SAMPLE_RADIUS),
            odd: (0..q).map(|_| random_complex(rng)).collect(),
        };
        let (x, y) = pairing_transfer_residuals(&a, &b)?;
        first = first.max(x);
        second = second.max(y);
    }
    let (mut jacobian, mut chain) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let z = random_ball_point(rng, p, SAMPLE_RADIUS);
        let closed = cayley_berezinian(&z, q, strict_paper)?;
        let assembled = berezinian(&cayley_jacobian(&z, q)?)?;
        jacobian = jacobian.max((closed - assembled).norm() / assembled.norm());
        let inverse = cayley_inv_berezinian(&cayley(&z)?, q, strict_paper)?;
        chain = chain.max((closed * inverse - 1.0).norm());
    }
    Ok([roundtrip, first, second, jacobian, chain])
}

fn cayley_suite(ctx: &mut Context) -> Result<Vec<Check>, CliError> {
    let c = ctx.config;
    let [roundtrip, first, second, jacobian, chain] = cayley_measurements(&mut ctx.rng, c.p, c.q, c.strict_paper)?;
    let tol = ctx.tol(1e-12);
    let form = if c.strict_paper { "printed closed form" } else { "corrected closed form" };
    Ok(vec![
        Check::new(Suite::Cayley, "roundtrip", roundtrip, tol),
        Check::new(Suite::Cayley, "pairing-transfer-first", first, tol),
        Check::new(Suite::Cayley, "pairing-transfer-second", second, tol),
        Check::new(Suite::Cayley, "berezinian-vs-jacobian", jacobian, tol).note(form),
        Check::new(Suite::Cayley, "berezinian-chain-rule", chain, tol).note(form),
    ])
}

fn commute(ctx: &mut Context) -> Result<Vec<Check>, CliError> {
    let c = ctx.config;
    let partner = c.partner.unwrap_or_else(|| c.symbol.default_partner(c.seed));
    let a = c.symbol.build(c.case, c.p, c.q)?.to_ball();
    let b = partner.build(c.case, c.p, c.q)?.to_ball();
    let options = ctx.options();
    let ta = assemble_super_toeplitz(&a, &ctx.spec, c.n_max, &options)?;
    let tb = assemble_super_toeplitz(&b, &ctx.spec, c.n_max, &options)?;
    let interior = ctx.interior();
    let norm = commutator_norm(&ta, &tb, interior)?;
    Ok(vec![Check::new(Suite::Commute, "commutator-norm", norm, ctx.tol(1e-7))
        .note(format!("{} against {partner}, interior degree {interior}", c.symbol))])
}

/// Oracle diagonality and agreement of the diagonal with the spectral table
/// for a quasi-elliptic symbol: `(defect, max |diag − γ|)`.
pub fn diagonal_measurements(
    symbol: &superbergman::symbols::SuperSymbol,
    spec: &WeightedSpaceSpec,
    n_max: u32,
    interior: u32,
    options: &OracleOptions,
) -> Result<(f64, f64), CliError> {
    let t = assemble_super_toeplitz(&symbol.to_ball(), spec, n_max, options)?;
    let defect = diagonality_defect(&t, interior);
    let table = build_table(symbol, spec.nu, n_max, &[], &[], &SpectralOptions::default())?;
    let mut mismatch = 0.0f64;
    for (k, index) in t.basis.iter().enumerate() {
        let entry = table
            .get(index.m, &index.n, None)
            .and_then(|e| e.value)
            .ok_or_else(|| CliError::Numeric(format!("no spectral value at {:?}", index)))?;
        mismatch = mismatch.max((t.data[(k, k)] - entry).norm());
    }
    Ok((defect, mismatch))
}

fn diagonal(ctx: &mut Context) -> Result<Vec<Check>, CliError> {
    let c = ctx.config;
    if c.case != MasgCase::QuasiElliptic {
        return Err(CliError::Config("the diagonal suite needs the quasi-elliptic class".into()));
    }
    let built = c.symbol.build(c.case, c.p, c.q)?;
    let symbol = built
        .invariant()
        .ok_or_else(|| CliError::Config("the diagonal suite needs an invariant symbol".into()))?;
    let (defect, mismatch) = diagonal_measurements(symbol, &ctx.spec, c.n_max, ctx.interior(), &ctx.options())?;
    let tol = ctx.tol(1e-8);
    Ok(vec![
        Check::new(Suite::Diagonal, "diagonality-defect", defect, tol),
        Check::new(Suite::Diagonal, "diagonal-vs-table", mismatch, tol),
    ])
}

/// `max |R R* c − c|` and the largest relative norm change over `count`
/// random sequences.
pub fn bargmann_measurements(
    rng: &mut impl Rng,
    spec: &WeightedSpaceSpec,
    n_max: u32,
    count: usize,
) -> Result<(f64, f64), CliError> {
    let (mut inverse, mut isometry) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let c = random_sequence(rng, spec.p, spec.q, n_max);
        let psi = bargmann_qe_adjoint(spec, &c)?;
        let back = bargmann_qe_forward(spec, &psi)?;
        for (index, value) in &c {
            let got = back.get(index).copied().unwrap_or(Complex64::ZERO);
            inverse = inverse.max((got - value).norm());
        }
        let expected = sequence_norm_sq(&c);
        let got = super_inner_product(spec, &psi, &psi)?.re;
        isometry = isometry.max((got - expected).abs() / expected);
    }
    Ok((inverse, isometry))
}

fn bargmann(ctx: &mut Context) -> Result<Vec<Check>, CliError> {
    let c = ctx.config;
    let (inverse, isometry) = bargmann_measurements(&mut ctx.rng, &ctx.spec, c.n_max, 100)?;
    let tol = ctx.tol(1e-12);
    Ok(vec![
        Check::new(Suite::Bargmann, "forward-adjoint-identity", inverse, tol),
        Check::new(Suite::Bargmann, "norm-preservation", isometry, tol),
    ])
}
