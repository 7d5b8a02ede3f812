//! Spectral functions that turn invariant super Toeplitz operators into
//! multiplication operators, one family per symbol class.
//!
//! Every function sums over the supersets `K ⊇ M` and evaluates, per `K`, a
//! normalised average `E_K` of the coefficient `F_{K∖M}` against a product
//! density, multiplied by the (exact) total mass of that density. Analytically
//! tagged coefficients use closed forms for `E_K`; anything else goes through
//! adaptive tensor Gauss rules.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bergman::MultiIndex;
use crate::error::{param, Error, Result};
use crate::grassmann::SubsetIndex;
use crate::quadrature::{
    gauss_hermite, gauss_jacobi, gauss_laguerre_gen, simplex_dirichlet, AdaptivePolicy, Estimate,
    QuadratureRule,
};
use crate::special::{binomial, guarded_atan, guarded_powc, ln_gamma, pairwise_sum};
use crate::symbols::{Coefficient, MasgCase, SuperSymbol, Term};

/// Distance from the branch cuts below which the complex arctangent refuses
/// to evaluate, and from `|s| = 1` below which `β` is rejected.
pub const BRANCH_MARGIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpectralOptions {
    /// Use `r^p` (scalar power on every rotated coordinate) in the
    /// quasi-nilpotent weight instead of `r^n`.
    pub strict_paper: bool,
    /// Ignore analytic tags and integrate numerically.
    pub force_quadrature: bool,
    pub policy: AdaptivePolicy,
}

/// The default ξ-grid: 32 logarithmically spaced points on `[0.05, 20]`.
pub fn default_xi_grid() -> Vec<f64> {
    let (lo, hi, count) = (0.05f64.ln(), 20f64.ln(), 32);
    (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// A contribution to `γ` that is either already exact or depends on the
/// per-axis node count.
enum Part<'a> {
    Exact(f64),
    Numeric(Box<dyn Fn(usize) -> Result<f64> + Sync + 'a>),
}

fn combine(parts: Vec<Part<'_>>, policy: &AdaptivePolicy) -> Result<Estimate> {
    let exact: f64 = parts
        .iter()
        .map(|p| match p {
            Part::Exact(v) => *v,
            Part::Numeric(_) => 0.0,
        })
        .sum();
    let numeric: Vec<_> = parts
        .into_iter()
        .filter_map(|p| match p {
            Part::Numeric(f) => Some(f),
            Part::Exact(_) => None,
        })
        .collect();
    if numeric.is_empty() {
        return Ok(Estimate::exact(exact));
    }
    policy.run(|m| {
        let mut total = exact;
        for f in &numeric {
            total += f(m)?;
        }
        Ok(total)
    })
}

fn check_common(symbol: &SuperSymbol, expected: MasgCase, nu: f64, m: SubsetIndex) -> Result<()> {
    if symbol.case() != expected {
        return Err(Error::DomainMismatch {
            symbol: symbol.case().to_string(),
            expected: expected.to_string(),
        });
    }
    if m.max_element().unwrap_or(0) > symbol.q() {
        return Err(Error::IndexOutOfRange { index: m.max_element().unwrap_or(0), q: symbol.q() });
    }
    let level = nu + m.len() as f64;
    if !(level > symbol.p() as f64) {
        return Err(param(format!(
            "nu + |M| = {level} must exceed p = {}",
            symbol.p()
        )));
    }
    Ok(())
}

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(param(format!("{what} has length {got}, expected {expected}")));
    }
    Ok(())
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(param(format!("xi = {xi} must be positive and finite")));
    }
    Ok(())
}

/// `(K, F_{K∖M})` for every superset `K` of `M` whose coefficient is present.
fn contributions(symbol: &SuperSymbol, m: SubsetIndex) -> Vec<(SubsetIndex, &Coefficient)> {
    m.supersets(symbol.q())
        .into_iter()
        .filter_map(|k| symbol.coefficient(k.difference(m)).map(|c| (k, c)))
        .collect()
}

fn normalised_average(rule: &QuadratureRule, f: impl Fn(&[f64]) -> f64) -> f64 {
    rule.integrate(f) / rule.mass()
}

/// Exponent `e` of coordinate `i` in `term` (missing entries are zero).
fn power(term: &Term, i: usize) -> u32 {
    term.powers.get(i).copied().unwrap_or(0)
}

fn check_term_len(term: &Term, len: usize) -> Result<()> {
    if term.powers.len() > len {
        return Err(param(format!(
            "term has {} exponents but the class has {len} coordinates",
            term.powers.len()
        )));
    }
    Ok(())
}

/// Quasi-elliptic spectrum
/// `2^p Γ(|n|+ν+|M|)/(n! Γ(ν+|M|−p)) Σ_K ∫ F_{K∖M}(r) r^{2n} (1−|r|²)^{ν+|K|−p−1} r dr`.
pub fn gamma_quasi_elliptic(
    symbol: &SuperSymbol,
    nu: f64,
    n: &MultiIndex,
    m: SubsetIndex,
    options: &SpectralOptions,
) -> Result<Estimate> {
    check_common(symbol, MasgCase::QuasiElliptic, nu, m)?;
    let p = symbol.p();
    check_len("n", n.len(), p)?;
    let pf = p as f64;
    let total = n.total() as f64;
    let level = nu + m.len() as f64;
    let powers = n.as_f64();

    let mut parts = Vec::new();
    for (k, coefficient) in contributions(symbol, m) {
        // Grouped so that the K = M term cancels pair by pair and F ≡ 1
        // gives exactly 1.
        let level_k = nu + k.len() as f64;
        let a = level_k - pf - 1.0;
        let scale = ((ln_gamma(total + level) - ln_gamma(total + level_k))
            + (ln_gamma(level_k - pf) - ln_gamma(level - pf)))
            .exp();
        let tagged = coefficient
            .terms()
            .filter(|t| !options.force_quadrature && t.iter().all(|t| t.decay == 0.0));
        match tagged {
            Some(terms) => {
                let mut sum = 0.0;
                for term in terms {
                    check_term_len(term, p)?;
                    // E[t^{e/2}] under the Dirichlet density t^n (1−Σt)^a.
                    let half: f64 = (0..p).map(|i| power(term, i) as f64 / 2.0).sum();
                    let ln_ratio: f64 = (0..p)
                        .map(|i| ln_gamma(powers[i] + power(term, i) as f64 / 2.0 + 1.0) - ln_gamma(powers[i] + 1.0))
                        .sum::<f64>()
                        + ln_gamma(total + level_k)
                        - ln_gamma(total + half + level_k);
                    sum += term.coeff * ln_ratio.exp();
                }
                parts.push(Part::Exact(scale * sum));
            }
            None => {
                let powers = powers.clone();
                parts.push(Part::Numeric(Box::new(move |nodes| {
                    let rule = simplex_dirichlet(nodes, &powers, a)?;
                    let average = normalised_average(&rule, |t| {
                        let r: Vec<f64> = t.iter().map(|x| x.sqrt()).collect();
                        coefficient.eval(&r)
                    });
                    Ok(scale * average)
                })));
            }
        }
    }
    combine(parts, &options.policy)
}

/// Shared machinery of the quasi-parabolic (`k = p−1`), nilpotent (`k = 0`)
/// and quasi-nilpotent classes: `k` Laguerre axes in `r`, `p−k−1` Gaussian
/// axes in `v'` and one Laguerre axis in `v`, with coefficient arguments
/// `(√r, (−u'+v')/(2√ξ), v + Σr)`.
struct TranslationSetup<'a> {
    p: usize,
    k: usize,
    /// Exponents of the `r_j` in the density.
    rho: Vec<f64>,
    u: &'a [f64],
    xi: f64,
    ln_pref: f64,
}

impl<'a> TranslationSetup<'a> {
    fn ln_mass(&self, a: f64) -> f64 {
        let two_xi = (2.0 * self.xi).ln();
        let gauss = (self.p - self.k - 1) as f64 / 2.0 * PI.ln();
        self.rho.iter().map(|&r| ln_gamma(r + 1.0)).sum::<f64>()
            - (self.rho.iter().sum::<f64>() + self.k as f64) * two_xi
            + gauss
            + ln_gamma(a + 1.0)
            - (a + 1.0) * two_xi
    }

    /// `E[term]` under the normalised density.
    fn term_average(&self, term: &Term, a: f64) -> Result<f64> {
        check_term_len(term, self.p)?;
        let (p, k, xi) = (self.p, self.k, self.xi);
        let e_h = power(term, p - 1) as f64;
        let rate = 2.0 * xi + term.decay;
        if !(rate > 0.0) {
            return Err(param("term decay makes the spectral integral diverge"));
        }
        let alphas: Vec<f64> = (0..k)
            .map(|j| self.rho[j] + power(term, j) as f64 / 2.0 + 1.0)
            .chain(std::iter::once(a + 1.0))
            .collect();
        let s: f64 = alphas.iter().sum();
        let s0: f64 = self.rho.iter().map(|r| r + 1.0).sum::<f64>() + a + 1.0;
        let ln_integral = ln_gamma(s + e_h) - (s + e_h) * rate.ln() + alphas.iter().map(|&x| ln_gamma(x)).sum::<f64>()
            - ln_gamma(s);
        let ln_mass = self.rho.iter().map(|r| ln_gamma(r + 1.0)).sum::<f64>() + ln_gamma(a + 1.0)
            - s0 * (2.0 * xi).ln();
        let mut value = term.coeff * (ln_integral - ln_mass).exp();
        let scale = 2.0 * xi.sqrt();
        for (i, &u) in self.u.iter().enumerate() {
            let e = power(term, k + i) as usize;
            // E[((−u + t)/(2√ξ))^e] for t with density e^{−t²}/√π.
            let mut moment = 0.0;
            for j in (0..=e).step_by(2) {
                let gaussian = (ln_gamma((j as f64 + 1.0) / 2.0) - 0.5 * PI.ln()).exp();
                moment += binomial(e, j) * (-u).powi((e - j) as i32) * gaussian;
            }
            value *= moment / scale.powi(e as i32);
        }
        Ok(value)
    }

    fn rule(&self, nodes: usize, a: f64) -> Result<QuadratureRule> {
        let mut rule = QuadratureRule::point();
        for &r in &self.rho {
            rule = rule.tensor(gauss_laguerre_gen(nodes, r, 2.0 * self.xi)?.as_ref());
        }
        let hermite = gauss_hermite(nodes)?;
        for _ in 0..self.p - self.k - 1 {
            rule = rule.tensor(&hermite);
        }
        Ok(rule.tensor(gauss_laguerre_gen(nodes, a, 2.0 * self.xi)?.as_ref()))
    }

    fn coords(&self, node: &[f64]) -> Vec<f64> {
        let (p, k) = (self.p, self.k);
        let scale = 2.0 * self.xi.sqrt();
        let r_sum: f64 = node[..k].iter().sum();
        let mut x: Vec<f64> = node[..k].iter().map(|r| r.sqrt()).collect();
        x.extend(self.u.iter().zip(&node[k..p - 1]).map(|(u, t)| (t - u) / scale));
        x.push(node[p - 1] + r_sum);
        x
    }

    fn gamma(
        &self,
        symbol: &'a SuperSymbol,
        nu: f64,
        m: SubsetIndex,
        options: &SpectralOptions,
    ) -> Result<Estimate> {
        let pf = self.p as f64;
        let mut parts = Vec::new();
        for (k, coefficient) in contributions(symbol, m) {
            let a = nu + k.len() as f64 - pf - 1.0;
            let scale = (self.ln_pref + self.ln_mass(a)).exp();
            match coefficient.terms().filter(|_| !options.force_quadrature) {
                Some(terms) => {
                    let mut sum = 0.0;
                    for term in terms {
                        sum += self.term_average(term, a)?;
                    }
                    parts.push(Part::Exact(scale * sum));
                }
                None => parts.push(Part::Numeric(Box::new(move |nodes| {
                    let rule = self.rule(nodes, a)?;
                    Ok(scale * normalised_average(&rule, |node| coefficient.eval(&self.coords(node))))
                }))),
            }
        }
        combine(parts, &options.policy)
    }
}

fn translation_prefactor(p: usize, k: usize, n: &MultiIndex, nu: f64, m: SubsetIndex, xi: f64) -> f64 {
    let level = nu + m.len() as f64;
    -((p - k - 1) as f64 / 2.0) * PI.ln()
        + (n.total() as f64 + level - p as f64 + k as f64) * (2.0 * xi).ln()
        - n.ln_factorial()
        - ln_gamma(level - p as f64)
}

/// Quasi-parabolic spectrum
/// `(2ξ)^{|n|+ν+|M|−1}/(n! Γ(ν+|M|−p)) Σ_K ∫ F_{K∖M}(√r, v+r̂) r^n e^{−2ξ(v+r̂)} v^{ν+|K|−p−1} dr dv`.
pub fn gamma_quasi_parabolic(
    symbol: &SuperSymbol,
    nu: f64,
    n: &MultiIndex,
    xi: f64,
    m: SubsetIndex,
    options: &SpectralOptions,
) -> Result<Estimate> {
    check_common(symbol, MasgCase::QuasiParabolic, nu, m)?;
    check_xi(xi)?;
    let p = symbol.p();
    check_len("n", n.len(), p - 1)?;
    let setup = TranslationSetup {
        p,
        k: p - 1,
        rho: n.as_f64(),
        u: &[],
        xi,
        ln_pref: translation_prefactor(p, p - 1, n, nu, m, xi),
    };
    setup.gamma(symbol, nu, m, options)
}

/// Nilpotent spectrum
/// `(2ξ)^{ν+|M|−p}/(π^{(p−1)/2} Γ(ν+|M|−p)) Σ_K ∫ F_{K∖M}((−u'+v')/(2√ξ), v) e^{−2ξv−|v'|²} v^{ν+|K|−p−1} dv' dv`.
pub fn gamma_nilpotent(
    symbol: &SuperSymbol,
    nu: f64,
    u: &[f64],
    xi: f64,
    m: SubsetIndex,
    options: &SpectralOptions,
) -> Result<Estimate> {
    check_common(symbol, MasgCase::Nilpotent, nu, m)?;
    check_xi(xi)?;
    let p = symbol.p();
    check_len("u'", u.len(), p - 1)?;
    let n = MultiIndex::zero(0);
    let setup = TranslationSetup {
        p,
        k: 0,
        rho: Vec::new(),
        u,
        xi,
        ln_pref: translation_prefactor(p, 0, &n, nu, m, xi),
    };
    setup.gamma(symbol, nu, m, options)
}

/// Quasi-nilpotent spectrum: the quasi-parabolic structure on the first `k`
/// coordinates and the nilpotent one on the next `p−k−1`. With
/// `strict_paper` the density carries `r_j^p` instead of `r_j^{n_j}`.
pub fn gamma_quasi_nilpotent(
    symbol: &SuperSymbol,
    nu: f64,
    n: &MultiIndex,
    u: &[f64],
    xi: f64,
    m: SubsetIndex,
    options: &SpectralOptions,
) -> Result<Estimate> {
    let MasgCase::QuasiNilpotent { k } = symbol.case() else {
        return Err(Error::DomainMismatch {
            symbol: symbol.case().to_string(),
            expected: "quasi-nilpotent".into(),
        });
    };
    check_common(symbol, symbol.case(), nu, m)?;
    check_xi(xi)?;
    let p = symbol.p();
    check_len("n", n.len(), k)?;
    check_len("u'", u.len(), p - k - 1)?;
    let rho = if options.strict_paper { vec![p as f64; k] } else { n.as_f64() };
    let setup = TranslationSetup {
        p,
        k,
        rho,
        u,
        xi,
        ln_pref: translation_prefactor(p, k, n, nu, m, xi),
    };
    setup.gamma(symbol, nu, m, options)
}

/// `ln(|β_{n,ν}|² / s^{2n})` at `T = |s|²`.
fn ln_beta_sq_reduced(total_n: f64, nu: f64, t_sum: f64, xi: f64, theta: f64) -> Result<f64> {
    if !(t_sum < 1.0 - BRANCH_MARGIN) || t_sum < 0.0 {
        return Err(param(format!("|s|^2 = {t_sum} is outside the unit ball")));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(param(format!("theta = {theta} must lie in (0, pi)")));
    }
    let half = (nu + total_n) / 2.0;
    let ratio = t_sum / (1.0 - t_sum);
    let base = Complex64::new(1.0 - t_sum, -t_sum);
    let ln_base = base.ln();
    if !(base.re > 0.0) {
        return Err(Error::BranchRisk(base));
    }
    let argument = Complex64::new(1.0, -ratio) * (theta / 2.0).tan() + ratio;
    let arctan = guarded_atan(argument, BRANCH_MARGIN)?;
    let exponent = Complex64::new(-half, xi) * ln_base - 2.0 * Complex64::new(xi, half) * arctan;
    Ok(2.0 * exponent.re)
}

/// `β_{n,ν}(s, ξ, θ) = s^n [1−(1+i)|s|²]^{−(ν+|n|)/2 + iξ}
/// exp(−2(ξ + i(ν+|n|)/2) arctan[(1 − i|s|²/(1−|s|²)) tan(θ/2) + |s|²/(1−|s|²)])`
/// with principal branches.
pub fn beta_qh(n: &MultiIndex, nu: f64, s: &[f64], xi: f64, theta: f64) -> Result<Complex64> {
    check_len("s", s.len(), n.len())?;
    if s.iter().any(|&x| x < 0.0) {
        return Err(param("s must have non-negative entries"));
    }
    let t_sum: f64 = s.iter().map(|x| x * x).sum();
    if !(t_sum < 1.0 - BRANCH_MARGIN) {
        return Err(param(format!("|s|^2 = {t_sum} is outside the unit ball")));
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(param(format!("theta = {theta} must lie in (0, pi)")));
    }
    let half = (nu + n.total() as f64) / 2.0;
    let ratio = t_sum / (1.0 - t_sum);
    let power = guarded_powc(Complex64::new(1.0 - t_sum, -t_sum), Complex64::new(-half, xi))?;
    let argument = Complex64::new(1.0, -ratio) * (theta / 2.0).tan() + ratio;
    let arctan = guarded_atan(argument, BRANCH_MARGIN)?;
    let mono: f64 = n.0.iter().zip(s).map(|(&e, x)| x.powi(e as i32)).product();
    Ok(mono * power * (-2.0 * Complex64::new(xi, half) * arctan).exp())
}

/// `∫ F(s,θ) |β|² (1−|s|²)^{level−p} sin^{c}θ s ds dθ` up to the constant
/// `π 2^{−(p−1)}`, via a Dirichlet rule in `t = s²` and a symmetric Jacobi
/// rule in `θ/π`.
fn hyperbolic_integral(
    n: &MultiIndex,
    level: f64,
    sin_power: f64,
    xi: f64,
    nodes: usize,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<f64> {
    let p = n.len() + 1;
    let total_n = n.total() as f64;
    let simplex = simplex_dirichlet(nodes, &n.as_f64(), level - p as f64)?;
    let angles = gauss_jacobi(nodes, sin_power, sin_power)?;
    let mut terms = Vec::with_capacity(simplex.len() * angles.len());
    let mut coords = vec![0.0; p];
    for (t, wt) in simplex.iter() {
        let t_sum: f64 = t.iter().sum();
        for (i, ti) in t.iter().enumerate() {
            coords[i] = ti.sqrt();
        }
        for (x, wx) in angles.iter() {
            let x = x[0];
            let theta = PI * x;
            coords[p - 1] = theta;
            let jacobi = ((PI * x).sin() / (x * (1.0 - x))).powf(sin_power);
            let ln_density = ln_beta_sq_reduced(total_n, level, t_sum, xi, theta)?;
            terms.push(wt * wx * jacobi * ln_density.exp() * f(&coords));
        }
    }
    Ok(pairwise_sum(&terms))
}

/// `α_{n,ν}(ξ) = (∫ |β_{n,ν}|² (1−|s|²)^{ν−p} (c_ν/4) sin^{ν−p−1}θ s ds dθ)^{−1/2}`,
/// with `p = len(n) + 1`.
pub fn alpha_qh(n: &MultiIndex, nu: f64, xi: f64, policy: &AdaptivePolicy) -> Result<Estimate> {
    let p = n.len() + 1;
    let c = crate::domains::normalising_constant(nu, p)?;
    let constant = c / 4.0 * PI * 0.5f64.powi(p as i32 - 1);
    let sin_power = nu - p as f64 - 1.0;
    let one = |_: &[f64]| 1.0;
    let estimate = policy.run(|nodes| {
        let integral = constant * hyperbolic_integral(n, nu, sin_power, xi, nodes, &one)?;
        Ok(integral.powf(-0.5))
    })?;
    Ok(estimate)
}

/// Quasi-hyperbolic spectrum
/// `Σ_K α²_{n,ν+|M|}(ξ) ∫ F_{K∖M}(s,θ) |β_{n,ν+|M|}|² (1−|s|²)^{ν+|M|−p} (c_{ν+|M|}/4) sin^{ν+|K|−p−1}θ s ds dθ`.
/// Each term is formed as a ratio of two integrals on the same node count, so
/// constant symbols come out as exactly one.
pub fn gamma_quasi_hyperbolic(
    symbol: &SuperSymbol,
    nu: f64,
    n: &MultiIndex,
    xi: f64,
    m: SubsetIndex,
    options: &SpectralOptions,
) -> Result<Estimate> {
    check_common(symbol, MasgCase::QuasiHyperbolic, nu, m)?;
    if !xi.is_finite() {
        return Err(param("xi must be finite"));
    }
    let p = symbol.p();
    check_len("n", n.len(), p - 1)?;
    let level = nu + m.len() as f64;
    let pf = p as f64;
    let parts = contributions(symbol, m);
    options.policy.run(|nodes| {
        let one = |_: &[f64]| 1.0;
        let norm = hyperbolic_integral(n, level, level - pf - 1.0, xi, nodes, &one)?;
        let mut total = 0.0;
        for (k, coefficient) in &parts {
            let sin_power = nu + k.len() as f64 - pf - 1.0;
            let f = |x: &[f64]| coefficient.eval(x);
            total += hyperbolic_integral(n, level, sin_power, xi, nodes, &f)? / norm;
        }
        Ok(total)
    })
}

/// Position in the spectral domain of one class.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralArgs {
    pub n: MultiIndex,
    pub u: Vec<f64>,
    pub xi: Option<f64>,
}

/// Dispatches on the symbol's class.
pub fn gamma(
    symbol: &SuperSymbol,
    nu: f64,
    args: &SpectralArgs,
    m: SubsetIndex,
    options: &SpectralOptions,
) -> Result<Estimate> {
    let xi = || args.xi.ok_or_else(|| param("this class needs a xi value"));
    match symbol.case() {
        MasgCase::QuasiElliptic => gamma_quasi_elliptic(symbol, nu, &args.n, m, options),
        MasgCase::QuasiParabolic => gamma_quasi_parabolic(symbol, nu, &args.n, xi()?, m, options),
        MasgCase::QuasiHyperbolic => gamma_quasi_hyperbolic(symbol, nu, &args.n, xi()?, m, options),
        MasgCase::Nilpotent => gamma_nilpotent(symbol, nu, &args.u, xi()?, m, options),
        MasgCase::QuasiNilpotent { .. } => {
            gamma_quasi_nilpotent(symbol, nu, &args.n, &args.u, xi()?, m, options)
        }
    }
}

/// One `(M, n[, ξ])` entry. Failed entries keep `value = None` and record
/// the reason instead of aborting the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    #[serde(rename = "M")]
    pub m: SubsetIndex,
    pub n: MultiIndex,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    pub value: Option<f64>,
    pub err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralTable {
    pub case: MasgCase,
    pub p: usize,
    pub q: usize,
    pub nu: f64,
    pub n_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_grid: Option<Vec<f64>>,
    /// Fourier variable used for the nilpotent and quasi-nilpotent classes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    pub strict_paper: bool,
    pub entries: Vec<SpectralEntry>,
}

impl SpectralTable {
    pub fn get(&self, m: SubsetIndex, n: &MultiIndex, xi: Option<f64>) -> Option<&SpectralEntry> {
        self.entries
            .iter()
            .find(|e| e.m == m && &e.n == n && e.xi == xi)
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.failure.is_some()).count()
    }
}

/// Fills every `(M, n, ξ)` entry with `|n| ≤ n_max`. The Fourier variable
/// `u` is used (and required) for the classes that have one.
pub fn build_table(
    symbol: &SuperSymbol,
    nu: f64,
    n_max: u32,
    xi_grid: &[f64],
    u: &[f64],
    options: &SpectralOptions,
) -> Result<SpectralTable> {
    let case = symbol.case();
    let (p, q) = (symbol.p(), symbol.q());
    check_len("u'", u.len(), case.fourier_len(p))?;
    if case.has_xi() && xi_grid.is_empty() {
        return Err(param("this class needs a non-empty xi grid"));
    }
    let xis: Vec<Option<f64>> = if case.has_xi() {
        xi_grid.iter().map(|&x| Some(x)).collect()
    } else {
        vec![None]
    };
    let mut jobs = Vec::new();
    for m in SubsetIndex::all(q) {
        for n in MultiIndex::up_to(case.discrete_len(p), n_max) {
            for &xi in &xis {
                jobs.push((m, n.clone(), xi));
            }
        }
    }
    let entries = jobs
        .into_par_iter()
        .map(|(m, n, xi)| {
            let args = SpectralArgs { n: n.clone(), u: u.to_vec(), xi };
            match gamma(symbol, nu, &args, m, options) {
                Ok(est) => SpectralEntry {
                    m,
                    n,
                    xi,
                    value: Some(est.value),
                    err: Some(est.error),
                    failure: (!est.converged)
                        .then(|| format!("no convergence with {} nodes per axis", est.nodes)),
                },
                Err(e) => SpectralEntry { m, n, xi, value: None, err: None, failure: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(SpectralTable {
        case,
        p,
        q,
        nu,
        n_max,
        xi_grid: case.has_xi().then(|| xi_grid.to_vec()),
        u: (case.fourier_len(p) > 0).then(|| u.to_vec()),
        strict_paper: options.strict_paper,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::Term;

    fn single(case: MasgCase, p: usize, q: usize, set: SubsetIndex, c: Coefficient) -> SuperSymbol {
        SuperSymbol::new(case, p, q).unwrap().with(set, c).unwrap()
    }

    #[test]
    fn quasi_elliptic_examples() {
        let opts = SpectralOptions::default();
        let r2 = single(
            MasgCase::QuasiElliptic,
            1,
            0,
            SubsetIndex::EMPTY,
            Coefficient::from_terms(vec![Term::new(1.0, vec![2], 0.0)]),
        );
        for n in 0..6u32 {
            let g = gamma_quasi_elliptic(&r2, 2.0, &MultiIndex(vec![n]), SubsetIndex::EMPTY, &opts).unwrap();
            let expected = (n as f64 + 1.0) / (n as f64 + 2.0);
            assert!((g.value - expected).abs() < 1e-13, "{} vs {expected}", g.value);
            let numeric = gamma_quasi_elliptic(&r2.opaque(), 2.0, &MultiIndex(vec![n]), SubsetIndex::EMPTY, &opts).unwrap();
            assert!((numeric.value - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_normalisation() {
        let opts = SpectralOptions::default();
        let one = SuperSymbol::one(MasgCase::QuasiParabolic, 2, 1).unwrap();
        let g = gamma_quasi_parabolic(&one, 3.0, &MultiIndex(vec![3]), 0.7, SubsetIndex::singleton(1), &opts)
            .unwrap();
        assert!((g.value - 1.0).abs() < 1e-13);
        let g = gamma_quasi_parabolic(&one.opaque(), 3.0, &MultiIndex(vec![3]), 0.7, SubsetIndex::EMPTY, &opts)
            .unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_at_zero_s() {
        let n = MultiIndex::zero(0);
        let (xi, theta, nu) = (0.8, 1.1, 3.0);
        let b = beta_qh(&n, nu, &[], xi, theta).unwrap();
        let expected = (-Complex64::new(2.0 * xi, nu) * theta / 2.0).exp();
        assert!((b - expected).norm() < 1e-14);
    }
}
