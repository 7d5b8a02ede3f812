//! The five classes of even maximal Abelian subgroups: their actions,
//! invariant coordinates and the diagonal invariant symbols built on them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{cayley, BallPoint, Domain, SiegelPoint, DEFAULT_DOMAIN_MARGIN};
use crate::error::{param, Error, Result};
use crate::grassmann::{GrassmannElement, SubsetIndex};

/// Conjugacy class of an even maximal Abelian subgroup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MasgCase {
    QuasiElliptic,
    QuasiParabolic,
    QuasiHyperbolic,
    Nilpotent,
    /// `k` rotated coordinates, `p − k − 1` translated ones; needs `1 ≤ k ≤ p − 2`.
    QuasiNilpotent { k: usize },
}

impl MasgCase {
    pub fn domain(self) -> Domain {
        match self {
            MasgCase::QuasiElliptic => Domain::Ball,
            _ => Domain::Siegel,
        }
    }

    pub fn validate(self, p: usize) -> Result<()> {
        if p == 0 {
            return Err(param("p must be at least 1"));
        }
        if let MasgCase::QuasiNilpotent { k } = self {
            if k < 1 || k + 2 > p {
                return Err(param(format!(
                    "the quasi-nilpotent class needs 1 <= k <= p - 2 (k = {k}, p = {p})"
                )));
            }
        }
        Ok(())
    }

    /// Length of the discrete spectral index `n`.
    pub fn discrete_len(self, p: usize) -> usize {
        match self {
            MasgCase::QuasiElliptic => p,
            MasgCase::QuasiParabolic | MasgCase::QuasiHyperbolic => p - 1,
            MasgCase::Nilpotent => 0,
            MasgCase::QuasiNilpotent { k } => k,
        }
    }

    /// Length of the continuous Fourier variable `u'`.
    pub fn fourier_len(self, p: usize) -> usize {
        match self {
            MasgCase::Nilpotent => p - 1,
            MasgCase::QuasiNilpotent { k } => p - k - 1,
            _ => 0,
        }
    }

    /// Whether the spectrum is sampled on a ξ-grid.
    pub fn has_xi(self) -> bool {
        self != MasgCase::QuasiElliptic
    }
}

impl fmt::Display for MasgCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MasgCase::QuasiElliptic => write!(f, "quasi-elliptic"),
            MasgCase::QuasiParabolic => write!(f, "quasi-parabolic"),
            MasgCase::QuasiHyperbolic => write!(f, "quasi-hyperbolic"),
            MasgCase::Nilpotent => write!(f, "nilpotent"),
            MasgCase::QuasiNilpotent { k } => write!(f, "quasi-nilpotent:{k}"),
        }
    }
}

impl From<MasgCase> for String {
    fn from(case: MasgCase) -> String {
        case.to_string()
    }
}

impl TryFrom<String> for MasgCase {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for MasgCase {
    type Err = Error;

    /// Accepts the kebab-case names; the quasi-nilpotent class is written
    /// `quasi-nilpotent:k`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.splitn(2, ':');
        let head = parts.next().unwrap_or_default();
        let tail = parts.next();
        let case = match (head, tail) {
            ("quasi-elliptic", None) => MasgCase::QuasiElliptic,
            ("quasi-parabolic", None) => MasgCase::QuasiParabolic,
            ("quasi-hyperbolic", None) => MasgCase::QuasiHyperbolic,
            ("nilpotent", None) => MasgCase::Nilpotent,
            ("quasi-nilpotent", Some(k)) => MasgCase::QuasiNilpotent {
                k: k.parse().map_err(|_| param(format!("bad quasi-nilpotent rank '{k}'")))?,
            },
            _ => return Err(param(format!("unknown symbol class '{s}'"))),
        };
        Ok(case)
    }
}

/// A point of either realisation.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainPoint {
    Ball(BallPoint),
    Siegel(SiegelPoint),
}

impl DomainPoint {
    pub fn domain(&self) -> Domain {
        match self {
            DomainPoint::Ball(_) => Domain::Ball,
            DomainPoint::Siegel(_) => Domain::Siegel,
        }
    }

    pub fn coords(&self) -> &[Complex64] {
        match self {
            DomainPoint::Ball(b) => &b.z,
            DomainPoint::Siegel(s) => &s.w,
        }
    }
}

fn expect_point(case: MasgCase, point: &DomainPoint) -> Result<&[Complex64]> {
    if point.domain() != case.domain() {
        return Err(Error::DomainMismatch {
            symbol: case.to_string(),
            expected: format!("{:?}", point.domain()).to_lowercase(),
        });
    }
    match point {
        DomainPoint::Ball(b) => b.check_interior(DEFAULT_DOMAIN_MARGIN)?,
        DomainPoint::Siegel(s) => s.check_interior(DEFAULT_DOMAIN_MARGIN)?,
    }
    Ok(point.coords())
}

fn sum_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `ζ = w_p − i|w'|²`, whose argument lies in `(0, π)` on the Siegel domain.
fn hyperbolic_zeta(w: &[Complex64]) -> Complex64 {
    let p = w.len();
    w[p - 1] - Complex64::I * sum_sq(&w[..p - 1])
}

/// Invariant coordinates of each class, in this order:
///
/// * quasi-elliptic: `(|z_1|, …, |z_p|)`;
/// * quasi-parabolic: `(|w_1|, …, |w_{p−1}|, Im w_p)`;
/// * quasi-hyperbolic: `(ρ_1, …, ρ_{p−1}, arg ζ)` with `ζ = w_p − i|w'|²` and
///   `ρ_k = |w_k| / (|w'|² + |ζ|)^{1/2}`;
/// * nilpotent: `(Im w_1, …, Im w_{p−1}, Im w_p − |w'|²)`;
/// * quasi-nilpotent: `(|w_1|, …, |w_k|, Im w_{k+1}, …, Im w_{p−1}, Im w_p − |w''|²)`
///   where `w'' = (w_{k+1}, …, w_{p−1})` is the translated block.
pub fn invariant_coords(case: MasgCase, point: &DomainPoint) -> Result<Vec<f64>> {
    let z = expect_point(case, point)?;
    let p = z.len();
    case.validate(p)?;
    let coords = match case {
        MasgCase::QuasiElliptic => z.iter().map(|c| c.norm()).collect(),
        MasgCase::QuasiParabolic => {
            let mut v: Vec<f64> = z[..p - 1].iter().map(|c| c.norm()).collect();
            v.push(z[p - 1].im);
            v
        }
        MasgCase::QuasiHyperbolic => {
            let zeta = hyperbolic_zeta(z);
            let scale = (sum_sq(&z[..p - 1]) + zeta.norm()).sqrt();
            let mut v: Vec<f64> = z[..p - 1].iter().map(|c| c.norm() / scale).collect();
            v.push(zeta.arg());
            v
        }
        MasgCase::Nilpotent => {
            let mut v: Vec<f64> = z[..p - 1].iter().map(|c| c.im).collect();
            v.push(z[p - 1].im - sum_sq(&z[..p - 1]));
            v
        }
        MasgCase::QuasiNilpotent { k } => {
            let mut v: Vec<f64> = z[..k].iter().map(|c| c.norm()).collect();
            v.extend(z[k..p - 1].iter().map(|c| c.im));
            v.push(z[p - 1].im - sum_sq(&z[k..p - 1]));
            v
        }
    };
    Ok(coords)
}

/// Scalar multiplying `ξ_I ξ_I^*` per element of `I` in the invariant form:
/// `|ζ|^{-1}` for the quasi-hyperbolic class, `1` otherwise.
pub fn odd_prefactor(case: MasgCase, point: &DomainPoint) -> Result<f64> {
    let z = expect_point(case, point)?;
    Ok(match case {
        MasgCase::QuasiHyperbolic => 1.0 / hyperbolic_zeta(z).norm(),
        _ => 1.0,
    })
}

/// Element of one of the five groups. Torus entries must have unit modulus.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement {
    QuasiElliptic { t: Vec<Complex64>, s: Vec<Complex64> },
    QuasiParabolic { t: Vec<Complex64>, h: f64, s: Vec<Complex64> },
    QuasiHyperbolic { t: Vec<Complex64>, r: f64, s: Vec<Complex64> },
    Nilpotent { b: Vec<f64>, h: f64, s: Vec<Complex64> },
    QuasiNilpotent { t: Vec<Complex64>, b: Vec<f64>, h: f64, s: Vec<Complex64> },
}

fn check_torus(values: &[Complex64]) -> Result<()> {
    for v in values {
        if (v.norm() - 1.0).abs() > 1e-12 {
            return Err(param(format!("torus parameter {v} is not of unit modulus")));
        }
    }
    Ok(())
}

fn mul_elementwise(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn add_elementwise(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl GroupElement {
    pub fn case(&self) -> MasgCase {
        match self {
            GroupElement::QuasiElliptic { .. } => MasgCase::QuasiElliptic,
            GroupElement::QuasiParabolic { .. } => MasgCase::QuasiParabolic,
            GroupElement::QuasiHyperbolic { .. } => MasgCase::QuasiHyperbolic,
            GroupElement::Nilpotent { .. } => MasgCase::Nilpotent,
            GroupElement::QuasiNilpotent { t, .. } => MasgCase::QuasiNilpotent { k: t.len() },
        }
    }

    /// Group law; every one of these groups is Abelian.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        use GroupElement::*;
        Ok(match (self, other) {
            (QuasiElliptic { t, s }, QuasiElliptic { t: t2, s: s2 }) => QuasiElliptic {
                t: mul_elementwise(t, t2),
                s: mul_elementwise(s, s2),
            },
            (QuasiParabolic { t, h, s }, QuasiParabolic { t: t2, h: h2, s: s2 }) => QuasiParabolic {
                t: mul_elementwise(t, t2),
                h: h + h2,
                s: mul_elementwise(s, s2),
            },
            (QuasiHyperbolic { t, r, s }, QuasiHyperbolic { t: t2, r: r2, s: s2 }) => QuasiHyperbolic {
                t: mul_elementwise(t, t2),
                r: r * r2,
                s: mul_elementwise(s, s2),
            },
            (Nilpotent { b, h, s }, Nilpotent { b: b2, h: h2, s: s2 }) => Nilpotent {
                b: add_elementwise(b, b2),
                h: h + h2,
                s: mul_elementwise(s, s2),
            },
            (QuasiNilpotent { t, b, h, s }, QuasiNilpotent { t: t2, b: b2, h: h2, s: s2 }) => {
                QuasiNilpotent {
                    t: mul_elementwise(t, t2),
                    b: add_elementwise(b, b2),
                    h: h + h2,
                    s: mul_elementwise(s, s2),
                }
            }
            _ => return Err(param("cannot compose elements of different groups")),
        })
    }
}

/// Image of `point` under `g`, together with the factors multiplying the odd
/// coordinates (`θ_k ↦ factor_k θ_k`).
pub fn group_action(g: &GroupElement, point: &DomainPoint) -> Result<(DomainPoint, Vec<Complex64>)> {
    let case = g.case();
    let z = expect_point(case, point)?;
    let p = z.len();
    case.validate(p)?;
    let bad_len = || param("group parameter length does not match the dimension");
    let mut out = z.to_vec();
    let odd = match g {
        GroupElement::QuasiElliptic { t, s } => {
            check_torus(t)?;
            check_torus(s)?;
            if t.len() != p {
                return Err(bad_len());
            }
            for (zk, tk) in out.iter_mut().zip(t) {
                *zk *= tk;
            }
            s.clone()
        }
        GroupElement::QuasiParabolic { t, h, s } => {
            check_torus(t)?;
            check_torus(s)?;
            if t.len() != p - 1 {
                return Err(bad_len());
            }
            for (zk, tk) in out.iter_mut().zip(t) {
                *zk *= tk;
            }
            out[p - 1] += *h;
            s.clone()
        }
        GroupElement::QuasiHyperbolic { t, r, s } => {
            check_torus(t)?;
            check_torus(s)?;
            if !(*r > 0.0) {
                return Err(param("the dilation parameter must be positive"));
            }
            if t.len() != p - 1 {
                return Err(bad_len());
            }
            let root = r.sqrt();
            for (zk, tk) in out.iter_mut().zip(t) {
                *zk *= tk * root;
            }
            out[p - 1] *= *r;
            s.iter().map(|sk| sk * root).collect()
        }
        GroupElement::Nilpotent { b, h, s } => {
            check_torus(s)?;
            if b.len() != p - 1 {
                return Err(bad_len());
            }
            translate(&mut out, 0, b, *h);
            s.clone()
        }
        GroupElement::QuasiNilpotent { t, b, h, s } => {
            check_torus(t)?;
            check_torus(s)?;
            let k = t.len();
            if b.len() + k + 1 != p {
                return Err(bad_len());
            }
            for (zk, tk) in out.iter_mut().zip(t) {
                *zk *= tk;
            }
            translate(&mut out, k, b, *h);
            s.clone()
        }
    };
    let image = match point {
        DomainPoint::Ball(_) => DomainPoint::Ball(BallPoint::new(out)),
        DomainPoint::Siegel(_) => DomainPoint::Siegel(SiegelPoint::new(out)),
    };
    Ok((image, odd))
}

/// `(w_{start..p−1} + b, w_p + h + 2i w''·b + i|b|²)`.
fn translate(w: &mut [Complex64], start: usize, b: &[f64], h: f64) {
    let p = w.len();
    let mut cross = Complex64::ZERO;
    let mut b_sq = 0.0;
    for (wk, bk) in w[start..p - 1].iter_mut().zip(b) {
        cross += *wk * bk;
        b_sq += bk * bk;
        *wk += bk;
    }
    w[p - 1] += h + 2.0 * Complex64::I * cross + Complex64::I * b_sq;
}

/// One term `coeff · Π x_i^{powers_i} · exp(−decay · x_last)` of an
/// analytically tagged coefficient function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
    pub decay: f64,
}

impl Term {
    pub fn new(coeff: f64, powers: Vec<u32>, decay: f64) -> Self {
        Term { coeff, powers, decay }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mono: f64 = self
            .powers
            .iter()
            .zip(x)
            .map(|(&e, xi)| xi.powi(e as i32))
            .product();
        let decay = if self.decay == 0.0 {
            1.0
        } else {
            (-self.decay * x.last().copied().unwrap_or(0.0)).exp()
        };
        self.coeff * mono * decay
    }
}

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Real coefficient function of the invariant coordinates, optionally
/// carrying an analytic description that enables closed-form spectra.
#[derive(Clone)]
pub struct Coefficient {
    func: ScalarFn,
    terms: Option<Vec<Term>>,
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficient")
            .field("terms", &self.terms)
            .finish_non_exhaustive()
    }
}

impl Coefficient {
    pub fn from_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient { func: Arc::new(f), terms: None }
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        let owned = terms.clone();
        Coefficient {
            func: Arc::new(move |x| owned.iter().map(|t| t.eval(x)).sum()),
            terms: Some(terms),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![Term::new(c, Vec::new(), 0.0)])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.func)(x)
    }

    pub fn terms(&self) -> Option<&[Term]> {
        self.terms.as_deref()
    }

    /// Drops the analytic tag, forcing quadrature.
    pub fn opaque(&self) -> Self {
        Coefficient { func: self.func.clone(), terms: None }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Coefficient, b: f64) -> Self {
        let (f, g) = (self.func.clone(), other.func.clone());
        let terms = match (&self.terms, &other.terms) {
            (Some(x), Some(y)) => Some(
                x.iter()
                    .map(|t| Term { coeff: a * t.coeff, ..t.clone() })
                    .chain(y.iter().map(|t| Term { coeff: b * t.coeff, ..t.clone() }))
                    .collect(),
            ),
            _ => None,
        };
        Coefficient {
            func: Arc::new(move |x| a * f(x) + b * g(x)),
            terms,
        }
    }
}

/// Diagonal invariant super symbol `Σ_I F_I ξ_I ξ_I^*` (with the class's odd
/// prefactor).
#[derive(Clone, Debug)]
pub struct SuperSymbol {
    case: MasgCase,
    p: usize,
    q: usize,
    coeffs: BTreeMap<SubsetIndex, Coefficient>,
}

impl SuperSymbol {
    pub fn new(case: MasgCase, p: usize, q: usize) -> Result<Self> {
        case.validate(p)?;
        Ok(SuperSymbol { case, p, q, coeffs: BTreeMap::new() })
    }

    /// The constant symbol `1`.
    pub fn one(case: MasgCase, p: usize, q: usize) -> Result<Self> {
        Self::new(case, p, q)?.with(SubsetIndex::EMPTY, Coefficient::constant(1.0))
    }

    pub fn with(mut self, set: SubsetIndex, coefficient: Coefficient) -> Result<Self> {
        if set.max_element().unwrap_or(0) > self.q {
            return Err(Error::IndexOutOfRange { index: set.max_element().unwrap_or(0), q: self.q });
        }
        self.coeffs.insert(set, coefficient);
        Ok(self)
    }

    pub fn case(&self) -> MasgCase {
        self.case
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn coefficient(&self, set: SubsetIndex) -> Option<&Coefficient> {
        self.coeffs.get(&set)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (SubsetIndex, &Coefficient)> + '_ {
        self.coeffs.iter().map(|(s, c)| (*s, c))
    }

    pub fn is_tagged(&self) -> bool {
        self.coeffs.values().all(|c| c.terms.is_some())
    }

    /// Same symbol with every analytic tag removed.
    pub fn opaque(&self) -> Self {
        SuperSymbol {
            coeffs: self.coeffs.iter().map(|(s, c)| (*s, c.opaque())).collect(),
            ..self.clone()
        }
    }

    /// `a·self + b·other` (same class and dimensions).
    pub fn combine(&self, a: f64, other: &SuperSymbol, b: f64) -> Result<Self> {
        if self.case != other.case || self.p != other.p || self.q != other.q {
            return Err(param("symbols of different classes cannot be combined"));
        }
        let zero = Coefficient::constant(0.0);
        let mut out = SuperSymbol::new(self.case, self.p, self.q)?;
        let mut keys: Vec<SubsetIndex> = self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let x = self.coeffs.get(&k).unwrap_or(&zero);
            let y = other.coeffs.get(&k).unwrap_or(&zero);
            out.coeffs.insert(k, x.combine(a, y, b));
        }
        Ok(out)
    }

    /// `F_I` at a point of the class's own domain, prefactor included.
    pub fn coefficient_at(&self, set: SubsetIndex, point: &DomainPoint) -> Result<f64> {
        let Some(c) = self.coeffs.get(&set) else {
            return Ok(0.0);
        };
        let x = invariant_coords(self.case, point)?;
        let pre = odd_prefactor(self.case, point)?;
        Ok(c.eval(&x) * pre.powi(set.len() as i32))
    }

    /// The symbol as a Grassmann element at `point`.
    pub fn eval_symbol(&self, point: &DomainPoint) -> Result<GrassmannElement> {
        if point.coords().len() != self.p {
            return Err(Error::DimensionMismatch { left: self.p, right: point.coords().len() });
        }
        let mut out = GrassmannElement::zero(self.q);
        for set in self.coeffs.keys() {
            let value = self.coefficient_at(*set, point)?;
            if !value.is_finite() {
                return Err(param(format!("symbol coefficient {set} is not finite at this point")));
            }
            let term = GrassmannElement::monomial(self.q, *set, *set, Complex64::new(value, 0.0));
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Ball-side symbol: the class's own coefficients for the quasi-elliptic
    /// class, otherwise the Cayley pullback
    /// `G_I(z) = F_I(ψ(z)) · prefactor^{|I|} · |1 + z_p|^{−2|I|}`, where the last
    /// factor is `|i/(1+z_p)|^{2|I|}` from the odd part of the Cayley map.
    pub fn to_ball(&self) -> BallSymbol {
        let shared = Arc::new(self.clone());
        let mut entries: BTreeMap<(SubsetIndex, SubsetIndex), BallFn> = BTreeMap::new();
        for set in self.coeffs.keys().copied() {
            let symbol = shared.clone();
            let f: BallFn = if self.case == MasgCase::QuasiElliptic {
                Arc::new(move |z: &[Complex64]| {
                    let point = DomainPoint::Ball(BallPoint::new(z.to_vec()));
                    Complex64::new(symbol.coefficient_at(set, &point).unwrap_or(f64::NAN), 0.0)
                })
            } else {
                Arc::new(move |z: &[Complex64]| {
                    let ball = BallPoint::new(z.to_vec());
                    let value = cayley(&ball).and_then(|w| {
                        let odd = (Complex64::ONE + ball.last()).norm_sqr().powi(-(set.len() as i32));
                        symbol
                            .coefficient_at(set, &DomainPoint::Siegel(w))
                            .map(|v| v * odd)
                    });
                    Complex64::new(value.unwrap_or(f64::NAN), 0.0)
                })
            };
            entries.insert((set, set), f);
        }
        let structure = match self.case {
            MasgCase::QuasiElliptic => BallStructure::Radial,
            other => BallStructure::SiegelInvariant(other),
        };
        BallSymbol { p: self.p, q: self.q, entries, structure }
    }
}

/// Complex scalar function on the ball.
pub type BallFn = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

/// What the oracle may assume about a ball-side symbol when choosing a rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallStructure {
    /// Depends on `|z_1|, …, |z_p|` only.
    Radial,
    /// Pullback of a Siegel-side invariant symbol of the given class.
    SiegelInvariant(MasgCase),
    /// No structure assumed.
    Generic,
}

/// General (possibly off-diagonal) super symbol on the ball:
/// `Σ F_{A,B}(z) ξ_A ξ_B^*`.
#[derive(Clone)]
pub struct BallSymbol {
    pub p: usize,
    pub q: usize,
    pub entries: BTreeMap<(SubsetIndex, SubsetIndex), BallFn>,
    pub structure: BallStructure,
}

impl fmt::Debug for BallSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BallSymbol")
            .field("p", &self.p)
            .field("q", &self.q)
            .field("entries", &self.entries.keys().collect::<Vec<_>>())
            .field("structure", &self.structure)
            .finish()
    }
}

impl BallSymbol {
    pub fn new(p: usize, q: usize, structure: BallStructure) -> Self {
        BallSymbol { p, q, entries: BTreeMap::new(), structure }
    }

    pub fn with(
        mut self,
        holo: SubsetIndex,
        anti: SubsetIndex,
        f: impl Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.entries.insert((holo, anti), Arc::new(f));
        self
    }

    pub fn entry(&self, holo: SubsetIndex, anti: SubsetIndex) -> Option<&BallFn> {
        self.entries.get(&(holo, anti))
    }

    /// The symbol as a Grassmann element at `z`.
    pub fn eval(&self, z: &[Complex64]) -> GrassmannElement {
        let mut out = GrassmannElement::zero(self.q);
        for ((a, b), f) in &self.entries {
            let term = GrassmannElement::monomial(self.q, *a, *b, f(z));
            out = out.add(&term).expect("same q");
        }
        out
    }
}

/// Pullback of a Siegel-side symbol to the ball (identity for the
/// quasi-elliptic class, which already lives there).
pub fn pullback_to_ball(symbol: &SuperSymbol) -> BallSymbol {
    symbol.to_ball()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coordinate_examples() {
        let ball = DomainPoint::Ball(BallPoint::new(vec![c(0.3, 0.0), c(0.0, 0.4)]));
        let r = invariant_coords(MasgCase::QuasiElliptic, &ball).unwrap();
        assert!((r[0] - 0.3).abs() < 1e-15 && (r[1] - 0.4).abs() < 1e-15);

        let (x, y, u, v) = (0.2, -0.3, 0.5, 1.7);
        let w = DomainPoint::Siegel(SiegelPoint::new(vec![c(x, y), c(u, v)]));
        let nil = invariant_coords(MasgCase::Nilpotent, &w).unwrap();
        assert!((nil[0] - y).abs() < 1e-15);
        assert!((nil[1] - (v - x * x - y * y)).abs() < 1e-15);

        let base = DomainPoint::Siegel(SiegelPoint::base(1));
        let qh = invariant_coords(MasgCase::QuasiHyperbolic, &base).unwrap();
        assert!((qh[0] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn wrong_domain_is_rejected() {
        let ball = DomainPoint::Ball(BallPoint::origin(2));
        assert!(matches!(
            invariant_coords(MasgCase::Nilpotent, &ball),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn case_parsing() {
        assert_eq!("quasi-nilpotent:1".parse::<MasgCase>().unwrap(), MasgCase::QuasiNilpotent { k: 1 });
        assert!("elliptic".parse::<MasgCase>().is_err());
        assert!(MasgCase::QuasiNilpotent { k: 1 }.validate(2).is_err());
        assert!(MasgCase::QuasiNilpotent { k: 1 }.validate(3).is_ok());
    }

    #[test]
    fn non_unit_torus_parameter_is_rejected() {
        let g = GroupElement::QuasiElliptic { t: vec![c(2.0, 0.0)], s: vec![] };
        let z = DomainPoint::Ball(BallPoint::new(vec![c(0.1, 0.0)]));
        assert!(group_action(&g, &z).is_err());
    }

    #[test]
    fn symbol_evaluation() {
        let one = SuperSymbol::one(MasgCase::QuasiParabolic, 2, 1).unwrap();
        let w = DomainPoint::Siegel(SiegelPoint::new(vec![c(0.1, 0.2), c(0.3, 2.0)]));
        let e = one.eval_symbol(&w).unwrap();
        assert_eq!(e.coeff(SubsetIndex::EMPTY, SubsetIndex::EMPTY), c(1.0, 0.0));
        assert_eq!(e.terms().count(), 1);

        let s1 = SubsetIndex::singleton(1);
        let f = SuperSymbol::new(MasgCase::QuasiElliptic, 2, 1)
            .unwrap()
            .with(s1, Coefficient::from_terms(vec![Term::new(1.0, vec![2, 0], 0.0)]))
            .unwrap();
        let z = DomainPoint::Ball(BallPoint::new(vec![c(0.5, 0.0), c(0.1, 0.0)]));
        assert!((f.eval_symbol(&z).unwrap().coeff(s1, s1).re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pullback_at_origin() {
        let f = SuperSymbol::new(MasgCase::Nilpotent, 2, 0)
            .unwrap()
            .with(SubsetIndex::EMPTY, Coefficient::from_fn(|x| (-x[1]).exp()))
            .unwrap();
        let g = pullback_to_ball(&f);
        let value = g.entry(SubsetIndex::EMPTY, SubsetIndex::EMPTY).unwrap()(&[c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((value.re - (-1.0f64).exp()).abs() < 1e-15);
    }
}
