//! Weighted Bergman spaces on the ball and the Siegel domain, their super
//! extensions, reproducing kernels and exact inner products on polynomials.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{
    cayley, cayley_inv_odd_factor, BallPoint, Domain, SiegelPoint, DEFAULT_DOMAIN_MARGIN,
};
use crate::error::{param, Error, Result};
use crate::grassmann::{expand_weight, GrassmannElement, SubsetIndex};
use crate::quadrature::{simplex_dirichlet, torus_rule};
use crate::special::{guarded_powf, ln_gamma, ln_multi_factorial, pairwise_sum, rising};

/// Exponent vector of a monomial `z^n`.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|n| = Σ n_k`.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `ln n! = Σ ln n_k!`.
    pub fn ln_factorial(&self) -> f64 {
        ln_multi_factorial(&self.0)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&k| k as f64).collect()
    }

    /// `z^n`.
    pub fn monomial(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z)
            .map(|(&k, zk)| zk.powu(k))
            .product()
    }

    /// All indices of the given length with `|n| ≤ max_total`, ordered by
    /// total degree and then lexicographically.
    pub fn up_to(len: usize, max_total: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for total in 0..=max_total {
            let mut current = vec![0u32; len];
            fill_with_total(&mut current, 0, total, &mut out);
        }
        if len == 0 {
            out.truncate(1);
        }
        out
    }

    /// Total degree first, then lexicographic.
    pub fn degree_lex_cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.0.cmp(&other.0))
    }
}

fn fill_with_total(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 >= current.len() {
        if let Some(last) = current.last_mut() {
            *last = remaining;
            out.push(MultiIndex(current.clone()));
        } else if remaining == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    for k in 0..=remaining {
        current[pos] = k;
        fill_with_total(current, pos + 1, remaining - k, out);
    }
    current[pos] = 0;
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree_lex_cmp(other)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Parameters of a weighted super Bergman space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpaceSpec {
    pub domain: Domain,
    pub p: usize,
    pub q: usize,
    pub nu: f64,
}

impl WeightedSpaceSpec {
    pub fn ball(p: usize, q: usize, nu: f64) -> Result<Self> {
        Self::new(Domain::Ball, p, q, nu)
    }

    /// Every level `ν + m`, `0 ≤ m ≤ q`, must exceed `p`; this subsumes
    /// `ν > p − q + 1` whenever `q ≥ 1`.
    pub fn new(domain: Domain, p: usize, q: usize, nu: f64) -> Result<Self> {
        if p == 0 {
            return Err(param("p must be at least 1"));
        }
        if q > crate::grassmann::MAX_GENERATORS {
            return Err(param(format!("q = {q} exceeds the supported generator count")));
        }
        if !nu.is_finite() || !(nu > p as f64) || !(nu > p as f64 - q as f64 + 1.0) {
            return Err(param(format!(
                "nu = {nu} must exceed p = {p} (and p - q + 1) so that every level is a Bergman space"
            )));
        }
        Ok(WeightedSpaceSpec { domain, p, q, nu })
    }

    /// Level of the component carried by `ξ_M`.
    pub fn level(&self, m: SubsetIndex) -> f64 {
        self.nu + m.len() as f64
    }

    /// `Γ(ν)/Γ(ν+|M|)`, the weight of the `ξ_M` component in the inner product.
    pub fn level_weight(&self, m: SubsetIndex) -> f64 {
        (ln_gamma(self.nu) - ln_gamma(self.level(m))).exp()
    }

    /// Number of components at odd degree `m`, i.e. `C(q, m)`.
    pub fn multiplicity(&self, m: usize) -> usize {
        crate::special::binomial(self.q, m) as usize
    }
}

fn check_level(nu: f64, p: usize) -> Result<()> {
    if !(nu > p as f64) {
        return Err(param(format!("level {nu} must exceed p = {p}")));
    }
    Ok(())
}

/// `ln ‖z^n‖²_ν = ln n! + ln Γ(ν) − ln Γ(|n| + ν)`.
pub fn ln_monomial_norm_sq(nu: f64, n: &MultiIndex) -> Result<f64> {
    check_level(nu, n.len())?;
    Ok(n.ln_factorial() + ln_gamma(nu) - ln_gamma(n.total() as f64 + nu))
}

/// `‖z^n‖²_ν = n! Γ(ν) / Γ(|n| + ν)` for the probability measure `μ_ν` on `B^p`.
pub fn monomial_norm_sq(nu: f64, n: &MultiIndex) -> Result<f64> {
    ln_monomial_norm_sq(nu, n).map(f64::exp)
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// `(1 − z·w̄)^{−ν}`.
pub fn kernel_ball(nu: f64, z: &BallPoint, w: &BallPoint) -> Result<Complex64> {
    z.check_interior(DEFAULT_DOMAIN_MARGIN)?;
    w.check_interior(DEFAULT_DOMAIN_MARGIN)?;
    if z.dim() != w.dim() {
        return Err(Error::DimensionMismatch { left: z.dim(), right: w.dim() });
    }
    guarded_powf(Complex64::ONE - dot_conj(&z.z, &w.z), -nu)
}

/// `((w_p − v̄_p)/2i − w'·v̄')^{−ν}`.
pub fn kernel_siegel(nu: f64, w: &SiegelPoint, v: &SiegelPoint) -> Result<Complex64> {
    w.check_interior(DEFAULT_DOMAIN_MARGIN)?;
    v.check_interior(DEFAULT_DOMAIN_MARGIN)?;
    if w.dim() != v.dim() {
        return Err(Error::DimensionMismatch { left: w.dim(), right: v.dim() });
    }
    let base = (w.last() - v.last().conj()) / (2.0 * Complex64::I) - dot_conj(w.head(), v.head());
    guarded_powf(base, -nu)
}

/// Super kernel `(1 − z·w̄ − ξ·ω̄)^{−ν}` at two super points whose odd
/// coordinates are `ξ_k = a_k θ_k`, `ω_k = b_k θ_k`.
///
/// The `θ_I θ_I^*` coefficient is `ν(ν+1)⋯(ν+|I|−1) Π a_k b̄_k (1 − z·w̄)^{−ν−|I|}`.
pub fn super_kernel(
    spec: &WeightedSpaceSpec,
    z: &crate::domains::SuperBallPoint,
    w: &crate::domains::SuperBallPoint,
) -> Result<GrassmannElement> {
    z.even.check_interior(DEFAULT_DOMAIN_MARGIN)?;
    w.even.check_interior(DEFAULT_DOMAIN_MARGIN)?;
    if z.odd.len() != spec.q || w.odd.len() != spec.q {
        return Err(Error::DimensionMismatch { left: spec.q, right: z.odd.len().max(w.odd.len()) });
    }
    let base = Complex64::ONE - dot_conj(&z.even.z, &w.even.z);
    guarded_powf(base, -spec.nu)?;
    let pairing: Vec<Complex64> = z.odd.iter().zip(&w.odd).map(|(a, b)| a * b.conj()).collect();
    expand_weight(spec.q, -spec.nu, base, &pairing)
}

/// Finite sum `Σ c_{M,n} z^n ξ_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperPolynomial {
    p: usize,
    q: usize,
    terms: BTreeMap<(SubsetIndex, MultiIndex), Complex64>,
}

impl SuperPolynomial {
    pub fn zero(p: usize, q: usize) -> Self {
        SuperPolynomial { p, q, terms: BTreeMap::new() }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Adds `c z^n ξ_M`.
    pub fn add_term(&mut self, m: SubsetIndex, n: MultiIndex, c: Complex64) -> Result<()> {
        if n.len() != self.p {
            return Err(Error::DimensionMismatch { left: self.p, right: n.len() });
        }
        if m.max_element().unwrap_or(0) > self.q {
            return Err(Error::IndexOutOfRange { index: m.max_element().unwrap_or(0), q: self.q });
        }
        let slot = self.terms.entry((m, n)).or_insert(Complex64::ZERO);
        *slot += c;
        Ok(())
    }

    pub fn with_term(mut self, m: SubsetIndex, n: MultiIndex, c: Complex64) -> Result<Self> {
        self.add_term(m, n, c)?;
        Ok(self)
    }

    pub fn terms(&self) -> impl Iterator<Item = (SubsetIndex, &MultiIndex, Complex64)> + '_ {
        self.terms.iter().map(|((m, n), &c)| (*m, n, c))
    }

    pub fn coeff(&self, m: SubsetIndex, n: &MultiIndex) -> Complex64 {
        self.terms.get(&(m, n.clone())).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(_, n)| n.total()).max().unwrap_or(0)
    }

    /// The holomorphic component `ψ_M(z)`.
    pub fn component(&self, m: SubsetIndex, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .filter(|((mm, _), _)| *mm == m)
            .map(|((_, n), c)| c * n.monomial(z))
            .sum()
    }

    /// `Σ_M ψ_M(z) ξ_M` as a Grassmann element.
    pub fn eval(&self, z: &[Complex64]) -> GrassmannElement {
        let mut out = GrassmannElement::zero(self.q);
        for m in SubsetIndex::all(self.q) {
            let value = self.component(m, z);
            if value != Complex64::ZERO {
                let term = GrassmannElement::monomial(self.q, m, SubsetIndex::EMPTY, value);
                out = out.add(&term).expect("same q");
            }
        }
        out
    }
}

/// `(Φ|Ψ) = Σ_M Γ(ν)/Γ(ν+|M|) ⟨φ_M, ψ_M⟩_{ν+|M|}`, conjugate-linear in `Φ`.
///
/// On monomials `Γ(ν)/Γ(ν+|M|) · n! Γ(ν+|M|)/Γ(|n|+ν+|M|) = n! Γ(ν)/Γ(|n|+ν+|M|)`.
pub fn super_inner_product(
    spec: &WeightedSpaceSpec,
    phi: &SuperPolynomial,
    psi: &SuperPolynomial,
) -> Result<Complex64> {
    for poly in [phi, psi] {
        if poly.p != spec.p || poly.q != spec.q {
            return Err(Error::DimensionMismatch { left: spec.p + spec.q, right: poly.p + poly.q });
        }
    }
    let mut total = Complex64::ZERO;
    for ((m, n), a) in &phi.terms {
        if let Some(b) = psi.terms.get(&(*m, n.clone())) {
            let level = spec.level(*m);
            check_level(level, spec.p)?;
            let weight =
                (n.ln_factorial() + ln_gamma(spec.nu) - ln_gamma(n.total() as f64 + level)).exp();
            total += a.conj() * b * weight;
        }
    }
    Ok(total)
}

/// Truncation of the `ξ_M` component of the super kernel at `z`, as a
/// polynomial in the free variable, covering degrees `≤ degree`.
pub fn kernel_component_polynomial(
    spec: &WeightedSpaceSpec,
    z: &[Complex64],
    m: SubsetIndex,
    degree: u32,
) -> Result<SuperPolynomial> {
    let level = spec.level(m);
    let mut out = SuperPolynomial::zero(spec.p, spec.q);
    // (1 − w·z̄)^{−level} = Σ_n Γ(|n|+level)/(n! Γ(level)) (w z̄)^n, times ν⋯(ν+|M|−1).
    let lead = rising(spec.nu, m.len());
    let zbar: Vec<Complex64> = z.iter().map(|c| c.conj()).collect();
    for n in MultiIndex::up_to(spec.p, degree) {
        let series = (ln_gamma(n.total() as f64 + level) - n.ln_factorial() - ln_gamma(level)).exp();
        out.add_term(m, n.clone(), n.monomial(&zbar) * series * lead)?;
    }
    Ok(out)
}

/// Largest `|(K_Z^{(M)} | Ψ) − ψ_M(z)|` over `M`, where `K_Z^{(M)}` is the `ξ_M`
/// part of the kernel at `Z`; each component must reproduce by itself.
pub fn reproduce_check(spec: &WeightedSpaceSpec, psi: &SuperPolynomial, z: &BallPoint) -> Result<f64> {
    z.check_interior(DEFAULT_DOMAIN_MARGIN)?;
    let degree = psi.degree();
    let mut worst = 0.0f64;
    for m in SubsetIndex::all(spec.q) {
        let kernel = kernel_component_polynomial(spec, &z.z, m, degree)?;
        let got = super_inner_product(spec, &kernel, psi)?;
        worst = worst.max((got - psi.component(m, &z.z)).norm());
    }
    Ok(worst)
}

/// Siegel-side squared norm of `U_ν Ψ`, computed by quadrature on the ball.
///
/// `U_ν Ψ(w, ω) = Ψ(ψ⁻¹(w, ω)) (2/(1 − i w_p))^ν` is assembled pointwise with the
/// Grassmann machinery (odd substitution `ξ = −2i ω/(1 − i w_p)`), paired by the
/// Berezin integral against the expanded Siegel weight, and integrated over
/// `w = ψ(z)` with the real Jacobian `4 |1 + z_p|^{−2p−2}`. Only `p = 1` is
/// supported, which keeps the ball quadrature a plain polar rule.
pub fn siegel_norm_sq_via_ball(
    spec: &WeightedSpaceSpec,
    psi: &SuperPolynomial,
    radial_nodes: usize,
    angles: usize,
) -> Result<f64> {
    if spec.p != 1 {
        return Err(param("the Cayley unitarity check is implemented for p = 1"));
    }
    let q = spec.q;
    let alpha = spec.nu + q as f64 - spec.p as f64 - 1.0;
    let prefactor = (ln_gamma(spec.nu)
        - ln_gamma(spec.nu + q as f64 - spec.p as f64)
        - (spec.p as f64) * std::f64::consts::PI.ln())
    .exp()
        / 4.0;
    // Polar rule in t = r² whose Jacobi weight absorbs (1 − t)^{ν−p−1}; the
    // integrand is divided by the same factor.
    let tail = spec.nu - spec.p as f64 - 1.0;
    let radial = simplex_dirichlet(radial_nodes, &[0.0], tail)?;
    let torus = torus_rule(angles);
    let mut values = Vec::with_capacity(radial.len() * torus.len());
    for (t, wt) in radial.iter() {
        let r = t[0].sqrt();
        for (phi, wp) in torus.iter() {
            let z = BallPoint::new(vec![Complex64::from_polar(r, phi[0])]);
            let w = cayley(&z)?;
            let odd = cayley_inv_odd_factor(&w);
            let scalar = guarded_powf(Complex64::new(2.0, 0.0) / (Complex64::ONE - Complex64::I * w.last()), spec.nu)?;
            let pulled = psi
                .eval(&z.z)
                .rescale_generators(&vec![odd; q], &vec![Complex64::ONE; q])
                .scale(scalar);
            let weight = expand_weight(q, alpha, Complex64::new(w.defect(), 0.0), &vec![Complex64::ONE; q])?;
            let density = weight.mul(&pulled.star())?.mul(&pulled)?.berezin_top();
            let jac = 4.0 * (Complex64::ONE + z.last()).norm().powi(-2 * spec.p as i32 - 2);
            // dA = r dr dφ = ½ dt dφ.
            values.push(wt * wp * 0.5 * prefactor * density.re * jac / (1.0 - t[0]).powf(tail));
        }
    }
    Ok(pairwise_sum(&values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_enumeration() {
        let all = MultiIndex::up_to(2, 2);
        let raw: Vec<Vec<u32>> = all.iter().map(|n| n.0.clone()).collect();
        assert_eq!(raw, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(MultiIndex::up_to(0, 3).len(), 1);
    }

    #[test]
    fn norm_examples() {
        assert!((monomial_norm_sq(2.0, &MultiIndex(vec![0])).unwrap() - 1.0).abs() < 1e-14);
        assert!((monomial_norm_sq(2.0, &MultiIndex(vec![1])).unwrap() - 0.5).abs() < 1e-14);
        assert!((monomial_norm_sq(4.0, &MultiIndex(vec![1, 1])).unwrap() - 0.05).abs() < 1e-14);
        assert!(monomial_norm_sq(1.0, &MultiIndex(vec![1])).is_err());
    }

    #[test]
    fn kernel_examples() {
        let z = BallPoint::new(vec![Complex64::new(0.5, 0.0)]);
        let k = kernel_ball(2.0, &z, &z).unwrap();
        assert!((k - Complex64::new(16.0 / 9.0, 0.0)).norm() < 1e-14);
        let base = SiegelPoint::base(1);
        assert!((kernel_siegel(2.0, &base, &base).unwrap() - Complex64::ONE).norm() < 1e-14);
    }

    #[test]
    fn inner_product_examples() {
        let spec = WeightedSpaceSpec::ball(1, 1, 2.5).unwrap();
        let one = SuperPolynomial::zero(1, 1)
            .with_term(SubsetIndex::EMPTY, MultiIndex::zero(1), Complex64::ONE)
            .unwrap();
        assert!((super_inner_product(&spec, &one, &one).unwrap() - 1.0).norm() < 1e-14);
        let xi = SuperPolynomial::zero(1, 1)
            .with_term(SubsetIndex::singleton(1), MultiIndex::zero(1), Complex64::ONE)
            .unwrap();
        assert!((super_inner_product(&spec, &xi, &xi).unwrap() - 1.0 / 2.5).norm() < 1e-14);
        assert_eq!(super_inner_product(&spec, &one, &xi).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn spec_validation() {
        assert!(WeightedSpaceSpec::ball(2, 1, 2.0).is_err());
        assert!(WeightedSpaceSpec::ball(2, 1, 2.5).is_ok());
        assert_eq!(WeightedSpaceSpec::ball(1, 4, 2.0).unwrap().multiplicity(2), 6);
    }
}
