//! Gaussian rules built from three-term recurrences (Golub–Welsch), simplex
//! rules under the stick-breaking map, trapezoidal torus rules and a seeded
//! Monte Carlo estimator.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{param, Error, Result};
use crate::special::{ln_gamma, pairwise_sum};

/// Nodes in `R^dim` with positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exactness: usize,
}

impl QuadratureRule {
    pub fn new(dim: usize, nodes: Vec<f64>, weights: Vec<f64>, exactness: usize) -> Self {
        assert_eq!(nodes.len(), dim * weights.len(), "node/weight count mismatch");
        QuadratureRule {
            dim,
            nodes,
            weights,
            exactness,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Declared polynomial degree of exactness (per axis for tensor rules).
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (self.node(i), w))
    }

    /// Total mass `Σ w_i`.
    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ w_i f(x_i)` with pairwise summation.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let terms: Vec<f64> = self.iter().map(|(x, w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// Tensor product `self × other` (nodes concatenated).
    pub fn tensor(&self, other: &QuadratureRule) -> QuadratureRule {
        let dim = self.dim + other.dim;
        let mut nodes = Vec::with_capacity(self.len() * other.len() * dim);
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (x, wx) in self.iter() {
            for (y, wy) in other.iter() {
                nodes.extend_from_slice(x);
                nodes.extend_from_slice(y);
                weights.push(wx * wy);
            }
        }
        QuadratureRule::new(dim, nodes, weights, self.exactness.min(other.exactness))
    }

    /// The zero-dimensional rule with a single unit weight.
    pub fn point() -> QuadratureRule {
        QuadratureRule::new(0, Vec::new(), vec![1.0], usize::MAX)
    }
}

/// Golub–Welsch: nodes are eigenvalues of the Jacobi matrix, weights are
/// `mass · v_0²`.
fn golub_welsch(diag: &[f64], offdiag: &[f64], mass: f64) -> (Vec<f64>, Vec<f64>) {
    let m = diag.len();
    let mut jacobi = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        jacobi[(i, i)] = diag[i];
        if i + 1 < m {
            jacobi[(i, i + 1)] = offdiag[i];
            jacobi[(i + 1, i)] = offdiag[i];
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|k| (eig.eigenvalues[k], mass * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

type RuleKey = (u8, usize, u64, u64);

fn cache() -> &'static Mutex<HashMap<RuleKey, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(key: RuleKey, build: impl FnOnce() -> QuadratureRule) -> Arc<QuadratureRule> {
    if let Some(rule) = cache().lock().expect("rule cache poisoned").get(&key) {
        return rule.clone();
    }
    let rule = Arc::new(build());
    cache()
        .lock()
        .expect("rule cache poisoned")
        .entry(key)
        .or_insert(rule)
        .clone()
}

/// `m`-point Gauss rule on `(0,1)` for the weight `(1−t)^alpha t^beta`.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> Result<Arc<QuadratureRule>> {
    if m == 0 || !(alpha > -1.0) || !(beta > -1.0) {
        return Err(param(format!(
            "Gauss-Jacobi needs m >= 1 and exponents > -1 (m={m}, alpha={alpha}, beta={beta})"
        )));
    }
    Ok(cached((0, m, alpha.to_bits(), beta.to_bits()), || {
        // Monic recurrence on (-1,1) for (1-x)^a (1+x)^b; t = (1+x)/2.
        let (a, b) = (alpha, beta);
        let diag: Vec<f64> = (0..m)
            .map(|n| {
                if n == 0 {
                    (b - a) / (a + b + 2.0)
                } else {
                    let s = 2.0 * n as f64 + a + b;
                    (b * b - a * a) / (s * (s + 2.0))
                }
            })
            .collect();
        let offdiag: Vec<f64> = (1..m)
            .map(|n| {
                let nf = n as f64;
                let s = 2.0 * nf + a + b;
                let beta_n = if n == 1 {
                    4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b))
                } else {
                    4.0 * nf * (nf + a) * (nf + b) * (nf + a + b)
                        / (s * s * (s + 1.0) * (s - 1.0))
                };
                beta_n.sqrt()
            })
            .collect();
        let mass = (ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp();
        let (x, w) = golub_welsch(&diag, &offdiag, mass);
        let t = x.into_iter().map(|x| 0.5 * (1.0 + x)).collect();
        QuadratureRule::new(1, t, w, 2 * m - 1)
    }))
}

/// `m`-point Gauss rule on `(0,∞)` for the weight `v^alpha e^{−scale·v}`.
pub fn gauss_laguerre_gen(m: usize, alpha: f64, scale: f64) -> Result<Arc<QuadratureRule>> {
    if m == 0 || !(alpha > -1.0) || !(scale > 0.0) || !scale.is_finite() {
        return Err(param(format!(
            "generalized Gauss-Laguerre needs m >= 1, alpha > -1, scale > 0 (got {m}, {alpha}, {scale})"
        )));
    }
    Ok(cached((1, m, alpha.to_bits(), scale.to_bits()), || {
        let diag: Vec<f64> = (0..m).map(|n| 2.0 * n as f64 + alpha + 1.0).collect();
        let offdiag: Vec<f64> = (1..m)
            .map(|n| (n as f64 * (n as f64 + alpha)).sqrt())
            .collect();
        let (x, w) = golub_welsch(&diag, &offdiag, ln_gamma(alpha + 1.0).exp());
        let factor = scale.powf(-(alpha + 1.0));
        QuadratureRule::new(
            1,
            x.into_iter().map(|x| x / scale).collect(),
            w.into_iter().map(|w| w * factor).collect(),
            2 * m - 1,
        )
    }))
}

/// `m`-point Gauss rule on the real line for the weight `e^{−x²}`.
pub fn gauss_hermite(m: usize) -> Result<Arc<QuadratureRule>> {
    if m == 0 {
        return Err(param("Gauss-Hermite needs m >= 1"));
    }
    Ok(cached((2, m, 0, 0), || {
        let diag = vec![0.0; m];
        let offdiag: Vec<f64> = (1..m).map(|n| (n as f64 / 2.0).sqrt()).collect();
        let (x, w) = golub_welsch(&diag, &offdiag, PI.sqrt());
        QuadratureRule::new(1, x, w, 2 * m - 1)
    }))
}

/// Rule on the simplex `{t ∈ R_+^p : Σ t < 1}` for the Dirichlet weight
/// `Π t_k^{powers_k} (1 − Σ t)^{tail}`.
///
/// Stick-breaking `t_k = u_k Π_{j<k}(1−u_j)` turns the weight into a product of
/// one-dimensional Jacobi weights, one per `u_k`.
pub fn simplex_dirichlet(m: usize, powers: &[f64], tail: f64) -> Result<QuadratureRule> {
    let p = powers.len();
    if p == 0 {
        return Ok(QuadratureRule::point());
    }
    let mut axes = Vec::with_capacity(p);
    for j in 0..p {
        let later: f64 = powers[j + 1..].iter().sum();
        let alpha = (p - j - 1) as f64 + later + tail;
        axes.push(gauss_jacobi(m, alpha, powers[j])?);
    }
    let mut tensor = QuadratureRule::point();
    for axis in &axes {
        tensor = tensor.tensor(axis);
    }
    let mut nodes = Vec::with_capacity(tensor.nodes.len());
    for (u, _) in tensor.iter() {
        let mut remaining = 1.0;
        for &uk in u {
            nodes.push(remaining * uk);
            remaining *= 1.0 - uk;
        }
    }
    Ok(QuadratureRule::new(p, nodes, tensor.weights, 2 * m - 1))
}

/// Trapezoidal rule with `n` equally spaced angles on `[0, 2π)`; exact for
/// trigonometric polynomials of degree below `n`.
pub fn torus_rule(n: usize) -> QuadratureRule {
    let h = 2.0 * PI / n as f64;
    QuadratureRule::new(1, (0..n).map(|k| k as f64 * h).collect(), vec![h; n], n - 1)
}

/// Result of a refinement loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Last observed change between refinement levels.
    pub error: f64,
    /// Nodes per axis at the final level.
    pub nodes: usize,
    pub converged: bool,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            error: 0.0,
            nodes: 0,
            converged: true,
        }
    }

    pub fn into_result(self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergence {
                delta: self.error,
                nodes: self.nodes,
            })
        }
    }
}

/// Doubling schedule for tensor Gaussian rules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptivePolicy {
    pub start: usize,
    pub max: usize,
    pub rel_tol: f64,
    /// Values below this magnitude are compared absolutely.
    pub abs_floor: f64,
}

impl Default for AdaptivePolicy {
    fn default() -> Self {
        AdaptivePolicy {
            start: 24,
            max: 192,
            rel_tol: 1e-10,
            abs_floor: 1e-14,
        }
    }
}

impl AdaptivePolicy {
    /// Evaluates `at(m)` for `m = start, 2·start, …` until two successive
    /// values agree.
    pub fn run(&self, mut at: impl FnMut(usize) -> Result<f64>) -> Result<Estimate> {
        let mut m = self.start;
        let mut previous = at(m)?;
        loop {
            if m * 2 > self.max {
                return Ok(Estimate {
                    value: previous,
                    error: f64::INFINITY,
                    nodes: m,
                    converged: false,
                });
            }
            m *= 2;
            let current = at(m)?;
            let delta = (current - previous).abs();
            if delta <= self.rel_tol * current.abs().max(self.abs_floor) {
                return Ok(Estimate {
                    value: current,
                    error: delta,
                    nodes: m,
                    converged: true,
                });
            }
            if m * 2 > self.max {
                return Ok(Estimate {
                    value: current,
                    error: delta,
                    nodes: m,
                    converged: false,
                });
            }
            previous = current;
        }
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Plain Monte Carlo with a ChaCha8 stream seeded by `seed`.
pub fn mc_integrate<T>(
    f: impl Fn(&T) -> f64,
    mut sampler: impl FnMut(&mut ChaCha8Rng) -> T,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n < 2 {
        return Err(param("Monte Carlo needs at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for k in 1..=n {
        let x = f(&sampler(&mut rng));
        let delta = x - mean;
        mean += delta / k as f64;
        m2 += delta * (x - mean);
    }
    let variance = m2 / (n - 1) as f64;
    Ok(McEstimate {
        value: mean,
        stderr: (variance / n as f64).sqrt(),
    })
}
