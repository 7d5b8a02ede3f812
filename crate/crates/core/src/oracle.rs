//! Brute-force truncated super Toeplitz matrices in the orthonormal monomial
//! basis, with the checks that use them: identity and diagonality defects,
//! commutator norms and the quasi-elliptic Bargmann map.
//!
//! All integrals are over the ball. Symbols coming from the Siegel domain are
//! pulled back and integrated with a rule adapted to the Cayley geometry:
//! `z_p` runs over horocycles `z_p = −1 + ρ(1 + e^{iφ})` (on which `Im w_p` is
//! constant) and the remaining coordinates over the ball of radius
//! `|1 + z_p| (Im w_p)^{1/2}` in polar form.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bergman::{ln_monomial_norm_sq, MultiIndex, SuperPolynomial, WeightedSpaceSpec};
use crate::domains::normalising_constant;
use crate::error::{param, Error, Result};
use crate::grassmann::{expand_weight, sign_eps, GrassmannElement, SubsetIndex};
use crate::quadrature::{gauss_jacobi, simplex_dirichlet};
use crate::special::{ln_gamma, pairwise_sum};
use crate::symbols::{BallFn, BallStructure, BallSymbol};

/// Label of one orthonormal basis vector `z^n ξ_M / ‖z^n ξ_M‖`.
///
/// Ordered by `|M|`, then `M` lexicographically, then `|n|`, then `n`
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    #[serde(rename = "M")]
    pub m: SubsetIndex,
    pub n: MultiIndex,
}

/// Every basis label with `|n| ≤ n_max`, in the documented order.
pub fn basis(p: usize, q: usize, n_max: u32) -> Vec<BasisIndex> {
    let monomials = MultiIndex::up_to(p, n_max);
    SubsetIndex::all(q)
        .into_iter()
        .flat_map(|m| monomials.iter().map(move |n| BasisIndex { m, n: n.clone() }))
        .collect()
}

/// How a general symbol is turned into blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Block `(I, J)` is
    /// `Σ_{K ⊇ I∪J} ε(K∖I, I) ε(K∖J, J) Γ(ν+|I|−p)/Γ(ν+|J|−p)
    ///  T^{ν+|J|}_{ν+|I|}(F_{K∖J, K∖I} (1−|z|²)^{|K|−|I|})`,
    /// the form the spectral functions are built on.
    Printed,
    /// Matrix elements `(e_I | F e_J)` computed from the Berezin integral
    /// against the super weight, with no closed form assumed.
    Berezin,
}

/// Sizes of the Cayley-adapted rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiegelRuleSize {
    /// Gauss–Legendre nodes in the horocycle parameter `ρ`.
    pub rho: usize,
    /// Midpoint nodes in the horocycle angle `φ`.
    pub phi: usize,
    /// Gauss nodes per axis of the radial simplex of `z'`.
    pub simplex: usize,
    /// Angles per circle of `z'`.
    pub angles: usize,
}

impl SiegelRuleSize {
    /// Sizes that resolve monomials of degree up to `n_max`; the angular
    /// count must exceed `2 n_max` so that no Fourier mode aliases.
    pub fn for_truncation(p: usize, n_max: u32) -> Self {
        let angles = 2 * n_max as usize + 2;
        match p {
            1 => SiegelRuleSize { rho: 400, phi: 256, simplex: 1, angles: 1 },
            2 => SiegelRuleSize { rho: 48, phi: 32, simplex: 24, angles: angles.max(22) },
            _ => SiegelRuleSize { rho: 24, phi: 24, simplex: 10, angles: angles.max(14) },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub convention: Convention,
    /// Gauss nodes per simplex axis for radial and generic symbols.
    pub polar_nodes: usize,
    /// Angles per circle for generic symbols.
    pub angles: usize,
    /// Overrides [`SiegelRuleSize::for_truncation`].
    pub siegel: Option<SiegelRuleSize>,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            convention: Convention::Printed,
            polar_nodes: 64,
            angles: 64,
            siegel: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum BallRule {
    Radial { nodes: usize },
    Polar { nodes: usize, angles: usize },
    Siegel(SiegelRuleSize),
}

fn rule_for(structure: BallStructure, p: usize, n_max: u32, options: &OracleOptions) -> BallRule {
    match structure {
        BallStructure::Radial => BallRule::Radial { nodes: options.polar_nodes },
        BallStructure::Generic => BallRule::Polar { nodes: options.polar_nodes, angles: options.angles },
        BallStructure::SiegelInvariant(_) => {
            BallRule::Siegel(options.siegel.unwrap_or_else(|| SiegelRuleSize::for_truncation(p, n_max)))
        }
    }
}

/// Forward FFT along every axis of an `a^dims` array (axis 0 fastest).
fn fft_nd(data: &mut [Complex64], a: usize, dims: usize, fft: &Arc<dyn Fft<f64>>) {
    if a == 1 {
        return;
    }
    let mut line = vec![Complex64::ZERO; a];
    let mut stride = 1;
    for _ in 0..dims {
        let block = stride * a;
        for start in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + offset + k * stride];
                }
                fft.process(&mut line);
                for (k, value) in line.iter().enumerate() {
                    data[start + offset + k * stride] = *value;
                }
            }
        }
        stride = block;
    }
}

/// For every `(row, col)` pair, the position of the Fourier mode
/// `row[..dims] − col[..dims]` in an `a^dims` FFT output, or `usize::MAX`
/// when only the zero mode is available and the pair needs another.
fn pair_modes(basis: &[MultiIndex], dims: usize, a: Option<usize>) -> Vec<usize> {
    let nb = basis.len();
    let mut out = vec![usize::MAX; nb * nb];
    for (i, row) in basis.iter().enumerate() {
        for (j, col) in basis.iter().enumerate() {
            out[i * nb + j] = match a {
                None => {
                    if row.0[..dims] == col.0[..dims] {
                        0
                    } else {
                        usize::MAX
                    }
                }
                Some(a) => {
                    let mut index = 0;
                    let mut stride = 1;
                    for k in 0..dims {
                        let d = row.0[k] as i64 - col.0[k] as i64;
                        index += d.rem_euclid(a as i64) as usize * stride;
                        stride *= a;
                    }
                    index
                }
            };
        }
    }
    out
}

/// `mom[i, j] += weight · conj(u_i) u_j · table[mode(i, j)]`.
fn accumulate(mom: &mut [Complex64], u: &[Complex64], weight: f64, table: &[Complex64], modes: &[usize]) {
    let nb = u.len();
    for i in 0..nb {
        let left = u[i].conj() * weight;
        let row = &mut mom[i * nb..(i + 1) * nb];
        let row_modes = &modes[i * nb..(i + 1) * nb];
        for j in 0..nb {
            let k = row_modes[j];
            if k != usize::MAX {
                row[j] += left * u[j] * table[k];
            }
        }
    }
}

/// Sums per-chunk matrices in a fixed order.
fn reduce(chunks: Vec<Vec<Complex64>>, len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; len];
    for chunk in chunks {
        for (o, c) in out.iter_mut().zip(chunk) {
            *o += c;
        }
    }
    out
}

fn check_finite(value: Complex64) -> Result<Complex64> {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(param("symbol is not finite at a quadrature node"))
    }
}

/// `∫_{B^p} f(z) z^n z̄^m (1−|z|²)^{tail} dV(z)` for all `m` (row), `n` (column)
/// in `basis`.
fn moments(rule: BallRule, f: &BallFn, tail: f64, p: usize, basis: &[MultiIndex]) -> Result<DMatrix<Complex64>> {
    let nb = basis.len();
    let flat = match rule {
        BallRule::Radial { nodes } => polar_moments(f, tail, p, basis, nodes, None)?,
        BallRule::Polar { nodes, angles } => polar_moments(f, tail, p, basis, nodes, Some(angles))?,
        BallRule::Siegel(size) => siegel_moments(f, tail, p, basis, size)?,
    };
    Ok(DMatrix::from_row_slice(nb, nb, &flat))
}

/// Simplex rule in `t_k = |z_k|²` times a torus rule (or, for radial
/// symbols, just the zero mode).
fn polar_moments(
    f: &BallFn,
    tail: f64,
    p: usize,
    basis: &[MultiIndex],
    nodes: usize,
    angles: Option<usize>,
) -> Result<Vec<Complex64>> {
    let nb = basis.len();
    let simplex = simplex_dirichlet(nodes, &vec![0.0; p], tail)?;
    let modes = pair_modes(basis, p, angles);
    let a = angles.unwrap_or(1);
    let samples = a.pow(p as u32);
    let fft = FftPlanner::new().plan_fft_forward(a);
    // dV = 2^{−p} dt dφ and ∫dφ e^{i(n−m)φ} f = (2π)^p f̂(m−n).
    let constant = PI.powi(p as i32);
    let outer: Vec<usize> = (0..simplex.len()).collect();
    let chunks = outer
        .par_chunks(64)
        .map(|chunk| -> Result<Vec<Complex64>> {
            let mut mom = vec![Complex64::ZERO; nb * nb];
            let mut table = vec![Complex64::ZERO; samples];
            let mut z = vec![Complex64::ZERO; p];
            let mut u = vec![Complex64::ZERO; nb];
            for &i in chunk {
                let t = simplex.node(i);
                let r: Vec<f64> = t.iter().map(|x| x.sqrt()).collect();
                for (s, slot) in table.iter_mut().enumerate() {
                    let mut rem = s;
                    for k in 0..p {
                        let phi = 2.0 * PI * (rem % a) as f64 / a as f64;
                        rem /= a;
                        z[k] = Complex64::from_polar(r[k], phi);
                    }
                    *slot = check_finite(f(&z))?;
                }
                fft_nd(&mut table, a, p, &fft);
                for v in table.iter_mut() {
                    *v /= samples as f64;
                }
                for (slot, n) in u.iter_mut().zip(basis) {
                    *slot = Complex64::new(n.0.iter().zip(&r).map(|(&e, x)| x.powi(e as i32)).product(), 0.0);
                }
                accumulate(&mut mom, &u, simplex.weights()[i] * constant, &table, &modes);
            }
            Ok(mom)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(chunks, nb * nb))
}

/// The Cayley-adapted rule described in the module documentation.
fn siegel_moments(
    f: &BallFn,
    tail: f64,
    p: usize,
    basis: &[MultiIndex],
    size: SiegelRuleSize,
) -> Result<Vec<Complex64>> {
    let nb = basis.len();
    let inner_dims = p - 1;
    let radial = gauss_jacobi(size.rho, 0.0, 0.0)?;
    let simplex = simplex_dirichlet(size.simplex, &vec![0.0; inner_dims], tail)?;
    let a = if inner_dims == 0 { 1 } else { size.angles };
    let samples = a.pow(inner_dims as u32);
    let modes = pair_modes(basis, inner_dims, Some(a));
    let fft = FftPlanner::new().plan_fft_forward(a);
    let phi_weight = 2.0 * PI / size.phi as f64;
    let torus_factor = (2.0 * PI).powi(inner_dims as i32);
    let chunks = (0..radial.len())
        .into_par_iter()
        .map(|ir| -> Result<Vec<Complex64>> {
            let mut mom = vec![Complex64::ZERO; nb * nb];
            let mut table = vec![Complex64::ZERO; samples];
            let mut z = vec![Complex64::ZERO; p];
            let mut u = vec![Complex64::ZERO; nb];
            let rho = radial.node(ir)[0];
            let r_sq = (1.0 - rho) / rho;
            let r = r_sq.sqrt();
            for jp in 0..size.phi {
                let phi = -PI + (jp as f64 + 0.5) * phi_weight;
                let e = Complex64::from_polar(1.0, phi);
                let zp = -1.0 + rho * (1.0 + e);
                let shift = Complex64::ONE + zp;
                let a2 = shift.norm_sqr();
                let outer_weight = radial.weights()[ir]
                    * phi_weight
                    * rho
                    * (1.0 + phi.cos())
                    * a2.powf(inner_dims as f64 + tail)
                    * (r_sq / 2.0).powi(inner_dims as i32)
                    * r_sq.powf(tail)
                    * torus_factor;
                if outer_weight == 0.0 {
                    continue;
                }
                let scale = -Complex64::I * shift * r;
                z[p - 1] = zp;
                for (it, wt) in simplex.iter() {
                    let radii: Vec<Complex64> = it.iter().map(|x| scale * x.sqrt()).collect();
                    for (s, slot) in table.iter_mut().enumerate() {
                        let mut rem = s;
                        for k in 0..inner_dims {
                            let chi = 2.0 * PI * (rem % a) as f64 / a as f64;
                            rem /= a;
                            z[k] = radii[k] * Complex64::from_polar(1.0, chi);
                        }
                        *slot = check_finite(f(&z))?;
                    }
                    fft_nd(&mut table, a, inner_dims, &fft);
                    for v in table.iter_mut() {
                        *v /= samples as f64;
                    }
                    for (slot, n) in u.iter_mut().zip(basis) {
                        let mut value = zp.powu(n.0[p - 1]);
                        for (r, &e) in radii[..inner_dims].iter().zip(&n.0) {
                            value *= r.powu(e);
                        }
                        *slot = value;
                    }
                    accumulate(&mut mom, &u, outer_weight * wt, &table, &modes);
                }
            }
            Ok(mom)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reduce(chunks, nb * nb))
}

fn check_level(level: f64, p: usize) -> Result<()> {
    if !(level > p as f64) {
        return Err(param(format!("level {level} must exceed p = {p}")));
    }
    Ok(())
}

/// `T^{ν_col}_{ν_row}(f)` on monomials with `|n| ≤ n_max`: entries
/// `⟨f z^n, z^m⟩_{ν_row} / (‖z^m‖_{ν_row} ‖z^n‖_{ν_col})`, row `m`, column `n`.
pub fn scalar_toeplitz_block(
    f: &BallFn,
    structure: BallStructure,
    p: usize,
    nu_row: f64,
    nu_col: f64,
    n_max: u32,
    options: &OracleOptions,
) -> Result<DMatrix<Complex64>> {
    check_level(nu_row, p)?;
    check_level(nu_col, p)?;
    let monomials = MultiIndex::up_to(p, n_max);
    let rule = rule_for(structure, p, n_max, options);
    let mut block = moments(rule, f, nu_row - p as f64 - 1.0, p, &monomials)?;
    let c = normalising_constant(nu_row, p)?;
    let row_norms = monomials
        .iter()
        .map(|n| ln_monomial_norm_sq(nu_row, n).map(|x| (0.5 * x).exp()))
        .collect::<Result<Vec<_>>>()?;
    let col_norms = monomials
        .iter()
        .map(|n| ln_monomial_norm_sq(nu_col, n).map(|x| (0.5 * x).exp()))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..monomials.len() {
        for j in 0..monomials.len() {
            block[(i, j)] *= c / (row_norms[i] * col_norms[j]);
        }
    }
    Ok(block)
}

/// Truncated matrix of a super Toeplitz operator.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperToeplitzMatrix {
    pub p: usize,
    pub q: usize,
    pub nu: f64,
    pub n_max: u32,
    pub convention: Convention,
    pub basis: Vec<BasisIndex>,
    pub data: DMatrix<Complex64>,
}

impl SuperToeplitzMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Row/column range of the `ξ_M` component.
    pub fn component_range(&self, m: SubsetIndex) -> std::ops::Range<usize> {
        let start = self.basis.iter().position(|b| b.m == m).unwrap_or(0);
        let len = self.basis.iter().filter(|b| b.m == m).count();
        start..start + len
    }

    /// Copy of block `(I, J)`.
    pub fn block(&self, i: SubsetIndex, j: SubsetIndex) -> DMatrix<Complex64> {
        let (rows, cols) = (self.component_range(i), self.component_range(j));
        self.data
            .view((rows.start, cols.start), (rows.len(), cols.len()))
            .into_owned()
    }

    /// `(I, J) → (row offset, column offset, rows, columns)` for every block.
    pub fn block_map(&self) -> BTreeMap<(SubsetIndex, SubsetIndex), [usize; 4]> {
        let sets = SubsetIndex::all(self.q);
        let mut out = BTreeMap::new();
        for &i in &sets {
            for &j in &sets {
                let (r, c) = (self.component_range(i), self.component_range(j));
                out.insert((i, j), [r.start, c.start, r.len(), c.len()]);
            }
        }
        out
    }

    /// Indices of basis vectors with `|n| ≤ degree`.
    pub fn interior(&self, degree: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&k| self.basis[k].n.total() <= degree).collect()
    }

    /// Principal submatrix on the given indices.
    pub fn restrict(&self, indices: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(indices.len(), indices.len(), |a, b| self.data[(indices[a], indices[b])])
    }

    /// Largest `|A − I|` entry on the interior block.
    pub fn identity_defect(&self, interior_degree: u32) -> f64 {
        let idx = self.interior(interior_degree);
        let sub = self.restrict(&idx);
        let mut worst = 0.0f64;
        for a in 0..idx.len() {
            for b in 0..idx.len() {
                let target = if a == b { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((sub[(a, b)] - target).norm());
            }
        }
        worst
    }

    /// Largest `|A − A^H|` entry.
    pub fn hermitian_defect(&self) -> f64 {
        let adj = self.data.adjoint();
        (&self.data - adj).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn diagonal(&self) -> Vec<(BasisIndex, Complex64)> {
        self.basis
            .iter()
            .enumerate()
            .map(|(k, b)| (b.clone(), self.data[(k, k)]))
            .collect()
    }

    /// Binary form: magic `SBTMAT01`, rows and columns as little-endian
    /// `u64`, then row-major `(re, im)` pairs of little-endian `f64`.
    pub fn write_binary(&self, out: &mut impl Write) -> std::io::Result<()> {
        write_matrix_binary(&self.data, out)
    }
}

pub const BINARY_MAGIC: &[u8; 8] = b"SBTMAT01";

pub fn write_matrix_binary(data: &DMatrix<Complex64>, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(data.nrows() as u64).to_le_bytes())?;
    out.write_all(&(data.ncols() as u64).to_le_bytes())?;
    for i in 0..data.nrows() {
        for j in 0..data.ncols() {
            out.write_all(&data[(i, j)].re.to_le_bytes())?;
            out.write_all(&data[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix_binary(input: &mut impl Read) -> Result<DMatrix<Complex64>> {
    let io = |e: std::io::Error| param(format!("matrix read failed: {e}"));
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != BINARY_MAGIC {
        return Err(param("not a super Toeplitz matrix file"));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word).map_err(io)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word).map_err(io)?;
    let cols = u64::from_le_bytes(word) as usize;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        input.read_exact(&mut word).map_err(io)?;
        let re = f64::from_le_bytes(word);
        input.read_exact(&mut word).map_err(io)?;
        values.push(Complex64::new(re, f64::from_le_bytes(word)));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn check_symbol(symbol: &BallSymbol, spec: &WeightedSpaceSpec) -> Result<()> {
    if symbol.p != spec.p || symbol.q != spec.q {
        return Err(Error::DimensionMismatch { left: symbol.p + symbol.q, right: spec.p + spec.q });
    }
    Ok(())
}

/// The truncated matrix of `T_F` under the chosen convention.
pub fn assemble_super_toeplitz(
    symbol: &BallSymbol,
    spec: &WeightedSpaceSpec,
    n_max: u32,
    options: &OracleOptions,
) -> Result<SuperToeplitzMatrix> {
    check_symbol(symbol, spec)?;
    match options.convention {
        Convention::Printed => assemble_printed(symbol, spec, n_max, options),
        Convention::Berezin => assemble_berezin(symbol, spec, n_max, options),
    }
}

fn empty_matrix(spec: &WeightedSpaceSpec, n_max: u32, convention: Convention) -> SuperToeplitzMatrix {
    let basis = basis(spec.p, spec.q, n_max);
    let dim = basis.len();
    SuperToeplitzMatrix {
        p: spec.p,
        q: spec.q,
        nu: spec.nu,
        n_max,
        convention,
        basis,
        data: DMatrix::zeros(dim, dim),
    }
}

fn assemble_printed(
    symbol: &BallSymbol,
    spec: &WeightedSpaceSpec,
    n_max: u32,
    options: &OracleOptions,
) -> Result<SuperToeplitzMatrix> {
    let (p, q, nu) = (spec.p, spec.q, spec.nu);
    let pf = p as f64;
    let mut out = empty_matrix(spec, n_max, Convention::Printed);
    let sets = SubsetIndex::all(q);
    for &i in &sets {
        for &j in &sets {
            let mut pieces: Vec<(f64, i32, BallFn)> = Vec::new();
            for k in i.union(j).supersets(q) {
                let (holo, anti) = (k.difference(j), k.difference(i));
                let Some(entry) = symbol.entry(holo, anti) else { continue };
                let sign = (sign_eps(k.difference(i), i) * sign_eps(k.difference(j), j)) as f64;
                let ratio = (ln_gamma(nu + i.len() as f64 - pf) - ln_gamma(nu + j.len() as f64 - pf)).exp();
                pieces.push((sign * ratio, (k.len() - i.len()) as i32, entry.clone()));
            }
            if pieces.is_empty() {
                continue;
            }
            let combined: BallFn = Arc::new(move |z: &[Complex64]| {
                let defect = 1.0 - z.iter().map(|c| c.norm_sqr()).sum::<f64>();
                pieces
                    .iter()
                    .map(|(c, power, f)| f(z) * (*c * defect.powi(*power)))
                    .sum()
            });
            let block = scalar_toeplitz_block(
                &combined,
                symbol.structure,
                p,
                nu + i.len() as f64,
                nu + j.len() as f64,
                n_max,
                options,
            )?;
            let (r, c) = (out.component_range(i), out.component_range(j));
            out.data.view_mut((r.start, c.start), (r.len(), c.len())).copy_from(&block);
        }
    }
    Ok(out)
}

/// `(e_{I,m} | F e_{J,n})` with the super weight
/// `Γ(ν)/(π^p Γ(ν+q−p)) (1 − |z|² − Σ ξ_k ξ̄_k)^{ν+q−p−1}` and the Berezin
/// integral, per pair of components.
fn assemble_berezin(
    symbol: &BallSymbol,
    spec: &WeightedSpaceSpec,
    n_max: u32,
    options: &OracleOptions,
) -> Result<SuperToeplitzMatrix> {
    let (p, q, nu) = (spec.p, spec.q, spec.nu);
    let pf = p as f64;
    let alpha = nu + q as f64 - pf - 1.0;
    let tail = nu - pf - 1.0;
    let constant = (ln_gamma(nu) - ln_gamma(nu + q as f64 - pf) - pf * PI.ln()).exp();
    let mut out = empty_matrix(spec, n_max, Convention::Berezin);
    let monomials = MultiIndex::up_to(p, n_max);
    let rule = rule_for(symbol.structure, p, n_max, options);
    let sets = SubsetIndex::all(q);
    let shared = Arc::new(symbol.clone());
    for &i in &sets {
        for &j in &sets {
            let symbol = shared.clone();
            let bra = GrassmannElement::monomial(q, SubsetIndex::EMPTY, i, Complex64::ONE);
            let ket = GrassmannElement::monomial(q, j, SubsetIndex::EMPTY, Complex64::ONE);
            let density: BallFn = Arc::new(move |z: &[Complex64]| {
                let defect = 1.0 - z.iter().map(|c| c.norm_sqr()).sum::<f64>();
                let weight = expand_weight(q, alpha, Complex64::new(defect, 0.0), &vec![Complex64::ONE; q])
                    .expect("pairing length equals q")
                    .scale(Complex64::new(defect.powf(-tail), 0.0));
                let product = weight
                    .mul(&bra)
                    .and_then(|x| x.mul(&symbol.eval(z)))
                    .and_then(|x| x.mul(&ket))
                    .expect("same q");
                product.berezin_top()
            });
            let mom = moments(rule, &density, tail, p, &monomials)?;
            if mom.iter().all(|c| c.norm() == 0.0) {
                continue;
            }
            let (r, c) = (out.component_range(i), out.component_range(j));
            for (a, row_n) in monomials.iter().enumerate() {
                for (b, col_n) in monomials.iter().enumerate() {
                    let norm_row = super_norm(nu, i, row_n);
                    let norm_col = super_norm(nu, j, col_n);
                    out.data[(r.start + a, c.start + b)] = mom[(a, b)] * constant / (norm_row * norm_col);
                }
            }
        }
    }
    Ok(out)
}

/// `‖z^n ξ_M‖ = (n! Γ(ν)/Γ(|n|+ν+|M|))^{1/2}` in the super inner product.
pub fn super_norm(nu: f64, m: SubsetIndex, n: &MultiIndex) -> f64 {
    (0.5 * (n.ln_factorial() + ln_gamma(nu) - ln_gamma(n.total() as f64 + nu + m.len() as f64))).exp()
}

/// Seed of the power iteration.
pub const POWER_SEED: u64 = 0x5EED;
const POWER_ITERATIONS: usize = 200;
const POWER_TOL: f64 = 1e-10;
const DENSE_LIMIT: usize = 512;

/// Largest singular value: dense SVD up to dimension 512, otherwise power
/// iteration on `C^H C` from a seeded start vector.
pub fn spectral_norm(c: &DMatrix<Complex64>) -> f64 {
    if c.nrows() == 0 || c.ncols() == 0 {
        return 0.0;
    }
    if c.nrows().max(c.ncols()) <= DENSE_LIMIT {
        return c.clone().singular_values().iter().copied().fold(0.0, f64::max);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut x = DVector::from_fn(c.ncols(), |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let norm = x.norm();
        if norm == 0.0 {
            return 0.0;
        }
        x /= Complex64::new(norm, 0.0);
        let y = c * &x;
        let next = y.norm();
        x = c.adjoint() * y;
        if (next - estimate).abs() <= POWER_TOL * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

fn check_compatible(a: &SuperToeplitzMatrix, b: &SuperToeplitzMatrix) -> Result<()> {
    if a.basis != b.basis || a.nu != b.nu {
        return Err(param("matrices are built on different bases"));
    }
    Ok(())
}

/// Spectral norm of `AB − BA` on basis vectors with `|n| ≤ interior_degree`;
/// the product is formed on the full truncation first.
pub fn commutator_norm(a: &SuperToeplitzMatrix, b: &SuperToeplitzMatrix, interior_degree: u32) -> Result<f64> {
    check_compatible(a, b)?;
    if interior_degree > a.n_max {
        return Err(param("interior degree exceeds the truncation"));
    }
    let full = &a.data * &b.data - &b.data * &a.data;
    let idx = a.interior(interior_degree);
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| full[(idx[r], idx[c])]);
    Ok(spectral_norm(&sub))
}

/// Largest off-diagonal modulus on the interior block.
pub fn diagonality_defect(a: &SuperToeplitzMatrix, interior_degree: u32) -> f64 {
    let idx = a.interior(interior_degree);
    let sub = a.restrict(&idx);
    let mut worst = 0.0f64;
    for r in 0..idx.len() {
        for c in 0..idx.len() {
            if r != c {
                worst = worst.max(sub[(r, c)].norm());
            }
        }
    }
    worst
}

/// Largest entrywise difference between two matrices on the interior block.
pub fn interior_difference(a: &SuperToeplitzMatrix, b: &SuperToeplitzMatrix, interior_degree: u32) -> Result<f64> {
    check_compatible(a, b)?;
    let idx = a.interior(interior_degree);
    let (x, y) = (a.restrict(&idx), b.restrict(&idx));
    Ok((x - y).iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Coordinates of a super polynomial in the orthonormal basis, and back.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Adjoint,
}

/// Quasi-elliptic Bargmann map `ψ_M z^n ↦ c_{M,n}` with
/// `c_{M,n} = a_{M,n} ‖z^n ξ_M‖`, an isometry onto finitely supported
/// sequences, and its adjoint (the inverse on the range).
pub fn bargmann_qe_forward(spec: &WeightedSpaceSpec, psi: &SuperPolynomial) -> Result<BTreeMap<BasisIndex, Complex64>> {
    if psi.p() != spec.p || psi.q() != spec.q {
        return Err(Error::DimensionMismatch { left: spec.p + spec.q, right: psi.p() + psi.q() });
    }
    Ok(psi
        .terms()
        .map(|(m, n, a)| {
            let norm = super_norm(spec.nu, m, n);
            (BasisIndex { m, n: n.clone() }, a * norm)
        })
        .collect())
}

pub fn bargmann_qe_adjoint(
    spec: &WeightedSpaceSpec,
    coefficients: &BTreeMap<BasisIndex, Complex64>,
) -> Result<SuperPolynomial> {
    let mut out = SuperPolynomial::zero(spec.p, spec.q);
    for (index, c) in coefficients {
        if index.n.len() != spec.p {
            return Err(Error::DimensionMismatch { left: spec.p, right: index.n.len() });
        }
        out.add_term(index.m, index.n.clone(), c / super_norm(spec.nu, index.m, &index.n))?;
    }
    Ok(out)
}

/// `Σ |c|²` with pairwise summation.
pub fn sequence_norm_sq(coefficients: &BTreeMap<BasisIndex, Complex64>) -> f64 {
    let values: Vec<f64> = coefficients.values().map(|c| c.norm_sqr()).collect();
    pairwise_sum(&values)
}

/// Entrywise `T[(M,n),(M,n)]` as a map, for comparison with spectral tables.
pub fn diagonal_map(a: &SuperToeplitzMatrix) -> BTreeMap<BasisIndex, Complex64> {
    a.diagonal().into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::BallStructure;

    fn constant(c: f64) -> BallFn {
        Arc::new(move |_: &[Complex64]| Complex64::new(c, 0.0))
    }

    #[test]
    fn basis_order() {
        let b = basis(1, 1, 1);
        let labels: Vec<(Vec<usize>, Vec<u32>)> = b.iter().map(|x| (x.m.elements(), x.n.0.clone())).collect();
        assert_eq!(labels, vec![(vec![], vec![0]), (vec![], vec![1]), (vec![1], vec![0]), (vec![1], vec![1])]);
    }

    #[test]
    fn scalar_block_examples() {
        let opts = OracleOptions::default();
        let one = scalar_toeplitz_block(&constant(1.0), BallStructure::Radial, 1, 2.0, 2.0, 6, &opts).unwrap();
        assert!((one - DMatrix::identity(7, 7)).iter().all(|c| c.norm() < 1e-12));

        let r2: BallFn = Arc::new(|z: &[Complex64]| Complex64::new(z[0].norm_sqr(), 0.0));
        let block = scalar_toeplitz_block(&r2, BallStructure::Radial, 1, 2.0, 2.0, 6, &opts).unwrap();
        for n in 0..7 {
            assert!((block[(n, n)].re - (n as f64 + 1.0) / (n as f64 + 2.0)).abs() < 1e-12);
        }

        let re: BallFn = Arc::new(|z: &[Complex64]| Complex64::new(z[0].re, 0.0));
        let block = scalar_toeplitz_block(&re, BallStructure::Generic, 1, 2.0, 2.0, 6, &opts).unwrap();
        for n in 0..6 {
            let expected = 0.5 * ((n as f64 + 1.0) / (n as f64 + 2.0)).sqrt();
            assert!((block[(n, n + 1)].re - expected).abs() < 1e-12, "{}", block[(n, n + 1)]);
            assert!(block[(n, n)].norm() < 1e-12);
        }
    }

    #[test]
    fn binary_roundtrip() {
        let m = DMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64 - 0.5));
        let mut bytes = Vec::new();
        write_matrix_binary(&m, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 24 + 6 * 16);
        assert_eq!(read_matrix_binary(&mut bytes.as_slice()).unwrap(), m);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let m = DMatrix::from_fn(600, 600, |i, j| {
            Complex64::new(((i * 7 + j * 3) % 11) as f64 / 11.0, if i == j { 1.0 } else { 0.0 })
        });
        let dense = m.clone().singular_values().iter().copied().fold(0.0, f64::max);
        assert!((spectral_norm(&m) - dense).abs() < 1e-6 * dense);
    }

    fn one_symbol(p: usize, q: usize) -> BallSymbol {
        BallSymbol::new(p, q, BallStructure::Radial).with(SubsetIndex::EMPTY, SubsetIndex::EMPTY, |_| Complex64::ONE)
    }

    fn options(convention: Convention) -> OracleOptions {
        OracleOptions { convention, polar_nodes: 24, angles: 24, ..OracleOptions::default() }
    }

    #[test]
    fn identity_symbol_under_both_conventions() {
        for convention in [Convention::Printed, Convention::Berezin] {
            for (p, q, nu, n_max) in [(1, 1, 2.0, 8), (1, 2, 3.0, 5), (2, 1, 4.0, 4)] {
                let spec = WeightedSpaceSpec::ball(p, q, nu).unwrap();
                let t = assemble_super_toeplitz(&one_symbol(p, q), &spec, n_max, &options(convention)).unwrap();
                assert!(t.identity_defect(n_max) < 1e-12, "{convention:?} {p} {q}: {}", t.identity_defect(n_max));
            }
        }
    }

    #[test]
    fn mixed_diagonal_symbol_blocks() {
        let spec = WeightedSpaceSpec::ball(1, 1, 2.0).unwrap();
        let e = SubsetIndex::EMPTY;
        let one = SubsetIndex::singleton(1);
        let a: BallFn = Arc::new(|z: &[Complex64]| Complex64::new(z[0].norm_sqr(), 0.0));
        let b_defect: BallFn = Arc::new(|z: &[Complex64]| Complex64::new(1.0 - z[0].norm_sqr(), 0.0));
        let symbol = BallSymbol::new(1, 1, BallStructure::Radial)
            .with(e, e, |z| Complex64::new(z[0].norm_sqr(), 0.0))
            .with(one, one, |_| Complex64::ONE);
        let opts = options(Convention::Printed);
        let t = assemble_super_toeplitz(&symbol, &spec, 6, &opts).unwrap();
        let top = scalar_toeplitz_block(&a, BallStructure::Radial, 1, 2.0, 2.0, 6, &opts).unwrap()
            + scalar_toeplitz_block(&b_defect, BallStructure::Radial, 1, 2.0, 2.0, 6, &opts).unwrap();
        let bottom = scalar_toeplitz_block(&a, BallStructure::Radial, 1, 3.0, 3.0, 6, &opts).unwrap();
        assert!((t.block(e, e) - top).norm() < 1e-12);
        assert!((t.block(one, one) - bottom).norm() < 1e-12);
        assert_eq!(t.block(e, one).norm(), 0.0);
        assert_eq!(t.block(one, e).norm(), 0.0);
    }

    #[test]
    fn odd_symbol_fills_one_block() {
        let spec = WeightedSpaceSpec::ball(1, 1, 2.0).unwrap();
        let e = SubsetIndex::EMPTY;
        let one = SubsetIndex::singleton(1);
        let symbol = BallSymbol::new(1, 1, BallStructure::Generic).with(one, e, |z| z[0] + 0.5);
        for convention in [Convention::Printed, Convention::Berezin] {
            let t = assemble_super_toeplitz(&symbol, &spec, 5, &options(convention)).unwrap();
            assert!(t.block(one, e).norm() > 0.1);
            for (i, j) in [(e, e), (e, one), (one, one)] {
                assert!(t.block(i, j).norm() < 1e-13, "{convention:?} {i} {j}");
            }
        }
    }

    #[test]
    fn conventions_differ_by_gamma_ratio_on_top_terms() {
        let nu = 3.0;
        let spec = WeightedSpaceSpec::ball(1, 1, nu).unwrap();
        let one = SubsetIndex::singleton(1);
        let symbol = BallSymbol::new(1, 1, BallStructure::Radial).with(one, one, |_| Complex64::ONE);
        let printed = assemble_super_toeplitz(&symbol, &spec, 6, &options(Convention::Printed)).unwrap();
        let berezin = assemble_super_toeplitz(&symbol, &spec, 6, &options(Convention::Berezin)).unwrap();
        let scaled = printed.data.map(|c| c * (-1.0 / (nu - 1.0)));
        assert!((berezin.data - scaled).norm() < 1e-12);
    }

    #[test]
    fn self_adjoint_odd_symbol() {
        let spec = WeightedSpaceSpec::ball(1, 1, 2.5).unwrap();
        let e = SubsetIndex::EMPTY;
        let one = SubsetIndex::singleton(1);
        let symbol = BallSymbol::new(1, 1, BallStructure::Generic)
            .with(one, e, |z| z[0] * 0.7)
            .with(e, one, |z| z[0].conj() * 0.7)
            .with(e, e, |z| Complex64::new(z[0].re, 0.0));
        let berezin = assemble_super_toeplitz(&symbol, &spec, 6, &options(Convention::Berezin)).unwrap();
        assert!(berezin.hermitian_defect() < 1e-12, "{}", berezin.hermitian_defect());
        let printed = assemble_super_toeplitz(&symbol, &spec, 6, &options(Convention::Printed)).unwrap();
        println!("printed hermitian defect {}", printed.hermitian_defect());
    }
}
