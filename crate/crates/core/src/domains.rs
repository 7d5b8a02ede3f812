//! The unit ball `B^p`, the Siegel domain `U^p`, the Cayley map between them
//! (with its odd extension), measure densities and Berezinians.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grassmann::{GrassmannElement, SubsetIndex};
use crate::special::ln_gamma;

/// Default distance from the boundary below which a point counts as exterior.
pub const DEFAULT_DOMAIN_MARGIN: f64 = 1e-12;

const I: Complex64 = Complex64::I;

/// A point of `C^p` meant to lie in the unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPoint {
    pub z: Vec<Complex64>,
}

/// A point of `C^p` meant to lie in the Siegel domain `Im w_p > |w'|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiegelPoint {
    pub w: Vec<Complex64>,
}

fn norm_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

impl BallPoint {
    pub fn new(z: Vec<Complex64>) -> Self {
        BallPoint { z }
    }

    pub fn origin(p: usize) -> Self {
        BallPoint {
            z: vec![Complex64::ZERO; p],
        }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// `1 − |z|²`.
    pub fn defect(&self) -> f64 {
        1.0 - norm_sq(&self.z)
    }

    pub fn is_interior(&self, margin: f64) -> bool {
        self.defect() > margin
    }

    pub fn check_interior(&self, margin: f64) -> Result<()> {
        if self.z.is_empty() {
            return Err(param("ball points need p >= 1"));
        }
        if self.is_interior(margin) {
            Ok(())
        } else {
            Err(Error::NotInterior {
                domain: "unit ball",
                defect: self.defect(),
            })
        }
    }

    pub fn last(&self) -> Complex64 {
        *self.z.last().expect("nonempty point")
    }
}

impl SiegelPoint {
    pub fn new(w: Vec<Complex64>) -> Self {
        SiegelPoint { w }
    }

    /// The base point `(0, …, 0, i)`, image of the ball's origin.
    pub fn base(p: usize) -> Self {
        let mut w = vec![Complex64::ZERO; p];
        w[p - 1] = I;
        SiegelPoint { w }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn head(&self) -> &[Complex64] {
        &self.w[..self.w.len() - 1]
    }

    pub fn last(&self) -> Complex64 {
        *self.w.last().expect("nonempty point")
    }

    /// `Im w_p − |w'|²`.
    pub fn defect(&self) -> f64 {
        self.last().im - norm_sq(self.head())
    }

    pub fn is_interior(&self, margin: f64) -> bool {
        self.defect() > margin
    }

    pub fn check_interior(&self, margin: f64) -> Result<()> {
        if self.w.is_empty() {
            return Err(param("Siegel points need p >= 1"));
        }
        if self.is_interior(margin) {
            Ok(())
        } else {
            Err(Error::NotInterior {
                domain: "Siegel domain",
                defect: self.defect(),
            })
        }
    }
}

/// Cayley map from the ball to the Siegel domain:
/// `w_k = i z_k/(1+z_p)`, `w_p = i(1−z_p)/(1+z_p)`.
pub fn cayley(z: &BallPoint) -> Result<SiegelPoint> {
    cayley_with_margin(z, DEFAULT_DOMAIN_MARGIN)
}

pub fn cayley_with_margin(z: &BallPoint, margin: f64) -> Result<SiegelPoint> {
    z.check_interior(margin)?;
    let denom = Complex64::ONE + z.last();
    if denom.norm() == 0.0 {
        return Err(Error::Singular("z_p = -1".into()));
    }
    let p = z.dim();
    let mut w: Vec<Complex64> = z.z[..p - 1].iter().map(|zk| I * zk / denom).collect();
    w.push(I * (Complex64::ONE - z.last()) / denom);
    Ok(SiegelPoint { w })
}

/// Inverse Cayley map: `z_k = −2i w_k/(1 − i w_p)`, `z_p = (1 + i w_p)/(1 − i w_p)`.
pub fn cayley_inv(w: &SiegelPoint) -> Result<BallPoint> {
    cayley_inv_with_margin(w, DEFAULT_DOMAIN_MARGIN)
}

pub fn cayley_inv_with_margin(w: &SiegelPoint, margin: f64) -> Result<BallPoint> {
    w.check_interior(margin)?;
    let denom = Complex64::ONE - I * w.last();
    if denom.norm() == 0.0 {
        return Err(Error::Singular("1 - i w_p = 0".into()));
    }
    let mut z: Vec<Complex64> = w.head().iter().map(|wk| -2.0 * I * wk / denom).collect();
    z.push((Complex64::ONE + I * w.last()) / denom);
    Ok(BallPoint { z })
}

/// Factor `i/(1+z_p)` carrying the odd coordinates `ξ_k ↦ ω_k` forward.
pub fn cayley_odd_factor(z: &BallPoint) -> Complex64 {
    I / (Complex64::ONE + z.last())
}

/// Factor `−2i/(1 − i w_p)` carrying `ω_k ↦ ξ_k` back.
pub fn cayley_inv_odd_factor(w: &SiegelPoint) -> Complex64 {
    -2.0 * I / (Complex64::ONE - I * w.last())
}

/// A super point whose odd coordinates are `ξ_k = a_k θ_k` for fixed
/// generators `θ_k`. Two such points share the generators, which is all the
/// kernel identities need.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperBallPoint {
    pub even: BallPoint,
    pub odd: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperSiegelPoint {
    pub even: SiegelPoint,
    pub odd: Vec<Complex64>,
}

/// Super Cayley map; the odd part is linear, so it rescales the odd weights.
pub fn super_cayley(point: &SuperBallPoint) -> Result<SuperSiegelPoint> {
    let even = cayley(&point.even)?;
    let f = cayley_odd_factor(&point.even);
    Ok(SuperSiegelPoint {
        even,
        odd: point.odd.iter().map(|a| a * f).collect(),
    })
}

pub fn super_cayley_inv(point: &SuperSiegelPoint) -> Result<SuperBallPoint> {
    let even = cayley_inv(&point.even)?;
    let f = cayley_inv_odd_factor(&point.even);
    Ok(SuperBallPoint {
        even,
        odd: point.odd.iter().map(|a| a * f).collect(),
    })
}

fn check_pair_dims(p1: usize, p2: usize, q1: usize, q2: usize) -> Result<()> {
    if p1 != p2 {
        return Err(Error::DimensionMismatch { left: p1, right: p2 });
    }
    if q1 != q2 {
        return Err(Error::DimensionMismatch { left: q1, right: q2 });
    }
    Ok(())
}

fn odd_pairing(q: usize, left: &[Complex64], right: &[Complex64]) -> GrassmannElement {
    let mut out = GrassmannElement::zero(q);
    for k in 1..=q {
        let s = SubsetIndex::singleton(k);
        let term = GrassmannElement::monomial(q, s, s, left[k - 1] * right[k - 1].conj());
        out = out.add(&term).expect("same q");
    }
    out
}

/// Ball-side pairing `1 − z·ū − ξ·η̄` as an even Grassmann element.
pub fn kernel_pairing_ball(a: &SuperBallPoint, b: &SuperBallPoint) -> Result<GrassmannElement> {
    check_pair_dims(a.even.dim(), b.even.dim(), a.odd.len(), b.odd.len())?;
    let q = a.odd.len();
    let zu: Complex64 = a.even.z.iter().zip(&b.even.z).map(|(z, u)| z * u.conj()).sum();
    let scalar = GrassmannElement::scalar(q, Complex64::ONE - zu);
    scalar.add(&odd_pairing(q, &a.odd, &b.odd).scale(-Complex64::ONE))
}

/// Siegel-side pairing `(w_p − v̄_p)/2i − w'·v̄' − ω·ζ̄`.
pub fn kernel_pairing_siegel(a: &SuperSiegelPoint, b: &SuperSiegelPoint) -> Result<GrassmannElement> {
    check_pair_dims(a.even.dim(), b.even.dim(), a.odd.len(), b.odd.len())?;
    let q = a.odd.len();
    let wv: Complex64 = a
        .even
        .head()
        .iter()
        .zip(b.even.head())
        .map(|(w, v)| w * v.conj())
        .sum();
    let lead = (a.even.last() - b.even.last().conj()) / (2.0 * I);
    let scalar = GrassmannElement::scalar(q, lead - wv);
    scalar.add(&odd_pairing(q, &a.odd, &b.odd).scale(-Complex64::ONE))
}

/// Residuals of the two transfer identities between the pairings:
///
/// * `(1 − z·ū − ξ·η̄)(1+z_p)^{−1} ((1+u_p)^{−1})‾` equals the Siegel pairing of the images;
/// * `1 − z·ū − ξ·η̄` equals that pairing times `4 (1−iw_p)^{−1} ((1−iv_p)^{−1})‾`.
///
/// Each residual is the largest coefficient modulus of the difference.
pub fn pairing_transfer_residuals(a: &SuperBallPoint, b: &SuperBallPoint) -> Result<(f64, f64)> {
    let ball = kernel_pairing_ball(a, b)?;
    let (wa, wb) = (super_cayley(a)?, super_cayley(b)?);
    let siegel = kernel_pairing_siegel(&wa, &wb)?;
    let first = ball.scale(
        (Complex64::ONE + a.even.last()).inv() * (Complex64::ONE + b.even.last()).inv().conj(),
    );
    let second = siegel.scale(
        4.0 * (Complex64::ONE - I * wa.even.last()).inv() * (Complex64::ONE - I * wb.even.last()).inv().conj(),
    );
    let worst = |x: &GrassmannElement, y: &GrassmannElement| -> Result<f64> {
        let diff = x.add(&y.scale(-Complex64::ONE))?;
        Ok(diff.terms().map(|(_, _, c)| c.norm()).fold(0.0, f64::max))
    };
    Ok((worst(&first, &siegel)?, worst(&ball, &second)?))
}

/// Block supermatrix `[[A, B], [C, D]]` with complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSupermatrix {
    pub a: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
    pub d: DMatrix<Complex64>,
}

impl BlockSupermatrix {
    pub fn new(
        a: DMatrix<Complex64>,
        b: DMatrix<Complex64>,
        c: DMatrix<Complex64>,
        d: DMatrix<Complex64>,
    ) -> Result<Self> {
        let (r, s) = (a.nrows(), d.nrows());
        if !a.is_square()
            || !d.is_square()
            || b.shape() != (r, s)
            || c.shape() != (s, r)
        {
            return Err(param("block shapes must be r×r, r×s, s×r, s×s"));
        }
        Ok(BlockSupermatrix { a, b, c, d })
    }
}

/// `det(A − B D⁻¹ C) / det(D)`.
pub fn berezinian(m: &BlockSupermatrix) -> Result<Complex64> {
    let d_inv = m
        .d
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("D block is not invertible".into()))?;
    let det_d = m.d.determinant();
    let schur = &m.a - &m.b * d_inv * &m.c;
    Ok(schur.determinant() / det_d)
}

/// Berezinian of the super Cayley map, `−2 i^{p−q} (1+z_p)^{q−p−1}`.
///
/// With `literal_print` the variant with `i^{p−q+1}` is returned instead; it
/// differs from the Jacobian by a factor of `i` and exists only for comparison.
pub fn cayley_berezinian(z: &BallPoint, q: usize, literal_print: bool) -> Result<Complex64> {
    let p = z.dim() as i32;
    let q = q as i32;
    let base = Complex64::ONE + z.last();
    if base.norm() == 0.0 {
        return Err(Error::Singular("z_p = -1".into()));
    }
    let phase = if literal_print { p - q + 1 } else { p - q };
    Ok(-2.0 * I.powi(phase) * base.powi(q - p - 1))
}

/// Berezinian of the inverse Cayley map, `−2^{p−q} i^{q−p} (1 − i w_p)^{q−p−1}`.
pub fn cayley_inv_berezinian(w: &SiegelPoint, q: usize, literal_print: bool) -> Result<Complex64> {
    let p = w.dim() as i32;
    let q = q as i32;
    let base = Complex64::ONE - I * w.last();
    if base.norm() == 0.0 {
        return Err(Error::Singular("1 - i w_p = 0".into()));
    }
    let phase = if literal_print { q - p - 1 } else { q - p };
    Ok(-(2.0f64.powi(p - q)) * I.powi(phase) * base.powi(q - p - 1))
}

/// Jacobian supermatrix of the super Cayley map at the even point `z`
/// (odd coordinates set to zero), laid out as
/// `[[∂w/∂z, ∂ω/∂z], [∂w/∂ξ, ∂ω/∂ξ]]` with rows indexed by the source variable.
pub fn cayley_jacobian(z: &BallPoint, q: usize) -> Result<BlockSupermatrix> {
    let p = z.dim();
    let s = Complex64::ONE + z.last();
    if s.norm() == 0.0 {
        return Err(Error::Singular("z_p = -1".into()));
    }
    let mut a = DMatrix::<Complex64>::zeros(p, p);
    for k in 0..p - 1 {
        a[(k, k)] = I / s;
        a[(p - 1, k)] = -I * z.z[k] / (s * s);
    }
    a[(p - 1, p - 1)] = -2.0 * I / (s * s);
    let b = DMatrix::<Complex64>::zeros(p, q);
    let c = DMatrix::<Complex64>::zeros(q, p);
    let d = DMatrix::<Complex64>::from_diagonal_element(q, q, I / s);
    BlockSupermatrix::new(a, b, c, d)
}

/// Same layout for the inverse map at `w`.
pub fn cayley_inv_jacobian(w: &SiegelPoint, q: usize) -> Result<BlockSupermatrix> {
    let p = w.dim();
    let s = Complex64::ONE - I * w.last();
    if s.norm() == 0.0 {
        return Err(Error::Singular("1 - i w_p = 0".into()));
    }
    let mut a = DMatrix::<Complex64>::zeros(p, p);
    for k in 0..p - 1 {
        a[(k, k)] = -2.0 * I / s;
        a[(p - 1, k)] = 2.0 * w.w[k] / (s * s);
    }
    a[(p - 1, p - 1)] = 2.0 * I / (s * s);
    let b = DMatrix::<Complex64>::zeros(p, q);
    let c = DMatrix::<Complex64>::zeros(q, p);
    let d = DMatrix::<Complex64>::from_diagonal_element(q, q, -2.0 * I / s);
    BlockSupermatrix::new(a, b, c, d)
}

/// Which realisation a measure or symbol lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Ball,
    Siegel,
}

/// `c_ν = Γ(ν) / (π^p Γ(ν − p))`.
pub fn normalising_constant(nu: f64, p: usize) -> Result<f64> {
    if !(nu > p as f64) {
        return Err(param(format!("weight parameter nu = {nu} must exceed p = {p}")));
    }
    let pf = p as f64;
    Ok((ln_gamma(nu) - ln_gamma(nu - pf) - pf * std::f64::consts::PI.ln()).exp())
}

/// Density of the weighted measure: `c_ν (1 − |z|²)^{ν−p−1}` on the ball,
/// `(c_ν/4)(Im w_p − |w'|²)^{ν−p−1}` on the Siegel domain.
pub fn measure_density(domain: Domain, nu: f64, point: &[Complex64]) -> Result<f64> {
    let p = point.len();
    let c = normalising_constant(nu, p)?;
    let exponent = nu - p as f64 - 1.0;
    match domain {
        Domain::Ball => {
            let bp = BallPoint::new(point.to_vec());
            bp.check_interior(0.0)?;
            Ok(c * bp.defect().powf(exponent))
        }
        Domain::Siegel => {
            let sp = SiegelPoint::new(point.to_vec());
            sp.check_interior(0.0)?;
            Ok(0.25 * c * sp.defect().powf(exponent))
        }
    }
}
