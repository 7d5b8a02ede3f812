//! Gamma-function helpers and a couple of complex elementary functions with
//! explicit branch bookkeeping.

use num_complex::Complex64;
use statrs::function::gamma;

use crate::error::{Error, Result};

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

pub fn gamma(x: f64) -> f64 {
    gamma::gamma(x)
}

/// `Γ(a) / Γ(b)` through log-gamma differences, for positive arguments.
pub fn gamma_ratio(a: f64, b: f64) -> f64 {
    (ln_gamma(a) - ln_gamma(b)).exp()
}

/// `ln(n!)` for a multi-index, i.e. `Σ ln Γ(n_k + 1)`.
pub fn ln_multi_factorial(n: &[u32]) -> f64 {
    n.iter().map(|&k| ln_gamma(k as f64 + 1.0)).sum()
}

/// `x (x-1) ... (x-m+1)`.
pub fn falling(x: f64, m: usize) -> f64 {
    (0..m).map(|j| x - j as f64).product()
}

/// `x (x+1) ... (x+m-1)`.
pub fn rising(x: f64, m: usize) -> f64 {
    (0..m).map(|j| x + j as f64).product()
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Principal-branch power that refuses bases with non-positive real part.
///
/// Every complex power in this crate has a base whose real part is positive on
/// the interior of the relevant domain, so a base near the negative axis means
/// the caller left the domain.
pub fn guarded_powc(base: Complex64, exponent: Complex64) -> Result<Complex64> {
    if !(base.re > 0.0) {
        return Err(Error::BranchRisk(base));
    }
    Ok((exponent * base.ln()).exp())
}

pub fn guarded_powf(base: Complex64, exponent: f64) -> Result<Complex64> {
    guarded_powc(base, Complex64::new(exponent, 0.0))
}

/// Principal-branch arctangent, `atan z = (i/2) ln((i + z)/(i - z))` with the
/// branch cuts on the imaginary axis beyond `±i`.
///
/// Arguments on or within `margin` of those cuts are rejected.
pub fn guarded_atan(z: Complex64, margin: f64) -> Result<Complex64> {
    if z.re.abs() <= margin && z.im.abs() >= 1.0 - margin {
        return Err(Error::BranchRisk(z));
    }
    Ok(z.atan())
}

/// Pairwise summation, the reduction used everywhere quadrature sums are formed.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

pub fn pairwise_sum_complex(values: &[Complex64]) -> Complex64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    pairwise_sum_complex(lo) + pairwise_sum_complex(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_ratio_matches_factorials() {
        assert!((gamma_ratio(6.0, 4.0) - 20.0).abs() < 1e-12);
        assert!((gamma_ratio(0.5, 1.5) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn falling_and_rising() {
        assert_eq!(falling(5.0, 3), 60.0);
        assert_eq!(rising(2.0, 3), 24.0);
        assert_eq!(falling(-2.0, 2), 6.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(2, 5), 0.0);
    }

    #[test]
    fn powc_guard() {
        assert!(guarded_powf(Complex64::new(-1.0, 0.1), 2.0).is_err());
        let v = guarded_powf(Complex64::new(0.75, 0.0), -2.0).unwrap();
        assert!((v.re - 16.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn atan_guard_rejects_cut() {
        assert!(guarded_atan(Complex64::new(0.0, 2.0), 1e-12).is_err());
        let t = guarded_atan(Complex64::new(1.0, 0.0), 1e-12).unwrap();
        assert!((t.re - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_agrees_with_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }
}
