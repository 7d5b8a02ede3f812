//! Symbol presets: a small grammar `name(:param)*`.
//!
//! | preset | classes | symbol |
//! |---|---|---|
//! | `one` | all | `F_∅ = 1` |
//! | `radial` | quasi-elliptic | `F_∅ = |z|²` |
//! | `odd[:c]` | all, `q ≥ 1` | `F_{1} = c` (default 1), nothing else |
//! | `mixed` | quasi-elliptic, `q ≥ 1` | `F_∅ = |z_1|²`, `F_{1} = 1` |
//! | `parabolic:exp[:a]` | quasi-parabolic | `F_∅ = e^{−a Im w_p}` (default `a = 1`) |
//! | `nilpotent:exp[:a]` | nilpotent, quasi-nilpotent | `F_∅ = e^{−a (Im w_p − |w''|²)}` |
//! | `nilpotent:im` | nilpotent, `p ≥ 2` | `F_∅ = Im w_1` |
//! | `hyperbolic:theta` | quasi-hyperbolic | `F_∅ = θ/π` |
//! | `random[:seed]` | all | a random invariant symbol, see [`random_symbol`] |
//! | `nonminvariant:re-z1` | ball only | `Re z_1`, invariant under no class |
//! | `nonminvariant:abs-z1-sq` | ball only | `|z_1|²` |

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use superbergman::grassmann::SubsetIndex;
use superbergman::symbols::{BallStructure, BallSymbol, Coefficient, MasgCase, SuperSymbol, Term};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PresetError {
    #[error("malformed symbol preset '{0}'")]
    Malformed(String),
    #[error("preset '{preset}' does not apply to class {case} with p = {p}, q = {q}")]
    NotApplicable { preset: String, case: String, p: usize, q: usize },
    #[error(transparent)]
    Library(#[from] superbergman::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Preset {
    One,
    Radial,
    Odd(f64),
    Mixed,
    ParabolicExp(f64),
    NilpotentExp(f64),
    NilpotentIm,
    HyperbolicTheta,
    Random(u64),
    ReZ1,
    AbsZ1Sq,
}

impl FromStr for Preset {
    type Err = PresetError;

    fn from_str(s: &str) -> Result<Self, PresetError> {
        let bad = || PresetError::Malformed(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let number = |x: &str| x.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let preset = match parts.as_slice() {
            ["one"] => Preset::One,
            ["radial"] => Preset::Radial,
            ["odd"] => Preset::Odd(1.0),
            ["odd", c] => Preset::Odd(number(c)?),
            ["mixed"] => Preset::Mixed,
            ["parabolic", "exp"] => Preset::ParabolicExp(1.0),
            ["parabolic", "exp", a] => Preset::ParabolicExp(positive(number(a)?).ok_or_else(bad)?),
            ["nilpotent", "exp"] => Preset::NilpotentExp(1.0),
            ["nilpotent", "exp", a] => Preset::NilpotentExp(positive(number(a)?).ok_or_else(bad)?),
            ["nilpotent", "im"] => Preset::NilpotentIm,
            ["hyperbolic", "theta"] => Preset::HyperbolicTheta,
            ["random"] => Preset::Random(0),
            ["random", seed] => Preset::Random(seed.parse().map_err(|_| bad())?),
            ["nonminvariant", "re-z1"] => Preset::ReZ1,
            ["nonminvariant", "abs-z1-sq"] => Preset::AbsZ1Sq,
            _ => return Err(bad()),
        };
        Ok(preset)
    }
}

fn positive(x: f64) -> Option<f64> {
    (x > 0.0).then_some(x)
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::One => write!(f, "one"),
            Preset::Radial => write!(f, "radial"),
            Preset::Odd(c) => write!(f, "odd:{c}"),
            Preset::Mixed => write!(f, "mixed"),
            Preset::ParabolicExp(a) => write!(f, "parabolic:exp:{a}"),
            Preset::NilpotentExp(a) => write!(f, "nilpotent:exp:{a}"),
            Preset::NilpotentIm => write!(f, "nilpotent:im"),
            Preset::HyperbolicTheta => write!(f, "hyperbolic:theta"),
            Preset::Random(seed) => write!(f, "random:{seed}"),
            Preset::ReZ1 => write!(f, "nonminvariant:re-z1"),
            Preset::AbsZ1Sq => write!(f, "nonminvariant:abs-z1-sq"),
        }
    }
}

impl From<Preset> for String {
    fn from(p: Preset) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Preset {
    type Error = PresetError;
    fn try_from(s: String) -> Result<Self, PresetError> {
        s.parse()
    }
}

/// A preset made concrete: either a diagonal invariant symbol of a class, or
/// a ball symbol with no invariance.
#[derive(Clone, Debug)]
pub enum BuiltSymbol {
    Invariant(SuperSymbol),
    Ball(BallSymbol),
}

impl BuiltSymbol {
    pub fn to_ball(&self) -> BallSymbol {
        match self {
            BuiltSymbol::Invariant(s) => s.to_ball(),
            BuiltSymbol::Ball(b) => b.clone(),
        }
    }

    pub fn invariant(&self) -> Option<&SuperSymbol> {
        match self {
            BuiltSymbol::Invariant(s) => Some(s),
            BuiltSymbol::Ball(_) => None,
        }
    }
}

impl Preset {
    pub fn build(&self, case: MasgCase, p: usize, q: usize) -> Result<BuiltSymbol, PresetError> {
        case.validate(p)?;
        let refuse = || PresetError::NotApplicable { preset: self.to_string(), case: case.to_string(), p, q };
        let empty = SubsetIndex::EMPTY;
        // Every class has p invariant coordinates.
        let coords = p;
        let single = |powers: Vec<u32>, decay: f64| Coefficient::from_terms(vec![Term::new(1.0, powers, decay)]);
        let built = match *self {
            Preset::One => SuperSymbol::one(case, p, q)?,
            Preset::Radial if case == MasgCase::QuasiElliptic => {
                let terms = (0..p)
                    .map(|k| {
                        let mut powers = vec![0; p];
                        powers[k] = 2;
                        Term::new(1.0, powers, 0.0)
                    })
                    .collect();
                SuperSymbol::new(case, p, q)?.with(empty, Coefficient::from_terms(terms))?
            }
            Preset::Odd(c) if q >= 1 => {
                SuperSymbol::new(case, p, q)?.with(SubsetIndex::singleton(1), Coefficient::constant(c))?
            }
            Preset::Mixed if case == MasgCase::QuasiElliptic && q >= 1 => {
                let mut powers = vec![0; p];
                powers[0] = 2;
                SuperSymbol::new(case, p, q)?
                    .with(empty, single(powers, 0.0))?
                    .with(SubsetIndex::singleton(1), Coefficient::constant(1.0))?
            }
            Preset::ParabolicExp(a) if case == MasgCase::QuasiParabolic => {
                SuperSymbol::new(case, p, q)?.with(empty, single(vec![0; coords], a))?
            }
            Preset::NilpotentExp(a) if matches!(case, MasgCase::Nilpotent | MasgCase::QuasiNilpotent { .. }) => {
                SuperSymbol::new(case, p, q)?.with(empty, single(vec![0; coords], a))?
            }
            Preset::NilpotentIm if case == MasgCase::Nilpotent && p >= 2 => {
                let mut powers = vec![0; coords];
                powers[0] = 1;
                SuperSymbol::new(case, p, q)?.with(empty, single(powers, 0.0))?
            }
            Preset::HyperbolicTheta if case == MasgCase::QuasiHyperbolic => {
                let mut powers = vec![0; coords];
                powers[coords - 1] = 1;
                let term = Term::new(1.0 / std::f64::consts::PI, powers, 0.0);
                SuperSymbol::new(case, p, q)?.with(empty, Coefficient::from_terms(vec![term]))?
            }
            Preset::Random(seed) => random_symbol(case, p, q, seed)?,
            Preset::ReZ1 => {
                return Ok(BuiltSymbol::Ball(
                    BallSymbol::new(p, q, BallStructure::Generic).with(empty, empty, |z| Complex64::new(z[0].re, 0.0)),
                ))
            }
            Preset::AbsZ1Sq => {
                return Ok(BuiltSymbol::Ball(
                    BallSymbol::new(p, q, BallStructure::Radial)
                        .with(empty, empty, |z| Complex64::new(z[0].norm_sqr(), 0.0)),
                ))
            }
            _ => return Err(refuse()),
        };
        Ok(BuiltSymbol::Invariant(built))
    }

    /// Whether the preset only exists on the ball.
    pub fn is_ball_only(&self) -> bool {
        matches!(self, Preset::ReZ1 | Preset::AbsZ1Sq)
    }

    /// The second symbol of a commutator check when none is given.
    pub fn default_partner(&self, seed: u64) -> Preset {
        match self {
            Preset::ReZ1 => Preset::AbsZ1Sq,
            Preset::AbsZ1Sq => Preset::ReZ1,
            Preset::Random(s) => Preset::Random(s.wrapping_add(1)),
            _ => Preset::Random(seed.wrapping_add(1)),
        }
    }
}

/// A random diagonal invariant symbol with one coefficient per subset of the
/// odd generators. Parameters are drawn from a ChaCha8 stream seeded by
/// `seed`; every coefficient has amplitude `c ∈ [0.5, 1.5]` and:
///
/// * quasi-elliptic: `c + Σ_k b_k |z_k|² + d |z_1|⁴`, tagged for closed forms;
/// * quasi-parabolic: `c e^{−a v} (1 + b |w'|²)` with `a ∈ [10, 16]`, tagged;
/// * nilpotent: `c e^{−a h} (1 + b cos(Im w_1 / a))` with `a ∈ [10, 16]`;
/// * quasi-nilpotent: `c e^{−a h} (1 + b |w_1|²/(1+a)) (1 + ½ cos(Im w_{k+1} / a))`;
/// * quasi-hyperbolic: `c sin(θ)^s (1 + b |ρ|²)` with `s ∈ [1, 3]`.
///
/// The fast decay in the Siegel classes keeps the monomial matrices of the
/// pulled-back symbols concentrated near the diagonal, which is what makes
/// truncated commutators meaningful at small truncation orders.
pub fn random_symbol(case: MasgCase, p: usize, q: usize, seed: u64) -> Result<SuperSymbol, superbergman::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuperSymbol::new(case, p, q)?;
    for set in SubsetIndex::all(q) {
        let c = rng.random_range(0.5..1.5);
        let b = rng.random_range(0.0..1.0);
        let coefficient = match case {
            MasgCase::QuasiElliptic => {
                let mut terms = vec![Term::new(c, vec![0; p], 0.0)];
                for k in 0..p {
                    let mut powers = vec![0; p];
                    powers[k] = 2;
                    terms.push(Term::new(rng.random_range(-0.5..0.5), powers, 0.0));
                }
                let mut quartic = vec![0; p];
                quartic[0] = 4;
                terms.push(Term::new(rng.random_range(-0.5..0.5), quartic, 0.0));
                Coefficient::from_terms(terms)
            }
            MasgCase::QuasiParabolic => {
                let a = rng.random_range(10.0..16.0);
                let mut terms = vec![Term::new(c, vec![0; p], a)];
                for k in 0..p - 1 {
                    let mut powers = vec![0; p];
                    powers[k] = 2;
                    terms.push(Term::new(c * b, powers, a));
                }
                Coefficient::from_terms(terms)
            }
            MasgCase::Nilpotent => {
                let a = rng.random_range(10.0..16.0);
                Coefficient::from_fn(move |x: &[f64]| {
                    let h = x[x.len() - 1];
                    let wobble = if x.len() > 1 { b * (x[0] / a).cos() } else { b };
                    c * (-a * h).exp() * (1.0 + wobble)
                })
            }
            MasgCase::QuasiNilpotent { k } => {
                let a = rng.random_range(10.0..16.0);
                Coefficient::from_fn(move |x: &[f64]| {
                    let h = x[x.len() - 1];
                    let radial: f64 = x[..k].iter().map(|r| r * r).sum();
                    c * (-a * h).exp() * (1.0 + b * radial / (1.0 + a)) * (1.0 + 0.5 * (x[k] / a).cos())
                })
            }
            MasgCase::QuasiHyperbolic => {
                let s = rng.random_range(1.0..3.0);
                Coefficient::from_fn(move |x: &[f64]| {
                    let theta = x[x.len() - 1];
                    let spread: f64 = x[..x.len() - 1].iter().map(|r| r * r).sum();
                    c * theta.sin().powf(s) * (1.0 + b * spread)
                })
            }
        };
        out = out.with(set, coefficient)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar_roundtrip() {
        for text in ["one", "odd:2.5", "parabolic:exp:3", "random:17", "nonminvariant:re-z1", "hyperbolic:theta"] {
            let preset: Preset = text.parse().unwrap();
            assert_eq!(preset.to_string().parse::<Preset>().unwrap(), preset);
        }
        assert_eq!("parabolic:exp".parse::<Preset>().unwrap(), Preset::ParabolicExp(1.0));
        for bad in ["", "ones", "odd:x", "parabolic", "parabolic:exp:-1", "random:-3", "one:1"] {
            assert!(bad.parse::<Preset>().is_err(), "{bad}");
        }
    }

    #[test]
    fn class_restrictions() {
        assert!(Preset::Radial.build(MasgCase::QuasiParabolic, 1, 0).is_err());
        assert!(Preset::Odd(1.0).build(MasgCase::QuasiElliptic, 1, 0).is_err());
        assert!(Preset::NilpotentIm.build(MasgCase::Nilpotent, 1, 0).is_err());
        assert!(Preset::One.build(MasgCase::QuasiNilpotent { k: 1 }, 2, 0).is_err());
        assert!(Preset::Random(3).build(MasgCase::QuasiNilpotent { k: 1 }, 3, 1).is_ok());
    }

    #[test]
    fn random_symbols_are_reproducible() {
        let point = [0.3, 0.7];
        let a = random_symbol(MasgCase::QuasiParabolic, 2, 1, 9).unwrap();
        let b = random_symbol(MasgCase::QuasiParabolic, 2, 1, 9).unwrap();
        for set in SubsetIndex::all(1) {
            assert_eq!(a.coefficient(set).unwrap().eval(&point), b.coefficient(set).unwrap().eval(&point));
        }
    }
}
