//! Built-in fit models and their analytic Jacobians.
//!
//! Parameter layouts:
//!
//! | kind                  | parameters                                  |
//! |-----------------------|---------------------------------------------|
//! | `lorentzian`          | `[amplitude, center, fwhm, baseline]`       |
//! | `multi_lorentzian(n)` | `[a1, c1, w1, …, an, cn, wn, baseline]`     |
//! | `exp_decay`           | `[amplitude, lifetime, baseline]`           |
//! | `damped_cosine`       | `[amplitude, frequency, decay_time, offset]`|
//!
//! `damped_cosine` is `offset − (amplitude/2)·(1 − cos 2πfx)·exp(−x/decay_time)`,
//! with `f` in cycles per unit of `x`; `amplitude` is the peak-to-trough depth
//! of the first oscillation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// A parametric curve `y = f(x; θ)` with an analytic gradient in `θ`.
pub trait Model<T: Real> {
    fn n_params(&self) -> usize;

    fn eval(&self, x: T, params: &[T]) -> T;

    /// Writes `∂f/∂θ` at `x` into `grad` (length `n_params`).
    fn gradient(&self, x: T, params: &[T], grad: &mut [T]);

    /// Parameters constrained positive; the fitter works on their logarithm.
    fn positive_params(&self) -> Vec<bool> {
        vec![false; self.n_params()]
    }

    fn param_names(&self) -> Vec<String> {
        (0..self.n_params()).map(|i| format!("p{i}")).collect()
    }

    /// Analytic Jacobian, `n_points × n_params`.
    fn jacobian(&self, xs: &[T], params: &[T]) -> Vec<Vec<T>> {
        xs.iter()
            .map(|&x| {
                let mut g = vec![T::zero(); self.n_params()];
                self.gradient(x, params, &mut g);
                g
            })
            .collect()
    }

    fn eval_all(&self, xs: &[T], params: &[T]) -> Vec<T> {
        xs.iter().map(|&x| self.eval(x, params)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Lorentzian,
    MultiLorentzian(usize),
    ExpDecay,
    DampedCosine,
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Lorentzian => write!(f, "lorentzian"),
            ModelSpec::MultiLorentzian(n) => write!(f, "multi_lorentzian:{n}"),
            ModelSpec::ExpDecay => write!(f, "exp_decay"),
            ModelSpec::DampedCosine => write!(f, "damped_cosine"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        let (name, arg) = match norm.split_once(':') {
            Some((n, a)) => (n.to_owned(), Some(a.to_owned())),
            None => (norm.clone(), None),
        };
        match (name.as_str(), arg) {
            ("lorentzian", None) => Ok(ModelSpec::Lorentzian),
            ("multi_lorentzian", Some(n)) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::validation(format!("bad peak count in `{s}`")))?;
                if n == 0 {
                    return Err(Error::validation("multi_lorentzian needs at least one peak"));
                }
                Ok(ModelSpec::MultiLorentzian(n))
            }
            ("exp_decay", None) => Ok(ModelSpec::ExpDecay),
            ("damped_cosine", None) => Ok(ModelSpec::DampedCosine),
            _ => Err(Error::validation(format!(
                "unknown model `{s}` (expected lorentzian, multi_lorentzian:N, exp_decay, damped_cosine)"
            ))),
        }
    }
}

#[inline]
fn lorentz_terms<T: Real>(x: T, amp: T, center: T, fwhm: T, grad: &mut [T]) -> T {
    let two = lit::<T>(2.0);
    let u = two * (x - center) / fwhm;
    let l = T::one() / (T::one() + u * u);
    let l2 = l * l;
    grad[0] = l;
    grad[1] = lit::<T>(4.0) * amp * u * l2 / fwhm;
    grad[2] = two * amp * u * u * l2 / fwhm;
    amp * l
}

impl<T: Real> Model<T> for ModelSpec {
    fn n_params(&self) -> usize {
        match self {
            ModelSpec::Lorentzian => 4,
            ModelSpec::MultiLorentzian(n) => 3 * n + 1,
            ModelSpec::ExpDecay => 3,
            ModelSpec::DampedCosine => 4,
        }
    }

    fn eval(&self, x: T, p: &[T]) -> T {
        let two = lit::<T>(2.0);
        match self {
            ModelSpec::Lorentzian => {
                let u = two * (x - p[1]) / p[2];
                p[0] / (T::one() + u * u) + p[3]
            }
            ModelSpec::MultiLorentzian(n) => {
                let mut y = p[3 * n];
                for k in 0..*n {
                    let u = two * (x - p[3 * k + 1]) / p[3 * k + 2];
                    y = y + p[3 * k] / (T::one() + u * u);
                }
                y
            }
            ModelSpec::ExpDecay => p[0] * (-x / p[1]).exp() + p[2],
            ModelSpec::DampedCosine => {
                let c = (T::TAU() * p[1] * x).cos();
                p[3] - p[0] / two * (T::one() - c) * (-x / p[2]).exp()
            }
        }
    }

    fn gradient(&self, x: T, p: &[T], g: &mut [T]) {
        let two = lit::<T>(2.0);
        match self {
            ModelSpec::Lorentzian => {
                lorentz_terms(x, p[0], p[1], p[2], &mut g[..3]);
                g[3] = T::one();
            }
            ModelSpec::MultiLorentzian(n) => {
                for k in 0..*n {
                    lorentz_terms(x, p[3 * k], p[3 * k + 1], p[3 * k + 2], &mut g[3 * k..3 * k + 3]);
                }
                g[3 * n] = T::one();
            }
            ModelSpec::ExpDecay => {
                let e = (-x / p[1]).exp();
                g[0] = e;
                g[1] = p[0] * e * x / (p[1] * p[1]);
                g[2] = T::one();
            }
            ModelSpec::DampedCosine => {
                let phase = T::TAU() * p[1] * x;
                let (s, c) = phase.sin_cos();
                let e = (-x / p[2]).exp();
                g[0] = -(T::one() - c) * e / two;
                g[1] = -p[0] / two * s * T::TAU() * x * e;
                g[2] = -p[0] / two * (T::one() - c) * e * x / (p[2] * p[2]);
                g[3] = T::one();
            }
        }
    }

    fn positive_params(&self) -> Vec<bool> {
        match self {
            ModelSpec::Lorentzian => vec![true, false, true, false],
            ModelSpec::MultiLorentzian(n) => {
                let mut v: Vec<bool> = (0..*n).flat_map(|_| [true, false, true]).collect();
                v.push(false);
                v
            }
            ModelSpec::ExpDecay => vec![true, true, false],
            ModelSpec::DampedCosine => vec![true, true, true, false],
        }
    }

    fn param_names(&self) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|x| (*x).to_owned()).collect();
        match self {
            ModelSpec::Lorentzian => s(&["amplitude", "center", "fwhm", "baseline"]),
            ModelSpec::MultiLorentzian(n) => {
                let mut v: Vec<String> = (1..=*n)
                    .flat_map(|k| [format!("amplitude{k}"), format!("center{k}"), format!("fwhm{k}")])
                    .collect();
                v.push("baseline".into());
                v
            }
            ModelSpec::ExpDecay => s(&["amplitude", "lifetime", "baseline"]),
            ModelSpec::DampedCosine => s(&["amplitude", "frequency", "decay_time", "offset"]),
        }
    }
}
