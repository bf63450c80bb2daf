//! Damped least squares (Levenberg–Marquardt) with Marquardt diagonal scaling.
//!
//! Positive parameters are stepped multiplicatively (`θ ← θ·exp(δ)`), which is
//! an additive step on `ln θ`. The state is always kept in linear parameters,
//! so an exact initial guess reproduces the data bit-for-bit.

use serde::{Deserialize, Serialize};

use super::model::Model;
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions<T> {
    pub initial_damping: T,
    pub damping_up: T,
    pub damping_down: T,
    /// Stop when an accepted step improves chi² by less than this fraction.
    pub rel_chi2_tol: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        Self {
            initial_damping: lit(1e-3),
            damping_up: lit(10.0),
            damping_down: lit(10.0),
            rel_chi2_tol: lit(1e-10),
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Weights<T> {
    Unit,
    /// `1 / max(y, 1)`, the usual approximation for counting data.
    Poisson,
    Explicit(Vec<T>),
}

impl<T: Real> Weights<T> {
    pub fn resolve(&self, y: &[T]) -> Result<Vec<T>> {
        let w = match self {
            Weights::Unit => vec![T::one(); y.len()],
            Weights::Poisson => y.iter().map(|&v| T::one() / v.max(T::one())).collect(),
            Weights::Explicit(w) => {
                if w.len() != y.len() {
                    return Err(Error::validation("weights length differs from data length"));
                }
                w.clone()
            }
        };
        if w.iter().any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::validation("weights must be positive and finite"));
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Accepted step changed chi² by less than the relative tolerance.
    RelativeChi2,
    /// Model reproduces the data to rounding.
    ExactFit,
    /// No step could move chi² by more than the relative tolerance.
    Stationary,
    IterationCap,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        !matches!(self, Termination::IterationCap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub param_names: Vec<String>,
    pub params: Vec<T>,
    pub sigmas: Vec<T>,
    /// Parameter covariance, scaled by the reduced chi².
    pub covariance: Vec<Vec<T>>,
    pub chi2: T,
    pub reduced_chi2: T,
    pub n_points: usize,
    pub n_iterations: usize,
    pub converged: bool,
    pub termination_reason: Termination,
    /// Weighted chi² after each accepted step, starting with the initial value.
    pub chi2_history: Vec<T>,
}

impl<T: Real> FitResult<T> {
    pub fn param(&self, name: &str) -> Option<(T, T)> {
        let i = self.param_names.iter().position(|n| n == name)?;
        Some((self.params[i], self.sigmas[i]))
    }

    pub fn dof(&self) -> usize {
        self.n_points.saturating_sub(self.params.len())
    }
}

fn chi2<T: Real, M: Model<T> + ?Sized>(model: &M, x: &[T], y: &[T], w: &[T], p: &[T]) -> T {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&xi, &yi), &wi)| {
            let r = yi - model.eval(xi, p);
            wi * r * r
        })
        .fold(T::zero(), |a, b| a + b)
}

/// `JᵀWJ` and `JᵀWr` with Jacobian columns scaled by `scale`.
fn normal_equations<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    x: &[T],
    y: &[T],
    w: &[T],
    p: &[T],
    scale: &[T],
) -> (SquareMatrix<T>, Vec<T>) {
    let n = p.len();
    let mut a = SquareMatrix::zeros(n);
    let mut g = vec![T::zero(); n];
    let mut grad = vec![T::zero(); n];
    for ((&xi, &yi), &wi) in x.iter().zip(y).zip(w) {
        model.gradient(xi, p, &mut grad);
        for (gk, sk) in grad.iter_mut().zip(scale) {
            *gk = *gk * *sk;
        }
        let r = yi - model.eval(xi, p);
        for j in 0..n {
            let wj = wi * grad[j];
            g[j] = g[j] + wj * r;
            for k in 0..=j {
                a.set(j, k, a.get(j, k) + wj * grad[k]);
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a.set(k, j, a.get(j, k));
        }
    }
    (a, g)
}

/// Minimizes `Σ wᵢ (yᵢ − f(xᵢ; θ))²` starting from `init`.
pub fn fit<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    x: &[T],
    y: &[T],
    weights: &Weights<T>,
    init: &[T],
    options: &FitOptions<T>,
) -> Result<FitResult<T>> {
    let n_par = model.n_params();
    if x.len() != y.len() {
        return Err(Error::validation("x and y lengths differ"));
    }
    if init.len() != n_par {
        return Err(Error::validation(format!(
            "model takes {n_par} parameters, {} given",
            init.len()
        )));
    }
    if x.len() < n_par {
        return Err(Error::validation("fewer data points than parameters"));
    }
    if init.iter().chain(x).chain(y).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite data or initial parameters"));
    }
    let positive = model.positive_params();
    if init.iter().zip(&positive).any(|(&v, &pos)| pos && !(v > T::zero())) {
        return Err(Error::validation("initial value of a positive parameter is not positive"));
    }
    let w = weights.resolve(y)?;

    let mut params = init.to_vec();
    let mut current = chi2(model, x, y, &w, &params);
    let signal: T = y.iter().zip(&w).map(|(&yi, &wi)| wi * yi * yi).fold(T::zero(), |a, b| a + b);
    let floor = T::epsilon() * T::epsilon() * lit::<T>(16.0) * signal.max(T::min_positive_value());
    let mut history = vec![current];
    let mut lambda = options.initial_damping;
    let mut iterations = 0;
    let mut termination = Termination::IterationCap;

    while iterations < options.max_iterations {
        if current <= floor {
            termination = Termination::ExactFit;
            break;
        }
        let scale: Vec<T> = params
            .iter()
            .zip(&positive)
            .map(|(&p, &pos)| if pos { p } else { T::one() })
            .collect();
        let (a, g) = normal_equations(model, x, y, &w, &params, &scale);
        let diag = a.diagonal();
        if diag.iter().any(|&d| !(d > T::zero())) {
            return Err(Error::DegenerateFit);
        }
        // Inner loop: raise damping until a step lowers chi².
        loop {
            iterations += 1;
            let mut damped = a.clone();
            for (i, &d) in diag.iter().enumerate() {
                damped.set(i, i, d * (T::one() + lambda));
            }
            let trial = damped.solve_spd(&g).map(|delta| {
                params
                    .iter()
                    .zip(&delta)
                    .zip(&positive)
                    .map(|((&p, &d), &pos)| if pos { p * d.exp() } else { p + d })
                    .collect::<Vec<T>>()
            });
            let trial_chi2 = trial
                .as_ref()
                .map(|t| chi2(model, x, y, &w, t))
                .filter(|c| c.is_finite());
            match (trial, trial_chi2) {
                (Some(t), Some(c)) if c < current => {
                    let rel = (current - c) / current;
                    params = t;
                    current = c;
                    history.push(c);
                    lambda = (lambda / options.damping_down).max(lit(1e-300));
                    if rel < options.rel_chi2_tol {
                        termination = Termination::RelativeChi2;
                    }
                    break;
                }
                (_, c) => {
                    if let Some(c) = c {
                        if (c - current).abs() <= options.rel_chi2_tol * current {
                            termination = Termination::Stationary;
                            break;
                        }
                    }
                    lambda = lambda * options.damping_up;
                    if !lambda.is_finite() {
                        termination = Termination::Stationary;
                        break;
                    }
                    if iterations >= options.max_iterations {
                        break;
                    }
                }
            }
        }
        if termination != Termination::IterationCap {
            break;
        }
    }

    let ones = vec![T::one(); n_par];
    let (a, _) = normal_equations(model, x, y, &w, &params, &ones);
    let inv = a.inverse_spd().ok_or(Error::DegenerateFit)?;
    let dof = x.len().saturating_sub(n_par).max(1);
    let reduced = current / T::from_usize(dof).expect("dof fits scalar");
    let covariance: Vec<Vec<T>> = inv
        .to_rows()
        .into_iter()
        .map(|row| row.into_iter().map(|v| v * reduced).collect())
        .collect();
    let sigmas = (0..n_par).map(|i| covariance[i][i].max(T::zero()).sqrt()).collect();

    Ok(FitResult {
        param_names: model.param_names(),
        params,
        sigmas,
        covariance,
        chi2: current,
        reduced_chi2: reduced,
        n_points: x.len(),
        n_iterations: iterations,
        converged: termination.is_converged(),
        termination_reason: termination,
        chi2_history: history,
    })
}
