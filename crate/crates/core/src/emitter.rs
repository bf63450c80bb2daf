//! Purcell-modified emission: channel rates, Purcell-factor extraction from
//! lifetimes, Debye–Waller factor from a spectrum, and the detuning-dependent
//! enhancement seen at the output grating.

use serde::{Deserialize, Serialize};

use crate::cavity::CavityMode;
use crate::error::{Error, Result, Warning};
use crate::scalar::{lit, unit_lorentzian, Real};

/// Radiative budget of the emitter ensemble. Lifetimes in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams<T> {
    pub tau_zpl: T,
    pub tau_psb: T,
    pub tau_off: T,
    /// Lifetime in the unpatterned film.
    pub tau_0: T,
    /// Branching ratio into the ZPL (Debye–Waller factor).
    pub xi_zpl: T,
}

impl<T: Real> EmitterParams<T> {
    /// Derives the channel lifetimes from the off-resonance lifetime and the ZPL branching ratio.
    pub fn from_off_lifetime(tau_off: T, xi_zpl: T, tau_0: T) -> Result<Self> {
        if !(tau_off > T::zero()) || !(tau_0 > T::zero()) {
            return Err(Error::validation("lifetimes must be positive"));
        }
        if !(xi_zpl > T::zero() && xi_zpl < T::one()) {
            return Err(Error::validation("ZPL branching ratio must lie in (0, 1)"));
        }
        Ok(Self {
            tau_zpl: tau_off / xi_zpl,
            tau_psb: tau_off / (T::one() - xi_zpl),
            tau_off,
            tau_0,
            xi_zpl,
        })
    }

    /// Builds the budget from the two channel lifetimes.
    pub fn from_channels(tau_zpl: T, tau_psb: T, tau_0: T) -> Result<Self> {
        if !(tau_zpl > T::zero()) || !(tau_psb > T::zero()) {
            return Err(Error::validation("channel lifetimes must be positive"));
        }
        let tau_off = T::one() / (T::one() / tau_zpl + T::one() / tau_psb);
        Self::from_off_lifetime(tau_off, tau_off / tau_zpl, tau_0)
    }

    pub fn validate(&self) -> Result<()> {
        let tol = lit::<T>(1e-12).max(T::epsilon() * lit(16.0));
        let lhs = T::one() / self.tau_off;
        let rhs = T::one() / self.tau_zpl + T::one() / self.tau_psb;
        if ((lhs - rhs) / lhs).abs() > tol {
            return Err(Error::validation("1/tau_off != 1/tau_zpl + 1/tau_psb"));
        }
        if ((self.xi_zpl - self.tau_off / self.tau_zpl) / self.xi_zpl).abs() > tol {
            return Err(Error::validation("xi_zpl != tau_off / tau_zpl"));
        }
        if !(self.xi_zpl > T::zero() && self.xi_zpl < T::one()) {
            return Err(Error::validation("ZPL branching ratio must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Total decay rate (1/ns) with the cavity off resonance.
pub fn rate_off<T: Real>(p: &EmitterParams<T>) -> Result<T> {
    if !(p.tau_zpl > T::zero()) || !(p.tau_psb > T::zero()) {
        return Err(Error::validation("channel lifetimes must be positive"));
    }
    Ok(T::one() / p.tau_zpl + T::one() / p.tau_psb)
}

/// Total decay rate (1/ns) with the ZPL channel enhanced by Purcell factor `f`.
pub fn rate_on<T: Real>(p: &EmitterParams<T>, f: T) -> Result<T> {
    if !(f >= T::zero()) {
        return Err(Error::validation("Purcell factor must be nonnegative"));
    }
    Ok(rate_off(p)? + f / p.tau_zpl)
}

/// Lifetime (ns) at Purcell factor `f`.
pub fn lifetime_on<T: Real>(p: &EmitterParams<T>, f: T) -> Result<T> {
    Ok(T::one() / rate_on(p, f)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PurcellMethod {
    LifetimeRatio,
    ReferenceLifetime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PurcellInputs<T> {
    LifetimeRatio { tau_off: T, tau_on: T, xi_zpl: T },
    ReferenceLifetime { tau_0: T, dwf: T, tau_on: T, tau_off: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurcellResult<T> {
    pub f: T,
    pub method: PurcellMethod,
    pub inputs: PurcellInputs<T>,
    pub warnings: Vec<Warning>,
}

fn check_fraction<T: Real>(x: T, what: &str) -> Result<()> {
    if x > T::zero() && x < T::one() {
        Ok(())
    } else {
        Err(Error::validation(format!("{what} must lie in (0, 1)")))
    }
}

fn check_positive<T: Real>(vals: &[T]) -> Result<()> {
    if vals.iter().all(|&v| v > T::zero() && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::validation("lifetimes must be positive and finite"))
    }
}

fn sign_warnings<T: Real>(f: T) -> Vec<Warning> {
    if f < T::zero() {
        vec![Warning::NegativePurcell]
    } else {
        Vec::new()
    }
}

/// `F = (1/ξ)·(τ_off/τ_on − 1)`.
pub fn purcell_from_lifetime_ratio<T: Real>(tau_off: T, tau_on: T, xi_zpl: T) -> Result<PurcellResult<T>> {
    check_positive(&[tau_off, tau_on])?;
    check_fraction(xi_zpl, "ZPL branching ratio")?;
    let f = (tau_off / tau_on - T::one()) / xi_zpl;
    Ok(PurcellResult {
        f,
        method: PurcellMethod::LifetimeRatio,
        inputs: PurcellInputs::LifetimeRatio { tau_off, tau_on, xi_zpl },
        warnings: sign_warnings(f),
    })
}

/// `F = (τ0/DWF)·(1/τ_on − 1/τ_off)`, using the unpatterned-film lifetime τ0.
pub fn purcell_from_reference_lifetime<T: Real>(tau_0: T, dwf: T, tau_on: T, tau_off: T) -> Result<PurcellResult<T>> {
    check_positive(&[tau_0, tau_on, tau_off])?;
    check_fraction(dwf, "Debye-Waller factor")?;
    let f = tau_0 / dwf * (T::one() / tau_on - T::one() / tau_off);
    Ok(PurcellResult {
        f,
        method: PurcellMethod::ReferenceLifetime,
        inputs: PurcellInputs::ReferenceLifetime { tau_0, dwf, tau_on, tau_off },
        warnings: sign_warnings(f),
    })
}

/// Fraction of (baseline-subtracted) spectral weight inside `zpl_window`.
///
/// Integrates the piecewise-linear interpolant of the spectrum with the
/// trapezoid rule, clipping exactly at the window edges. Intensities that fall
/// below the baseline count as zero.
pub fn dwf_from_spectrum<T: Real>(spectrum: &[(T, T)], zpl_window: (T, T), baseline: T) -> Result<T> {
    if spectrum.is_empty() {
        return Err(Error::validation("spectrum is empty"));
    }
    if spectrum.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::validation("spectrum wavelengths must be strictly increasing"));
    }
    let (a, b) = zpl_window;
    let lo = spectrum[0].0;
    let hi = spectrum[spectrum.len() - 1].0;
    if a > b || a < lo || b > hi {
        return Err(Error::validation("ZPL window must lie within the spectrum domain"));
    }
    let pts: Vec<(T, T)> = spectrum
        .iter()
        .map(|&(x, y)| (x, (y - baseline).max(T::zero())))
        .collect();
    let total = integrate_clipped(&pts, lo, hi);
    if !(total > T::zero()) {
        return Err(Error::DegenerateSpectrum);
    }
    let inside = integrate_clipped(&pts, a, b);
    Ok((inside / total).min(T::one()))
}

fn integrate_clipped<T: Real>(pts: &[(T, T)], a: T, b: T) -> T {
    if pts.len() == 1 {
        return T::zero();
    }
    let half = lit::<T>(0.5);
    let mut acc = T::zero();
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let l = x0.max(a);
        let r = x1.min(b);
        if r <= l {
            continue;
        }
        let at = |x: T| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        acc = acc + (at(l) + at(r)) * half * (r - l);
    }
    acc
}

/// Purcell factor at detuning `delta_nm`, filtered by the mode Lorentzian.
pub fn purcell_vs_detuning<T: Real>(f_max: T, mode: &CavityMode<T>, delta_nm: T) -> T {
    f_max * unit_lorentzian(delta_nm, T::zero(), mode.linewidth_nm())
}

/// On/off ZPL intensity ratio at the output grating: `(F + 1)·η`.
pub fn zpl_output_enhancement<T: Real>(f: T, eta_ratio: T) -> Result<T> {
    if !(f >= T::zero()) || !(eta_ratio > T::zero()) {
        return Err(Error::validation(
            "enhancement needs F >= 0 and a positive redirection ratio",
        ));
    }
    Ok((f + T::one()) * eta_ratio)
}

/// Waveguide redirection gain at detuning `delta_nm`: 1 far off resonance,
/// `eta_ratio` on resonance, Lorentzian in between.
pub fn waveguide_redirection<T: Real>(eta_ratio: T, mode: &CavityMode<T>, delta_nm: T) -> T {
    T::one() + (eta_ratio - T::one()) * unit_lorentzian(delta_nm, T::zero(), mode.linewidth_nm())
}

/// Grating-path ZPL enhancement relative to a fully decoupled emitter.
pub fn grating_zpl_enhancement<T: Real>(f_max: T, eta_ratio: T, mode: &CavityMode<T>, delta_nm: T) -> Result<T> {
    zpl_output_enhancement(
        purcell_vs_detuning(f_max, mode, delta_nm),
        waveguide_redirection(eta_ratio, mode, delta_nm),
    )
}

/// Confocal-path ZPL enhancement. The confocal spot collects free-space
/// emission, which the cavity does not redirect, so this is 1 at any detuning.
pub fn confocal_zpl_enhancement<T: Real>(_mode: &CavityMode<T>, _delta_nm: T) -> T {
    T::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn measured() -> EmitterParams<f64> {
        EmitterParams::from_off_lifetime(15.85, 0.031, 14.94).unwrap()
    }

    #[test]
    fn rate_off_cases() {
        let eq = EmitterParams::from_channels(2.0_f64, 2.0, 1.0).unwrap();
        assert!((rate_off(&eq).unwrap() - 1.0).abs() < 1e-15);
        assert!((eq.tau_off - 1.0).abs() < 1e-15);

        let p = EmitterParams { tau_zpl: 511.3_f64, tau_psb: 16.35, tau_off: 15.85, tau_0: 14.94, xi_zpl: 0.031 };
        assert!((1.0 / rate_off(&p).unwrap() - 15.85).abs() < 0.01);
        assert!((measured().tau_zpl - 511.29).abs() < 0.01);
        assert!((measured().tau_psb - 16.357).abs() < 0.001);

        let single = EmitterParams { tau_psb: f64::INFINITY, ..p };
        assert_eq!(rate_off(&single).unwrap(), 1.0 / 511.3);
        let bad = EmitterParams { tau_zpl: 0.0, ..p };
        assert!(rate_off(&bad).is_err());
    }

    #[test]
    fn rate_on_cases() {
        let p = measured();
        assert_eq!(rate_on(&p, 0.0).unwrap(), rate_off(&p).unwrap());
        let tau = 1.0 / rate_on(&p, 5.23).unwrap();
        assert!(((tau - 13.64) / 13.64).abs() < 0.003, "tau_on {tau}");
        let taus: Vec<f64> = [0.0, 1.0, 10.0].iter().map(|&f| lifetime_on(&p, f).unwrap()).collect();
        assert!(taus[0] > taus[1] && taus[1] > taus[2]);
        assert!(rate_on(&p, -0.1).is_err());
    }

    #[test]
    fn params_invariants() {
        let p = measured();
        p.validate().unwrap();
        let bad = EmitterParams { xi_zpl: 0.05, ..p };
        assert!(bad.validate().is_err());
        assert!(EmitterParams::from_off_lifetime(15.85, 1.0, 14.94).is_err());
        assert!(EmitterParams::from_off_lifetime(-1.0, 0.03, 14.94).is_err());
    }

    #[test]
    fn lifetime_ratio_purcell() {
        let r = purcell_from_lifetime_ratio(15.85_f64, 13.64, 0.031).unwrap();
        assert!((r.f - 5.23).abs() < 0.01, "{}", r.f);
        assert!(r.warnings.is_empty());
        assert_eq!(purcell_from_lifetime_ratio(15.85, 15.85, 0.031).unwrap().f, 0.0);
        let theory = purcell_from_lifetime_ratio(15.85_f64, 13.64, 0.038).unwrap();
        // (1/0.038)(15.85/13.64 - 1)
        assert!((theory.f - 4.2638).abs() < 1e-3, "{}", theory.f);
        let neg = purcell_from_lifetime_ratio(15.0, 15.5, 0.031).unwrap();
        assert!(neg.f < 0.0);
        assert_eq!(neg.warnings, vec![Warning::NegativePurcell]);
        assert!(purcell_from_lifetime_ratio(15.0, 13.0, 1.2).is_err());
        assert!(purcell_from_lifetime_ratio(0.0, 13.0, 0.03).is_err());
    }

    #[test]
    fn reference_lifetime_purcell() {
        let r = purcell_from_reference_lifetime(14.94_f64, 0.031, 13.64, 15.85).unwrap();
        assert!((r.f - 4.93).abs() < 0.03, "{}", r.f);
        assert_eq!(r.method, PurcellMethod::ReferenceLifetime);
        assert_eq!(purcell_from_reference_lifetime(14.94, 0.031, 15.85, 15.85).unwrap().f, 0.0);
        let a: f64 = purcell_from_reference_lifetime(15.85, 0.031, 13.64, 15.85).unwrap().f;
        let b = purcell_from_lifetime_ratio(15.85, 13.64, 0.031).unwrap().f;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn dwf_trivial_cases() {
        let spec: Vec<(f64, f64)> = (0..=100).map(|i| (1070.0 + 0.1 * i as f64, 1.0)).collect();
        assert_eq!(dwf_from_spectrum(&spec, (1070.0, 1080.0), 0.0).unwrap(), 1.0);
        assert_eq!(dwf_from_spectrum(&spec, (1075.0, 1075.0), 0.0).unwrap(), 0.0);
        assert!(matches!(
            dwf_from_spectrum(&spec, (1071.0, 1072.0), 2.0),
            Err(Error::DegenerateSpectrum)
        ));
        assert!(dwf_from_spectrum(&spec, (1060.0, 1072.0), 0.0).is_err());
        assert!(dwf_from_spectrum::<f64>(&[], (0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn dwf_lorentzian_plus_gaussian() {
        // Lorentzian ZPL with area 3.1 and Gaussian PSB with area 96.9.
        let (zpl, w) = (1078.6, 0.5);
        let (psb, sigma) = (1200.0, 30.0);
        let spec: Vec<(f64, f64)> = (0..=40_000)
            .map(|i| {
                let x = 1000.0 + 0.01 * i as f64;
                let lor = 3.1 * (w / 2.0) / std::f64::consts::PI / ((x - zpl).powi(2) + (w / 2.0).powi(2));
                let gau = 96.9 / (sigma * (2.0 * std::f64::consts::PI).sqrt())
                    * (-(x - psb).powi(2) / (2.0 * sigma * sigma)).exp();
                (x, lor + gau)
            })
            .collect();
        let d = dwf_from_spectrum(&spec, (zpl - 5.0, zpl + 5.0), 0.0).unwrap();
        assert!((d - 0.031).abs() < 0.002, "dwf {d}");
    }

    #[test]
    fn detuning_filter() {
        let mode = CavityMode::new(55, 1078.6_f64, 1261.0).unwrap();
        let w = mode.linewidth_nm();
        assert_eq!(purcell_vs_detuning(5.23, &mode, 0.0), 5.23);
        assert!((purcell_vs_detuning(5.23, &mode, w / 2.0) - 5.23 / 2.0).abs() < 1e-12);
        let f = purcell_vs_detuning(5.23, &mode, 1.0);
        assert!((f - 5.23 / (1.0 + (2.0_f64 / 0.85535).powi(2))).abs() < 1e-4);
        assert!((f - 0.80).abs() < 0.01, "{f}");
    }

    #[test]
    fn output_enhancement() {
        assert_eq!(zpl_output_enhancement(0.0, 1.0).unwrap(), 1.0);
        assert!((zpl_output_enhancement(5.0_f64, 6.0).unwrap() - 36.0).abs() < 1e-12);
        assert!((zpl_output_enhancement(5.23_f64, 6.0).unwrap() - 37.38).abs() < 1e-9);
        assert!(zpl_output_enhancement(-1.0, 6.0).is_err());
        let mode = CavityMode::new(55, 1078.6_f64, 1261.0).unwrap();
        assert!((grating_zpl_enhancement(5.0, 6.0, &mode, 0.0).unwrap() - 36.0).abs() < 1e-12);
        assert!(grating_zpl_enhancement(5.0, 6.0, &mode, -20.0).unwrap() < 1.01);
        assert_eq!(confocal_zpl_enhancement(&mode, 0.0), 1.0);
        assert_eq!(confocal_zpl_enhancement(&mode, -6.0), 1.0);
    }

    #[test]
    fn generic_over_f32() {
        let r = purcell_from_lifetime_ratio(15.85f32, 13.64, 0.031).unwrap();
        assert!((r.f - 5.23).abs() < 0.01);
    }
}
