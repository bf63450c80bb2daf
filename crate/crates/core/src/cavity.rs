//! Parametric micro-ring resonator: resonance comb, free spectral range,
//! Lorentzian mode lineshapes and gas-condensation tuning.
//!
//! Units: diameters in μm, wavelengths in nm. The effective index is linear in
//! wavelength around a reference wavelength, which makes the group index
//! `n_g = n_eff(λ) − λ·dn_eff/dλ` a constant of the geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, unit_lorentzian, Real};

const FIXED_POINT_TOL_NM: f64 = 1e-6;
const FIXED_POINT_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingGeometry<T> {
    pub diameter_um: T,
    /// Effective index at `reference_wavelength_nm`.
    pub n_eff: T,
    /// dn_eff/dλ in 1/nm.
    pub dispersion_slope: T,
    pub reference_wavelength_nm: T,
    pub n_g: T,
}

impl<T: Real> RingGeometry<T> {
    /// Geometry with the dispersion slope chosen so the group index is `n_g`.
    pub fn new(diameter_um: T, n_eff: T, n_g: T, reference_wavelength_nm: T) -> Result<Self> {
        let geom = Self {
            diameter_um,
            n_eff,
            dispersion_slope: (n_eff - n_g) / reference_wavelength_nm,
            reference_wavelength_nm,
            n_g,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Dispersionless ring (`n_g = n_eff`).
    pub fn constant_index(diameter_um: T, n_eff: T) -> Result<Self> {
        let geom = Self {
            diameter_um,
            n_eff,
            dispersion_slope: T::zero(),
            reference_wavelength_nm: lit(1000.0),
            n_g: n_eff,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter_um > T::zero()) {
            return Err(Error::validation("ring diameter must be positive"));
        }
        if !(self.n_eff >= T::one()) {
            return Err(Error::validation("effective index must be at least 1"));
        }
        if !(self.reference_wavelength_nm > T::zero()) {
            return Err(Error::validation("reference wavelength must be positive"));
        }
        let tol = lit::<T>(1e-12).max(T::epsilon() * lit(8.0)) * self.n_g.abs().max(T::one());
        if self.n_g < self.n_eff - tol {
            return Err(Error::validation("group index below effective index"));
        }
        let implied = self.n_eff - self.reference_wavelength_nm * self.dispersion_slope;
        if (implied - self.n_g).abs() > tol {
            return Err(Error::validation(
                "group index inconsistent with the stored dispersion slope",
            ));
        }
        Ok(())
    }

    /// Circumference in nm.
    pub fn circumference_nm(&self) -> T {
        T::PI() * self.diameter_um * lit(1000.0)
    }

    pub fn n_eff_at(&self, wavelength_nm: T) -> T {
        self.n_eff + self.dispersion_slope * (wavelength_nm - self.reference_wavelength_nm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityMode<T> {
    pub azimuthal_order: u32,
    pub center_wavelength_nm: T,
    pub q_factor: T,
    /// Cumulative condensation redshift, never negative.
    pub tuning_offset_nm: T,
}

impl<T: Real> CavityMode<T> {
    pub fn new(azimuthal_order: u32, center_wavelength_nm: T, q_factor: T) -> Result<Self> {
        if !(q_factor > T::zero()) {
            return Err(Error::validation("Q factor must be positive"));
        }
        if !(center_wavelength_nm > T::zero()) {
            return Err(Error::validation("mode wavelength must be positive"));
        }
        Ok(Self {
            azimuthal_order,
            center_wavelength_nm,
            q_factor,
            tuning_offset_nm: T::zero(),
        })
    }

    pub fn tuned_center_nm(&self) -> T {
        self.center_wavelength_nm + self.tuning_offset_nm
    }

    /// FWHM at the tuned center, `λc / Q`.
    pub fn linewidth_nm(&self) -> T {
        self.tuned_center_nm() / self.q_factor
    }
}

/// Solves `m·λ = π·d·n_eff(λ)` for every order with a resonance inside `band`.
pub fn resonance_wavelengths<T: Real>(
    geom: &RingGeometry<T>,
    band: (T, T),
    q_factor: T,
) -> Result<Vec<CavityMode<T>>> {
    geom.validate()?;
    let (lo, hi) = band;
    if !(lo > T::zero()) {
        return Err(Error::validation("band lower edge must be positive"));
    }
    if hi < lo {
        return Ok(Vec::new());
    }
    let circ = geom.circumference_nm();
    let edge_tol = lit::<T>(1e-9).max(T::epsilon() * lit(16.0));
    let order_at = |lambda: T| circ * geom.n_eff_at(lambda).max(T::epsilon()) / lambda;
    let m_lo = order_at(hi).floor().to_u64().unwrap_or(1).saturating_sub(1).max(1);
    let m_hi = order_at(lo).ceil().to_u64().unwrap_or(0) + 1;

    let tol = lit::<T>(FIXED_POINT_TOL_NM).max(T::epsilon() * lit::<T>(8.0) * hi);
    let mut modes = Vec::new();
    for m in m_lo..=m_hi {
        let order = u32::try_from(m).map_err(|_| Error::validation("azimuthal order overflow"))?;
        let m_t = T::from_u64(m).expect("order fits in scalar");
        let mut lambda = circ * geom.n_eff / m_t;
        let mut converged = false;
        for _ in 0..FIXED_POINT_MAX_ITER {
            let next = circ * geom.n_eff_at(lambda) / m_t;
            if !next.is_finite() || next <= T::zero() {
                break;
            }
            let step = (next - lambda).abs();
            lambda = next;
            if step <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::DispersionDiverged { order });
        }
        if lambda >= lo * (T::one() - edge_tol) && lambda <= hi * (T::one() + edge_tol) {
            modes.push(CavityMode::new(order, lambda, q_factor)?);
        }
    }
    modes.sort_by(|a, b| {
        a.center_wavelength_nm
            .partial_cmp(&b.center_wavelength_nm)
            .expect("finite wavelengths")
    });
    Ok(modes)
}

/// `λ² / (π·d·n_g)` in nm.
pub fn free_spectral_range<T: Real>(geom: &RingGeometry<T>, wavelength_nm: T) -> T {
    wavelength_nm * wavelength_nm / (geom.circumference_nm() * geom.n_g)
}

/// The resonance closest to `target_nm`.
pub fn nearest_mode<T: Real>(geom: &RingGeometry<T>, target_nm: T, q_factor: T) -> Result<CavityMode<T>> {
    let span = free_spectral_range(geom, target_nm) * lit(1.5);
    let modes = resonance_wavelengths(geom, ((target_nm - span).max(T::epsilon()), target_nm + span), q_factor)?;
    modes
        .into_iter()
        .min_by(|a, b| {
            let da = (a.center_wavelength_nm - target_nm).abs();
            let db = (b.center_wavelength_nm - target_nm).abs();
            da.partial_cmp(&db).expect("finite")
        })
        .ok_or_else(|| Error::validation("no resonance near target wavelength"))
}

/// Unit-peak Lorentzian of the (tuned) mode sampled on `grid_nm`.
pub fn mode_lineshape<T: Real>(mode: &CavityMode<T>, grid_nm: &[T]) -> Vec<T> {
    let center = mode.tuned_center_nm();
    let fwhm = mode.linewidth_nm();
    grid_nm.iter().map(|&l| unit_lorentzian(l, center, fwhm)).collect()
}

/// Signed offset of the tuned mode from `target_nm` (negative = mode is blue).
pub fn detuning<T: Real>(mode: &CavityMode<T>, target_nm: T) -> T {
    mode.tuned_center_nm() - target_nm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Injection<T> {
    pub pressure_pa: T,
    pub volume_l: T,
}

/// Gas-condensation log with a linear shift-per-dose law and a saturation cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningState<T> {
    pub injections: Vec<Injection<T>>,
    /// nm of redshift per Pa·L injected.
    pub sensitivity: T,
    pub saturation_shift_nm: T,
}

impl<T: Real> TuningState<T> {
    pub fn new(sensitivity: T, saturation_shift_nm: T) -> Result<Self> {
        if !(sensitivity >= T::zero()) || !(saturation_shift_nm >= T::zero()) {
            return Err(Error::validation(
                "tuning sensitivity and saturation must be nonnegative",
            ));
        }
        Ok(Self {
            injections: Vec::new(),
            sensitivity,
            saturation_shift_nm,
        })
    }

    /// Total injected dose Σ P·V.
    pub fn total_dose(&self) -> T {
        self.injections
            .iter()
            .map(|i| i.pressure_pa * i.volume_l)
            .fold(T::zero(), |a, b| a + b)
    }
}

pub fn apply_injection<T: Real>(
    state: &TuningState<T>,
    mode: &CavityMode<T>,
    pressure_pa: T,
    volume_l: T,
) -> Result<(TuningState<T>, CavityMode<T>)> {
    if !(pressure_pa >= T::zero()) || !(volume_l >= T::zero()) {
        return Err(Error::validation("injection pressure and volume must be nonnegative"));
    }
    let headroom = (state.saturation_shift_nm - mode.tuning_offset_nm).max(T::zero());
    let shift = (state.sensitivity * pressure_pa * volume_l).min(headroom);
    let mut next_state = state.clone();
    next_state.injections.push(Injection { pressure_pa, volume_l });
    let mut next_mode = *mode;
    // Clamp: `old + (cap − old)` can round one ulp past the cap.
    next_mode.tuning_offset_nm = (mode.tuning_offset_nm + shift).min(state.saturation_shift_nm.max(mode.tuning_offset_nm));
    Ok((next_state, next_mode))
}

/// Warm-up: clears the log and removes all condensation shift.
pub fn reset_tuning<T: Real>(state: &TuningState<T>, mode: &CavityMode<T>) -> (TuningState<T>, CavityMode<T>) {
    let mut s = state.clone();
    s.injections.clear();
    let mut m = *mode;
    m.tuning_offset_nm = T::zero();
    (s, m)
}

/// Replays an injection log onto a mode from its current state.
pub fn replay<T: Real>(
    state: &TuningState<T>,
    mode: &CavityMode<T>,
    log: &[Injection<T>],
) -> Result<(TuningState<T>, CavityMode<T>)> {
    log.iter().try_fold((state.clone(), *mode), |(s, m), inj| {
        apply_injection(&s, &m, inj.pressure_pa, inj.volume_l)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_circumference_comb() {
        let g = RingGeometry::constant_index(1.0 / std::f64::consts::PI, 1.0).unwrap();
        let modes = resonance_wavelengths(&g, (200.0, 2000.0), 100.0).unwrap();
        let orders: Vec<u32> = modes.iter().map(|m| m.azimuthal_order).collect();
        assert_eq!(orders, vec![5, 4, 3, 2, 1]);
        for m in modes {
            assert!(close(m.center_wavelength_nm, 1000.0 / m.azimuthal_order as f64, 1e-6));
        }
    }

    #[test]
    fn ring_8p1_has_single_mode_at_order_53() {
        let g = RingGeometry::constant_index(8.1, 2.30).unwrap();
        let modes = resonance_wavelengths(&g, (1090.0, 1120.0), 1000.0).unwrap();
        // brute-force oracle: scan integer orders
        let brute: Vec<(u32, f64)> = (1..200u32)
            .map(|m| (m, std::f64::consts::PI * 8100.0 * 2.30 / m as f64))
            .filter(|&(_, l)| (1090.0..=1120.0).contains(&l))
            .collect();
        assert_eq!(brute.len(), 1);
        assert_eq!(modes.len(), 1);
        assert_eq!(modes[0].azimuthal_order, 53);
        assert!(close(modes[0].center_wavelength_nm, brute[0].1, 1e-6));
        assert!(close(modes[0].center_wavelength_nm, 1104.3, 0.05));
    }

    #[test]
    fn empty_band_is_empty() {
        let g = RingGeometry::constant_index(8.1, 2.30).unwrap();
        assert!(resonance_wavelengths(&g, (1100.0, 1090.0), 1000.0).unwrap().is_empty());
        assert!(resonance_wavelengths(&g, (1100.0, 1100.5), 1000.0).unwrap().is_empty());
        assert!(resonance_wavelengths(&g, (-1.0, 1100.0), 1000.0).is_err());
    }

    #[test]
    fn dispersive_spacing_matches_measured_fsr() {
        let g = RingGeometry::new(7.3_f64, 2.30, 3.07, 1100.0).unwrap();
        let modes = resonance_wavelengths(&g, (1080.0, 1120.0), 1000.0).unwrap();
        assert!(modes.len() >= 2);
        let near = modes
            .windows(2)
            .min_by(|a, b| {
                let ma = (a[0].center_wavelength_nm + a[1].center_wavelength_nm) / 2.0 - 1100.0;
                let mb = (b[0].center_wavelength_nm + b[1].center_wavelength_nm) / 2.0 - 1100.0;
                ma.abs().partial_cmp(&mb.abs()).unwrap()
            })
            .unwrap();
        let spacing = near[1].center_wavelength_nm - near[0].center_wavelength_nm;
        assert!(close(spacing, 17.2, 0.3), "spacing {spacing}");
    }

    #[test]
    fn strong_dispersion_diverges() {
        // contraction factor π·d·|slope|/m well above 1
        let g = RingGeometry::new(8.1, 2.30, 60.0, 1100.0).unwrap();
        let err = resonance_wavelengths(&g, (1000.0, 1200.0), 1000.0).unwrap_err();
        assert!(matches!(err, Error::DispersionDiverged { .. }));
        assert!(err.to_string().contains("dispersion iteration diverged"));
    }

    #[test]
    fn fsr_values() {
        let a = RingGeometry::new(7.3, 2.30, 3.07, 1100.0).unwrap();
        let b = RingGeometry::new(8.9, 2.30, 2.92, 1100.0).unwrap();
        assert!(close(free_spectral_range(&a, 1100.0), 17.2, 0.1));
        assert!(close(free_spectral_range(&b, 1100.0), 14.8, 0.1));
        let double = RingGeometry::new(14.6, 2.30, 3.07, 1100.0).unwrap();
        assert!(close(free_spectral_range(&double, 1100.0) * 2.0, free_spectral_range(&a, 1100.0), 1e-12));
    }

    #[test]
    fn lineshape_peak_and_half_max() {
        let mode = CavityMode::new(53, 1100.0, 1261.0).unwrap();
        assert!(close(mode.linewidth_nm(), 0.8723, 5e-5));
        let w = mode.linewidth_nm();
        let v = mode_lineshape(&mode, &[1100.0, 1100.0 - w / 2.0, 1100.0 + w / 2.0]);
        assert_eq!(v[0], 1.0);
        assert!(close(v[1], 0.5, 1e-12) && close(v[2], 0.5, 1e-12));
    }

    #[test]
    fn lineshape_follows_tuning_offset() {
        let mut mode = CavityMode::new(53, 1100.0f32, 1261.0).unwrap();
        mode.tuning_offset_nm = 2.0;
        assert_eq!(mode_lineshape(&mode, &[1102.0])[0], 1.0);
    }

    #[test]
    fn injection_accumulates_linearly() {
        let s = TuningState::new(0.4, 10.0).unwrap();
        let m = CavityMode::new(55, 1072.0, 1261.0).unwrap();
        let log = vec![Injection { pressure_pa: 100.0, volume_l: 0.05 }; 3];
        let (s3, m3) = replay(&s, &m, &log).unwrap();
        let oracle: f64 = 0.4 * log.iter().map(|i| i.pressure_pa * i.volume_l).sum::<f64>();
        assert!(close(m3.tuning_offset_nm, oracle, 1e-12));
        assert!(close(oracle, 6.0, 1e-12));
        assert_eq!(s3.injections.len(), 3);
    }

    #[test]
    fn zero_dose_and_negative_dose() {
        let s = TuningState::new(0.4, 10.0).unwrap();
        let m = CavityMode::new(55, 1072.0, 1261.0).unwrap();
        let (_, a) = apply_injection(&s, &m, 0.0, 0.05).unwrap();
        let (_, b) = apply_injection(&s, &m, 100.0, 0.0).unwrap();
        assert_eq!(a, m);
        assert_eq!(b, m);
        assert!(apply_injection(&s, &m, -1.0, 0.05).unwrap_err().is_validation());
        assert!(apply_injection(&s, &m, 1.0, -0.05).is_err());
    }

    #[test]
    fn saturation_caps_offset() {
        let s = TuningState::new(1.0, 3.0).unwrap();
        let m = CavityMode::new(55, 1072.0, 1261.0).unwrap();
        let log = vec![Injection { pressure_pa: 100.0, volume_l: 0.05 }; 4];
        let (_, m4) = replay(&s, &m, &log).unwrap();
        assert_eq!(m4.tuning_offset_nm, 3.0);
    }

    #[test]
    fn paper_schedule_has_two_slope_changes() {
        let s = TuningState::new(0.4, 100.0).unwrap();
        let m = CavityMode::new(55, 1072.0, 1261.0).unwrap();
        let mut log = vec![Injection { pressure_pa: 100.0, volume_l: 0.05 }; 3];
        log.extend(vec![Injection { pressure_pa: 15.0, volume_l: 0.05 }; 6]);
        log.extend(vec![Injection { pressure_pa: 50.0, volume_l: 0.05 }; 3]);
        let mut offsets = vec![0.0];
        let (mut st, mut md) = (s, m);
        for inj in &log {
            (st, md) = apply_injection(&st, &md, inj.pressure_pa, inj.volume_l).unwrap();
            offsets.push(md.tuning_offset_nm);
        }
        let incs: Vec<f64> = offsets.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(incs.iter().all(|&d| d > 0.0));
        let changes = incs.windows(2).filter(|w| (w[1] - w[0]).abs() > 1e-9).count();
        assert_eq!(changes, 2);
    }

    #[test]
    fn reset_restores_mode_and_is_idempotent() {
        let s = TuningState::new(0.4, 10.0).unwrap();
        let m = CavityMode::new(55, 1072.0, 1261.0).unwrap();
        let log = vec![
            Injection { pressure_pa: 100.0, volume_l: 0.05 },
            Injection { pressure_pa: 15.0, volume_l: 0.05 },
        ];
        let (s2, m2) = replay(&s, &m, &log).unwrap();
        let (s3, m3) = reset_tuning(&s2, &m2);
        assert_eq!(m3, m);
        assert_eq!(s3, s);
        assert_eq!(reset_tuning(&s3, &m3), (s3.clone(), m3));
        let (_, again) = replay(&s3, &m3, &s2.injections).unwrap();
        assert_eq!(again.tuning_offset_nm, m2.tuning_offset_nm);
    }

    #[test]
    fn detuning_sign_and_composition() {
        let m = CavityMode::new(55, 1076.6, 1261.0).unwrap();
        assert_eq!(detuning(&CavityMode::new(55, 1078.6, 1261.0).unwrap(), 1078.6), 0.0);
        assert!(close(detuning(&m, 1078.6), -2.0, 1e-12));
        let s = TuningState::new(0.4, 10.0).unwrap();
        let (_, m2) = apply_injection(&s, &m, 15.0, 0.05).unwrap();
        assert!(close(detuning(&m2, 1078.6), -2.0 + 0.4 * 15.0 * 0.05, 1e-12));
    }

    #[test]
    fn geometry_validation() {
        assert!(RingGeometry::new(0.0, 2.3, 3.0, 1100.0).is_err());
        assert!(RingGeometry::new(7.3, 0.9, 3.0, 1100.0).is_err());
        assert!(RingGeometry::new(7.3, 2.3, 2.0, 1100.0).is_err());
        let g = RingGeometry::new(7.3, 2.3, 3.0, 1100.0).unwrap();
        let ng = g.n_eff_at(1100.0) - 1100.0 * g.dispersion_slope;
        assert!(close(ng, g.n_g, 1e-12));
        let bad = RingGeometry { n_g: 3.1, ..g };
        assert!(bad.validate().is_err());
        assert!(CavityMode::new(1, 1100.0, 0.0).is_err());
    }

    #[test]
    fn nearest_mode_is_within_half_fsr() {
        let g = RingGeometry::new(8.1_f64, 2.30, 3.0, 1100.0).unwrap();
        let m = nearest_mode(&g, 1078.6, 1261.0).unwrap();
        let fsr = free_spectral_range(&g, 1078.6);
        assert!((m.center_wavelength_nm - 1078.6).abs() <= fsr / 2.0 + 1e-9);
    }
}
