//! Zero-field spin-1 physics of the divacancy: transition frequencies, ODMR
//! spectra with photon-fraction dilution, and Rabi traces.
//!
//! Frequencies are in MHz and times in ns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::io::Columns;
use crate::scalar::{lit, to_f64, unit_lorentzian, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinParams<T> {
    pub d_zfs_mhz: T,
    pub e_zfs_mhz: T,
    pub intrinsic_contrast: T,
    /// FWHM of each ODMR peak.
    pub odmr_linewidth_mhz: T,
}

impl<T: Real> SpinParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_zfs_mhz >= T::zero()) || !(self.d_zfs_mhz > self.e_zfs_mhz) {
            return Err(Error::validation("zero-field splitting needs D > E >= 0"));
        }
        if !(self.intrinsic_contrast > T::zero() && self.intrinsic_contrast < T::one()) {
            return Err(Error::validation("intrinsic contrast must lie in (0, 1)"));
        }
        if !(self.odmr_linewidth_mhz > T::zero()) {
            return Err(Error::validation("ODMR linewidth must be positive"));
        }
        Ok(())
    }
}

/// `(D − E, D + E)`.
pub fn zero_field_transitions<T: Real>(p: &SpinParams<T>) -> (T, T) {
    (p.d_zfs_mhz - p.e_zfs_mhz, p.d_zfs_mhz + p.e_zfs_mhz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Splitting<T> {
    pub d_mhz: T,
    pub e_mhz: T,
    /// Set when the inputs arrived in descending order.
    pub swapped: bool,
}

impl<T> Splitting<T> {
    pub fn warnings(&self) -> Vec<Warning> {
        if self.swapped {
            vec![Warning::SwappedTransitions]
        } else {
            Vec::new()
        }
    }
}

/// Inverts [`zero_field_transitions`].
pub fn d_e_from_transitions<T: Real>(f1: T, f2: T) -> Result<Splitting<T>> {
    let swapped = f2 < f1;
    let (lo, hi) = if swapped { (f2, f1) } else { (f1, f2) };
    if !(lo > T::zero()) {
        return Err(Error::validation("transition frequencies must be positive"));
    }
    let half = lit::<T>(0.5);
    Ok(Splitting {
        d_mhz: (lo + hi) * half,
        e_mhz: (hi - lo) * half,
        swapped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionPath {
    ConfocalOff,
    GratingOff,
    GratingOn,
}

impl CollectionPath {
    pub const ALL: [CollectionPath; 3] = [Self::ConfocalOff, Self::GratingOff, Self::GratingOn];

    pub fn label(self) -> &'static str {
        match self {
            Self::ConfocalOff => "confocal_off",
            Self::GratingOff => "grating_off",
            Self::GratingOn => "grating_on",
        }
    }
}

/// Share of divacancy-of-interest photons in the light collected by each path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFractions<T> {
    pub confocal_off: T,
    pub grating_off: T,
    pub grating_on: T,
}

impl<T: Real> PathFractions<T> {
    pub fn get(&self, path: CollectionPath) -> T {
        match path {
            CollectionPath::ConfocalOff => self.confocal_off,
            CollectionPath::GratingOff => self.grating_off,
            CollectionPath::GratingOn => self.grating_on,
        }
    }

    /// Observed contrast on each path, in [`CollectionPath::ALL`] order.
    pub fn observed(&self, intrinsic: T) -> Result<[T; 3]> {
        Ok([
            contrast_dilution(intrinsic, self.confocal_off)?,
            contrast_dilution(intrinsic, self.grating_off)?,
            contrast_dilution(intrinsic, self.grating_on)?,
        ])
    }
}

/// Observed contrast when only `path_fraction` of the photons carry spin contrast.
pub fn contrast_dilution<T: Real>(intrinsic: T, path_fraction: T) -> Result<T> {
    if !(path_fraction > T::zero() && path_fraction <= T::one()) {
        return Err(Error::validation("photon fraction must lie in (0, 1]"));
    }
    if !(intrinsic >= T::zero() && intrinsic <= T::one()) {
        return Err(Error::validation("intrinsic contrast must lie in [0, 1]"));
    }
    Ok(intrinsic * path_fraction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrDataset<T> {
    pub freq_mhz: Vec<T>,
    pub contrast: Vec<T>,
    pub collection_path: CollectionPath,
}

impl<T: Real> OdmrDataset<T> {
    pub fn to_columns(&self) -> Columns {
        Columns::new(
            "freq_MHz",
            "contrast",
            self.freq_mhz.iter().copied().map(to_f64).collect(),
            self.contrast.iter().copied().map(to_f64).collect(),
        )
    }
}

/// Contrast of the two zero-field peaks at a single frequency, after dilution.
pub fn odmr_contrast_at<T: Real>(p: &SpinParams<T>, photon_fraction: T, freq_mhz: T) -> Result<T> {
    let c = contrast_dilution(p.intrinsic_contrast, photon_fraction)?;
    let (lo, hi) = zero_field_transitions(p);
    let w = p.odmr_linewidth_mhz;
    Ok(c * (unit_lorentzian(freq_mhz, lo, w) + unit_lorentzian(freq_mhz, hi, w)))
}

/// Positive-peak ODMR spectrum on `grid_mhz`.
pub fn odmr_spectrum<T: Real>(
    p: &SpinParams<T>,
    photon_fraction: T,
    grid_mhz: &[T],
    path: CollectionPath,
) -> Result<OdmrDataset<T>> {
    p.validate()?;
    if grid_mhz.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("frequency grid must be strictly increasing"));
    }
    let contrast = grid_mhz
        .iter()
        .map(|&f| odmr_contrast_at(p, photon_fraction, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(OdmrDataset {
        freq_mhz: grid_mhz.to_vec(),
        contrast,
        collection_path: path,
    })
}

/// Flips the dataset to the PL-dip convention (negative contrast).
pub fn as_dips<T: Real>(mut ds: OdmrDataset<T>) -> OdmrDataset<T> {
    ds.contrast.iter_mut().for_each(|c| *c = -*c);
    ds
}

/// Normalized PL under a resonant drive of duration `t`:
/// `1 − (C/2)·(1 − cos 2πΩt)·exp(−t/T)`.
pub fn rabi_trace<T: Real>(rabi_freq_mhz: T, contrast: T, decay_time_ns: T, t_grid_ns: &[T]) -> Result<Vec<T>> {
    if !(rabi_freq_mhz > T::zero()) || !(decay_time_ns > T::zero()) {
        return Err(Error::validation("Rabi frequency and decay time must be positive"));
    }
    Ok(t_grid_ns
        .iter()
        .map(|&t| rabi_point(rabi_freq_mhz, contrast, decay_time_ns, t))
        .collect())
}

pub(crate) fn rabi_point<T: Real>(rabi_freq_mhz: T, contrast: T, decay_time_ns: T, t_ns: T) -> T {
    let half = lit::<T>(0.5);
    let phase = T::TAU() * rabi_freq_mhz * t_ns * lit(1e-3);
    T::one() - contrast * half * (T::one() - phase.cos()) * (-t_ns / decay_time_ns).exp()
}

/// Duration of a π pulse in ns.
pub fn pi_pulse_ns<T: Real>(rabi_freq_mhz: T) -> T {
    lit::<T>(500.0) / rabi_freq_mhz
}
