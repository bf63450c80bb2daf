//! Derived quantities from fitted parameters, with first-order uncertainty
//! propagation through the fit covariance.

use serde::{Deserialize, Serialize};

use super::lm::FitResult;
use crate::error::{Error, Result, Warning};
use crate::scalar::{lit, Real};

fn index_of<T>(fit: &FitResult<T>, name: &str) -> Result<usize> {
    fit.param_names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::validation(format!("fit result has no parameter `{name}`")))
}

/// Value and 1σ uncertainty of `num/den` for two fitted parameters.
fn ratio<T: Real>(fit: &FitResult<T>, num: usize, den: usize) -> (T, T) {
    let (a, b) = (fit.params[num], fit.params[den]);
    let r = a / b;
    let c = &fit.covariance;
    let rel2 = c[num][num] / (a * a) + c[den][den] / (b * b) - lit::<T>(2.0) * c[num][den] / (a * b);
    (r, r.abs() * rel2.max(T::zero()).sqrt())
}

/// Quality factor `center / fwhm` of a single-Lorentzian fit over wavelength.
pub fn extract_q<T: Real>(fit: &FitResult<T>) -> Result<(T, T)> {
    let c = index_of(fit, "center")?;
    let w = index_of(fit, "fwhm")?;
    extract_q_at(fit, c, w)
}

/// Quality factor from arbitrary center/width parameter indices (e.g. one
/// peak of a multi-Lorentzian fit).
pub fn extract_q_at<T: Real>(fit: &FitResult<T>, center: usize, fwhm: usize) -> Result<(T, T)> {
    if !(fit.params[fwhm] > T::zero()) {
        return Err(Error::validation("fitted fwhm must be positive"));
    }
    Ok(ratio(fit, center, fwhm))
}

/// Mean spacing of sorted peak centers and its standard error.
pub fn extract_fsr<T: Real>(centers: &[T]) -> Result<(T, T)> {
    if centers.len() < 3 {
        return Err(Error::InsufficientModes(centers.len()));
    }
    if centers.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("peak centers must be sorted ascending and distinct"));
    }
    let diffs: Vec<T> = centers.windows(2).map(|w| w[1] - w[0]).collect();
    let n = T::from_usize(diffs.len()).expect("length fits scalar");
    let mean = diffs.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    let var = diffs
        .iter()
        .map(|&d| (d - mean) * (d - mean))
        .fold(T::zero(), |a, b| a + b)
        / (n - T::one());
    Ok((mean, (var / n).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakEstimate<T> {
    pub center: T,
    pub center_sigma: T,
    /// Fitted height above the baseline.
    pub height: T,
    pub height_sigma: T,
    pub fwhm: T,
    pub fwhm_sigma: T,
}

/// All peaks of a multi-Lorentzian fit, ordered by ascending center (larger
/// height first on exact ties).
pub fn extract_peaks<T: Real>(fit: &FitResult<T>) -> Result<Vec<PeakEstimate<T>>> {
    let n_par = fit.params.len();
    if n_par < 4 || (n_par - 1) % 3 != 0 || fit.param_names.last().map(String::as_str) != Some("baseline") {
        return Err(Error::validation("expected a multi-Lorentzian fit result"));
    }
    let sig = |i: usize| fit.sigmas[i];
    let mut peaks: Vec<PeakEstimate<T>> = (0..(n_par - 1) / 3)
        .map(|k| PeakEstimate {
            height: fit.params[3 * k],
            height_sigma: sig(3 * k),
            center: fit.params[3 * k + 1],
            center_sigma: sig(3 * k + 1),
            fwhm: fit.params[3 * k + 2],
            fwhm_sigma: sig(3 * k + 2),
        })
        .collect();
    peaks.sort_by(|a, b| {
        a.center
            .partial_cmp(&b.center)
            .expect("finite centers")
            .then(b.height.partial_cmp(&a.height).expect("finite heights"))
    });
    Ok(peaks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdmrPeaks<T> {
    pub lower: PeakEstimate<T>,
    pub upper: PeakEstimate<T>,
    pub warnings: Vec<Warning>,
}

impl<T> OdmrPeaks<T> {
    pub fn is_resolved(&self) -> bool {
        !self.warnings.contains(&Warning::Unresolved)
    }
}

/// The two spin transitions of a two-peak fit to (dip-inverted) ODMR data.
/// Contrast of each transition is its fitted height above baseline.
pub fn extract_odmr_peaks<T: Real>(fit: &FitResult<T>) -> Result<OdmrPeaks<T>> {
    let peaks = extract_peaks(fit)?;
    let [lower, upper] = peaks[..] else {
        return Err(Error::validation(format!(
            "ODMR extraction needs a two-peak fit, got {} peak(s)",
            peaks.len()
        )));
    };
    let mut warnings = Vec::new();
    if upper.center - lower.center < lower.fwhm.max(upper.fwhm) * lit(0.5) {
        warnings.push(Warning::Unresolved);
    }
    Ok(OdmrPeaks { lower, upper, warnings })
}

/// Lifetime and its 1σ uncertainty from an `exp_decay` fit.
pub fn extract_lifetime<T: Real>(fit: &FitResult<T>) -> Result<(T, T)> {
    let i = index_of(fit, "lifetime")?;
    Ok((fit.params[i], fit.sigmas[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiEstimate<T> {
    /// Oscillation depth relative to the bright level.
    pub contrast: T,
    pub contrast_sigma: T,
    pub rabi_frequency_mhz: T,
    pub rabi_frequency_sigma_mhz: T,
    pub decay_time_ns: T,
    pub decay_time_sigma_ns: T,
}

/// Rabi contrast and frequency from a `damped_cosine` fit with time in ns.
pub fn extract_rabi<T: Real>(fit: &FitResult<T>) -> Result<RabiEstimate<T>> {
    let a = index_of(fit, "amplitude")?;
    let f = index_of(fit, "frequency")?;
    let t = index_of(fit, "decay_time")?;
    let o = index_of(fit, "offset")?;
    if !(fit.params[o] > T::zero()) {
        return Err(Error::validation("Rabi offset (bright level) must be positive"));
    }
    let (contrast, contrast_sigma) = ratio(fit, a, o);
    let per_ns_to_mhz = lit::<T>(1e3);
    Ok(RabiEstimate {
        contrast,
        contrast_sigma,
        rabi_frequency_mhz: fit.params[f] * per_ns_to_mhz,
        rabi_frequency_sigma_mhz: fit.sigmas[f] * per_ns_to_mhz,
        decay_time_ns: fit.params[t],
        decay_time_sigma_ns: fit.sigmas[t],
    })
}
