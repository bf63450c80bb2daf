//! Data-driven starting points for the built-in models.

use super::model::ModelSpec;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

fn quantile<T: Real>(y: &[T], q: f64) -> T {
    let mut s = y.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("finite data"));
    let idx = ((s.len() - 1) as f64 * q).round() as usize;
    s[idx]
}

fn smooth<T: Real>(y: &[T]) -> Vec<T> {
    let third = lit::<T>(1.0 / 3.0);
    (0..y.len())
        .map(|i| {
            let lo = y[i.saturating_sub(1)];
            let hi = y[(i + 1).min(y.len() - 1)];
            (lo + y[i] + hi) * third
        })
        .collect()
}

/// Full width at half height (above `baseline`) around index `i`, by walking
/// outward to the half-height crossings.
fn half_width<T: Real>(x: &[T], y: &[T], i: usize, baseline: T) -> T {
    let half = baseline + (y[i] - baseline) * lit(0.5);
    let mut lo = i;
    while lo > 0 && y[lo] > half {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < y.len() && y[hi] > half {
        hi += 1;
    }
    let w = x[hi] - x[lo];
    let dx = (x[x.len() - 1] - x[0]) / T::from_usize(x.len().max(2) - 1).expect("length fits scalar");
    w.max(dx.abs() * lit(2.0))
}

/// A detected peak: `(amplitude above baseline, center, fwhm)`.
pub type Peak<T> = (T, T, T);

/// Picks up to `n` peaks from the smoothed data, highest first. Each accepted
/// peak excludes candidates within 1.5 FWHM of its center.
pub fn find_peaks<T: Real>(x: &[T], y: &[T], n: usize, baseline: T) -> Vec<Peak<T>> {
    let s = smooth(y);
    let mut candidates: Vec<usize> = (0..s.len())
        .filter(|&i| {
            let left = i == 0 || s[i] >= s[i - 1];
            let right = i + 1 == s.len() || s[i] > s[i + 1];
            left && right && s[i] > baseline
        })
        .collect();
    candidates.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).expect("finite data"));
    let mut peaks: Vec<Peak<T>> = Vec::new();
    for i in candidates {
        if peaks.len() == n {
            break;
        }
        let c = x[i];
        if peaks.iter().any(|&(_, pc, pw)| (c - pc).abs() < pw * lit(1.5)) {
            continue;
        }
        peaks.push((s[i] - baseline, c, half_width(x, &s, i, baseline)));
    }
    peaks
}

fn check<T: Real>(x: &[T], y: &[T], min_len: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::validation("x and y lengths differ"));
    }
    if x.len() < min_len {
        return Err(Error::validation(format!("need at least {min_len} data points")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite data"));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("x must be strictly increasing"));
    }
    Ok(())
}

fn lorentzian_guess<T: Real>(x: &[T], y: &[T]) -> Result<Vec<T>> {
    multi_lorentzian_guess(x, y, 1)
}

fn multi_lorentzian_guess<T: Real>(x: &[T], y: &[T], n: usize) -> Result<Vec<T>> {
    let baseline = quantile(y, 0.1);
    let peaks = find_peaks(x, y, n, baseline);
    if peaks.len() < n {
        return Err(Error::PeaksNotFound { found: peaks.len(), needed: n });
    }
    let mut sorted = peaks;
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite data"));
    let mut p: Vec<T> = sorted.iter().flat_map(|&(a, c, w)| [a, c, w]).collect();
    p.push(baseline);
    Ok(p)
}

fn exp_decay_guess<T: Real>(x: &[T], y: &[T]) -> Result<Vec<T>> {
    let tail_start = x.len() - (x.len() / 10).max(1);
    let tail = &y[tail_start..];
    let baseline = tail.iter().copied().fold(T::zero(), |a, b| a + b)
        / T::from_usize(tail.len()).expect("length fits scalar");
    let (i_max, &y_max) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite data"))
        .expect("non-empty");
    let height = y_max - baseline;
    if !(height > T::zero()) {
        return Err(Error::validation("no decay above the background"));
    }
    // Log-linear regression over the part of the curve well above background.
    let cut = height * lit(0.1);
    let pts: Vec<(T, T)> = x[i_max..]
        .iter()
        .zip(&y[i_max..])
        .take_while(|(_, &v)| v - baseline > cut)
        .map(|(&xi, &v)| (xi, (v - baseline).ln()))
        .collect();
    let tau = if pts.len() >= 2 {
        let n = T::from_usize(pts.len()).expect("length fits scalar");
        let mx = pts.iter().map(|p| p.0).fold(T::zero(), |a, b| a + b) / n;
        let my = pts.iter().map(|p| p.1).fold(T::zero(), |a, b| a + b) / n;
        let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).fold(T::zero(), |a, b| a + b);
        let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).fold(T::zero(), |a, b| a + b);
        -sxx / sxy
    } else {
        T::nan()
    };
    let span = x[x.len() - 1] - x[0];
    let tau = if tau.is_finite() && tau > T::zero() { tau } else { span / lit(5.0) };
    let amplitude = height * (x[i_max] / tau).exp();
    Ok(vec![amplitude, tau, baseline])
}

fn damped_cosine_guess<T: Real>(x: &[T], y: &[T]) -> Result<Vec<T>> {
    let offset = quantile(y, 0.95);
    let n = T::from_usize(y.len()).expect("length fits scalar");
    let mean = y.iter().copied().fold(T::zero(), |a, b| a + b) / n;
    let span = x[x.len() - 1] - x[0];
    let min_dx = x
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(T::infinity(), |a, b| a.min(b));
    // Periodogram on the (possibly uneven) grid, from one cycle per span to Nyquist.
    let f_lo = T::one() / span;
    let f_hi = lit::<T>(0.5) / min_dx;
    let steps = 4 * y.len();
    let mut best = (T::zero(), f_lo);
    for k in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * T::from_usize(k).unwrap() / T::from_usize(steps).unwrap();
        let (mut re, mut im) = (T::zero(), T::zero());
        for (&xi, &yi) in x.iter().zip(y) {
            let (s, c) = (T::TAU() * f * xi).sin_cos();
            re = re + (yi - mean) * c;
            im = im + (yi - mean) * s;
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, f);
        }
    }
    let depth = (offset - quantile(y, 0.02)).max(T::epsilon());
    Ok(vec![depth, best.1, span, offset])
}

/// Starting parameters for `spec` estimated from the data.
pub fn initial_guess<T: Real>(spec: ModelSpec, x: &[T], y: &[T]) -> Result<Vec<T>> {
    match spec {
        ModelSpec::Lorentzian => {
            check(x, y, 5)?;
            lorentzian_guess(x, y)
        }
        ModelSpec::MultiLorentzian(n) => {
            if n == 0 {
                return Err(Error::validation("multi_lorentzian needs at least one peak"));
            }
            check(x, y, 3 * n + 2)?;
            multi_lorentzian_guess(x, y, n)
        }
        ModelSpec::ExpDecay => {
            check(x, y, 4)?;
            exp_decay_guess(x, y)
        }
        ModelSpec::DampedCosine => {
            check(x, y, 5)?;
            damped_cosine_guess(x, y)
        }
    }
}
