// SPDX-License-Identifier: Apache-2.0

//! Intensity normalization, Otsu thresholding, binarization and overlap.

use super::{Volume, VolumeError};
use crate::scalar::Real;

/// Number of histogram bins used by [`otsu_threshold`].
pub const OTSU_BINS: usize = 256;

/// Zero-mean, unit population standard deviation.
///
/// A constant volume (std below 1e-12) maps to all zeros.
pub fn znormalize<T: Real>(vol: &Volume<T>) -> Volume<T> {
    let n = vol.voxels().len() as f64;
    let mean = vol.voxels().iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n;
    let var = vol
        .voxels()
        .iter()
        .map(|v| {
            let d = v.to_f64_lossy() - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let std = var.sqrt();
    if !(std >= 1e-12) {
        return vol.map(|_| T::zero());
    }
    vol.map(|v| T::from_f64_lossy((v.to_f64_lossy() - mean) / std))
}

/// Histogram bin of `v` for a histogram spanning `[lo, hi]`.
#[inline]
pub(crate) fn otsu_bin(v: f64, lo: f64, hi: f64) -> usize {
    let b = ((v - lo) / (hi - lo) * OTSU_BINS as f64).floor();
    (b.max(0.0) as usize).min(OTSU_BINS - 1)
}

/// Between-class variance of a two-class split, up to a constant factor,
/// as the exact fraction `(s0*w1 - s1*w0)^2 / (w0*w1)` where `w` are class
/// counts and `s` are class sums of bin indices.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    pub(crate) fn new(w0: u64, s0: u64, w1: u64, s1: u64) -> Option<Self> {
        if w0 == 0 || w1 == 0 {
            return None;
        }
        let diff = (s0 as i128 * w1 as i128 - s1 as i128 * w0 as i128).unsigned_abs();
        let num = diff.saturating_mul(diff);
        Some(Self { num, den: w0 as u128 * w1 as u128 })
    }

    pub(crate) fn beats(&self, other: &Self) -> bool {
        match (self.num.checked_mul(other.den), other.num.checked_mul(self.den)) {
            (Some(a), Some(b)) => a > b,
            _ => self.num as f64 / self.den as f64 > other.num as f64 / other.den as f64,
        }
    }
}

/// Otsu threshold over a 256-bin histogram spanning `[min, max]`.
///
/// The split after bin `k` maximizing between-class variance is chosen,
/// lowest `k` on ties, and the upper edge of bin `k` is returned. Class
/// statistics are exact integer sums of bin indices and scores are compared
/// as exact fractions, so ties are detected exactly.
pub fn otsu_threshold<T: Real>(vol: &Volume<T>) -> Result<T, VolumeError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in vol.voxels() {
        let v = v.to_f64_lossy();
        if v.is_nan() {
            return Err(VolumeError::Degenerate("NaN voxel"));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        return Err(VolumeError::Degenerate("Otsu threshold needs at least two distinct values"));
    }

    let mut hist = [0u64; OTSU_BINS];
    for v in vol.voxels() {
        hist[otsu_bin(v.to_f64_lossy(), lo, hi)] += 1;
    }
    let total_w: u64 = hist.iter().sum();
    let total_s: u64 = hist.iter().enumerate().map(|(i, &h)| i as u64 * h).sum();

    let (mut w0, mut s0) = (0u64, 0u64);
    let mut best: Option<(SplitScore, usize)> = None;
    for (k, &h) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        w0 += h;
        s0 += k as u64 * h;
        let Some(score) = SplitScore::new(w0, s0, total_w - w0, total_s - s0) else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| score.beats(b)) {
            best = Some((score, k));
        }
    }
    // two distinct values always land in bins 0 and 255
    let (_, k) = best.expect("min and max occupy different bins");
    let width = (hi - lo) / OTSU_BINS as f64;
    Ok(T::from_f64_lossy(lo + (k + 1) as f64 * width))
}

/// 1 where the voxel is strictly above `threshold`, else 0.
pub fn binarize<T: Real>(vol: &Volume<T>, threshold: T) -> Volume<u8> {
    vol.map(|&v| u8::from(v > threshold))
}

/// Dice overlap `2|A∩B| / (|A| + |B|)` of the nonzero voxels; 1.0 when both
/// masks are empty.
pub fn dice(a: &Volume<u8>, b: &Volume<u8>) -> Result<f64, VolumeError> {
    if a.dims() != b.dims() {
        return Err(VolumeError::ShapeMismatch { left: a.dims(), right: b.dims() });
    }
    let (mut na, mut nb, mut both) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.voxels().iter().zip(b.voxels()) {
        let (x, y) = (x != 0, y != 0);
        na += u64::from(x);
        nb += u64::from(y);
        both += u64::from(x && y);
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}
