use super::{Degeneracy, FeatureVector};
use crate::error::{Error, Result};
use crate::grid::VolumeGrid;
use crate::preprocess::DiscretizedVolume;

/// Linear interpolation between order statistics at position `q * (n - 1)`.
pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Intensity statistics over voxels with a nonzero discretized level.
///
/// Values are sorted before any summation, so the result does not depend on
/// the order in which voxels are visited.
pub fn first_order_features(grid: &VolumeGrid, disc: &DiscretizedVolume) -> Result<FeatureVector> {
    if grid.values.len() != disc.levels.len() {
        return Err(Error::Argument("intensity grid and discretization differ in size".into()));
    }
    let mut values: Vec<f64> = Vec::new();
    let mut hist = vec![0u64; disc.ng];
    for (&v, &l) in grid.values.iter().zip(&disc.levels) {
        if l != 0 {
            values.push(v);
            hist[l as usize - 1] += 1;
        }
    }
    if values.is_empty() {
        return Err(Error::Precondition("no in-mask voxels".into()));
    }
    values.sort_by(f64::total_cmp);
    Ok(from_sorted(&values, &hist))
}

pub(crate) fn from_sorted(values: &[f64], hist: &[u64]) -> FeatureVector {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4, mut mad, mut energy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += d.abs();
        energy += v * v;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    let (skew, kurt, moment_flag) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0, None)
    } else {
        (f64::NAN, f64::NAN, Some(Degeneracy::ZeroVariance))
    };
    let min = values[0];
    let max = values[values.len() - 1];

    let total: u64 = hist.iter().sum();
    let mut entropy = 0.0;
    let mut uniformity = 0.0;
    for &c in hist.iter().filter(|&&c| c > 0) {
        let p = c as f64 / total as f64;
        entropy -= p * p.log2();
        uniformity += p * p;
    }

    let mut out = FeatureVector::new();
    out.push("Mean", mean, None);
    out.push("Variance", m2, None);
    out.push("Skewness", skew, moment_flag);
    out.push("Kurtosis", kurt, moment_flag);
    out.push("Minimum", min, None);
    out.push("Maximum", max, None);
    out.push("Median", percentile_sorted(values, 0.5), None);
    out.push("Range", max - min, None);
    out.push("Energy", energy, None);
    out.push("RootMeanSquared", (energy / n).sqrt(), None);
    out.push("MeanAbsoluteDeviation", mad, None);
    out.push("10Percentile", percentile_sorted(values, 0.1), None);
    out.push("90Percentile", percentile_sorted(values, 0.9), None);
    out.push("Entropy", entropy, None);
    out.push("Uniformity", uniformity, None);
    out
}
