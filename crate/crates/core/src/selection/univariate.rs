use super::FeatureTable;
use crate::error::{bail_arg, Error, Result};
use crate::stats::t_two_sided_p;

/// Point-biserial correlation `r` and two-sided p-value for every feature.
/// Zero-variance features get `(0, 1)`.
pub fn pointbiserial_pvalues(table: &FeatureTable) -> Result<Vec<(f64, f64)>> {
    let n = table.n_cases();
    let pos = table.labels.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == n {
        return Err(Error::Precondition("point-biserial test needs both classes".into()));
    }
    if n < 4 {
        return Err(Error::Precondition(format!("need at least 4 cases, got {n}")));
    }
    let y: Vec<f64> = table.labels.iter().map(|&l| l as f64).collect();
    let my = y.iter().sum::<f64>() / n as f64;
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    Ok((0..table.n_features())
        .map(|j| {
            let x = table.column(j);
            let mx = x.iter().sum::<f64>() / n as f64;
            let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
            if !(sxx > 0.0) || !sxx.is_finite() {
                return (0.0, 1.0);
            }
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
            let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
            (r, pearson_p(r, n))
        })
        .collect())
}

/// Two-sided p for a Pearson `r` on `n` pairs, via the t distribution with n-2 df.
pub fn pearson_p(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = n as f64 - 2.0;
    let t = r * (df / (1.0 - r * r)).sqrt();
    t_two_sided_p(t, df)
}

/// Benjamini-Hochberg step-up; returns kept indices in ascending order.
/// NaN p-values are never kept.
pub fn bh_fdr(pvalues: &[f64], q: f64) -> Result<Vec<usize>> {
    if !(q > 0.0 && q < 1.0) {
        bail_arg!("q must lie in (0, 1), got {q}");
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let pa = if pvalues[a].is_nan() { f64::INFINITY } else { pvalues[a] };
        let pb = if pvalues[b].is_nan() { f64::INFINITY } else { pvalues[b] };
        pa.total_cmp(&pb).then(a.cmp(&b))
    });
    let mut k = 0;
    for (rank, &i) in order.iter().enumerate() {
        if pvalues[i] <= (rank + 1) as f64 * q / m as f64 {
            k = rank + 1;
        }
    }
    let mut kept: Vec<usize> = order[..k].to_vec();
    kept.sort_unstable();
    Ok(kept)
}
