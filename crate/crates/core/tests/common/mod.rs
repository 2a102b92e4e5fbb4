//! Brute-force reference definitions shared by the integration suites.
//!
//! Everything here is written from the textbook definitions with O(N^2)
//! voxel-pair scans and no shared code with the library beyond grid types.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radiomap::preprocess::DiscretizedVolume;
use radiomap::Geometry;

pub const COARSENESS_CAP: f64 = 1e6;
pub const EPS: f64 = 1e-12;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dims in `1..=max` per axis, random levels in `1..=ng`, roughly
/// `hole` fraction of voxels masked out.
pub fn random_levels(r: &mut ChaCha8Rng, max: usize, ng: u16, hole: f64) -> DiscretizedVolume {
    let dims = [r.random_range(1..=max), r.random_range(1..=max), r.random_range(1..=max)];
    let g = Geometry::unit(dims);
    let levels = (0..g.len())
        .map(|_| if r.random::<f64>() < hole { 0 } else { r.random_range(1..=ng) })
        .collect();
    DiscretizedVolume::from_levels(g, levels).unwrap()
}

fn coords(d: &DiscretizedVolume) -> Vec<[i64; 3]> {
    let [nx, ny, _] = d.geometry.dims;
    (0..d.levels.len())
        .map(|i| [(i % nx) as i64, ((i / nx) % ny) as i64, (i / (nx * ny)) as i64])
        .collect()
}

/// The 13 directions as the lexicographically positive half of the 26 neighbors.
pub fn half_directions() -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    for dz in -1..=1i64 {
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let v = [dx, dy, dz];
                let first = v.iter().rev().find(|&&c| c != 0);
                if first.is_some_and(|&c| c > 0) {
                    out.push(v);
                }
            }
        }
    }
    out
}

fn sub(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Symmetric co-occurrence matrix for direction `dir` as an `ng x ng` table.
pub fn glcm_oracle(d: &DiscretizedVolume, dir: [i64; 3]) -> Vec<Vec<u64>> {
    let ng = d.ng;
    let c = coords(d);
    let neg = dir.map(|x| -x);
    let mut m = vec![vec![0u64; ng]; ng];
    for a in 0..c.len() {
        for b in 0..c.len() {
            let (la, lb) = (d.levels[a], d.levels[b]);
            if la == 0 || lb == 0 {
                continue;
            }
            let delta = sub(c[b], c[a]);
            if delta == dir || delta == neg {
                m[la as usize - 1][lb as usize - 1] += 1;
            }
        }
    }
    m
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Run-length matrix `[level-1][len-1]` for `dir`: runs are the connected
/// components of equal-level voxels linked by +/-dir steps.
pub fn glrlm_oracle(d: &DiscretizedVolume, dir: [i64; 3]) -> Vec<Vec<u64>> {
    let c = coords(d);
    let n = c.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for a in 0..n {
        for b in 0..n {
            if d.levels[a] != 0 && d.levels[a] == d.levels[b] && sub(c[b], c[a]) == dir {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut size = vec![0usize; n];
    for i in 0..n {
        if d.levels[i] != 0 {
            let r = find(&mut parent, i);
            size[r] += 1;
        }
    }
    let max_run = *d.geometry.dims.iter().max().unwrap();
    let mut m = vec![vec![0u64; max_run]; d.ng];
    for i in 0..n {
        if d.levels[i] != 0 && find(&mut parent, i) == i {
            m[d.levels[i] as usize - 1][size[i] - 1] += 1;
        }
    }
    m
}

/// `(n_i, s_i, contributing voxel total)` with the 26-neighborhood mean over
/// in-mask neighbors; voxels with none are skipped.
pub fn ngtdm_oracle(d: &DiscretizedVolume) -> (Vec<u64>, Vec<f64>, u64) {
    let c = coords(d);
    let mut n = vec![0u64; d.ng];
    let mut s = vec![0.0; d.ng];
    for a in 0..c.len() {
        let la = d.levels[a];
        if la == 0 {
            continue;
        }
        let (mut sum, mut count) = (0.0, 0.0);
        for b in 0..c.len() {
            let delta = sub(c[b], c[a]);
            let cheb = delta.iter().map(|x| x.abs()).max().unwrap();
            if cheb == 1 && d.levels[b] != 0 {
                sum += d.levels[b] as f64;
                count += 1.0;
            }
        }
        if count > 0.0 {
            n[la as usize - 1] += 1;
            s[la as usize - 1] += (la as f64 - sum / count).abs();
        }
    }
    let total = n.iter().sum();
    (n, s, total)
}

/// Catalog-ordered GLCM features for one matrix, or `None` if empty.
pub fn glcm_direction_features(m: &[Vec<u64>]) -> Option<Vec<f64>> {
    let ng = m.len();
    let total: u64 = m.iter().flatten().sum();
    if total == 0 {
        return None;
    }
    let p: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|&c| c as f64 / total as f64).collect()).collect();
    let lvl = |i: usize| (i + 1) as f64;
    let px: Vec<f64> = (0..ng).map(|i| (0..ng).map(|j| p[i][j]).sum()).collect();
    let py: Vec<f64> = (0..ng).map(|j| (0..ng).map(|i| p[i][j]).sum()).collect();
    let mux: f64 = (0..ng).map(|i| lvl(i) * px[i]).sum();
    let muy: f64 = (0..ng).map(|j| lvl(j) * py[j]).sum();
    let sx = (0..ng).map(|i| (lvl(i) - mux).powi(2) * px[i]).sum::<f64>().sqrt();
    let sy = (0..ng).map(|j| (lvl(j) - muy).powi(2) * py[j]).sum::<f64>().sqrt();
    let plog = |x: f64| if x > 0.0 { x * x.log2() } else { 0.0 };
    let hx = -px.iter().map(|&x| plog(x)).sum::<f64>();
    let hy = -py.iter().map(|&x| plog(x)).sum::<f64>();
    let (mut auto, mut con, mut idm, mut energy, mut hxy, mut hxy1, mut hxy2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..ng {
        for j in 0..ng {
            let v = p[i][j];
            let diff = lvl(i) - lvl(j);
            auto += lvl(i) * lvl(j) * v;
            con += diff * diff * v;
            idm += v / (1.0 + diff * diff);
            energy += v * v;
            hxy -= plog(v);
            if v > 0.0 {
                hxy1 -= v * (px[i] * py[j]).log2();
            }
            hxy2 -= plog(px[i] * py[j]);
        }
    }
    let corr = if sx * sy < EPS { 0.0 } else { (auto - mux * muy) / (sx * sy) };
    let hmax = hx.max(hy);
    let imc1 = if hmax <= 0.0 { 0.0 } else { (hxy - hxy1) / hmax };
    let imc2 = (1.0 - (-2.0 * (hxy2 - hxy)).exp()).max(0.0).sqrt();
    Some(vec![auto, con, corr, idm, imc1, imc2, energy, hxy])
}

/// Catalog-ordered GLRLM features for one matrix, or `None` if it has no runs.
pub fn glrlm_direction_features(m: &[Vec<u64>], voxels: u64) -> Option<Vec<f64>> {
    let runs: u64 = m.iter().flatten().sum();
    if runs == 0 {
        return None;
    }
    let nr = runs as f64;
    let mut f = [0.0; 7];
    for (i, row) in m.iter().enumerate() {
        for (r, &c) in row.iter().enumerate() {
            let (c, g, l) = (c as f64, (i + 1) as f64, (r + 1) as f64);
            f[0] += c / (l * l);
            f[1] += c * l * l;
            f[5] += c / (g * g);
            f[6] += c * g * g;
        }
    }
    f[2] = m.iter().map(|row| row.iter().sum::<u64>() as f64).map(|v| v * v).sum();
    let max_run = m[0].len();
    f[3] = (0..max_run).map(|r| m.iter().map(|row| row[r]).sum::<u64>() as f64).map(|v| v * v).sum();
    let mut out: Vec<f64> = f.iter().map(|v| v / nr).collect();
    out[4] = nr / voxels as f64;
    Some(out)
}

/// Coarseness, Contrast, Busyness, Complexity, Strength.
pub fn ngtdm_features_oracle(n: &[u64], s: &[f64], total: u64) -> Vec<f64> {
    let nv = total as f64;
    let p: Vec<f64> = n.iter().map(|&c| c as f64 / nv).collect();
    let ids: Vec<usize> = (0..n.len()).filter(|&i| n[i] > 0).collect();
    let ngp = ids.len() as f64;
    let lvl = |i: usize| (i + 1) as f64;
    let sum_ps: f64 = ids.iter().map(|&i| p[i] * s[i]).sum();
    let sum_s: f64 = s.iter().sum();
    let coarse = (1.0 / (EPS + sum_ps)).min(COARSENESS_CAP);
    let (mut c2, mut bden, mut cx, mut st) = (0.0, 0.0, 0.0, 0.0);
    for &i in &ids {
        for &j in &ids {
            let d = lvl(i) - lvl(j);
            c2 += p[i] * p[j] * d * d;
            bden += (lvl(i) * p[i] - lvl(j) * p[j]).abs();
            cx += d.abs() * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j]);
            st += (p[i] + p[j]) * d * d;
        }
    }
    let contrast = if ngp > 1.0 { c2 / (ngp * (ngp - 1.0)) * sum_s / nv } else { 0.0 };
    let busy = if bden > 0.0 { sum_ps / bden } else { 0.0 };
    let strength = if sum_s > 0.0 { st / (EPS + sum_s) } else { 0.0 };
    vec![coarse, contrast, busy, cx / nv, strength]
}

/// Mean over directions that produced features; `None` if none did.
pub fn mean_over(per: Vec<Option<Vec<f64>>>) -> Option<Vec<f64>> {
    let kept: Vec<Vec<f64>> = per.into_iter().flatten().collect();
    let first = kept.first()?;
    let mut acc = vec![0.0; first.len()];
    for v in &kept {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    Some(acc.into_iter().map(|a| a / kept.len() as f64).collect())
}

pub fn glcm_features_oracle(d: &DiscretizedVolume) -> Option<Vec<f64>> {
    mean_over(half_directions().into_iter().map(|dir| glcm_direction_features(&glcm_oracle(d, dir))).collect())
}

pub fn glrlm_features_oracle(d: &DiscretizedVolume) -> Option<Vec<f64>> {
    let voxels = d.levels.iter().filter(|&&l| l != 0).count() as u64;
    mean_over(
        half_directions()
            .into_iter()
            .map(|dir| glrlm_direction_features(&glrlm_oracle(d, dir), voxels))
            .collect(),
    )
}

/// Linear-interpolated percentile on sorted data at `q * (n - 1)`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

/// Catalog-ordered first-order features; moments NaN on zero variance.
pub fn first_order_oracle(values: &[f64], levels: &[u16]) -> Vec<f64> {
    let mut x: Vec<f64> = values.iter().zip(levels).filter(|(_, &l)| l != 0).map(|(&v, _)| v).collect();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let moment = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let var = moment(2);
    let (skew, kurt) = if var > 0.0 { (moment(3) / var.powf(1.5), moment(4) / (var * var) - 3.0) } else { (f64::NAN, f64::NAN) };
    let energy: f64 = x.iter().map(|v| v * v).sum();
    let mad = x.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
    let mut hist = std::collections::BTreeMap::new();
    for &l in levels.iter().filter(|&&l| l != 0) {
        *hist.entry(l).or_insert(0u64) += 1;
    }
    let probs: Vec<f64> = hist.values().map(|&c| c as f64 / n).collect();
    let entropy = -probs.iter().map(|p| p * p.log2()).sum::<f64>();
    let uniformity = probs.iter().map(|p| p * p).sum::<f64>();
    let (min, max) = (x[0], x[x.len() - 1]);
    vec![
        mean,
        var,
        skew,
        kurt,
        min,
        max,
        percentile(&x, 0.5),
        max - min,
        energy,
        (energy / n).sqrt(),
        mad,
        percentile(&x, 0.1),
        percentile(&x, 0.9),
        entropy,
        uniformity,
    ]
}

/// `|a - b| <= tol * max(|b|, 1)`, with NaN only equal to NaN.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// O(n^2) pair count with half credit for ties.
pub fn auroc_oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

/// Threshold sweep over distinct scores from high to low:
/// `sum (R_k - R_{k-1}) * P_k`.
pub fn ap_oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let positives = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| s >= t && l == 1).count() as f64;
        let pp = scores.iter().filter(|&&s| s >= t).count() as f64;
        let recall = tp / positives;
        ap += (recall - prev_recall) * (tp / pp);
        prev_recall = recall;
    }
    ap
}
