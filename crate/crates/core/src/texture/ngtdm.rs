use super::neighbors26;
use crate::error::{Error, Result};
use crate::preprocess::DiscretizedVolume;

/// Per-level voxel counts and accumulated absolute differences from the
/// in-mask 26-neighborhood mean. Voxels without in-mask neighbors are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Ngtdm {
    pub ng: usize,
    /// `n[i - 1]` voxels at level `i`.
    pub n: Vec<u64>,
    pub s: Vec<f64>,
    /// Voxels that contributed (had at least one in-mask neighbor).
    pub total: u64,
}

impl Ngtdm {
    pub fn p(&self) -> Vec<f64> {
        self.n.iter().map(|&c| c as f64 / self.total as f64).collect()
    }
}

pub fn ngtdm(disc: &DiscretizedVolume) -> Result<Ngtdm> {
    let g = &disc.geometry;
    let ng = disc.ng;
    let offsets: Vec<[i32; 3]> = neighbors26().collect();
    let mut n = vec![0u64; ng];
    // |i - sum/count| = |i*count - sum| / count, accumulated exactly per count.
    let mut numer = vec![[0u64; 27]; ng];
    for i in 0..disc.levels.len() {
        let level = disc.levels[i];
        if level == 0 {
            continue;
        }
        let c = g.coords(i);
        let mut sum = 0u64;
        let mut count = 0u64;
        for &off in &offsets {
            if let Some(j) = g.offset_index(c, off) {
                let l = disc.levels[j];
                if l != 0 {
                    sum += l as u64;
                    count += 1;
                }
            }
        }
        if count == 0 {
            continue;
        }
        let li = level as usize - 1;
        n[li] += 1;
        numer[li][count as usize] += (level as u64 * count).abs_diff(sum);
    }
    let s = numer
        .iter()
        .map(|row| (1..27).map(|c| row[c] as f64 / c as f64).sum())
        .collect();
    let total: u64 = n.iter().sum();
    if total == 0 {
        return Err(Error::EmptyMatrix("every in-mask voxel is isolated".into()));
    }
    Ok(Ngtdm { ng, n, s, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    #[test]
    fn constant_has_zero_difference() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([3, 3, 3]), vec![1; 27]).unwrap();
        let m = ngtdm(&disc).unwrap();
        assert_eq!(m.s, vec![0.0]);
        assert_eq!(m.p(), vec![1.0]);
    }

    #[test]
    fn three_voxel_column() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([1, 1, 3]), vec![1, 2, 1]).unwrap();
        let m = ngtdm(&disc).unwrap();
        assert_eq!(m.n, vec![2, 1]);
        assert_eq!(m.s, vec![2.0, 1.0]);
        assert_eq!(m.total, 3);
    }

    #[test]
    fn isolated_voxels_excluded() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([5, 1, 1]), vec![1, 0, 2, 2, 0]).unwrap();
        let m = ngtdm(&disc).unwrap();
        assert_eq!(m.n, vec![0, 2]);
        assert_eq!(m.s, vec![0.0, 0.0]);

        let lonely = DiscretizedVolume::from_levels(Geometry::unit([3, 1, 1]), vec![1, 0, 1]).unwrap();
        assert!(matches!(ngtdm(&lonely), Err(Error::EmptyMatrix(_))));
    }
}
