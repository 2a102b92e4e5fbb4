use super::DIRECTIONS;
use crate::error::{Error, Result};
use crate::preprocess::DiscretizedVolume;

/// Symmetric co-occurrence counts for each of the 13 directions.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmSet {
    pub ng: usize,
    pub directions: Vec<[i32; 3]>,
    /// Row-major `ng x ng` counts per direction, `C + C^T`, levels 1-based at index `level - 1`.
    pub counts: Vec<Vec<u64>>,
}

impl GlcmSet {
    pub fn total(&self, d: usize) -> u64 {
        self.counts[d].iter().sum()
    }

    pub fn is_empty_direction(&self, d: usize) -> bool {
        self.total(d) == 0
    }

    pub fn nonempty_directions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.counts.len()).filter(|&d| !self.is_empty_direction(d))
    }

    /// Normalized joint probabilities for direction `d`, or `None` when it has no pairs.
    pub fn probabilities(&self, d: usize) -> Option<Vec<f64>> {
        let total = self.total(d);
        (total > 0).then(|| self.counts[d].iter().map(|&c| c as f64 / total as f64).collect())
    }
}

pub fn glcm(disc: &DiscretizedVolume) -> Result<GlcmSet> {
    let ng = disc.ng;
    let g = &disc.geometry;
    let [nx, ny, nz] = g.dims;
    let mut counts = vec![vec![0u64; ng * ng]; DIRECTIONS.len()];
    for (d, off) in DIRECTIONS.iter().enumerate() {
        let m = &mut counts[d];
        let xr = range(nx, off[0]);
        let yr = range(ny, off[1]);
        let zr = range(nz, off[2]);
        for z in zr.clone() {
            for y in yr.clone() {
                for x in xr.clone() {
                    let a = disc.levels[g.index(x, y, z)];
                    if a == 0 {
                        continue;
                    }
                    let b = disc.levels[g.index(
                        (x as i64 + off[0] as i64) as usize,
                        (y as i64 + off[1] as i64) as usize,
                        (z as i64 + off[2] as i64) as usize,
                    )];
                    if b == 0 {
                        continue;
                    }
                    let (i, j) = (a as usize - 1, b as usize - 1);
                    m[i * ng + j] += 1;
                    m[j * ng + i] += 1;
                }
            }
        }
    }
    let set = GlcmSet {
        ng,
        directions: DIRECTIONS.to_vec(),
        counts,
    };
    if set.nonempty_directions().next().is_none() {
        return Err(Error::EmptyMatrix("no in-mask voxel pairs in any direction".into()));
    }
    Ok(set)
}

/// Start positions along an axis for which `pos + off` stays in `[0, n)`.
fn range(n: usize, off: i32) -> std::ops::Range<usize> {
    match off {
        o if o > 0 => 0..n.saturating_sub(o as usize),
        o if o < 0 => ((-o) as usize).min(n)..n,
        _ => 0..n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    #[test]
    fn two_by_two_example() {
        // rows along x: [1, 1] at y = 0 and [1, 2] at y = 1
        let disc = DiscretizedVolume::from_levels(Geometry::unit([2, 2, 1]), vec![1, 1, 1, 2]).unwrap();
        let set = glcm(&disc).unwrap();
        assert_eq!(set.directions[0], [1, 0, 0]);
        assert_eq!(set.counts[0], vec![2, 1, 1, 0]);
        assert_eq!(set.probabilities(0).unwrap(), vec![0.5, 0.25, 0.25, 0.0]);
    }

    #[test]
    fn constant_volume_single_entry() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([3, 3, 3]), vec![1; 27]).unwrap();
        let set = glcm(&disc).unwrap();
        for d in 0..13 {
            assert_eq!(set.probabilities(d).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn single_voxel_is_empty() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([3, 1, 1]), vec![0, 1, 0]).unwrap();
        assert!(matches!(glcm(&disc), Err(Error::EmptyMatrix(_))));
    }

    #[test]
    fn planar_volume_flags_out_of_plane_directions() {
        let disc = DiscretizedVolume::from_levels(Geometry::unit([2, 2, 1]), vec![1, 2, 2, 1]).unwrap();
        let set = glcm(&disc).unwrap();
        let nonempty: Vec<_> = set.nonempty_directions().map(|d| set.directions[d]).collect();
        assert_eq!(nonempty, vec![[1, 0, 0], [-1, 1, 0], [0, 1, 0], [1, 1, 0]]);
    }
}
