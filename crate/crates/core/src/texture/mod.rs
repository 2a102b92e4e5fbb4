//! Gray-level co-occurrence, run-length and neighborhood-tone-difference matrices.
//!
//! Every neighborhood is mask-aware: pairs, runs and neighbor means only involve
//! voxels with a nonzero gray level.

mod glcm;
mod glrlm;
mod ngtdm;

pub use glcm::{glcm, GlcmSet};
pub use glrlm::{glrlm, GlrlmSet};
pub use ngtdm::{ngtdm, Ngtdm};

/// The 13 unique offsets at Chebyshev distance 1 (one of each opposite pair).
pub const DIRECTIONS: [[i32; 3]; 13] = [
    [1, 0, 0],
    [-1, 1, 0],
    [0, 1, 0],
    [1, 1, 0],
    [-1, -1, 1],
    [0, -1, 1],
    [1, -1, 1],
    [-1, 0, 1],
    [0, 0, 1],
    [1, 0, 1],
    [-1, 1, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// All 26 neighbors.
pub(crate) fn neighbors26() -> impl Iterator<Item = [i32; 3]> {
    DIRECTIONS.iter().flat_map(|&d| [d, d.map(|c| -c)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn directions_cover_all_neighbors_once() {
        let all: HashSet<[i32; 3]> = neighbors26().collect();
        assert_eq!(all.len(), 26);
        assert!(!all.contains(&[0, 0, 0]));
        for d in DIRECTIONS {
            assert!(!DIRECTIONS.contains(&d.map(|c| -c)));
            assert!(d.iter().all(|c| c.abs() <= 1));
        }
    }
}
