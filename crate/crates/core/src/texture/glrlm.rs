use super::DIRECTIONS;
use crate::error::{Error, Result};
use crate::preprocess::DiscretizedVolume;

/// Run-length counts per direction: `counts[d][(level - 1) * max_run + (len - 1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlrlmSet {
    pub ng: usize,
    pub max_run: usize,
    pub directions: Vec<[i32; 3]>,
    pub counts: Vec<Vec<u64>>,
    /// In-mask voxels.
    pub voxels: u64,
}

impl GlrlmSet {
    pub fn get(&self, d: usize, level: usize, len: usize) -> u64 {
        self.counts[d][(level - 1) * self.max_run + (len - 1)]
    }

    pub fn runs(&self, d: usize) -> u64 {
        self.counts[d].iter().sum()
    }
}

/// Maximal runs of equal level, broken by a level change, mask exit or volume edge.
pub fn glrlm(disc: &DiscretizedVolume) -> Result<GlrlmSet> {
    let g = &disc.geometry;
    let voxels = disc.voxel_count() as u64;
    if voxels == 0 {
        return Err(Error::EmptyMatrix("no in-mask voxels".into()));
    }
    let ng = disc.ng;
    let max_run = *g.dims.iter().max().unwrap();
    let mut counts = vec![vec![0u64; ng * max_run]; DIRECTIONS.len()];
    for (d, &off) in DIRECTIONS.iter().enumerate() {
        let back = off.map(|c| -c);
        let m = &mut counts[d];
        for i in 0..disc.levels.len() {
            let level = disc.levels[i];
            if level == 0 {
                continue;
            }
            let c = g.coords(i);
            // Only run heads start a walk.
            if let Some(p) = g.offset_index(c, back) {
                if disc.levels[p] == level {
                    continue;
                }
            }
            let mut len = 1;
            let mut cur = c;
            while let Some(n) = g.offset_index(cur, off) {
                if disc.levels[n] != level {
                    break;
                }
                len += 1;
                cur = g.coords(n);
            }
            m[(level as usize - 1) * max_run + (len - 1)] += 1;
        }
    }
    Ok(GlrlmSet {
        ng,
        max_run,
        directions: DIRECTIONS.to_vec(),
        counts,
        voxels,
    })
}
