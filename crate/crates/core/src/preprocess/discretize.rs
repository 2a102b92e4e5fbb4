use crate::error::{bail_arg, Error, Result};
use crate::grid::{Geometry, MaskGrid, VolumeGrid};
use serde::{Deserialize, Serialize};

/// Largest gray-level count accepted; texture matrices are dense in Ng.
pub const MAX_LEVELS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Discretization {
    /// Bins of `width` with edges at multiples of `width`.
    FixedBinWidth { width: f64 },
    /// `count` equal bins spanning the in-mask [min, max].
    FixedBinCount { count: usize },
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization::FixedBinWidth { width: 25.0 }
    }
}

/// Gray levels `1..=ng` inside the mask, 0 outside (and at NaN voxels).
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedVolume {
    pub geometry: Geometry,
    pub levels: Vec<u16>,
    pub ng: usize,
    pub mode: Discretization,
    pub bin_edges: Vec<f64>,
}

impl DiscretizedVolume {
    /// Builds directly from levels; used for tests and synthetic inputs.
    pub fn from_levels(geometry: Geometry, levels: Vec<u16>) -> Result<Self> {
        if levels.len() != geometry.len() {
            bail_arg!("level count {} does not match dims {:?}", levels.len(), geometry.dims);
        }
        let ng = levels.iter().copied().max().unwrap_or(0) as usize;
        Ok(Self {
            geometry,
            levels,
            ng: ng.max(1),
            mode: Discretization::FixedBinCount { count: ng.max(1) },
            bin_edges: Vec::new(),
        })
    }

    #[inline]
    pub fn in_mask(&self, index: usize) -> bool {
        self.levels[index] != 0
    }

    pub fn voxel_count(&self) -> usize {
        self.levels.iter().filter(|&&l| l != 0).count()
    }
}

/// Maps each in-mask intensity to a gray level.
pub fn discretize(grid: &VolumeGrid, mask: &MaskGrid, mode: Discretization) -> Result<DiscretizedVolume> {
    mask.require_aligned(grid)?;
    mask.require_nonempty()?;
    discretize_values(&grid.geometry, &grid.values, &mask.labels, mode)
}

pub(crate) fn discretize_values(
    geometry: &Geometry,
    values: &[f64],
    labels: &[i32],
    mode: Discretization,
) -> Result<DiscretizedVolume> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (&v, &l) in values.iter().zip(labels) {
        if l != 0 && !v.is_nan() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Data("no finite in-mask intensities".into()));
    }

    let (ng, bin_edges, level_of): (usize, Vec<f64>, Box<dyn Fn(f64) -> usize>) = match mode {
        Discretization::FixedBinCount { count } => {
            if count == 0 {
                bail_arg!("bin count must be positive");
            }
            if hi == lo {
                (1, vec![lo, hi], Box::new(|_| 1))
            } else {
                let range = hi - lo;
                let edges = (0..=count).map(|k| lo + range * k as f64 / count as f64).collect();
                let f = move |v: f64| (((v - lo) / range * count as f64).floor() as usize + 1).min(count);
                (count, edges, Box::new(f))
            }
        }
        Discretization::FixedBinWidth { width } => {
            if !(width.is_finite() && width > 0.0) {
                bail_arg!("bin width must be positive, got {width}");
            }
            let base = (lo / width).floor();
            let top = (hi / width).floor();
            let ng = (top - base) as usize + 1;
            if ng > MAX_LEVELS {
                return Err(Error::Data(format!(
                    "bin width {width} yields {ng} gray levels (limit {MAX_LEVELS})"
                )));
            }
            let edges = (0..=ng).map(|k| (base + k as f64) * width).collect();
            let f = move |v: f64| ((v / width).floor() - base) as usize + 1;
            (ng, edges, Box::new(f))
        }
    };
    if ng > MAX_LEVELS {
        return Err(Error::Data(format!("{ng} gray levels exceed limit {MAX_LEVELS}")));
    }

    let levels = values
        .iter()
        .zip(labels)
        .map(|(&v, &l)| {
            if l == 0 || v.is_nan() {
                0
            } else {
                level_of(v).clamp(1, ng) as u16
            }
        })
        .collect();
    Ok(DiscretizedVolume {
        geometry: *geometry,
        levels,
        ng,
        mode,
        bin_edges,
    })
}
