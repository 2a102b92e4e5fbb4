//! In-memory 3D volumes and label masks with physical geometry.
//!
//! Voxels are stored with x varying fastest: `index = x + nx * (y + ny * z)`,
//! matching the NIfTI on-disk order.

use crate::error::{bail_arg, Error, Result};
use serde::{Deserialize, Serialize};

pub type Dims = [usize; 3];

/// Physical placement shared by volumes and masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: Dims,
    /// Voxel size in mm.
    pub spacing: [f64; 3],
    /// Physical position (mm) of the center of voxel (0, 0, 0).
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(dims: Dims, spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            bail_arg!("dimensions must be positive, got {dims:?}");
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            bail_arg!("spacing must be positive and finite, got {spacing:?}");
        }
        if origin.iter().any(|o| !o.is_finite()) {
            bail_arg!("origin must be finite, got {origin:?}");
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Unit spacing, zero origin.
    pub fn unit(dims: Dims) -> Self {
        Self {
            dims,
            spacing: [1.0; 3],
            origin: [0.0; 3],
        }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let x = index % self.dims[0];
        let rest = index / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Index of `(x, y, z) + offset`, or `None` if it leaves the grid.
    #[inline]
    pub fn offset_index(&self, c: [usize; 3], offset: [i32; 3]) -> Option<usize> {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = c[a] as i64 + offset[a] as i64;
            if v < 0 || v >= self.dims[a] as i64 {
                return None;
            }
            out[a] = v as usize;
        }
        Some(self.index(out[0], out[1], out[2]))
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Same dims, spacing within 1e-6 relative, origin within 1e-6 mm.
    pub fn matches(&self, other: &Geometry) -> bool {
        self.dims == other.dims
            && (0..3).all(|a| {
                (self.spacing[a] - other.spacing[a]).abs()
                    <= 1e-6 * self.spacing[a].abs().max(other.spacing[a].abs())
                    && (self.origin[a] - other.origin[a]).abs() <= 1e-6
            })
    }
}

/// Scalar 3D image (CT, filtered variant, or parametric map).
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeGrid {
    pub geometry: Geometry,
    pub values: Vec<f64>,
}

impl VolumeGrid {
    /// Builds a volume; all values must be finite.
    pub fn new(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        let grid = Self::new_allow_nan(geometry, values)?;
        if let Some(i) = grid.values.iter().position(|v| !v.is_finite()) {
            bail_arg!("non-finite value at voxel {i}");
        }
        Ok(grid)
    }

    /// Builds a volume that may hold NaN (parametric maps).
    pub fn new_allow_nan(geometry: Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            bail_arg!(
                "value count {} does not match dims {:?}",
                values.len(),
                geometry.dims
            );
        }
        Ok(Self { geometry, values })
    }

    pub fn filled(geometry: Geometry, value: f64) -> Self {
        Self {
            values: vec![value; geometry.len()],
            geometry,
        }
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(geometry.len());
        let [nx, ny, nz] = geometry.dims;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    values.push(f(x, y, z));
                }
            }
        }
        Self { geometry, values }
    }

    pub fn dims(&self) -> Dims {
        self.geometry.dims
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.geometry.index(x, y, z)]
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }
}

/// Integer label image aligned to a [`VolumeGrid`]; 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskGrid {
    pub geometry: Geometry,
    pub labels: Vec<i32>,
}

impl MaskGrid {
    pub fn new(geometry: Geometry, labels: Vec<i32>) -> Result<Self> {
        if labels.len() != geometry.len() {
            bail_arg!(
                "label count {} does not match dims {:?}",
                labels.len(),
                geometry.dims
            );
        }
        Ok(Self { geometry, labels })
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let vol = VolumeGrid::from_fn(geometry, |x, y, z| if f(x, y, z) { 1.0 } else { 0.0 });
        Self::from_volume(&vol)
    }

    /// Full-volume mask.
    pub fn full(geometry: Geometry) -> Self {
        Self {
            labels: vec![1; geometry.len()],
            geometry,
        }
    }

    /// Rounds each value to the nearest integer label; NaN maps to background.
    pub fn from_volume(grid: &VolumeGrid) -> Self {
        let labels = grid
            .values
            .iter()
            .map(|&v| if v.is_finite() { v.round() as i32 } else { 0 })
            .collect();
        Self {
            geometry: grid.geometry,
            labels,
        }
    }

    pub fn to_volume(&self) -> VolumeGrid {
        VolumeGrid {
            geometry: self.geometry,
            values: self.labels.iter().map(|&l| l as f64).collect(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.geometry.dims
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        self.labels[index] != 0
    }

    pub fn count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// Fails unless at least one voxel is foreground.
    pub fn require_nonempty(&self) -> Result<()> {
        if self.labels.iter().any(|&l| l != 0) {
            Ok(())
        } else {
            Err(Error::Precondition("mask has no foreground voxels".into()))
        }
    }

    /// Fails unless the mask is aligned to `grid`.
    pub fn require_aligned(&self, grid: &VolumeGrid) -> Result<()> {
        if self.geometry.matches(&grid.geometry) {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "mask geometry {:?} does not match volume geometry {:?}",
                self.geometry, grid.geometry
            )))
        }
    }
}
