use crate::error::{bail_arg, Result};
use crate::grid::{Geometry, MaskGrid, VolumeGrid};
use serde::{Deserialize, Serialize};

/// Fixed-physical-size crop box in voxel indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiBox {
    pub start: [usize; 3],
    pub size: [usize; 3],
    pub physical_size: [f64; 3],
    /// Foreground centroid rounded to the nearest voxel; the box anchor.
    pub center: [usize; 3],
    /// Set when the requested size exceeded the volume along some axis.
    pub clamped: bool,
}

/// Box of `physical_size` mm centered on the mask's foreground centroid, shifted
/// inward to stay inside the volume.
pub fn roi_from_mask(mask: &MaskGrid, physical_size: [f64; 3]) -> Result<RoiBox> {
    mask.require_nonempty()?;
    if physical_size.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        bail_arg!("ROI size must be positive, got {physical_size:?}");
    }
    let g = &mask.geometry;
    let mut sum = [0.0f64; 3];
    let mut count = 0usize;
    for (i, &l) in mask.labels.iter().enumerate() {
        if l != 0 {
            let c = g.coords(i);
            for a in 0..3 {
                sum[a] += c[a] as f64;
            }
            count += 1;
        }
    }
    let mut start = [0usize; 3];
    let mut size = [0usize; 3];
    let mut center = [0usize; 3];
    let mut clamped = false;
    for a in 0..3 {
        center[a] = (sum[a] / count as f64).round() as usize;
        let want = ((physical_size[a] / g.spacing[a]).round() as usize).max(1);
        if want > g.dims[a] {
            clamped = true;
            size[a] = g.dims[a];
            start[a] = 0;
            continue;
        }
        size[a] = want;
        let s = center[a] as i64 - (want / 2) as i64;
        start[a] = s.clamp(0, (g.dims[a] - want) as i64) as usize;
    }
    Ok(RoiBox {
        start,
        size,
        physical_size,
        center,
        clamped,
    })
}

fn crop_geometry(g: &Geometry, roi: &RoiBox) -> Result<Geometry> {
    for a in 0..3 {
        if roi.size[a] == 0 || roi.start[a] + roi.size[a] > g.dims[a] {
            bail_arg!("ROI {roi:?} does not fit volume dims {:?}", g.dims);
        }
    }
    let origin = [0, 1, 2].map(|a| g.origin[a] + roi.start[a] as f64 * g.spacing[a]);
    Geometry::new(roi.size, g.spacing, origin)
}

fn crop<T: Copy>(g: &Geometry, data: &[T], roi: &RoiBox) -> Vec<T> {
    let mut out = Vec::with_capacity(roi.size.iter().product());
    for z in roi.start[2]..roi.start[2] + roi.size[2] {
        for y in roi.start[1]..roi.start[1] + roi.size[1] {
            let row = g.index(roi.start[0], y, z);
            out.extend_from_slice(&data[row..row + roi.size[0]]);
        }
    }
    out
}

pub fn crop_volume(grid: &VolumeGrid, roi: &RoiBox) -> Result<VolumeGrid> {
    let geometry = crop_geometry(&grid.geometry, roi)?;
    VolumeGrid::new_allow_nan(geometry, crop(&grid.geometry, &grid.values, roi))
}

pub fn crop_mask(mask: &MaskGrid, roi: &RoiBox) -> Result<MaskGrid> {
    let geometry = crop_geometry(&mask.geometry, roi)?;
    MaskGrid::new(geometry, crop(&mask.geometry, &mask.labels, roi))
}
