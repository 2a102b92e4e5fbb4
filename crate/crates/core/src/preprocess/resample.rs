use crate::error::{bail_arg, Result};
use crate::grid::{Geometry, MaskGrid, VolumeGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    Trilinear,
}

/// Output grid covering the same physical extent (voxel corner to voxel corner).
fn target_geometry(src: &Geometry, target_spacing: [f64; 3]) -> Result<Geometry> {
    if target_spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        bail_arg!("target spacing must be positive, got {target_spacing:?}");
    }
    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        let extent = src.dims[a] as f64 * src.spacing[a];
        // Guard against 8*1/2 = 3.9999999 style rounding before the ceiling.
        let ratio = extent / target_spacing[a];
        let r = ratio.round();
        let n = if (ratio - r).abs() < 1e-9 { r } else { ratio.ceil() };
        dims[a] = (n as usize).max(1);
        origin[a] = src.origin[a] + 0.5 * (target_spacing[a] - src.spacing[a]);
    }
    Geometry::new(dims, target_spacing, origin)
}

/// Continuous source index of each output voxel center along one axis.
fn source_positions(src: &Geometry, dst: &Geometry, axis: usize) -> Vec<f64> {
    let ratio = dst.spacing[axis] / src.spacing[axis];
    (0..dst.dims[axis])
        .map(|i| (i as f64 + 0.5) * ratio - 0.5)
        .collect()
}

/// Round half up, clamped into `[0, n)`.
fn nearest(pos: f64, n: usize) -> usize {
    ((pos + 0.5).floor().max(0.0) as usize).min(n - 1)
}

/// Lower neighbor and weight of the upper neighbor, edge-clamped.
fn linear(pos: f64, n: usize) -> (usize, usize, f64) {
    if n == 1 || pos <= 0.0 {
        return (0, 0, 0.0);
    }
    let last = (n - 1) as f64;
    if pos >= last {
        return (n - 1, n - 1, 0.0);
    }
    let lo = pos.floor();
    (lo as usize, lo as usize + 1, pos - lo)
}

/// Resamples to `target_spacing`, sampling at output voxel centers.
pub fn resample(grid: &VolumeGrid, target_spacing: [f64; 3], interp: Interpolation) -> Result<VolumeGrid> {
    let src = grid.geometry;
    let dst = target_geometry(&src, target_spacing)?;
    let pos: Vec<Vec<f64>> = (0..3).map(|a| source_positions(&src, &dst, a)).collect();
    let out = match interp {
        Interpolation::Nearest => VolumeGrid::from_fn(dst, |x, y, z| {
            grid.get(
                nearest(pos[0][x], src.dims[0]),
                nearest(pos[1][y], src.dims[1]),
                nearest(pos[2][z], src.dims[2]),
            )
        }),
        Interpolation::Trilinear => VolumeGrid::from_fn(dst, |x, y, z| {
            let (x0, x1, fx) = linear(pos[0][x], src.dims[0]);
            let (y0, y1, fy) = linear(pos[1][y], src.dims[1]);
            let (z0, z1, fz) = linear(pos[2][z], src.dims[2]);
            let lerp = |a: f64, b: f64, t: f64| if t == 0.0 { a } else { a + (b - a) * t };
            let c00 = lerp(grid.get(x0, y0, z0), grid.get(x1, y0, z0), fx);
            let c10 = lerp(grid.get(x0, y1, z0), grid.get(x1, y1, z0), fx);
            let c01 = lerp(grid.get(x0, y0, z1), grid.get(x1, y0, z1), fx);
            let c11 = lerp(grid.get(x0, y1, z1), grid.get(x1, y1, z1), fx);
            lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
        }),
    };
    Ok(out)
}

/// Nearest-neighbor resampling of a label mask.
pub fn resample_mask(mask: &MaskGrid, target_spacing: [f64; 3]) -> Result<MaskGrid> {
    let vol = resample(&mask.to_volume(), target_spacing, Interpolation::Nearest)?;
    Ok(MaskGrid::from_volume(&vol))
}
