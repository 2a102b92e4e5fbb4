//! Voxel-wise sliding-window feature maps.
//!
//! Every in-mask voxel gets the feature computed over its `kernel^3` window,
//! clipped to the volume and intersected with the mask, re-discretized on its
//! own. The naive path recomputes everything per feature; the fast path walks
//! disjoint tiles in parallel and computes each texture family once per window.

mod bench;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::features::{family_features, Degeneracy, Family, FeatureId, FeatureVector};
use crate::grid::{Geometry, MaskGrid, VolumeGrid};
use crate::io::{write_volume, Format};
use crate::preprocess::{discretize, Discretization};

pub use bench::{bench_maps, BenchComparison, BenchConfig, BenchEntry, BenchReport, Strategy};

/// Map features used when none are configured.
pub const DEFAULT_MAP_FEATURES: [&str; 8] = [
    "glcm_Correlation",
    "glcm_Imc1",
    "glcm_Imc2",
    "glcm_JointEntropy",
    "glcm_Contrast",
    "ngtdm_Strength",
    "ngtdm_Busyness",
    "firstorder_Entropy",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapConfig {
    /// Window edge in voxels; odd and at least 3.
    pub kernel: usize,
    pub discretization: Discretization,
    /// Windows with fewer in-mask voxels yield NaN.
    pub min_voxels: usize,
    /// Tile edge in voxels for the fast path.
    pub tile: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            kernel: 5,
            discretization: Discretization::FixedBinCount { count: 32 },
            min_voxels: 8,
            tile: 8,
        }
    }
}

impl MapConfig {
    pub fn with_kernel(kernel: usize) -> Self {
        Self {
            kernel,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel < 3 || self.kernel.is_multiple_of(2) {
            bail_arg!("kernel must be odd and at least 3, got {}", self.kernel);
        }
        if self.tile == 0 {
            bail_arg!("tile size must be positive");
        }
        if self.min_voxels == 0 {
            bail_arg!("minimum window occupancy must be positive");
        }
        Ok(())
    }
}

/// One feature's per-voxel values; NaN wherever `defined_mask` is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricMap {
    pub feature_name: String,
    pub kernel: usize,
    pub grid: VolumeGrid,
    pub defined_mask: MaskGrid,
    /// Reason for NaN or substituted values, per voxel.
    pub flags: Vec<Option<Degeneracy>>,
}

impl ParametricMap {
    /// Bitwise comparison treating all NaNs as equal.
    pub fn same_values(&self, other: &ParametricMap) -> bool {
        self.grid.values.len() == other.grid.values.len()
            && self
                .grid
                .values
                .iter()
                .zip(&other.grid.values)
                .all(|(a, b)| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()))
    }

    pub fn file_name(&self, case: &str) -> String {
        map_file_name(case, &self.feature_name, self.kernel)
    }

    /// Writes `<case>_<feature>_k<kernel>.nii` into `dir` as float32.
    pub fn write(&self, dir: &Path, case: &str) -> Result<PathBuf> {
        let path = dir.join(self.file_name(case));
        write_volume(&self.grid, &path, Format::Nifti1)?;
        Ok(path)
    }
}

pub fn map_file_name(case: &str, feature: &str, kernel: usize) -> String {
    format!("{case}_{feature}_k{kernel}.nii")
}

/// Resolves a map feature name; shape and unknown names are argument errors.
pub fn parse_map_feature(name: &str) -> Result<FeatureId> {
    let id = FeatureId::parse(name).ok_or_else(|| Error::Argument(format!("unknown feature {name}")))?;
    if id.family == Family::Shape {
        bail_arg!("shape feature {name} has no per-voxel map");
    }
    Ok(id)
}

enum Window {
    Insufficient,
    Features(Vec<FeatureVector>),
}

/// Features of each family in `families` over the window centered at `center`.
fn window_features(grid: &VolumeGrid, mask: &MaskGrid, center: usize, cfg: &MapConfig, families: &[Family]) -> Window {
    let g = &grid.geometry;
    let c = g.coords(center);
    let half = cfg.kernel / 2;
    let mut lo = [0usize; 3];
    let mut dims = [0usize; 3];
    for a in 0..3 {
        lo[a] = c[a].saturating_sub(half);
        dims[a] = (c[a] + half).min(g.dims[a] - 1) - lo[a] + 1;
    }
    let mut values = Vec::with_capacity(dims.iter().product());
    let mut labels = Vec::with_capacity(values.capacity());
    for z in lo[2]..lo[2] + dims[2] {
        for y in lo[1]..lo[1] + dims[1] {
            let row = g.index(lo[0], y, z);
            values.extend_from_slice(&grid.values[row..row + dims[0]]);
            labels.extend(mask.labels[row..row + dims[0]].iter().map(|&l| i32::from(l != 0)));
        }
    }
    if labels.iter().filter(|&&l| l != 0).count() < cfg.min_voxels {
        return Window::Insufficient;
    }
    let origin = [0, 1, 2].map(|a| g.origin[a] + lo[a] as f64 * g.spacing[a]);
    let wg = Geometry {
        dims,
        spacing: g.spacing,
        origin,
    };
    let wgrid = VolumeGrid {
        geometry: wg,
        values,
    };
    let wmask = MaskGrid { geometry: wg, labels };
    let out = match discretize(&wgrid, &wmask, cfg.discretization) {
        Ok(disc) => families.iter().map(|&f| family_features(f, &wgrid, &disc)).collect(),
        Err(_) => families
            .iter()
            .map(|&f| FeatureVector::all_nan(f, Degeneracy::NoData))
            .collect(),
    };
    Window::Features(out)
}

fn check_inputs(grid: &VolumeGrid, mask: &MaskGrid, cfg: &MapConfig) -> Result<()> {
    cfg.validate()?;
    mask.require_aligned(grid)?;
    mask.require_nonempty()?;
    if grid.has_nan() {
        return Err(Error::Data("input volume contains NaN".into()));
    }
    Ok(())
}

struct MapBuilder {
    values: Vec<f64>,
    defined: Vec<i32>,
    flags: Vec<Option<Degeneracy>>,
}

impl MapBuilder {
    fn new(n: usize) -> Self {
        Self {
            values: vec![f64::NAN; n],
            defined: vec![0; n],
            flags: vec![None; n],
        }
    }

    fn set(&mut self, idx: usize, fv: &FeatureVector, name: &str) {
        let f = fv.get(name).expect("catalog feature present in family output");
        self.values[idx] = f.value;
        self.flags[idx] = f.flag;
        self.defined[idx] = 1;
    }

    fn insufficient(&mut self, idx: usize) {
        self.flags[idx] = Some(Degeneracy::InsufficientWindow);
    }

    fn finish(self, geometry: Geometry, feature: &FeatureId, kernel: usize) -> Result<ParametricMap> {
        Ok(ParametricMap {
            feature_name: feature.key(),
            kernel,
            grid: VolumeGrid::new_allow_nan(geometry, self.values)?,
            defined_mask: MaskGrid::new(geometry, self.defined)?,
            flags: self.flags,
        })
    }
}

/// Reference path: one feature, every window recomputed from scratch, serial.
pub fn extract_map_naive(grid: &VolumeGrid, mask: &MaskGrid, feature: &str, cfg: &MapConfig) -> Result<ParametricMap> {
    let id = parse_map_feature(feature)?;
    check_inputs(grid, mask, cfg)?;
    let mut out = MapBuilder::new(grid.values.len());
    for idx in 0..grid.values.len() {
        if !mask.contains(idx) {
            continue;
        }
        match window_features(grid, mask, idx, cfg, &[id.family]) {
            Window::Insufficient => out.insufficient(idx),
            Window::Features(fv) => out.set(idx, &fv[0], id.feature),
        }
    }
    out.finish(grid.geometry, &id, cfg.kernel)
}

/// Tile origins covering the volume, in z-major order.
fn tiles(dims: [usize; 3], tile: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for z in (0..dims[2]).step_by(tile) {
        for y in (0..dims[1]).step_by(tile) {
            for x in (0..dims[0]).step_by(tile) {
                out.push([x, y, z]);
            }
        }
    }
    out
}

/// Parallel path: maps for all `features` at once on a pool of `threads`
/// workers. Output is identical to [`extract_map_naive`] for any thread count
/// and tile size.
pub fn extract_map_fast(
    grid: &VolumeGrid,
    mask: &MaskGrid,
    features: &[&str],
    cfg: &MapConfig,
    threads: usize,
) -> Result<Vec<ParametricMap>> {
    if threads < 1 {
        bail_arg!("threads must be at least 1");
    }
    let ids: Vec<FeatureId> = features.iter().map(|f| parse_map_feature(f)).collect::<Result<_>>()?;
    check_inputs(grid, mask, cfg)?;
    let mut families: Vec<Family> = Vec::new();
    for id in &ids {
        if !families.contains(&id.family) {
            families.push(id.family);
        }
    }
    let slot: Vec<usize> = ids
        .iter()
        .map(|id| families.iter().position(|f| *f == id.family).unwrap())
        .collect();
    let g = grid.geometry;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot build thread pool: {e}")))?;

    type TileResult = Vec<(usize, Option<Vec<FeatureVector>>)>;
    let tile_results: Vec<TileResult> = pool.install(|| {
        tiles(g.dims, cfg.tile)
            .into_par_iter()
            .map(|t| {
                let mut res = Vec::new();
                for z in t[2]..(t[2] + cfg.tile).min(g.dims[2]) {
                    for y in t[1]..(t[1] + cfg.tile).min(g.dims[1]) {
                        for x in t[0]..(t[0] + cfg.tile).min(g.dims[0]) {
                            let idx = g.index(x, y, z);
                            if !mask.contains(idx) {
                                continue;
                            }
                            let w = match window_features(grid, mask, idx, cfg, &families) {
                                Window::Insufficient => None,
                                Window::Features(fv) => Some(fv),
                            };
                            res.push((idx, w));
                        }
                    }
                }
                res
            })
            .collect()
    });

    let mut builders: Vec<MapBuilder> = ids.iter().map(|_| MapBuilder::new(g.len())).collect();
    for (idx, w) in tile_results.iter().flatten() {
        for (k, id) in ids.iter().enumerate() {
            match w {
                None => builders[k].insufficient(*idx),
                Some(fv) => builders[k].set(*idx, &fv[slot[k]], id.feature),
            }
        }
    }
    builders
        .into_iter()
        .zip(&ids)
        .map(|(b, id)| b.finish(g, id, cfg.kernel))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_global, ExtractConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_case(n: usize, seed: u64) -> (VolumeGrid, MaskGrid) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Geometry::unit([n; 3]);
        let v = VolumeGrid::from_fn(g, |_, _, _| rng.random_range(0.0..100.0));
        let m = MaskGrid::from_fn(g, |x, y, z| (x + y + z) % 7 != 0);
        (v, m)
    }

    #[test]
    fn constant_volume_mean_and_entropy() {
        let g = Geometry::unit([6; 3]);
        let v = VolumeGrid::filled(g, 42.5);
        let m = MaskGrid::full(g);
        let cfg = MapConfig::with_kernel(3);
        let mean = extract_map_naive(&v, &m, "firstorder_Mean", &cfg).unwrap();
        assert!(mean.grid.values.iter().all(|&x| x == 42.5));
        let ent = extract_map_naive(&v, &m, "firstorder_Entropy", &cfg).unwrap();
        assert!(ent.grid.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn center_matches_global_on_cropped_window() {
        let g = Geometry::unit([9; 3]);
        let v = VolumeGrid::from_fn(g, |x, y, z| (x + 2 * y + 3 * z) as f64);
        let m = MaskGrid::full(g);
        let cfg = MapConfig::default();
        let map = extract_map_naive(&v, &m, "glcm_Contrast", &cfg).unwrap();
        let wg = Geometry::unit([5; 3]);
        let wv = VolumeGrid::from_fn(wg, |x, y, z| v.get(x + 2, y + 2, z + 2));
        let ecfg = ExtractConfig {
            discretization: cfg.discretization,
            ..ExtractConfig::default()
        };
        let global = extract_global(&wv, &MaskGrid::full(wg), &ecfg).unwrap();
        let center = map.grid.get(4, 4, 4);
        assert_eq!(center, global.value("original_glcm_Contrast").unwrap());
    }

    #[test]
    fn fast_equals_naive_and_is_thread_invariant() {
        let (v, m) = random_case(10, 3);
        let feats = ["glcm_Correlation", "glcm_Imc1", "ngtdm_Strength", "glrlm_RunPercentage"];
        let cfg = MapConfig {
            tile: 4,
            ..MapConfig::default()
        };
        let fast1 = extract_map_fast(&v, &m, &feats, &cfg, 1).unwrap();
        let fast3 = extract_map_fast(&v, &m, &feats, &MapConfig { tile: 3, ..cfg }, 3).unwrap();
        for (k, f) in feats.iter().enumerate() {
            let naive = extract_map_naive(&v, &m, f, &cfg).unwrap();
            assert!(naive.same_values(&fast1[k]), "{f}");
            assert!(fast3[k].same_values(&fast1[k]), "{f}");
            assert_eq!(naive.defined_mask, fast1[k].defined_mask);
        }
    }

    #[test]
    fn argument_errors() {
        let (v, m) = random_case(5, 0);
        let cfg = MapConfig::default();
        assert!(matches!(extract_map_naive(&v, &m, "shape_Sphericity", &cfg), Err(Error::Argument(_))));
        assert!(matches!(extract_map_naive(&v, &m, "glcm_Nope", &cfg), Err(Error::Argument(_))));
        assert!(extract_map_naive(&v, &m, "glcm_Contrast", &MapConfig::with_kernel(4)).is_err());
        assert!(matches!(extract_map_fast(&v, &m, &["glcm_Contrast"], &cfg, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn sparse_mask_windows_are_insufficient() {
        let g = Geometry::unit([7; 3]);
        let v = VolumeGrid::from_fn(g, |x, _, _| x as f64);
        let m = MaskGrid::from_fn(g, |x, y, z| x == 3 && y == 3 && z < 4);
        let map = extract_map_naive(&v, &m, "firstorder_Mean", &MapConfig::default()).unwrap();
        assert_eq!(map.defined_mask.count(), 0);
        assert!(map.grid.values.iter().all(|x| x.is_nan()));
        assert_eq!(map.flags[g.index(3, 3, 0)], Some(Degeneracy::InsufficientWindow));
    }

    #[test]
    fn file_naming() {
        assert_eq!(map_file_name("case_001", "glcm_Imc1", 5), "case_001_glcm_Imc1_k5.nii");
    }
}
