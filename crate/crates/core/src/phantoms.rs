//! Synthetic volumes and feature tables with known ground truth.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::grid::{Geometry, MaskGrid, VolumeGrid};
use crate::io::{write_mask, write_volume, Format};
use crate::preprocess::gaussian_blur;
use crate::selection::FeatureTable;

/// Smoothing of the fine (class 0) texture and the coarse texture at full contrast.
pub const FINE_SIGMA_MM: f64 = 0.5;
pub const COARSE_SIGMA_MM: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomKind {
    Ball {
        radius_mm: f64,
    },
    /// Axis-aligned box covering `round(size / spacing)` voxels per axis.
    Box {
        size_mm: [f64; 3],
    },
    /// One-voxel-thick segment along z.
    Line {
        length_mm: f64,
    },
    /// Ball filled with smoothed Gaussian noise; class 1 is smoothed more
    /// heavily, by an amount scaled with `contrast` in [0, 1].
    TexturedBlob {
        radius_mm: f64,
        class: u8,
        noise_hu: f64,
        base_hu: f64,
        contrast: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    #[serde(flatten)]
    pub kind: PhantomKind,
    pub dims: [usize; 3],
    #[serde(default = "unit_spacing")]
    pub spacing: [f64; 3],
    #[serde(default)]
    pub seed: u64,
}

fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

/// Value inside the geometric phantoms; the background is 0.
pub const SOLID_HU: f64 = 100.0;

impl PhantomSpec {
    pub fn new(kind: PhantomKind, dims: [usize; 3]) -> Self {
        Self {
            kind,
            dims,
            spacing: [1.0; 3],
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn ball_mask(g: &Geometry, radius_mm: f64) -> MaskGrid {
    let c = g.dims.map(|d| (d / 2) as f64);
    MaskGrid::from_fn(*g, |x, y, z| {
        let d2: f64 = [x, y, z]
            .iter()
            .enumerate()
            .map(|(a, &i)| ((i as f64 - c[a]) * g.spacing[a]).powi(2))
            .sum();
        d2 <= radius_mm * radius_mm
    })
}

fn box_mask(g: &Geometry, size_mm: [f64; 3]) -> MaskGrid {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let n = ((size_mm[a] / g.spacing[a]).round() as usize).clamp(1, g.dims[a]);
        lo[a] = (g.dims[a] / 2).saturating_sub(n / 2).min(g.dims[a] - n);
        hi[a] = lo[a] + n;
    }
    MaskGrid::from_fn(*g, |x, y, z| {
        [x, y, z].iter().enumerate().all(|(a, &i)| i >= lo[a] && i < hi[a])
    })
}

/// Volume and mask for a phantom; identical bytes for identical specs.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(VolumeGrid, MaskGrid)> {
    let g = Geometry::new(spec.dims, spec.spacing, [0.0; 3])?;
    let solid = |mask: MaskGrid| {
        let values = mask.labels.iter().map(|&l| if l != 0 { SOLID_HU } else { 0.0 }).collect();
        Ok((VolumeGrid::new(g, values)?, mask))
    };
    match spec.kind {
        PhantomKind::Ball { radius_mm } => {
            if !(radius_mm > 0.0) {
                bail_arg!("ball radius must be positive");
            }
            solid(ball_mask(&g, radius_mm))
        }
        PhantomKind::Box { size_mm } => {
            if size_mm.iter().any(|&s| !(s > 0.0)) {
                bail_arg!("box sides must be positive");
            }
            solid(box_mask(&g, size_mm))
        }
        PhantomKind::Line { length_mm } => {
            if !(length_mm > 0.0) {
                bail_arg!("line length must be positive");
            }
            solid(box_mask(&g, [g.spacing[0], g.spacing[1], length_mm]))
        }
        PhantomKind::TexturedBlob {
            radius_mm,
            class,
            noise_hu,
            base_hu,
            contrast,
        } => {
            if !(radius_mm > 0.0) || !(noise_hu >= 0.0) || !(0.0..=1.0).contains(&contrast) || class > 1 {
                bail_arg!("invalid textured blob parameters");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let white: Vec<f64> = (0..g.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let sigma = FINE_SIGMA_MM + f64::from(class) * contrast * (COARSE_SIGMA_MM - FINE_SIGMA_MM);
            let smooth = gaussian_blur(&VolumeGrid::new(g, white)?, sigma)?;
            let n = smooth.values.len() as f64;
            let mean = smooth.values.iter().sum::<f64>() / n;
            let sd = (smooth.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            let values = smooth
                .values
                .iter()
                .map(|v| base_hu + noise_hu * (v - mean) / sd.max(f64::MIN_POSITIVE))
                .collect();
            Ok((VolumeGrid::new(g, values)?, ball_mask(&g, radius_mm)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSpec {
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_features: usize,
    pub n_signal: usize,
    /// Mean shift of planted columns for positives, in noise standard deviations.
    pub effect: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_pos: 150,
            n_neg: 150,
            n_features: 50,
            n_signal: 3,
            effect: 1.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub table: FeatureTable,
    /// Names of the columns carrying class signal.
    pub planted: Vec<String>,
}

/// Feature table with `n_signal` class-shifted columns at seeded positions among
/// independent standard-normal noise columns. Positive lesion sizes span several
/// 500-voxel strata.
pub fn make_cohort(spec: &CohortSpec) -> Result<Cohort> {
    if spec.n_signal > spec.n_features {
        bail_arg!("{} planted columns exceed {} features", spec.n_signal, spec.n_features);
    }
    if spec.n_pos == 0 || spec.n_neg == 0 {
        bail_arg!("cohort needs both classes");
    }
    if !spec.effect.is_finite() {
        bail_arg!("effect must be finite");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_pos + spec.n_neg;
    let mut columns: Vec<usize> = (0..spec.n_features).collect();
    columns.shuffle(&mut rng);
    let planted_cols = &columns[..spec.n_signal];
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i < spec.n_pos)).collect();
    let mut values = Vec::with_capacity(n * spec.n_features);
    let mut sizes = Vec::with_capacity(n);
    for &label in &labels {
        for j in 0..spec.n_features {
            let z: f64 = StandardNormal.sample(&mut rng);
            let shift = if label == 1 && planted_cols.contains(&j) { spec.effect } else { 0.0 };
            values.push(z + shift);
        }
        sizes.push(if label == 1 { rng.random_range(100..3000) } else { 0 });
    }
    let names: Vec<String> = (0..spec.n_features).map(|j| format!("feat_{j:03}")).collect();
    let mut planted: Vec<usize> = planted_cols.to_vec();
    planted.sort_unstable();
    Ok(Cohort {
        planted: planted.iter().map(|&j| names[j].clone()).collect(),
        table: FeatureTable::new(
            (0..n).map(|i| format!("case_{i:03}")).collect(),
            names,
            values,
            labels,
            sizes,
        )?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageCohortSpec {
    pub n_pos: usize,
    pub n_neg: usize,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    /// Blob radii are drawn uniformly from this range.
    pub radius_mm: [f64; 2],
    pub noise_hu: f64,
    pub base_hu: f64,
    pub contrast: f64,
    pub seed: u64,
}

impl Default for ImageCohortSpec {
    fn default() -> Self {
        Self {
            n_pos: 20,
            n_neg: 20,
            dims: [24; 3],
            spacing: [1.0; 3],
            radius_mm: [6.0, 10.0],
            noise_hu: 40.0,
            base_hu: 60.0,
            contrast: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageCase {
    pub case_id: String,
    pub label: u8,
    pub lesion_size_voxels: u64,
    pub volume: VolumeGrid,
    pub mask: MaskGrid,
}

/// Two-class textured-blob cohort; positives carry the coarse texture.
pub fn make_image_cohort(spec: &ImageCohortSpec) -> Result<Vec<ImageCase>> {
    let [rlo, rhi] = spec.radius_mm;
    if !(rlo > 0.0 && rhi >= rlo) {
        bail_arg!("radius range must be positive and ordered");
    }
    let n = spec.n_pos + spec.n_neg;
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let label = u8::from(i < spec.n_pos);
            let radius_mm = if rhi > rlo { rng.random_range(rlo..rhi) } else { rlo };
            let phantom = PhantomSpec {
                kind: PhantomKind::TexturedBlob {
                    radius_mm,
                    class: label,
                    noise_hu: spec.noise_hu,
                    base_hu: spec.base_hu,
                    contrast: spec.contrast,
                },
                dims: spec.dims,
                spacing: spec.spacing,
                seed: rng.next_u64(),
            };
            let (volume, mask) = make_phantom(&phantom)?;
            mask.require_nonempty()?;
            Ok(ImageCase {
                case_id: format!("case_{i:03}"),
                label,
                lesion_size_voxels: if label == 1 { mask.count() as u64 } else { 0 },
                volume,
                mask,
            })
        })
        .collect()
}

/// Writes `<case>.nii.gz`, `<case>_mask.nii.gz` and `labels.csv` into `dir`.
pub fn write_image_cohort(cases: &[ImageCase], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let labels = dir.join("labels.csv");
    let mut w = csv::Writer::from_path(&labels)?;
    w.write_record(["case_id", "label", "lesion_size_voxels"])?;
    for c in cases {
        write_volume(&c.volume, dir.join(format!("{}.nii.gz", c.case_id)), Format::Nifti1)?;
        write_mask(&c.mask, dir.join(format!("{}_mask.nii.gz", c.case_id)), Format::Nifti1)?;
        w.write_record([c.case_id.clone(), c.label.to_string(), c.lesion_size_voxels.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(&labels, e))
}
