use super::{
    first_order_features, glcm_features, glrlm_features, ngtdm_features, shape_features, Degeneracy, Family,
    FeatureVector, TEXTURE_FAMILIES,
};
use crate::error::{Error, Result};
use crate::grid::{MaskGrid, VolumeGrid};
use crate::preprocess::{discretize, log_filter, DiscretizedVolume, Discretization};
use crate::texture::{glcm, glrlm, ngtdm};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub discretization: Discretization,
    /// LoG sigmas in mm; each adds one image variant.
    pub log_sigmas: Vec<f64>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            discretization: Discretization::FixedBinWidth { width: 25.0 },
            log_sigmas: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageVariant {
    Original,
    Log { sigma_mm: f64 },
}

impl ImageVariant {
    /// `original` or `log-sigma-2-0-mm`.
    pub fn prefix(&self) -> String {
        match self {
            ImageVariant::Original => "original".into(),
            ImageVariant::Log { sigma_mm } => {
                format!("log-sigma-{}-mm", format!("{sigma_mm:.1}").replace('.', "-"))
            }
        }
    }
}

/// One non-shape family on an already discretized image. Matrix failures become
/// NaN features with a reason.
pub fn family_features(family: Family, grid: &VolumeGrid, disc: &DiscretizedVolume) -> FeatureVector {
    let result = match family {
        Family::FirstOrder => first_order_features(grid, disc),
        Family::Glcm => glcm(disc).map(|m| glcm_features(&m)),
        Family::Glrlm => glrlm(disc).map(|m| glrlm_features(&m)),
        Family::Ngtdm => ngtdm(disc).map(|m| ngtdm_features(&m)),
        Family::Shape => panic!("shape features are computed from the mask"),
    };
    result.unwrap_or_else(|e| {
        let flag = match e {
            Error::Data(_) => Degeneracy::NoData,
            _ => Degeneracy::EmptyMatrix,
        };
        FeatureVector::all_nan(family, flag)
    })
}

fn variant_features(grid: &VolumeGrid, mask: &MaskGrid, mode: Discretization) -> FeatureVector {
    let families: Vec<FeatureVector> = match discretize(grid, mask, mode) {
        Ok(disc) => TEXTURE_FAMILIES
            .par_iter()
            .map(|&f| family_features(f, grid, &disc))
            .collect(),
        Err(_) => TEXTURE_FAMILIES
            .iter()
            .map(|&f| FeatureVector::all_nan(f, Degeneracy::NoData))
            .collect(),
    };
    let mut out = FeatureVector::new();
    for (family, v) in TEXTURE_FAMILIES.iter().zip(families) {
        out.extend_prefixed(&format!("{}_", family.key()), v);
    }
    out
}

/// First-order and texture features on the original image and every configured
/// LoG variant, followed by shape features of the mask.
pub fn extract_global(grid: &VolumeGrid, mask: &MaskGrid, config: &ExtractConfig) -> Result<FeatureVector> {
    mask.require_aligned(grid)?;
    mask.require_nonempty()?;
    let mut variants = vec![ImageVariant::Original];
    variants.extend(config.log_sigmas.iter().map(|&sigma_mm| ImageVariant::Log { sigma_mm }));
    let per_variant: Vec<Result<(ImageVariant, FeatureVector)>> = variants
        .par_iter()
        .map(|&variant| {
            let image = match variant {
                ImageVariant::Original => None,
                ImageVariant::Log { sigma_mm } => {
                    let filtered = log_filter(grid, sigma_mm)?;
                    if filtered.undersampled {
                        log::warn!("LoG sigma {sigma_mm} mm is below half a voxel on some axis");
                    }
                    Some(filtered.grid)
                }
            };
            let image = image.as_ref().unwrap_or(grid);
            Ok((variant, variant_features(image, mask, config.discretization)))
        })
        .collect();
    let mut out = FeatureVector::new();
    for r in per_variant {
        let (variant, v) = r?;
        out.extend_prefixed(&format!("{}_", variant.prefix()), v);
    }
    out.extend_prefixed("original_shape_", shape_features(mask)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    fn phantom() -> (VolumeGrid, MaskGrid) {
        let g = Geometry::new([12, 11, 10], [0.8, 0.8, 1.5], [0.0; 3]).unwrap();
        let v = VolumeGrid::from_fn(g, |x, y, z| ((x * 37 + y * 11 + z * 5) % 17) as f64 * 23.0 + (x * y) as f64);
        let m = MaskGrid::from_fn(g, |x, y, z| (2..10).contains(&x) && (1..9).contains(&y) && (2..9).contains(&z));
        (v, m)
    }

    #[test]
    fn original_only_composition() {
        let (v, m) = phantom();
        let f = extract_global(&v, &m, &ExtractConfig::default()).unwrap();
        let expected: usize = TEXTURE_FAMILIES.iter().map(|f| f.catalog().len()).sum::<usize>()
            + Family::Shape.catalog().len();
        assert_eq!(f.len(), expected);
        assert!(f.get("original_glcm_Correlation").is_some());
        assert!(f.get("original_shape_Sphericity").is_some());
        assert!(f.get("original_firstorder_Mean").is_some());
    }

    #[test]
    fn log_sigma_doubles_non_shape_count() {
        let (v, m) = phantom();
        let base = extract_global(&v, &m, &ExtractConfig::default()).unwrap();
        let cfg = ExtractConfig {
            log_sigmas: vec![2.0],
            ..ExtractConfig::default()
        };
        let with_log = extract_global(&v, &m, &cfg).unwrap();
        let shape = Family::Shape.catalog().len();
        assert_eq!(with_log.len() - shape, 2 * (base.len() - shape));
        assert!(with_log.get("log-sigma-2-0-mm_glcm_Contrast").is_some());
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let (v, m) = phantom();
        let cfg = ExtractConfig {
            log_sigmas: vec![1.0, 2.5],
            ..ExtractConfig::default()
        };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| extract_global(&v, &m, &cfg).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.names(), b.names());
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.value.to_bits(), y.value.to_bits(), "{}", x.name);
        }
    }

    #[test]
    fn misaligned_mask_rejected() {
        let (v, _) = phantom();
        let m = MaskGrid::full(Geometry::unit([2, 2, 2]));
        assert!(extract_global(&v, &m, &ExtractConfig::default()).is_err());
    }
}
