//! Named scalar features from intensities, texture matrices and mask geometry.

mod extract;
mod firstorder;
mod glcm;
mod glrlm;
pub mod marching_cubes;
mod ngtdm;
mod shape;

pub use extract::{extract_global, family_features, ExtractConfig, ImageVariant};
pub use firstorder::first_order_features;
pub use glcm::glcm_features;
pub use glrlm::glrlm_features;
pub use ngtdm::{ngtdm_features, COARSENESS_CAP, NGTDM_EPSILON};
pub use shape::shape_features;

use serde::{Deserialize, Serialize};
use std::fmt;

/// Why a value is NaN or was replaced by a documented constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// Zero variance; higher moments undefined.
    ZeroVariance,
    /// Marginal standard deviations vanish; correlation set to 0.
    FlatCooccurrence,
    /// Marginal entropies vanish; IMC1 set to 0.
    ZeroMarginalEntropy,
    /// Coarseness hit its cap.
    CoarsenessCapped,
    /// No neighborhood differences or a single gray level; value set to 0.
    UniformNeighborhood,
    /// The underlying matrix had no entries.
    EmptyMatrix,
    /// Sliding window held too few in-mask voxels.
    InsufficientWindow,
    /// Intensity data could not be discretized.
    NoData,
}

impl fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        write!(f, "{}", s.as_ref().and_then(|v| v.as_str()).unwrap_or("unknown"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    /// NaN serializes as JSON null.
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<Degeneracy>,
}

/// Ordered, uniquely named feature values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    features: Vec<Feature>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a value; panics on a duplicate name, which is a catalog bug.
    pub fn push(&mut self, name: impl Into<String>, value: f64, flag: Option<Degeneracy>) {
        let name = name.into();
        assert!(self.get(&name).is_none(), "duplicate feature name {name}");
        self.features.push(Feature { name, value, flag });
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Feature> {
        self.features.iter()
    }

    pub fn get(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|f| f.value)
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.value).collect()
    }

    /// Appends `other` with every name prefixed by `prefix`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: FeatureVector) {
        for f in other.features {
            self.push(format!("{prefix}{}", f.name), f.value, f.flag);
        }
    }

    /// CSV cells; NaN becomes an empty cell.
    pub fn csv_cells(&self) -> Vec<String> {
        self.features
            .iter()
            .map(|f| if f.value.is_nan() { String::new() } else { format!("{}", f.value) })
            .collect()
    }

    pub(crate) fn all_nan(family: Family, flag: Degeneracy) -> Self {
        let mut v = Self::new();
        for name in family.catalog() {
            v.push(*name, f64::NAN, Some(flag));
        }
        v
    }
}

/// Feature families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    FirstOrder,
    Glcm,
    Glrlm,
    Ngtdm,
    Shape,
}

pub const TEXTURE_FAMILIES: [Family; 4] = [Family::FirstOrder, Family::Glcm, Family::Glrlm, Family::Ngtdm];

impl Family {
    pub fn key(self) -> &'static str {
        match self {
            Family::FirstOrder => "firstorder",
            Family::Glcm => "glcm",
            Family::Glrlm => "glrlm",
            Family::Ngtdm => "ngtdm",
            Family::Shape => "shape",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        [Family::FirstOrder, Family::Glcm, Family::Glrlm, Family::Ngtdm, Family::Shape]
            .into_iter()
            .find(|f| f.key() == key)
    }

    /// Feature names in output order.
    pub fn catalog(self) -> &'static [&'static str] {
        match self {
            Family::FirstOrder => &[
                "Mean",
                "Variance",
                "Skewness",
                "Kurtosis",
                "Minimum",
                "Maximum",
                "Median",
                "Range",
                "Energy",
                "RootMeanSquared",
                "MeanAbsoluteDeviation",
                "10Percentile",
                "90Percentile",
                "Entropy",
                "Uniformity",
            ],
            Family::Glcm => &[
                "Autocorrelation",
                "Contrast",
                "Correlation",
                "Idm",
                "Imc1",
                "Imc2",
                "JointEnergy",
                "JointEntropy",
            ],
            Family::Glrlm => &[
                "ShortRunEmphasis",
                "LongRunEmphasis",
                "GrayLevelNonUniformity",
                "RunLengthNonUniformity",
                "RunPercentage",
                "LowGrayLevelRunEmphasis",
                "HighGrayLevelRunEmphasis",
            ],
            Family::Ngtdm => &["Coarseness", "Contrast", "Busyness", "Complexity", "Strength"],
            Family::Shape => &[
                "VoxelVolume",
                "SurfaceArea",
                "SurfaceVolumeRatio",
                "Sphericity",
                "Elongation",
                "Flatness",
            ],
        }
    }
}

/// A `<family>_<feature>` reference such as `glcm_Correlation`, optionally
/// prefixed by an image variant (`original_glcm_Correlation`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureId {
    pub family: Family,
    pub feature: &'static str,
}

impl FeatureId {
    pub fn parse(name: &str) -> Option<Self> {
        let name = name.strip_prefix("original_").unwrap_or(name);
        let (fam, feat) = name.split_once('_')?;
        let family = Family::from_key(fam)?;
        let feature = family.catalog().iter().find(|f| **f == feat)?;
        Some(Self { family, feature })
    }

    pub fn key(&self) -> String {
        format!("{}_{}", self.family.key(), self.feature)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.family.key(), self.feature)
    }
}

/// Mean over per-direction values; flags if any direction was flagged.
pub(crate) fn average_directions(per_direction: &[Vec<(f64, Option<Degeneracy>)>], names: &[&str]) -> FeatureVector {
    let mut out = FeatureVector::new();
    let n = per_direction.len() as f64;
    for (k, name) in names.iter().enumerate() {
        let mut sum = 0.0;
        let mut flag = None;
        for dir in per_direction {
            sum += dir[k].0;
            flag = flag.or(dir[k].1);
        }
        out.push(*name, sum / n, flag);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_feature_ids() {
        let id = FeatureId::parse("glcm_Correlation").unwrap();
        assert_eq!(id.family, Family::Glcm);
        assert_eq!(FeatureId::parse("original_ngtdm_Strength").unwrap().feature, "Strength");
        assert_eq!(FeatureId::parse("firstorder_10Percentile").unwrap().key(), "firstorder_10Percentile");
        assert!(FeatureId::parse("glcm_Nope").is_none());
        assert!(FeatureId::parse("wavelet_glcm_Contrast").is_none());
    }

    #[test]
    fn csv_cells_blank_nan() {
        let mut v = FeatureVector::new();
        v.push("a", 1.5, None);
        v.push("b", f64::NAN, Some(Degeneracy::EmptyMatrix));
        assert_eq!(v.csv_cells(), vec!["1.5".to_string(), String::new()]);
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("null") && json.contains("empty_matrix"));
    }

    #[test]
    #[should_panic(expected = "duplicate")]
    fn duplicate_names_rejected() {
        let mut v = FeatureVector::new();
        v.push("a", 1.0, None);
        v.push("a", 2.0, None);
    }
}
