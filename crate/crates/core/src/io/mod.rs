//! Reading and writing volumes: a NIfTI-1 subset and the `rawjson` sidecar pair.

mod nifti;
mod rawjson;

use crate::error::{Error, Result};
use crate::grid::{MaskGrid, VolumeGrid};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub use nifti::{read_nifti, write_nifti, write_nifti_as, NiftiDatatype};
pub use rawjson::{read_rawjson, write_rawjson, RawJsonHeader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Nifti1,
    RawJson,
}

impl Format {
    /// `.nii` / `.nii.gz` map to NIfTI-1, `.json` to rawjson.
    pub fn from_path(path: &Path) -> Result<Self> {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_ascii_lowercase();
        if name.ends_with(".nii") || name.ends_with(".nii.gz") {
            Ok(Format::Nifti1)
        } else if name.ends_with(".json") {
            Ok(Format::RawJson)
        } else {
            Err(Error::Unsupported(format!(
                "cannot infer volume format from {}",
                path.display()
            )))
        }
    }
}

pub fn read_volume(path: impl AsRef<Path>, format: Format) -> Result<VolumeGrid> {
    match format {
        Format::Nifti1 => read_nifti(path.as_ref()),
        Format::RawJson => read_rawjson(path.as_ref()),
    }
}

/// NaN voxels are written as IEEE NaN in float32.
pub fn write_volume(grid: &VolumeGrid, path: impl AsRef<Path>, format: Format) -> Result<()> {
    match format {
        Format::Nifti1 => write_nifti(grid, path.as_ref()),
        Format::RawJson => write_rawjson(grid, path.as_ref()),
    }
}

/// Reads any supported volume and rounds it to integer labels.
pub fn read_mask(path: impl AsRef<Path>, format: Format) -> Result<MaskGrid> {
    read_volume(path, format).map(|g| MaskGrid::from_volume(&g))
}

pub fn write_mask(mask: &MaskGrid, path: impl AsRef<Path>, format: Format) -> Result<()> {
    write_volume(&mask.to_volume(), path, format)
}

/// Reads with the format inferred from the file name.
pub fn read_volume_auto(path: impl AsRef<Path>) -> Result<VolumeGrid> {
    let path = path.as_ref();
    read_volume(path, Format::from_path(path)?)
}

pub fn write_volume_auto(grid: &VolumeGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_volume(grid, path, Format::from_path(path)?)
}
