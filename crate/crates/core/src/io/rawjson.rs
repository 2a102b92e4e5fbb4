use crate::error::{Error, Result};
use crate::grid::{Geometry, VolumeGrid};
use byteorder::{ByteOrder, LittleEndian};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// JSON half of a `.json` + `.bin` pair. The binary is little-endian `dtype` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawJsonHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub dtype: String,
}

fn bin_path(json: &Path) -> PathBuf {
    json.with_extension("bin")
}

pub fn read_rawjson(path: &Path) -> Result<VolumeGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: RawJsonHeader = serde_json::from_str(&text)?;
    let width = match header.dtype.as_str() {
        "float32" => 4,
        "float64" => 8,
        other => {
            return Err(Error::Unsupported(format!(
                "rawjson dtype {other:?} (expected float32 or float64)"
            )))
        }
    };
    let geometry = Geometry::new(header.dims, header.spacing, header.origin)?;
    let bin = bin_path(path);
    let bytes = std::fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    let expected = geometry.len() * width;
    if bytes.len() != expected {
        return Err(Error::format(
            bytes.len().min(expected) as u64,
            format!(
                "{} holds {} bytes, header implies {expected}",
                bin.display(),
                bytes.len()
            ),
        ));
    }
    let values = if width == 4 {
        bytes
            .chunks_exact(4)
            .map(|c| LittleEndian::read_f32(c) as f64)
            .collect()
    } else {
        bytes.chunks_exact(8).map(LittleEndian::read_f64).collect()
    };
    VolumeGrid::new_allow_nan(geometry, values)
}

pub fn write_rawjson(grid: &VolumeGrid, path: &Path) -> Result<()> {
    let header = RawJsonHeader {
        dims: grid.geometry.dims,
        spacing: grid.geometry.spacing,
        origin: grid.geometry.origin,
        dtype: "float32".into(),
    };
    let mut bytes = vec![0u8; grid.values.len() * 4];
    for (chunk, &v) in bytes.chunks_exact_mut(4).zip(&grid.values) {
        LittleEndian::write_f32(chunk, v as f32);
    }
    let bin = bin_path(path);
    std::fs::write(&bin, bytes).map_err(|e| Error::io(&bin, e))?;
    let text = serde_json::to_string_pretty(&header)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
