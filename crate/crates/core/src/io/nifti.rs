//! Single-file NIfTI-1 (`n+1`) subset: scalar int16/uint8/float32/float64 volumes
//! with an axis-aligned qform or sform.

use crate::error::{Error, Result};
use crate::grid::{Geometry, VolumeGrid};
use byteorder::{BigEndian, ByteOrder, LittleEndian};
use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use std::io::{Read, Write};
use std::path::Path;

const HEADER_SIZE: usize = 348;
const DATA_OFFSET: usize = 352;
const MAGIC_SINGLE: &[u8; 4] = b"n+1\0";
const MAGIC_PAIR: &[u8; 4] = b"ni1\0";
const AXIS_TOLERANCE: f64 = 1e-6;

/// Voxel encodings accepted by the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiftiDatatype {
    Uint8,
    Int16,
    Float32,
    Float64,
}

impl NiftiDatatype {
    fn code(self) -> i16 {
        match self {
            NiftiDatatype::Uint8 => 2,
            NiftiDatatype::Int16 => 4,
            NiftiDatatype::Float32 => 16,
            NiftiDatatype::Float64 => 64,
        }
    }

    fn from_code(code: i16) -> Option<Self> {
        match code {
            2 => Some(NiftiDatatype::Uint8),
            4 => Some(NiftiDatatype::Int16),
            16 => Some(NiftiDatatype::Float32),
            64 => Some(NiftiDatatype::Float64),
            _ => None,
        }
    }

    fn bytes(self) -> usize {
        match self {
            NiftiDatatype::Uint8 => 1,
            NiftiDatatype::Int16 => 2,
            NiftiDatatype::Float32 => 4,
            NiftiDatatype::Float64 => 8,
        }
    }
}

#[derive(Clone, Copy)]
enum Endian {
    Little,
    Big,
}

struct Fields<'a> {
    bytes: &'a [u8],
    endian: Endian,
}

impl Fields<'_> {
    fn i16(&self, at: usize) -> i16 {
        match self.endian {
            Endian::Little => LittleEndian::read_i16(&self.bytes[at..]),
            Endian::Big => BigEndian::read_i16(&self.bytes[at..]),
        }
    }

    fn f32(&self, at: usize) -> f64 {
        (match self.endian {
            Endian::Little => LittleEndian::read_f32(&self.bytes[at..]),
            Endian::Big => BigEndian::read_f32(&self.bytes[at..]),
        }) as f64
    }

    fn sample(&self, datatype: NiftiDatatype, at: usize) -> f64 {
        let b = &self.bytes[at..];
        match (datatype, self.endian) {
            (NiftiDatatype::Uint8, _) => b[0] as f64,
            (NiftiDatatype::Int16, Endian::Little) => LittleEndian::read_i16(b) as f64,
            (NiftiDatatype::Int16, Endian::Big) => BigEndian::read_i16(b) as f64,
            (NiftiDatatype::Float32, Endian::Little) => LittleEndian::read_f32(b) as f64,
            (NiftiDatatype::Float32, Endian::Big) => BigEndian::read_f32(b) as f64,
            (NiftiDatatype::Float64, Endian::Little) => LittleEndian::read_f64(b),
            (NiftiDatatype::Float64, Endian::Big) => BigEndian::read_f64(b),
        }
    }
}

fn load_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        MultiGzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub fn read_nifti(path: &Path) -> Result<VolumeGrid> {
    decode(&load_bytes(path)?)
}

fn decode(bytes: &[u8]) -> Result<VolumeGrid> {
    if bytes.len() < HEADER_SIZE {
        return Err(Error::format(
            bytes.len() as u64,
            format!("file ends before the {HEADER_SIZE}-byte header"),
        ));
    }
    let endian = if LittleEndian::read_i32(bytes) == HEADER_SIZE as i32 {
        Endian::Little
    } else if BigEndian::read_i32(bytes) == HEADER_SIZE as i32 {
        Endian::Big
    } else {
        return Err(Error::format(0, "sizeof_hdr is not 348"));
    };
    let f = Fields { bytes, endian };

    let magic = &bytes[344..348];
    if magic == MAGIC_PAIR {
        return Err(Error::Unsupported(
            "two-file NIfTI (.hdr/.img) pairs".into(),
        ));
    }
    if magic != MAGIC_SINGLE {
        return Err(Error::format(344, "bad magic, expected \"n+1\\0\""));
    }

    let ndim = f.i16(40);
    if !(1..=7).contains(&ndim) {
        return Err(Error::format(40, format!("dim[0] = {ndim} out of range 1..=7")));
    }
    let mut dims = [1usize; 3];
    for k in 1..=ndim as usize {
        let d = f.i16(40 + 2 * k);
        if d < 1 {
            return Err(Error::format(
                (40 + 2 * k) as u64,
                format!("dim[{k}] = {d} is not positive"),
            ));
        }
        if k <= 3 {
            dims[k - 1] = d as usize;
        } else if d != 1 {
            return Err(Error::Unsupported(format!(
                "volumes with dim[{k}] = {d} (time series / multi-component)"
            )));
        }
    }

    let code = f.i16(70);
    let datatype = NiftiDatatype::from_code(code).ok_or_else(|| {
        Error::Unsupported(format!(
            "NIfTI datatype code {code} (supported: 2 uint8, 4 int16, 16 float32, 64 float64)"
        ))
    })?;
    let bitpix = f.i16(72);
    if bitpix as usize != datatype.bytes() * 8 {
        return Err(Error::format(
            72,
            format!("bitpix {bitpix} inconsistent with datatype {code}"),
        ));
    }

    let mut spacing = [0.0; 3];
    for (a, s) in spacing.iter_mut().enumerate() {
        let at = 80 + 4 * a;
        let v = f.f32(at);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::format(
                at as u64,
                format!("pixdim[{}] = {v} is not a positive spacing", a + 1),
            ));
        }
        *s = v;
    }

    let vox_offset = f.f32(108);
    if !(vox_offset.is_finite() && vox_offset >= DATA_OFFSET as f64) {
        return Err(Error::format(
            108,
            format!("vox_offset {vox_offset} must be at least {DATA_OFFSET}"),
        ));
    }
    let start = vox_offset as usize;
    let geometry_origin = origin(&f)?;

    let geometry = Geometry::new(dims, spacing, geometry_origin)?;
    let n = geometry.len();
    let end = start + n * datatype.bytes();
    if bytes.len() < end {
        return Err(Error::format(
            bytes.len() as u64,
            format!("voxel data truncated: need {end} bytes, have {}", bytes.len()),
        ));
    }

    let slope = f.f32(112);
    let inter = f.f32(116);
    let scale = slope.is_finite() && slope != 0.0 && !(slope == 1.0 && inter == 0.0);
    let inter = if inter.is_finite() { inter } else { 0.0 };
    let values = (0..n)
        .map(|i| {
            let v = f.sample(datatype, start + i * datatype.bytes());
            if scale {
                v * slope + inter
            } else {
                v
            }
        })
        .collect();
    VolumeGrid::new_allow_nan(geometry, values)
}

/// Offset of the voxel-to-world transform, rejecting rotations other than axis flips.
fn origin(f: &Fields) -> Result<[f64; 3]> {
    let qform_code = f.i16(252);
    let sform_code = f.i16(254);
    if sform_code > 0 {
        let mut m = [[0.0; 4]; 3];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = f.f32(280 + 16 * r + 4 * c);
            }
        }
        let scale = (0..3).map(|a| m[a][a].abs()).fold(0.0, f64::max);
        for (r, row) in m.iter().enumerate() {
            for (c, &v) in row.iter().take(3).enumerate() {
                if r != c && v.abs() > AXIS_TOLERANCE * scale.max(1.0) {
                    return Err(Error::Unsupported(format!(
                        "oblique sform (srow[{r}][{c}] = {v}); only axis-aligned affines are read"
                    )));
                }
            }
        }
        Ok([m[0][3], m[1][3], m[2][3]])
    } else if qform_code > 0 {
        let (b, c, d) = (f.f32(256), f.f32(260), f.f32(264));
        let a = (1.0 - (b * b + c * c + d * d)).max(0.0).sqrt();
        let rot = [
            [a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c)],
            [2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b)],
            [2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b],
        ];
        for (r, row) in rot.iter().enumerate() {
            for (col, &v) in row.iter().enumerate() {
                if r != col && v.abs() > AXIS_TOLERANCE {
                    return Err(Error::Unsupported(format!(
                        "oblique qform (rotation[{r}][{col}] = {v:.6}); only axis-aligned orientations are read"
                    )));
                }
            }
        }
        Ok([f.f32(268), f.f32(272), f.f32(276)])
    } else {
        Ok([0.0; 3])
    }
}

fn encode(grid: &VolumeGrid, datatype: NiftiDatatype) -> Vec<u8> {
    let g = &grid.geometry;
    let mut h = vec![0u8; DATA_OFFSET];
    LittleEndian::write_i32(&mut h[0..], HEADER_SIZE as i32);
    h[38] = b'r';
    let dim: [i16; 8] = [3, g.dims[0] as i16, g.dims[1] as i16, g.dims[2] as i16, 1, 1, 1, 1];
    for (k, d) in dim.iter().enumerate() {
        LittleEndian::write_i16(&mut h[40 + 2 * k..], *d);
    }
    LittleEndian::write_i16(&mut h[70..], datatype.code());
    LittleEndian::write_i16(&mut h[72..], (datatype.bytes() * 8) as i16);
    let pixdim = [1.0, g.spacing[0], g.spacing[1], g.spacing[2], 1.0, 1.0, 1.0, 1.0];
    for (k, p) in pixdim.iter().enumerate() {
        LittleEndian::write_f32(&mut h[76 + 4 * k..], *p as f32);
    }
    LittleEndian::write_f32(&mut h[108..], DATA_OFFSET as f32);
    LittleEndian::write_f32(&mut h[112..], 1.0);
    LittleEndian::write_f32(&mut h[116..], 0.0);
    h[123] = 2; // mm
    LittleEndian::write_i16(&mut h[252..], 1);
    LittleEndian::write_i16(&mut h[254..], 1);
    for a in 0..3 {
        LittleEndian::write_f32(&mut h[268 + 4 * a..], g.origin[a] as f32);
        LittleEndian::write_f32(&mut h[280 + 16 * a + 4 * a..], g.spacing[a] as f32);
        LittleEndian::write_f32(&mut h[280 + 16 * a + 12..], g.origin[a] as f32);
    }
    h[344..348].copy_from_slice(MAGIC_SINGLE);

    let width = datatype.bytes();
    let mut out = h;
    out.resize(DATA_OFFSET + grid.values.len() * width, 0);
    for (chunk, &v) in out[DATA_OFFSET..].chunks_exact_mut(width).zip(&grid.values) {
        match datatype {
            NiftiDatatype::Uint8 => chunk[0] = v.round().clamp(0.0, 255.0) as u8,
            NiftiDatatype::Int16 => LittleEndian::write_i16(
                chunk,
                v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16,
            ),
            NiftiDatatype::Float32 => LittleEndian::write_f32(chunk, v as f32),
            NiftiDatatype::Float64 => LittleEndian::write_f64(chunk, v),
        }
    }
    out
}

/// Writes float32 samples; `.gz` suffix selects gzip compression.
pub fn write_nifti(grid: &VolumeGrid, path: &Path) -> Result<()> {
    write_nifti_as(grid, path, NiftiDatatype::Float32)
}

/// Writes with an explicit sample encoding. Integer encodings round and saturate.
pub fn write_nifti_as(grid: &VolumeGrid, path: &Path, datatype: NiftiDatatype) -> Result<()> {
    let bytes = encode(grid, datatype);
    let gz = path
        .file_name()
        .and_then(|n| n.to_str())
        .is_some_and(|n| n.to_ascii_lowercase().ends_with(".gz"));
    let io = |e| Error::io(path, e);
    if gz {
        let file = std::fs::File::create(path).map_err(io)?;
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(&bytes).map_err(io)?;
        enc.finish().map_err(io)?;
        Ok(())
    } else {
        std::fs::write(path, bytes).map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Geometry;

    fn grid(dims: [usize; 3], values: Vec<f64>) -> VolumeGrid {
        VolumeGrid::new_allow_nan(Geometry::unit(dims), values).unwrap()
    }

    #[test]
    fn float32_identity_geometry() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.nii");
        let g = grid([4, 4, 4], (0..64).map(|v| v as f64 * 0.5).collect());
        write_nifti(&g, &p).unwrap();
        let back = read_nifti(&p).unwrap();
        assert_eq!(back.geometry.dims, [4, 4, 4]);
        assert_eq!(back.geometry.spacing, [1.0; 3]);
        assert_eq!(back.values, g.values);
    }

    #[test]
    fn int16_scaling_applied() {
        let mut bytes = encode(&grid([1, 1, 1], vec![3.0]), NiftiDatatype::Int16);
        LittleEndian::write_f32(&mut bytes[112..], 2.0);
        LittleEndian::write_f32(&mut bytes[116..], 1.0);
        let g = decode(&bytes).unwrap();
        // 3 * 2 + 1
        assert_eq!(g.values, vec![7.0]);
    }

    #[test]
    fn zero_slope_means_unscaled() {
        let mut bytes = encode(&grid([1, 1, 1], vec![3.0]), NiftiDatatype::Int16);
        LittleEndian::write_f32(&mut bytes[112..], 0.0);
        LittleEndian::write_f32(&mut bytes[116..], 5.0);
        assert_eq!(decode(&bytes).unwrap().values, vec![3.0]);
    }

    #[test]
    fn big_endian_header_read() {
        let le = encode(&grid([2, 1, 1], vec![1.0, -4.0]), NiftiDatatype::Int16);
        let mut be = le.clone();
        let swap = |b: &mut [u8], at: usize, w: usize| b[at..at + w].reverse();
        swap(&mut be, 0, 4);
        for k in 0..8 {
            swap(&mut be, 40 + 2 * k, 2);
            swap(&mut be, 76 + 4 * k, 4);
        }
        for at in [70, 72, 252, 254] {
            swap(&mut be, at, 2);
        }
        for at in [108, 112, 116, 268, 272, 276] {
            swap(&mut be, at, 4);
        }
        for k in 0..12 {
            swap(&mut be, 280 + 4 * k, 4);
        }
        swap(&mut be, DATA_OFFSET, 2);
        swap(&mut be, DATA_OFFSET + 2, 2);
        let g = decode(&be).unwrap();
        assert_eq!(g.values, vec![1.0, -4.0]);
    }

    #[test]
    fn unsupported_datatype_is_explicit() {
        let mut bytes = encode(&grid([1, 1, 1], vec![0.0]), NiftiDatatype::Float32);
        LittleEndian::write_i16(&mut bytes[70..], 32); // complex64
        LittleEndian::write_i16(&mut bytes[72..], 64);
        assert!(matches!(decode(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn malformed_headers_report_offsets() {
        let good = encode(&grid([2, 2, 2], vec![0.0; 8]), NiftiDatatype::Float32);
        assert!(matches!(decode(&good[..100]), Err(Error::Format { offset: 100, .. })));

        let mut bad = good.clone();
        bad[0] = 0;
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 0, .. })));

        let mut bad = good.clone();
        bad[344] = b'x';
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 344, .. })));

        let mut bad = good.clone();
        LittleEndian::write_i16(&mut bad[44..], 0);
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 44, .. })));

        let mut bad = good.clone();
        LittleEndian::write_f32(&mut bad[84..], -1.0);
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 84, .. })));

        let mut bad = good.clone();
        LittleEndian::write_i16(&mut bad[72..], 8);
        assert!(matches!(decode(&bad), Err(Error::Format { offset: 72, .. })));

        assert!(matches!(
            decode(&good[..good.len() - 1]),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn oblique_affine_rejected() {
        let mut bytes = encode(&grid([1, 1, 1], vec![0.0]), NiftiDatatype::Float32);
        LittleEndian::write_f32(&mut bytes[284..], 0.3);
        assert!(matches!(decode(&bytes), Err(Error::Unsupported(_))));

        let mut bytes = encode(&grid([1, 1, 1], vec![0.0]), NiftiDatatype::Float32);
        LittleEndian::write_i16(&mut bytes[254..], 0);
        LittleEndian::write_f32(&mut bytes[264..], 0.38); // rotation about z
        assert!(matches!(decode(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn qform_axis_flip_accepted() {
        let mut bytes = encode(&grid([1, 1, 1], vec![0.0]), NiftiDatatype::Float32);
        LittleEndian::write_i16(&mut bytes[254..], 0);
        LittleEndian::write_f32(&mut bytes[264..], 1.0); // 180 degrees about z
        LittleEndian::write_f32(&mut bytes[268..], 12.5);
        assert_eq!(decode(&bytes).unwrap().geometry.origin, [12.5, 0.0, 0.0]);
    }

    #[test]
    fn time_series_rejected() {
        let mut bytes = encode(&grid([1, 1, 1], vec![0.0]), NiftiDatatype::Float32);
        LittleEndian::write_i16(&mut bytes[40..], 4);
        LittleEndian::write_i16(&mut bytes[48..], 2);
        assert!(matches!(decode(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn pair_magic_rejected() {
        let mut bytes = encode(&grid([1, 1, 1], vec![0.0]), NiftiDatatype::Float32);
        bytes[344..348].copy_from_slice(MAGIC_PAIR);
        assert!(matches!(decode(&bytes), Err(Error::Unsupported(_))));
    }
}
