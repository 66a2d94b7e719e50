//! The native `MSQC` cube and `MSQF` frame containers.
//!
//! Layout (all integers little-endian): 4-byte magic, `u16` version, `u32`
//! height, width and bands, `u8` dtype tag (1 = binary32 LE). A frame then
//! stores its `B`-byte band table (row-major cell order, square cell of side
//! `√B`) and the `H·W` raw samples; a cube stores `H·W·B` values band-major.

use std::path::Path;

use crate::cube::{HyperCube, Plane};
use crate::error::{Error, Result};
use crate::mosaic::MosaicFrame;
use crate::pattern::MosaicPattern;

pub const CUBE_MAGIC: [u8; 4] = *b"MSQC";
pub const FRAME_MAGIC: [u8; 4] = *b"MSQF";
pub const FORMAT_VERSION: u16 = 1;
const DTYPE_F32: u8 = 1;
const HEADER_LEN: usize = 4 + 2 + 3 * 4 + 1;

fn write_header(out: &mut Vec<u8>, magic: [u8; 4], h: usize, w: usize, b: usize) -> Result<()> {
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::HeaderMismatch(format!("dimension {v} exceeds u32")))
    };
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [h, w, b] {
        out.extend_from_slice(&dim(v)?.to_le_bytes());
    }
    out.push(DTYPE_F32);
    Ok(())
}

fn read_header(bytes: &[u8], magic: [u8; 4]) -> Result<(usize, usize, usize)> {
    if bytes.len() < 4 || bytes[..4] != magic {
        let mut found = [0u8; 4];
        let n = bytes.len().min(4);
        found[..n].copy_from_slice(&bytes[..n]);
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload {
            expected: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::HeaderMismatch(format!(
            "unsupported version {version}"
        )));
    }
    let u32_at =
        |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4-byte slice")) as usize;
    let (h, w, b) = (u32_at(6), u32_at(10), u32_at(14));
    if bytes[18] != DTYPE_F32 {
        return Err(Error::HeaderMismatch(format!(
            "unsupported dtype tag {}",
            bytes[18]
        )));
    }
    if h == 0 || w == 0 || b == 0 {
        return Err(Error::HeaderMismatch(format!(
            "empty dimensions {h}x{w}x{b}"
        )));
    }
    Ok((h, w, b))
}

fn push_f32(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 4);
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn read_f32(bytes: &[u8], count: usize) -> Result<Vec<f64>> {
    let expected = count * 4;
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            got: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::HeaderMismatch(format!(
            "{} trailing bytes",
            bytes.len() - expected
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")) as f64)
        .collect())
}

/// Values are stored as `f32`.
pub fn encode_cube(cube: &HyperCube) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + cube.as_slice().len() * 4);
    write_header(
        &mut out,
        CUBE_MAGIC,
        cube.height(),
        cube.width(),
        cube.bands(),
    )?;
    push_f32(&mut out, cube.as_slice());
    Ok(out)
}

pub fn decode_cube(bytes: &[u8]) -> Result<HyperCube> {
    let (h, w, b) = read_header(bytes, CUBE_MAGIC)?;
    HyperCube::from_vec(h, w, b, read_f32(&bytes[HEADER_LEN..], h * w * b)?)
}

pub fn encode_frame(frame: &MosaicFrame) -> Result<Vec<u8>> {
    let pattern = frame.pattern();
    if pattern.cell_rows() != pattern.cell_cols() || pattern.band_count() > 256 {
        return Err(Error::HeaderMismatch(format!(
            "only square supercells with at most 256 bands are storable, got {}x{}",
            pattern.cell_rows(),
            pattern.cell_cols()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + pattern.band_count() + frame.pixels() * 4);
    write_header(
        &mut out,
        FRAME_MAGIC,
        frame.height(),
        frame.width(),
        pattern.band_count(),
    )?;
    out.extend(pattern.table().iter().map(|&b| b as u8));
    push_f32(&mut out, frame.raw().as_slice());
    Ok(out)
}

pub fn decode_frame(bytes: &[u8]) -> Result<MosaicFrame> {
    let (h, w, b) = read_header(bytes, FRAME_MAGIC)?;
    let side = (b as f64).sqrt().round() as usize;
    if side * side != b {
        return Err(Error::HeaderMismatch(format!(
            "band count {b} is not a square supercell"
        )));
    }
    let rest = &bytes[HEADER_LEN..];
    if rest.len() < b {
        return Err(Error::TruncatedPayload {
            expected: b + h * w * 4,
            got: rest.len(),
        });
    }
    let table = rest[..b].iter().map(|&v| v as usize).collect();
    let pattern = MosaicPattern::new(side, side, table)?;
    let raw = Plane::from_vec(h, w, read_f32(&rest[b..], h * w)?)?;
    MosaicFrame::new(raw, pattern)
}

pub fn write_cube(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    super::write_bytes(path.as_ref(), &encode_cube(cube)?)
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<HyperCube> {
    decode_cube(&super::read_bytes(path.as_ref())?)
}

pub fn write_frame(frame: &MosaicFrame, path: impl AsRef<Path>) -> Result<()> {
    super::write_bytes(path.as_ref(), &encode_frame(frame)?)
}

pub fn read_frame(path: impl AsRef<Path>) -> Result<MosaicFrame> {
    decode_frame(&super::read_bytes(path.as_ref())?)
}
