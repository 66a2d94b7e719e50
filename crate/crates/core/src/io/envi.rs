//! Import of ENVI header + raw binary cubes.

use std::collections::HashMap;
use std::path::Path;

use crate::cube::HyperCube;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

/// The header fields the importer understands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub header_offset: usize,
    pub data_type: u32,
    pub interleave: Interleave,
    pub big_endian: bool,
}

/// Splits `key = value` entries, joining `{ … }` values that span lines.
fn entries(text: &str) -> Result<HashMap<String, String>> {
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("ENVI") => {}
        _ => {
            return Err(Error::HeaderParseError(
                "missing ENVI signature line".into(),
            ))
        }
    }
    let mut map = HashMap::new();
    let mut pending: Option<(String, String)> = None;
    for line in lines {
        if let Some((key, mut value)) = pending.take() {
            value.push(' ');
            value.push_str(line.trim());
            if line.contains('}') {
                map.insert(key, value);
            } else {
                pending = Some((key, value));
            }
            continue;
        }
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::HeaderParseError(format!(
                "expected `key = value`, got {line:?}"
            )));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if value.starts_with('{') && !value.contains('}') {
            pending = Some((key, value));
        } else {
            map.insert(key, value);
        }
    }
    if let Some((key, _)) = pending {
        return Err(Error::HeaderParseError(format!(
            "unterminated brace in {key:?}"
        )));
    }
    Ok(map)
}

pub fn parse_envi_header(text: &str) -> Result<EnviHeader> {
    let map = entries(text)?;
    let int = |key: &str, default: Option<usize>| -> Result<usize> {
        match map.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::HeaderParseError(format!("{key}: not an integer: {v:?}"))),
            None => {
                default.ok_or_else(|| Error::HeaderParseError(format!("missing field {key:?}")))
            }
        }
    };
    let samples = int("samples", None)?;
    let lines = int("lines", None)?;
    let bands = int("bands", None)?;
    let header_offset = int("header offset", Some(0))?;
    let data_type = int("data type", None)? as u32;
    if !matches!(data_type, 2 | 4 | 12) {
        return Err(Error::UnsupportedDataType(data_type));
    }
    let interleave = match map.get("interleave").map(|s| s.to_ascii_lowercase()) {
        Some(s) if s == "bsq" => Interleave::Bsq,
        Some(s) if s == "bil" => Interleave::Bil,
        Some(s) if s == "bip" => Interleave::Bip,
        Some(s) => return Err(Error::UnsupportedInterleave(s)),
        None => {
            return Err(Error::HeaderParseError(
                "missing field \"interleave\"".into(),
            ))
        }
    };
    let big_endian = match int("byte order", Some(0))? {
        0 => false,
        1 => true,
        other => {
            return Err(Error::HeaderParseError(format!(
                "byte order must be 0 or 1, got {other}"
            )))
        }
    };
    if samples == 0 || lines == 0 || bands == 0 {
        return Err(Error::EmptyDimension {
            height: lines,
            width: samples,
            bands,
        });
    }
    Ok(EnviHeader {
        samples,
        lines,
        bands,
        header_offset,
        data_type,
        interleave,
        big_endian,
    })
}

fn decode_values(header: &EnviHeader, bytes: &[u8]) -> Vec<f64> {
    let be = header.big_endian;
    match header.data_type {
        4 => bytes
            .chunks_exact(4)
            .map(|c| {
                let a: [u8; 4] = c.try_into().expect("4-byte chunk");
                (if be {
                    f32::from_be_bytes(a)
                } else {
                    f32::from_le_bytes(a)
                }) as f64
            })
            .collect(),
        12 => bytes
            .chunks_exact(2)
            .map(|c| {
                let a = [c[0], c[1]];
                (if be {
                    u16::from_be_bytes(a)
                } else {
                    u16::from_le_bytes(a)
                }) as f64
            })
            .collect(),
        2 => bytes
            .chunks_exact(2)
            .map(|c| {
                let a = [c[0], c[1]];
                (if be {
                    i16::from_be_bytes(a)
                } else {
                    i16::from_le_bytes(a)
                }) as f64
            })
            .collect(),
        _ => unreachable!("data type validated by the header parser"),
    }
}

/// Reorders the file's interleave into a band-major cube.
pub fn import_envi(
    header_path: impl AsRef<Path>,
    data_path: impl AsRef<Path>,
) -> Result<HyperCube> {
    let header_path = header_path.as_ref();
    let text = std::fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header = parse_envi_header(&text)?;
    let bytes = super::read_bytes(data_path.as_ref())?;

    let (h, w, b) = (header.lines, header.samples, header.bands);
    let width = if header.data_type == 4 { 4 } else { 2 };
    let expected = header.header_offset + h * w * b * width;
    if bytes.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            got: bytes.len(),
        });
    }
    let values = decode_values(&header, &bytes[header.header_offset..expected]);
    let index = |r: usize, c: usize, k: usize| match header.interleave {
        Interleave::Bsq => (k * h + r) * w + c,
        Interleave::Bil => (r * b + k) * w + c,
        Interleave::Bip => (r * w + c) * b + k,
    };
    HyperCube::from_fn(h, w, b, |r, c, k| values[index(r, c, k)])
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "ENVI\ndescription = {test\n  fixture}\nsamples = 3\nlines = 2\nbands = 2\n\
                          header offset = 0\nfile type = ENVI Standard\ndata type = 4\ninterleave = bsq\nbyte order = 0\n";

    #[test]
    fn parses_fields_and_multiline_braces() {
        let h = parse_envi_header(HEADER).unwrap();
        assert_eq!((h.samples, h.lines, h.bands, h.data_type), (3, 2, 2, 4));
        assert_eq!(h.interleave, Interleave::Bsq);
        assert!(!h.big_endian);
    }

    #[test]
    fn rejects_unsupported() {
        let complex = HEADER.replace("data type = 4", "data type = 6");
        assert!(matches!(
            parse_envi_header(&complex),
            Err(Error::UnsupportedDataType(6))
        ));
        let tiled = HEADER.replace("interleave = bsq", "interleave = tiles");
        assert!(matches!(
            parse_envi_header(&tiled),
            Err(Error::UnsupportedInterleave(_))
        ));
        assert!(matches!(
            parse_envi_header("samples = 3"),
            Err(Error::HeaderParseError(_))
        ));
        let missing = HEADER.replace("lines = 2\n", "");
        assert!(matches!(
            parse_envi_header(&missing),
            Err(Error::HeaderParseError(_))
        ));
    }
}
