//! Binary PPM (`P6`) export of band triples and scalar maps.

use std::path::Path;

use crate::cube::{HyperCube, Plane};
use crate::error::{Error, Result};

/// Min-max scaling to `0..=255`; a constant input maps to 0.
pub fn normalize_to_u8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        })
        .collect()
}

/// `P6` bytes from three equally sized channels.
pub fn encode_ppm(height: usize, width: usize, channels: [&[u8]; 3]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(height * width * 3);
    for p in 0..height * width {
        out.extend(channels.iter().map(|ch| ch[p]));
    }
    out
}

/// Writes bands `(r, g, b)` of `cube`, each normalized independently.
pub fn export_rendering(
    cube: &HyperCube,
    bands: (usize, usize, usize),
    path: impl AsRef<Path>,
) -> Result<()> {
    let triple = [bands.0, bands.1, bands.2];
    for &k in &triple {
        if k >= cube.bands() {
            return Err(Error::BandOutOfRange {
                band: k,
                bands: cube.bands(),
            });
        }
    }
    let [r, g, b] = triple.map(|k| normalize_to_u8(cube.band(k)));
    super::write_bytes(
        path.as_ref(),
        &encode_ppm(cube.height(), cube.width(), [&r, &g, &b]),
    )
}

/// Gray-level rendering of a scalar map.
pub fn export_plane(plane: &Plane, path: impl AsRef<Path>) -> Result<()> {
    let gray = normalize_to_u8(plane.as_slice());
    super::write_bytes(
        path.as_ref(),
        &encode_ppm(plane.height(), plane.width(), [&gray, &gray, &gray]),
    )
}
