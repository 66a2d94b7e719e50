//! Supercell mosaic patterns and the per-band sampling masks they induce.

use crate::error::{Error, Result};

/// Assignment of one spectral band to each offset of a repeating supercell.
///
/// The table is a permutation of `0..cell_rows * cell_cols`, so every band is
/// sampled exactly once per supercell. The pattern origin is frame pixel (0, 0).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MosaicPattern {
    cell_rows: usize,
    cell_cols: usize,
    band_of: Vec<usize>,
}

impl MosaicPattern {
    /// `band_of` is given in row-major cell order.
    pub fn new(cell_rows: usize, cell_cols: usize, band_of: Vec<usize>) -> Result<Self> {
        let n = cell_rows * cell_cols;
        if n == 0 {
            return Err(Error::InvalidPattern("empty supercell".into()));
        }
        if band_of.len() != n {
            return Err(Error::InvalidPattern(format!(
                "table has {} entries for a {cell_rows}x{cell_cols} cell",
                band_of.len()
            )));
        }
        let mut seen = vec![false; n];
        for &b in &band_of {
            if b >= n || seen[b] {
                return Err(Error::InvalidPattern(format!(
                    "band table is not a permutation of 0..{n}"
                )));
            }
            seen[b] = true;
        }
        Ok(Self {
            cell_rows,
            cell_cols,
            band_of,
        })
    }

    pub fn cell_rows(&self) -> usize {
        self.cell_rows
    }

    pub fn cell_cols(&self) -> usize {
        self.cell_cols
    }

    /// Number of bands the pattern samples (= cells per supercell).
    pub fn band_count(&self) -> usize {
        self.band_of.len()
    }

    /// The row-major band table.
    pub fn table(&self) -> &[usize] {
        &self.band_of
    }

    /// Band assigned to supercell offset `(r, c)`.
    #[inline]
    pub fn band_at_offset(&self, r: usize, c: usize) -> usize {
        self.band_of[r * self.cell_cols + c]
    }

    /// Band measured at frame pixel `(row, col)`.
    #[inline]
    pub fn band_at(&self, row: usize, col: usize) -> usize {
        self.band_at_offset(row % self.cell_rows, col % self.cell_cols)
    }

    /// Supercell offset of `band`.
    pub fn offset_of(&self, band: usize) -> Option<(usize, usize)> {
        self.band_of
            .iter()
            .position(|&b| b == band)
            .map(|i| (i / self.cell_cols, i % self.cell_cols))
    }

    /// Flat band index per pixel of an `height × width` frame.
    pub fn band_map(&self, height: usize, width: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                out.push(self.band_at(r, c));
            }
        }
        out
    }
}

/// The 4×4 snapshot-mosaic layout: offset `(r, c)` carries band `4r + c`.
pub fn imec_4x4_pattern() -> MosaicPattern {
    MosaicPattern {
        cell_rows: 4,
        cell_cols: 4,
        band_of: (0..16).collect(),
    }
}

/// Row-major boolean mask of pixels that measure `band`.
pub fn mask_of(
    pattern: &MosaicPattern,
    band: usize,
    height: usize,
    width: usize,
) -> Result<Vec<bool>> {
    if band >= pattern.band_count() {
        return Err(Error::BandOutOfRange {
            band,
            bands: pattern.band_count(),
        });
    }
    let mut mask = Vec::with_capacity(height * width);
    for r in 0..height {
        for c in 0..width {
            mask.push(pattern.band_at(r, c) == band);
        }
    }
    Ok(mask)
}
