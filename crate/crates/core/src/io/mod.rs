//! Cube persistence, ENVI import, image export and CSV reports.

mod envi;
mod native;
mod render;
mod report;

pub use envi::{import_envi, parse_envi_header, EnviHeader, Interleave};
pub use native::{
    decode_cube, decode_frame, encode_cube, encode_frame, read_cube, read_frame, write_cube,
    write_frame, CUBE_MAGIC, FORMAT_VERSION, FRAME_MAGIC,
};
pub use render::{encode_ppm, export_plane, export_rendering, normalize_to_u8};
pub use report::{format_sig6, write_bench_table, write_report, BenchRow, ReportRow};

use std::path::Path;

use crate::error::{Error, Result};

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
