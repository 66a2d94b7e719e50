//! CSV serialization of evaluation reports and benchmark tables.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

/// `%g`-style formatting with 6 significant digits; infinities print as
/// `inf`/`-inf`.
pub fn format_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{v:.*}", (5 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One line of an evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub image: String,
    pub method: String,
    pub init: String,
    pub metrics: MetricsReport,
}

/// Columns: `image,method,init,psnr_mean,psnr_std,ssim_mean,psnr_band_0,…`.
pub fn write_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bands = rows
        .iter()
        .map(|r| r.metrics.psnr_per_band.len())
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = [
        "image",
        "method",
        "init",
        "psnr_mean",
        "psnr_std",
        "ssim_mean",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..bands).map(|k| format!("psnr_band_{k}")));
    w.write_record(&header)?;
    for row in rows {
        let m = &row.metrics;
        let mut rec = vec![
            row.image.clone(),
            row.method.clone(),
            row.init.clone(),
            format_sig6(m.psnr_mean),
            format_sig6(m.psnr_std),
            format_sig6(m.ssim_mean),
        ];
        rec.extend((0..bands).map(|k| {
            m.psnr_per_band
                .get(k)
                .map_or_else(String::new, |&v| format_sig6(v))
        }));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One `(image, init)` line of a benchmark table: mean PSNR per method,
/// `None` where that method failed.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub init: String,
    pub psnr: Vec<Option<f64>>,
}

impl BenchRow {
    /// Index of the highest mean PSNR; ties go to the earlier method.
    pub fn best(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in self.psnr.iter().enumerate() {
            if let Some(v) = *v {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Columns: `image,init,<method>…,best`. Failed cells are left empty.
pub fn write_bench_table(
    methods: &[String],
    rows: &[BenchRow],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["image".to_string(), "init".to_string()];
    header.extend(methods.iter().cloned());
    header.push("best".into());
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.image.clone(), row.init.clone()];
        rec.extend(
            row.psnr
                .iter()
                .map(|v| v.map_or_else(String::new, format_sig6)),
        );
        rec.push(row.best().map_or_else(String::new, |i| methods[i].clone()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
