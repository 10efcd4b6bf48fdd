//! File formats: 16-bit binary PGM for images, plain CSV for
//! sinograms, iteration traces, and experiment summaries.
//!
//! Floating-point cells use Rust's shortest round-trip formatting, so
//! writing the same numbers always yields byte-identical files and
//! reading them back loses nothing.

use crate::error::{Error, Result};
use crate::model::{Image, Sinogram};
use crate::solver::IterationTrace;
use std::io::Write as _;
use std::path::Path;

const PGM_MAXVAL: u32 = 65535;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), reason: reason.into() }
}

// ===================================================================
// PGM images
// ===================================================================

/// Write an image as binary 16-bit PGM, clamping values to `[0, 1]`
/// and quantizing to 65535 levels (big-endian sample order, as the
/// format requires).
pub fn write_image_pgm(path: &Path, img: &Image) -> Result<()> {
    let mut bytes = Vec::with_capacity(32 + 2 * img.len());
    bytes.extend_from_slice(format!("P5\n{} {}\n{}\n", img.width, img.height, PGM_MAXVAL).as_bytes());
    for &v in &img.values {
        let q = (v.clamp(0.0, 1.0) * PGM_MAXVAL as f64).round() as u16;
        bytes.extend_from_slice(&q.to_be_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Read a binary PGM image (8- or 16-bit) back to unit-scale values.
pub fn read_image_pgm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let mut pos = 0usize;

    let mut next_token = |bytes: &[u8]| -> Result<String> {
        // Skip whitespace and '#' comment lines between header tokens.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(parse_err(path, "unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(&bytes)?;
    if magic != "P5" {
        return Err(parse_err(path, format!("expected P5 magic, found {magic:?}")));
    }
    let width: usize = next_token(&bytes)?
        .parse()
        .map_err(|_| parse_err(path, "bad width"))?;
    let height: usize = next_token(&bytes)?
        .parse()
        .map_err(|_| parse_err(path, "bad height"))?;
    let maxval: u32 = next_token(&bytes)?
        .parse()
        .map_err(|_| parse_err(path, "bad maxval"))?;
    if maxval == 0 || maxval > 65535 {
        return Err(parse_err(path, format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the data.
    pos += 1;

    let n = width * height;
    let wide = maxval > 255;
    let expected = if wide { 2 * n } else { n };
    if bytes.len() < pos + expected {
        return Err(parse_err(
            path,
            format!("file holds {} data bytes, {} expected", bytes.len().saturating_sub(pos), expected),
        ));
    }
    let data = &bytes[pos..pos + expected];
    let scale = 1.0 / maxval as f64;
    let values: Vec<f64> = if wide {
        data.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 * scale)
            .collect()
    } else {
        data.iter().map(|&b| b as f64 * scale).collect()
    };
    Image::new(width, height, values)
}

// ===================================================================
// CSV
// ===================================================================

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write a sinogram as a headerless CSV matrix, one view per line.
pub fn write_sinogram_csv(path: &Path, sino: &Sinogram) -> Result<()> {
    let mut out = String::new();
    for row in 0..sino.n_rows {
        let cells: Vec<String> = (0..sino.n_cols)
            .map(|col| sino.values[row * sino.n_cols + col].to_string())
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Read a headerless CSV matrix back as a sinogram.
pub fn read_sinogram_csv(path: &Path) -> Result<Sinogram> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut values = Vec::new();
    let mut n_cols = 0usize;
    let mut n_rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, format!("line {}: bad number {cell:?}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if n_rows == 0 {
            n_cols = row.len();
        } else if row.len() != n_cols {
            return Err(parse_err(
                path,
                format!("line {}: {} cells, {} expected", lineno + 1, row.len(), n_cols),
            ));
        }
        values.extend(row);
        n_rows += 1;
    }
    if n_rows == 0 {
        return Err(parse_err(path, "empty sinogram file"));
    }
    Sinogram::new(n_rows, n_cols, values)
}

/// Column header of iteration trace files.
pub const TRACE_HEADER: &str = "k,residual,alpha,beta,omega,rre,psnr,ssim";

/// Write a full iteration trace, one row per iterate including the
/// terminal one; optional cells stay empty.
pub fn write_trace_csv(path: &Path, trace: &IterationTrace) -> Result<()> {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k,
            r.residual_norm,
            r.alpha,
            r.beta,
            fmt_opt(r.omega),
            fmt_opt(r.rre),
            fmt_opt(r.psnr),
            fmt_opt(r.ssim),
        ));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Column header of experiment summary files.
pub const SUMMARY_HEADER: &str = "m,initializer,rule,stop_iter,stop_reason,rre,psnr,psnr_rmse,ssim";

/// One experiment outcome: a single (ensemble size, initializer,
/// stopping rule) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub m: usize,
    pub initializer: String,
    pub rule: String,
    pub stop_iter: usize,
    pub stop_reason: String,
    pub rre: Option<f64>,
    pub psnr: Option<f64>,
    pub psnr_rmse: Option<f64>,
    pub ssim: Option<f64>,
}

impl SummaryRow {
    /// The row as it appears in `summary.csv`, without trailing
    /// newline.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.m,
            self.initializer,
            self.rule,
            self.stop_iter,
            self.stop_reason,
            fmt_opt(self.rre),
            fmt_opt(self.psnr),
            fmt_opt(self.psnr_rmse),
            fmt_opt(self.ssim),
        )
    }
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Create a directory and parents, mapping failures to this crate's
/// error type.
pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Write a small text file (helper for reports).
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{IterationRecord, StopReason};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("glrecon_io_tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn pgm_round_trip_within_quantization() {
        let img = Image::new(5, 3, (0..15).map(|i| i as f64 / 14.0).collect()).unwrap();
        let path = tmp("round.pgm");
        write_image_pgm(&path, &img).unwrap();
        let back = read_image_pgm(&path).unwrap();
        assert_eq!(back.width, 5);
        assert_eq!(back.height, 3);
        for (a, b) in img.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-12);
        }
    }

    #[test]
    fn pgm_clamps_out_of_range_values() {
        let img = Image::new(2, 1, vec![-0.5, 1.5]).unwrap();
        let path = tmp("clamp.pgm");
        write_image_pgm(&path, &img).unwrap();
        let back = read_image_pgm(&path).unwrap();
        assert_eq!(back.values, vec![0.0, 1.0]);
    }

    #[test]
    fn pgm_rejects_wrong_magic() {
        let path = tmp("bad.pgm");
        std::fs::write(&path, b"P2\n2 2\n255\n0 0 0 0\n").unwrap();
        assert!(read_image_pgm(&path).is_err());
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let path = tmp("comment.pgm");
        let mut bytes: Vec<u8> = b"P5\n# a comment\n2 1\n# another\n65535\n".to_vec();
        bytes.extend_from_slice(&0u16.to_be_bytes());
        bytes.extend_from_slice(&65535u16.to_be_bytes());
        std::fs::write(&path, bytes).unwrap();
        let img = read_image_pgm(&path).unwrap();
        assert_eq!(img.values, vec![0.0, 1.0]);
    }

    #[test]
    fn sinogram_csv_round_trip_is_exact() {
        let s = Sinogram::new(2, 3, vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0, f64::MIN_POSITIVE, 9.99]).unwrap();
        let path = tmp("sino.csv");
        write_sinogram_csv(&path, &s).unwrap();
        let back = read_sinogram_csv(&path).unwrap();
        assert_eq!(back.n_rows, 2);
        assert_eq!(back.n_cols, 3);
        assert_eq!(back.values, s.values);
    }

    #[test]
    fn trace_csv_layout() {
        let rec = |k: usize, omega: Option<f64>| IterationRecord {
            k,
            residual_norm: 2.0,
            alpha: 0.25,
            beta: 0.0,
            grad_norm: 1.0,
            lap_norm: 0.0,
            omega,
            rre: if k == 0 { Some(0.5) } else { None },
            psnr: None,
            ssim: None,
        };
        let trace = IterationTrace {
            records: vec![rec(0, Some(4.0)), rec(1, None)],
            stop_index: 0,
            stop_reason: StopReason::OmegaArgmin,
            reconstruction: Image::zeros(2, 2),
            stat_threshold: None,
        };
        let path = tmp("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,residual,alpha,beta,omega,rre,psnr,ssim");
        assert_eq!(lines[1], "0,2,0.25,0,4,0.5,,");
        assert_eq!(lines[2], "1,2,0.25,0,,,,");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn summary_csv_layout() {
        let rows = vec![SummaryRow {
            m: 10,
            initializer: "tikhonov".into(),
            rule: "heuristic".into(),
            stop_iter: 55,
            stop_reason: "omega_argmin".into(),
            rre: Some(0.078),
            psnr: Some(4.5),
            psnr_rmse: Some(34.73),
            ssim: Some(0.99),
        }];
        let path = tmp("summary.csv");
        write_summary_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "m,initializer,rule,stop_iter,stop_reason,rre,psnr,psnr_rmse,ssim");
        assert_eq!(lines[1], "10,tikhonov,heuristic,55,omega_argmin,0.078,4.5,34.73,0.99");
    }

    #[test]
    fn float_display_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, 1e-300, 123456.789012345, -0.0, f64::MAX] {
            let s = v.to_string();
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "value {v}");
        }
    }
}
