//! Plain-text kernel files.
//!
//! ```text
//! <size> <sigma_hint>
//! <size lines of size space-separated taps>
//! ```
//!
//! `sigma_hint` is `nan` for kernels that were estimated rather than synthesized.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::Kernel;

pub fn format_kernel(kernel: &Kernel, sigma_hint: Option<f64>) -> String {
    let size = kernel.size();
    let hint = sigma_hint.map_or_else(|| "nan".to_string(), |s| s.to_string());
    let mut out = format!("{size} {hint}\n");
    for row in kernel.taps().chunks(size) {
        let line: Vec<String> = row.iter().map(|t| t.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Parses a kernel file, returning the kernel and its sigma hint.
pub fn parse_kernel(text: &str, path: Option<&Path>) -> Result<(Kernel, Option<f64>)> {
    let mut offset = 0usize;
    let err = |offset: usize, message: String| Error::Parse {
        path: path.map(Path::to_path_buf),
        offset,
        message,
    };
    let mut lines = text.split_inclusive('\n');
    let header = lines
        .next()
        .ok_or_else(|| err(0, "empty kernel file".into()))?;
    let mut fields = header.split_whitespace();
    let size: usize = fields
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| err(0, "header must start with the kernel size".into()))?;
    let hint = match fields.next() {
        None => None,
        Some(s) => {
            let v: f64 = s
                .parse()
                .map_err(|_| err(0, format!("bad sigma hint `{s}`")))?;
            (!v.is_nan()).then_some(v)
        }
    };
    offset += header.len();
    let mut taps = Vec::with_capacity(size * size);
    for row in 0..size {
        let line = lines
            .next()
            .ok_or_else(|| err(offset, format!("missing kernel row {row}")))?;
        let before = taps.len();
        for tok in line.split_whitespace() {
            taps.push(
                tok.parse::<f64>()
                    .map_err(|_| err(offset, format!("bad tap `{tok}` in row {row}")))?,
            );
        }
        if taps.len() - before != size {
            return Err(err(
                offset,
                format!(
                    "row {row} has {} taps, expected {size}",
                    taps.len() - before
                ),
            ));
        }
        offset += line.len();
    }
    Ok((Kernel::new(size, taps)?, hint))
}

pub fn write_kernel(
    path: impl AsRef<Path>,
    kernel: &Kernel,
    sigma_hint: Option<f64>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_kernel(kernel, sigma_hint))
        .map_err(|e| Error::io(format!("cannot write kernel {}", path.display()), e))
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<(Kernel, Option<f64>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("cannot read kernel {}", path.display()), e))?;
    parse_kernel(&text, Some(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_gaussian_kernel, GaussianSpec};

    #[test]
    fn round_trip_is_exact() {
        let k = make_gaussian_kernel(&GaussianSpec::new(7, 1.3).unwrap());
        let text = format_kernel(&k, Some(1.3));
        assert!(text.starts_with("7 1.3\n"));
        let (back, hint) = parse_kernel(&text, None).unwrap();
        assert_eq!(back, k);
        assert_eq!(hint, Some(1.3));
    }

    #[test]
    fn nan_hint_for_estimated() {
        let k = Kernel::delta(3).unwrap();
        let text = format_kernel(&k, None);
        assert!(text.starts_with("3 nan\n"));
        assert_eq!(parse_kernel(&text, None).unwrap().1, None);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_kernel("", None).is_err());
        assert!(parse_kernel("3 nan\n0 0 0\n0 1 0\n", None).is_err());
        assert!(parse_kernel("3 nan\n0 0 0\n0 1\n0 0 0\n", None).is_err());
        assert!(parse_kernel("3 nan\n0 0 0\n0 2 0\n0 0 0\n", None).is_err());
        assert!(parse_kernel("3 nan\n0 0 0\n0 x 0\n0 0 0\n", None).is_err());
    }
}
