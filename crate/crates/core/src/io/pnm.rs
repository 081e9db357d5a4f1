//! Binary PGM (P5) and PPM (P6) images.
//!
//! Samples map linearly between `0..=maxval` and `[0, 1]`. Writing clamps to
//! `[0, 1]` and rounds to the nearest code, so a write/read round trip is
//! accurate to `1 / (2 * maxval)`. 16-bit payloads are big-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: Option<&'a Path>,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.map(Path::to_path_buf),
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(format!("{what} out of range")))
    }
}

/// Decodes a P5/P6 byte stream.
pub fn decode_pnm(bytes: &[u8], path: Option<&Path>) -> Result<Image> {
    let mut cur = Cursor {
        bytes,
        pos: 0,
        path,
    };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(cur.err("unsupported magic, expected P5 or P6")),
    };
    cur.pos = 2;
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(cur.err(format!("maxval {maxval} outside 1..=65535")));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(cur.err("expected a single whitespace byte after maxval")),
    }
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let needed = count * bytes_per_sample;
    let payload = &bytes[cur.pos..];
    if payload.len() < needed {
        cur.pos += payload.len();
        return Err(cur.err(format!(
            "truncated payload: expected {needed} bytes, found {}",
            payload.len()
        )));
    }
    let scale = 1.0 / maxval as f64;
    let plane = width * height;
    let mut data = vec![0.0; count];
    for i in 0..count {
        let raw = if bytes_per_sample == 2 {
            u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as usize
        } else {
            payload[i] as usize
        };
        if raw > maxval {
            cur.pos += i * bytes_per_sample;
            return Err(cur.err(format!("sample {raw} exceeds maxval {maxval}")));
        }
        // Interleaved on disk, planar in memory.
        let (pixel, c) = (i / channels, i % channels);
        data[c * plane + pixel] = raw as f64 * scale;
    }
    Image::new(height, width, channels, data)
}

/// Encodes an image as P5 (one channel) or P6 (three channels).
pub fn encode_pnm(img: &Image, maxval: u16) -> Result<Vec<u8>> {
    if maxval != 255 && maxval != 65535 {
        return Err(Error::invalid(format!(
            "maxval must be 255 or 65535, got {maxval}"
        )));
    }
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n{maxval}\n", img.width(), img.height()).into_bytes();
    let plane = img.width() * img.height();
    let scale = maxval as f64;
    for pixel in 0..plane {
        for c in 0..img.channels() {
            let v = img.channel(c)[pixel].clamp(0.0, 1.0);
            let code = (v * scale).round() as u16;
            if maxval == 255 {
                out.push(code as u8);
            } else {
                out.extend_from_slice(&code.to_be_bytes());
            }
        }
    }
    Ok(out)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|e| Error::io(format!("cannot read image {}", path.display()), e))?;
    decode_pnm(&bytes, Some(path))
}

pub fn write_image(path: impl AsRef<Path>, img: &Image, maxval: u16) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pnm(img, maxval)?;
    std::fs::write(path, bytes)
        .map_err(|e| Error::io(format!("cannot write image {}", path.display()), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_color_test_image, make_test_image, TestImageKind};

    #[test]
    fn sixteen_bit_round_trip() {
        let img = make_test_image(TestImageKind::Broadband, 24, 40, 9).unwrap();
        let back = decode_pnm(&encode_pnm(&img, 65535).unwrap(), None).unwrap();
        assert_eq!(back.shape(), img.shape());
        let worst = img
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1.0 / 131070.0, "{worst}");
    }

    #[test]
    fn eight_bit_color_round_trip() {
        let img = make_color_test_image(16, 16, 2).unwrap();
        let bytes = encode_pnm(&img, 255).unwrap();
        assert_eq!(&bytes[..2], b"P6");
        let back = decode_pnm(&bytes, None).unwrap();
        assert_eq!(back.channels(), 3);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
        }
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# made by hand\n8 8\n# another\n255\n".to_vec();
        bytes.extend(std::iter::repeat_n(255u8, 64));
        let img = decode_pnm(&bytes, None).unwrap();
        assert_eq!(img.channels(), 1);
        assert!(img.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn truncated_payload_names_offset() {
        let img = make_test_image(TestImageKind::Constant, 16, 16, 0).unwrap();
        let mut bytes = encode_pnm(&img, 255).unwrap();
        bytes.truncate(bytes.len() - 10);
        let err = decode_pnm(&bytes, None).unwrap_err();
        match err {
            Error::Parse {
                offset, message, ..
            } => {
                assert_eq!(offset, bytes.len());
                assert!(message.contains("truncated"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn rejects_bad_magic_and_header() {
        assert!(matches!(
            decode_pnm(b"P2\n8 8\n255\n", None),
            Err(Error::Parse { offset: 0, .. })
        ));
        assert!(decode_pnm(b"P5\n8 x\n255\n", None).is_err());
        assert!(decode_pnm(b"P5\n8 8\n70000\n", None).is_err());
        let img = make_test_image(TestImageKind::Constant, 16, 16, 0).unwrap();
        assert!(encode_pnm(&img, 1000).is_err());
    }
}
