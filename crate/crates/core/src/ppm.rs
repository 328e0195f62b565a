//! Minimal binary PPM (P6) reader/writer, plus nearest-neighbor resampling.
//! Keeping pixel I/O codec-free restricts CLI image input to portable
//! pixmaps; conversion notes live in the README.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::encoder::Frame;

#[derive(Debug, Error)]
pub enum PpmError {
    #[error("io: {0}")]
    Io(String),
    #[error("not a P6 portable pixmap")]
    BadMagic,
    #[error("malformed header")]
    BadHeader,
    #[error("pixel data truncated (expected {expected} bytes, got {got})")]
    Truncated { expected: usize, got: usize },
    #[error("unsupported max value {0} (only 255)")]
    BadMaxVal(u64),
}

fn header_tokens(bytes: &[u8]) -> Result<(Vec<u64>, usize), PpmError> {
    // Tokens: magic handled by caller; here width, height, maxval, skipping
    // whitespace and '#' comments.
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < 3 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return Err(PpmError::BadHeader);
        }
        let tok = std::str::from_utf8(&bytes[start..i]).map_err(|_| PpmError::BadHeader)?;
        tokens.push(tok.parse::<u64>().map_err(|_| PpmError::BadHeader)?);
    }
    // Exactly one whitespace byte separates the header from pixel data.
    if i >= bytes.len() || !bytes[i].is_ascii_whitespace() {
        return Err(PpmError::BadHeader);
    }
    Ok((tokens, i + 1))
}

/// Reads only the dimensions (height, width) from a P6 header.
pub fn read_dims(path: &Path) -> Result<(usize, usize), PpmError> {
    let bytes = fs::read(path).map_err(|e| PpmError::Io(e.to_string()))?;
    if !bytes.starts_with(b"P6") {
        return Err(PpmError::BadMagic);
    }
    let (tokens, _) = header_tokens(&bytes[2..])?;
    Ok((tokens[1] as usize, tokens[0] as usize))
}

/// Reads a P6 file into a frame of [0,1] floats.
pub fn read_frame(path: &Path) -> Result<Frame, PpmError> {
    let bytes = fs::read(path).map_err(|e| PpmError::Io(e.to_string()))?;
    if !bytes.starts_with(b"P6") {
        return Err(PpmError::BadMagic);
    }
    let (tokens, data_off) = header_tokens(&bytes[2..])?;
    let (w, h, maxval) = (tokens[0] as usize, tokens[1] as usize, tokens[2]);
    if maxval != 255 {
        return Err(PpmError::BadMaxVal(maxval));
    }
    let data = &bytes[2 + data_off..];
    let expected = w * h * 3;
    if data.len() < expected {
        return Err(PpmError::Truncated {
            expected,
            got: data.len(),
        });
    }
    let pixels: Vec<f64> = data[..expected].iter().map(|&b| b as f64 / 255.0).collect();
    Frame::new(h, w, pixels).map_err(|e| PpmError::Io(e.to_string()))
}

/// Writes a frame as P6, clamping values into [0,1].
pub fn write_frame(path: &Path, frame: &Frame) -> Result<(), PpmError> {
    let mut out = format!("P6\n{} {}\n255\n", frame.w, frame.h).into_bytes();
    out.extend(
        frame
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    fs::write(path, out).map_err(|e| PpmError::Io(e.to_string()))
}

/// Nearest-neighbor resample to the target size.
pub fn resample_nearest(frame: &Frame, new_h: usize, new_w: usize) -> Frame {
    let mut data = Vec::with_capacity(new_h * new_w * 3);
    for r in 0..new_h {
        let src_r = ((r as f64 + 0.5) * frame.h as f64 / new_h as f64) as usize;
        let src_r = src_r.min(frame.h - 1);
        for c in 0..new_w {
            let src_c = ((c as f64 + 0.5) * frame.w as f64 / new_w as f64) as usize;
            let src_c = src_c.min(frame.w - 1);
            let base = (src_r * frame.w + src_c) * 3;
            data.extend_from_slice(&frame.data[base..base + 3]);
        }
    }
    Frame {
        h: new_h,
        w: new_w,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let frame = Frame::new(2, 3, (0..18).map(|i| i as f64 / 17.0).collect()).unwrap();
        write_frame(&path, &frame).unwrap();
        assert_eq!(read_dims(&path).unwrap(), (2, 3));
        let back = read_frame(&path).unwrap();
        assert_eq!(back.h, 2);
        assert_eq!(back.w, 3);
        for (a, b) in frame.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1.0 / 255.0 + 1e-9);
        }
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ppm");
        let mut bytes = b"P6\n# a comment\n2 1\n255\n".to_vec();
        bytes.extend([0u8; 6]);
        std::fs::write(&path, bytes).unwrap();
        assert_eq!(read_dims(&path).unwrap(), (1, 2));
        assert!(read_frame(&path).is_ok());
    }

    #[test]
    fn bad_inputs_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ppm");
        std::fs::write(&path, b"P5\n1 1\n255\n\0").unwrap();
        assert!(matches!(read_frame(&path), Err(PpmError::BadMagic)));
        std::fs::write(&path, b"P6\n2 2\n255\n\0\0\0").unwrap();
        assert!(matches!(read_frame(&path), Err(PpmError::Truncated { .. })));
    }

    #[test]
    fn resample_identity_and_shape() {
        let frame = Frame::new(2, 2, (0..12).map(|i| i as f64 / 11.0).collect()).unwrap();
        let same = resample_nearest(&frame, 2, 2);
        assert_eq!(same.data, frame.data);
        let up = resample_nearest(&frame, 4, 6);
        assert_eq!(up.data.len(), 4 * 6 * 3);
    }
}
