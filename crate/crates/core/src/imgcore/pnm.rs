//! Binary PGM (P5) and PPM (P6) with 8-bit samples.

use std::path::Path;

use super::raster::Raster;
use crate::error::{Error, Result};

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    data_start: usize,
}

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' && bytes[pos] != b'\r' {
                pos += 1;
            }
            continue;
        }
        return pos;
    }
}

fn read_number(bytes: &[u8], pos: usize, field: &str) -> Result<(usize, usize)> {
    let start = skip_whitespace_and_comments(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(Error::format(field, "expected a decimal integer"));
    }
    if end < bytes.len() && !bytes[end].is_ascii_whitespace() && bytes[end] != b'#' {
        return Err(Error::format(field, "unexpected character after integer"));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let value = text
        .parse::<usize>()
        .map_err(|_| Error::format(field, format!("integer {text} out of range")))?;
    Ok((value, end))
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(Error::format("magic", "file too short"));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::format(
                "magic",
                format!("expected P5 or P6, found {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let (width, pos) = read_number(bytes, 2, "width")?;
    let (height, pos) = read_number(bytes, pos, "height")?;
    let (maxval, pos) = read_number(bytes, pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::format("maxval", format!("only 255 is supported, got {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::format("width", "image dimensions must be positive"));
    }
    // exactly one whitespace byte separates the header from the samples
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format("maxval", "missing whitespace before pixel data"));
    }
    Ok(Header {
        channels,
        width,
        height,
        data_start: pos + 1,
    })
}

/// Decodes a binary P5/P6 file into a raster holding the exact byte values.
pub fn decode_pnm(bytes: &[u8]) -> Result<Raster> {
    let header = parse_header(bytes)?;
    let expected = header
        .width
        .checked_mul(header.height)
        .and_then(|n| n.checked_mul(header.channels))
        .ok_or_else(|| Error::format("width", "image dimensions overflow"))?;
    let payload = &bytes[header.data_start..];
    if payload.len() < expected {
        return Err(Error::format(
            "payload",
            format!("truncated: {} of {} bytes", payload.len(), expected),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(
            "payload",
            format!("{} trailing bytes after pixel data", payload.len() - expected),
        ));
    }
    let pixels = payload.iter().map(|&b| f64::from(b)).collect();
    Raster::new(header.width, header.height, header.channels, pixels)
}

/// Encodes with the canonical header `P5\n<w> <h>\n255\n` (P6 for RGB).
pub fn encode_pnm(raster: &Raster) -> Vec<u8> {
    let magic = if raster.channels() == 1 { "P5" } else { "P6" };
    let header = format!("{magic}\n{} {}\n255\n", raster.width(), raster.height());
    let mut out = Vec::with_capacity(header.len() + raster.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(raster.pixels().iter().map(|&v| Raster::quantize(v)));
    out
}

pub fn read_pnm(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes).map_err(|e| match e {
        Error::Format { field, message } => Error::Format {
            field,
            message: format!("{message} ({})", path.display()),
        },
        other => other,
    })
}

pub fn write_pnm(path: &Path, raster: &Raster) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, encode_pnm(raster)).map_err(|e| Error::io(path, e))
}
