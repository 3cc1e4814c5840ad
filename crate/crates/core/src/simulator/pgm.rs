//! Binary PGM (P5) image I/O. Worlds follow the convention
//! 255 = free (white), 0 = obstacle (black).

use std::path::Path;

use crate::error::{Error, Result};
use crate::simulator::OccupancyWorld;

pub fn write_pgm_image(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    write_pgm_image_commented(path, width, height, pixels, &[])
}

/// Write a PGM with `#` header comments (one per entry; newlines become
/// spaces so a comment cannot break the header).
pub fn write_pgm_image_commented(
    path: &Path,
    width: usize,
    height: usize,
    pixels: &[u8],
    comments: &[&str],
) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::InvalidArgument {
            op: "write_pgm",
            msg: format!("{}x{} image needs {} bytes, got {}", width, height, width * height, pixels.len()),
        });
    }
    let mut out = String::from("P5\n");
    for c in comments {
        out.push_str("# ");
        out.push_str(&c.replace(['\n', '\r'], " "));
        out.push('\n');
    }
    out.push_str(&format!("{width} {height}\n255\n"));
    let mut out = out.into_bytes();
    out.extend_from_slice(pixels);
    std::fs::write(path, out)?;
    Ok(())
}

/// Next header token, skipping whitespace and `#` comments.
/// Returns the token and the cursor one past its end.
fn next_token(bytes: &[u8], mut pos: usize) -> Option<(String, usize)> {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            break;
        }
    }
    let start = pos;
    while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
        pos += 1;
    }
    if start == pos {
        return None;
    }
    Some((String::from_utf8_lossy(&bytes[start..pos]).into_owned(), pos))
}

pub fn read_pgm_image(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    let parse_err = |msg: &str| Error::Parse { path: path.display().to_string(), msg: msg.into() };

    let (magic, pos) = next_token(&bytes, 0).ok_or_else(|| parse_err("missing header"))?;
    if magic != "P5" {
        return Err(parse_err("not a binary PGM (expected P5)"));
    }
    let (tok, pos) = next_token(&bytes, pos).ok_or_else(|| parse_err("missing width"))?;
    let width: usize = tok.parse().map_err(|_| parse_err("bad width"))?;
    let (tok, pos) = next_token(&bytes, pos).ok_or_else(|| parse_err("missing height"))?;
    let height: usize = tok.parse().map_err(|_| parse_err("bad height"))?;
    let (tok, pos) = next_token(&bytes, pos).ok_or_else(|| parse_err("missing maxval"))?;
    let maxval: usize = tok.parse().map_err(|_| parse_err("bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(parse_err("maxval must be in 1..=255"));
    }
    let start = pos + 1; // single whitespace byte after maxval
    let need = width * height;
    if bytes.len() < start + need {
        return Err(parse_err("truncated pixel data"));
    }
    Ok((width, height, bytes[start..start + need].to_vec()))
}

pub fn write_pgm(path: &Path, world: &OccupancyWorld) -> Result<()> {
    let pixels: Vec<u8> = world.cells().iter().map(|&o| if o { 0 } else { 255 }).collect();
    write_pgm_image(path, world.width(), world.height(), &pixels)
}

/// Read a world image; pixels below 128 are obstacles.
pub fn read_pgm(path: &Path) -> Result<OccupancyWorld> {
    let (width, height, pixels) = read_pgm_image(path)?;
    let occupied = pixels.iter().map(|&v| v < 128).collect();
    OccupancyWorld::new(width, height, occupied)
}
