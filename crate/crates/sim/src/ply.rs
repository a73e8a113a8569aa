//! Binary little-endian PLY files holding `x y z` float32 vertices.
//!
//! Writing emits exactly
//!
//! ```text
//! ply
//! format binary_little_endian 1.0
//! element vertex N
//! property float x
//! property float y
//! property float z
//! end_header
//! ```
//!
//! followed by `12 N` payload bytes. Reading accepts the same layout plus
//! `comment` lines; `comment resolution <meters>` sets the cloud resolution.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flightcore::world::{Aabb, OccupancyCloud};

const MAX_HEADER: usize = 64 * 1024;

#[derive(Debug, thiserror::Error)]
pub enum PlyError {
    #[error("not a PLY file (missing `ply` magic line)")]
    BadMagic,
    #[error("unsupported PLY format `{0}`; only binary_little_endian 1.0 is read")]
    UnsupportedFormat(String),
    #[error("malformed PLY header, line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("truncated PLY payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("unexpected data after PLY payload: expected {expected} bytes, found {actual}")]
    TrailingData { expected: u64, actual: u64 },
    #[error("PLY file has no `comment resolution` line and no resolution was supplied")]
    MissingResolution,
    #[error("invalid point cloud: {0}")]
    InvalidCloud(#[from] flightcore::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub fn header(vertex_count: usize) -> String {
    format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {vertex_count}\n\
         property float x\nproperty float y\nproperty float z\nend_header\n"
    )
}

/// Serializes `cloud` into PLY bytes.
pub fn encode(cloud: &OccupancyCloud) -> Vec<u8> {
    let head = header(cloud.len());
    let mut out = Vec::with_capacity(head.len() + 12 * cloud.len());
    out.extend_from_slice(head.as_bytes());
    for p in cloud.points() {
        for c in p {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

/// Writes `cloud` and returns the number of bytes written.
pub fn write<W: Write>(cloud: &OccupancyCloud, mut w: W) -> std::io::Result<usize> {
    let bytes = encode(cloud);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(bytes.len())
}

/// Exports `cloud` to `path`; returns the byte count (`header + 12 N`).
pub fn export_ply(cloud: &OccupancyCloud, path: &Path) -> Result<usize, PlyError> {
    let io_err = |source| PlyError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write(cloud, BufWriter::new(file)).map_err(io_err)
}

/// Reads a cloud from `path`. `resolution` is used when the file carries no
/// `comment resolution` line.
pub fn import_ply(path: &Path, resolution: Option<f64>) -> Result<OccupancyCloud, PlyError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|source| PlyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    decode(&bytes, resolution)
}

fn malformed(line: usize, reason: impl Into<String>) -> PlyError {
    PlyError::MalformedHeader {
        line,
        reason: reason.into(),
    }
}

/// Strict decimal: ASCII digits only, no sign, no leading zeros.
fn parse_count(s: &str) -> Option<usize> {
    let ok = !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if ok {
        s.parse().ok()
    } else {
        None
    }
}

struct Header {
    vertices: usize,
    resolution: Option<f64>,
    len: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, PlyError> {
    if !bytes.starts_with(b"ply\n") {
        return Err(PlyError::BadMagic);
    }
    let mut pos = 4;
    let mut line_no = 1;
    let mut vertices = None;
    let mut props = 0usize;
    let mut resolution = None;
    let mut format_seen = false;
    loop {
        line_no += 1;
        let rest = &bytes[pos..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(if bytes.len() >= MAX_HEADER {
                malformed(line_no, "header too long")
            } else {
                malformed(line_no, "missing end_header")
            });
        };
        if pos + nl >= MAX_HEADER {
            return Err(malformed(line_no, "header too long"));
        }
        let line = std::str::from_utf8(&rest[..nl])
            .ok()
            .filter(|l| l.is_ascii())
            .ok_or_else(|| malformed(line_no, "non-ASCII header line"))?;
        pos += nl + 1;
        let tokens: Vec<&str> = line.split(' ').collect();

        if !format_seen {
            match tokens.as_slice() {
                ["format", "binary_little_endian", "1.0"] => {
                    format_seen = true;
                    continue;
                }
                ["format", kind @ ("ascii" | "binary_big_endian"), _] => {
                    return Err(PlyError::UnsupportedFormat((*kind).to_string()));
                }
                ["format", ..] => return Err(malformed(line_no, format!("bad format line `{line}`"))),
                ["comment", ..] | ["obj_info", ..] => {}
                _ => return Err(malformed(line_no, "expected format line")),
            }
            continue;
        }

        match tokens.as_slice() {
            ["comment", "resolution", v] => {
                let r: f64 = v
                    .parse()
                    .ok()
                    .filter(|r: &f64| r.is_finite() && *r > 0.0)
                    .ok_or_else(|| malformed(line_no, "bad resolution comment"))?;
                resolution = Some(r);
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", "vertex", n] => {
                if vertices.is_some() {
                    return Err(malformed(line_no, "duplicate vertex element"));
                }
                vertices = Some(parse_count(n).ok_or_else(|| malformed(line_no, "bad vertex count"))?);
            }
            ["element", ..] => return Err(malformed(line_no, format!("unsupported element `{line}`"))),
            ["property", ty, name] => {
                if vertices.is_none() {
                    return Err(malformed(line_no, "property before element"));
                }
                let expected = ["x", "y", "z"].get(props).copied();
                if !matches!(*ty, "float" | "float32") || Some(*name) != expected {
                    return Err(malformed(line_no, format!("unexpected property `{line}`")));
                }
                props += 1;
            }
            ["end_header"] => break,
            _ => return Err(malformed(line_no, format!("unrecognized line `{line}`"))),
        }
    }
    let vertices = vertices.ok_or_else(|| malformed(line_no, "no vertex element"))?;
    if props != 3 {
        return Err(malformed(line_no, "vertex element must have float x, y, z"));
    }
    Ok(Header {
        vertices,
        resolution,
        len: pos,
    })
}

/// Parses PLY bytes. Bounds are the tight box around the points.
pub fn decode(bytes: &[u8], resolution: Option<f64>) -> Result<OccupancyCloud, PlyError> {
    let head = parse_header(bytes)?;
    let expected = (head.vertices as u64).checked_mul(12).unwrap_or(u64::MAX);
    let actual = (bytes.len() - head.len) as u64;
    if actual < expected {
        return Err(PlyError::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(PlyError::TrailingData { expected, actual });
    }
    let points: Vec<[f32; 3]> = bytes[head.len..]
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes([c[i], c[i + 1], c[i + 2], c[i + 3]]);
            [f(0), f(4), f(8)]
        })
        .collect();
    let resolution = head.resolution.or(resolution).ok_or(PlyError::MissingResolution)?;
    let bounds = Aabb::enclosing(&points);
    Ok(OccupancyCloud::new(points, resolution, bounds)?)
}
