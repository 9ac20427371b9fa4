//! Binary and ASCII STL reading and writing.
//!
//! Facet normals stored in files are ignored on read and recomputed from the
//! vertex winding; zero-area facets are dropped and counted. Coordinates are
//! quantized to `f32` only at this boundary.

use std::fmt::Write as _;

use thiserror::Error;

use crate::math::Vec3;
use crate::mesh::{MeshError, TriangleMesh};
use crate::scalar::Scalar;

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;
const BANNER: &[u8] = b"plateforge binary STL";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StlError {
    #[error("malformed STL: {0}")]
    Malformed(String),
    #[error("STL contains no valid facets")]
    EmptyMesh,
}

impl From<MeshError> for StlError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::EmptyMesh => StlError::EmptyMesh,
            other => StlError::Malformed(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StlFormat {
    Binary,
    Ascii,
}

/// Result of parsing an STL file.
#[derive(Clone, Debug)]
pub struct StlImport<T> {
    pub mesh: TriangleMesh<T>,
    /// Facets discarded because their area was below the degeneracy floor.
    pub dropped_degenerate: usize,
}

/// Parses binary or ASCII STL. The format is detected from the content: a
/// file whose size matches its binary face count is binary even when its
/// header happens to start with `solid`.
pub fn load_stl<T: Scalar>(bytes: &[u8]) -> Result<StlImport<T>, StlError> {
    let triangles = if looks_binary(bytes) || !starts_with_solid(bytes) {
        parse_binary(bytes)?
    } else {
        parse_ascii(bytes)?
    };
    let converted: Vec<[Vec3<T>; 3]> = triangles
        .iter()
        .map(|tri| tri.map(|[x, y, z]| Vec3::new(T::lit(x as f64), T::lit(y as f64), T::lit(z as f64))))
        .collect();
    let (mesh, dropped_degenerate) = TriangleMesh::from_soup(&converted)?;
    Ok(StlImport {
        mesh,
        dropped_degenerate,
    })
}

/// Serializes `mesh`; facet normals are the recomputed face normals.
pub fn save_stl<T: Scalar>(mesh: &TriangleMesh<T>, format: StlFormat) -> Vec<u8> {
    match format {
        StlFormat::Binary => write_binary(mesh),
        StlFormat::Ascii => write_ascii(mesh).into_bytes(),
    }
}

fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() < HEADER_LEN + 4 {
        return false;
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    count
        .checked_mul(RECORD_LEN)
        .and_then(|n| n.checked_add(HEADER_LEN + 4))
        .is_some_and(|n| n == bytes.len())
}

fn starts_with_solid(bytes: &[u8]) -> bool {
    let trimmed = bytes.iter().position(|b| !b.is_ascii_whitespace()).map_or(&[][..], |i| &bytes[i..]);
    trimmed.len() >= 5 && trimmed[..5].eq_ignore_ascii_case(b"solid")
}

type RawTriangle = [[f32; 3]; 3];

fn parse_binary(bytes: &[u8]) -> Result<Vec<RawTriangle>, StlError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(StlError::Malformed(format!(
            "binary STL needs at least {} bytes, got {}",
            HEADER_LEN + 4,
            bytes.len()
        )));
    }
    let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN + 4..];
    if body.len() != count.saturating_mul(RECORD_LEN) {
        return Err(StlError::Malformed(format!(
            "header declares {count} facets ({} bytes) but {} bytes follow",
            count.saturating_mul(RECORD_LEN),
            body.len()
        )));
    }
    let read = |rec: &[u8], i: usize| f32::from_le_bytes(rec[4 * i..4 * i + 4].try_into().unwrap());
    Ok(body
        .chunks_exact(RECORD_LEN)
        .map(|rec| {
            // Floats 0..3 are the stored normal, which is not trusted.
            let v = |k: usize| [read(rec, 3 + 3 * k), read(rec, 4 + 3 * k), read(rec, 5 + 3 * k)];
            [v(0), v(1), v(2)]
        })
        .collect())
}

struct Tokens<'a> {
    inner: std::iter::Peekable<std::str::SplitAsciiWhitespace<'a>>,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<&'a str, StlError> {
        self.inner
            .next()
            .ok_or_else(|| StlError::Malformed(format!("unexpected end of file, expected {what}")))
    }

    fn keyword(&mut self, kw: &str) -> Result<(), StlError> {
        let tok = self.next(kw)?;
        if tok.eq_ignore_ascii_case(kw) {
            Ok(())
        } else {
            Err(StlError::Malformed(format!("expected `{kw}`, found `{tok}`")))
        }
    }

    fn float(&mut self) -> Result<f32, StlError> {
        let tok = self.next("a number")?;
        tok.parse::<f32>()
            .map_err(|_| StlError::Malformed(format!("`{tok}` is not a number")))
    }

    fn peek_is(&mut self, kw: &str) -> bool {
        self.inner.peek().is_some_and(|t| t.eq_ignore_ascii_case(kw))
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<RawTriangle>, StlError> {
    let text = std::str::from_utf8(bytes).map_err(|_| StlError::Malformed("ASCII STL is not valid UTF-8".into()))?;
    let mut triangles = Vec::new();
    let mut lines = text.lines().peekable();
    let mut solids = 0;
    while let Some(line) = lines.next() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first = trimmed.split_ascii_whitespace().next().unwrap_or("");
        if !first.eq_ignore_ascii_case("solid") {
            return Err(StlError::Malformed(format!("expected `solid`, found `{first}`")));
        }
        solids += 1;
        // The solid name runs to end of line; facets follow until `endsolid`.
        let mut body = String::new();
        let mut closed = false;
        for line in lines.by_ref() {
            let lead = line.split_ascii_whitespace().next().unwrap_or("");
            if lead.eq_ignore_ascii_case("endsolid") {
                closed = true;
                break;
            }
            body.push_str(line);
            body.push('\n');
        }
        if !closed {
            return Err(StlError::Malformed("missing `endsolid`".into()));
        }
        let mut tokens = Tokens {
            inner: body.split_ascii_whitespace().peekable(),
        };
        while tokens.inner.peek().is_some() {
            tokens.keyword("facet")?;
            tokens.keyword("normal")?;
            for _ in 0..3 {
                tokens.float()?;
            }
            tokens.keyword("outer")?;
            tokens.keyword("loop")?;
            let mut tri = [[0f32; 3]; 3];
            for v in &mut tri {
                tokens.keyword("vertex")?;
                *v = [tokens.float()?, tokens.float()?, tokens.float()?];
            }
            if tokens.peek_is("vertex") {
                return Err(StlError::Malformed("facet has more than three vertices".into()));
            }
            tokens.keyword("endloop")?;
            tokens.keyword("endfacet")?;
            triangles.push(tri);
        }
    }
    if solids == 0 {
        return Err(StlError::Malformed("empty ASCII STL".into()));
    }
    Ok(triangles)
}

fn quantize<T: Scalar>(v: Vec3<T>) -> [f32; 3] {
    [v.x.as_f64() as f32, v.y.as_f64() as f32, v.z.as_f64() as f32]
}

fn write_binary<T: Scalar>(mesh: &TriangleMesh<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * mesh.face_count());
    let mut header = [0u8; HEADER_LEN];
    header[..BANNER.len()].copy_from_slice(BANNER);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.face_count() as u32).to_le_bytes());
    for (f, n) in mesh.face_normals().iter().enumerate() {
        for c in quantize(*n) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for v in mesh.triangle(f) {
            for c in quantize(v) {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

fn write_ascii<T: Scalar>(mesh: &TriangleMesh<T>) -> String {
    let mut s = String::with_capacity(256 * mesh.face_count());
    s.push_str("solid plateforge\n");
    for (f, n) in mesh.face_normals().iter().enumerate() {
        let [nx, ny, nz] = quantize(*n);
        let _ = writeln!(s, "  facet normal {nx:e} {ny:e} {nz:e}");
        s.push_str("    outer loop\n");
        for v in mesh.triangle(f) {
            let [x, y, z] = quantize(v);
            let _ = writeln!(s, "      vertex {x:e} {y:e} {z:e}");
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str("endsolid plateforge\n");
    s
}
