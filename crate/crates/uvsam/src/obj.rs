//! Wavefront OBJ subset: `v`, `vt` and `f` records. Normals and every other
//! record are ignored. Polygons are fan-triangulated in corner order.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;
use uvsam_core::Mesh;

use crate::error::{Error, Result};

#[derive(Debug, Error, PartialEq)]
pub enum ObjError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("mesh without uv coordinates")]
    NoUv,
    #[error("invalid mesh: {0}")]
    Invalid(String),
}

fn malformed(line: usize, message: impl Into<String>) -> ObjError {
    ObjError::Malformed {
        line,
        message: message.into(),
    }
}

fn numbers<const N: usize>(
    parts: &mut std::str::SplitWhitespace<'_>,
    min: usize,
    line: usize,
) -> std::result::Result<[f64; N], ObjError> {
    let mut out = [0.0; N];
    let mut n = 0;
    for token in parts.by_ref() {
        if n == N {
            // Extra components (homogeneous w) are ignored.
            break;
        }
        out[n] = token
            .parse()
            .map_err(|_| malformed(line, format!("invalid number {token:?}")))?;
        n += 1;
    }
    if n < min {
        return Err(malformed(line, format!("expected at least {min} values")));
    }
    Ok(out)
}

/// Resolves a 1-based or negative (relative) index against `count` records.
fn resolve(token: &str, count: usize, what: &str, line: usize) -> std::result::Result<u32, ObjError> {
    let i: i64 = token
        .parse()
        .map_err(|_| malformed(line, format!("invalid {what} index {token:?}")))?;
    let index = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        -1
    };
    if index < 0 || index >= count as i64 {
        return Err(malformed(
            line,
            format!("{what} index {i} out of range ({count} defined)"),
        ));
    }
    Ok(index as u32)
}

pub fn parse_obj(text: &str) -> std::result::Result<Mesh, ObjError> {
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut uv_corners: Vec<[[f64; 2]; 3]> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut parts = content.split_whitespace();
        match parts.next() {
            Some("v") => vertices.push(numbers::<3>(&mut parts, 3, line)?),
            Some("vt") => {
                let [u, v] = numbers::<2>(&mut parts, 1, line)?;
                uvs.push([u, v]);
            }
            Some("f") => {
                let mut corners = Vec::new();
                for token in parts {
                    let mut fields = token.split('/');
                    let v = fields.next().unwrap_or("");
                    let vt = match fields.next() {
                        Some(t) if !t.is_empty() => t,
                        _ => return Err(ObjError::NoUv),
                    };
                    corners.push((
                        resolve(v, vertices.len(), "vertex", line)?,
                        resolve(vt, uvs.len(), "texture", line)?,
                    ));
                }
                if corners.len() < 3 {
                    return Err(malformed(line, "face with fewer than 3 corners"));
                }
                for k in 1..corners.len() - 1 {
                    let tri = [corners[0], corners[k], corners[k + 1]];
                    faces.push(tri.map(|c| c.0));
                    uv_corners.push(tri.map(|c| uvs[c.1 as usize]));
                }
            }
            _ => {}
        }
    }
    if uvs.is_empty() {
        return Err(ObjError::NoUv);
    }
    Mesh::new(vertices, faces, uv_corners).map_err(|e| ObjError::Invalid(e.to_string()))
}

pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_obj(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Serializes `mesh` with one `vt` record per face corner.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for corners in mesh.uv_corners() {
        for uv in corners {
            let _ = writeln!(out, "vt {} {}", uv[0], uv[1]);
        }
    }
    for (i, face) in mesh.faces().iter().enumerate() {
        let t = 3 * i + 1;
        let _ = writeln!(
            out,
            "f {}/{} {}/{} {}/{}",
            face[0] + 1,
            t,
            face[1] + 1,
            t + 1,
            face[2] + 1,
            t + 2
        );
    }
    out
}
