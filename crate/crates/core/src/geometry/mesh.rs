use alloc::vec::Vec;

use super::GeometryError;

/// An immutable triangle mesh with per-face, per-corner uv coordinates.
///
/// Construction clamps uv components into `[0, 1]` and counts how many were
/// moved; exports from photogrammetry tools routinely overshoot by an epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[u32; 3]>,
    uv_corners: Vec<[[f64; 2]; 3]>,
    clamped_uv: usize,
}

impl Mesh {
    pub fn new(
        vertices: Vec<[f64; 3]>,
        faces: Vec<[u32; 3]>,
        mut uv_corners: Vec<[[f64; 2]; 3]>,
    ) -> Result<Self, GeometryError> {
        if uv_corners.len() != faces.len() {
            return Err(GeometryError::UvCountMismatch(uv_corners.len(), faces.len()));
        }
        if let Some(i) = vertices.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(GeometryError::NonFinite { what: "vertex", index: i });
        }
        for (fi, f) in faces.iter().enumerate() {
            for &idx in f {
                if idx as usize >= vertices.len() {
                    return Err(GeometryError::VertexOutOfRange {
                        face: fi,
                        index: idx,
                        count: vertices.len(),
                    });
                }
            }
            if f[0] == f[1] && f[1] == f[2] {
                return Err(GeometryError::DegenerateFace { face: fi });
            }
        }
        let mut clamped_uv = 0;
        for (fi, corners) in uv_corners.iter_mut().enumerate() {
            for c in corners.iter_mut().flatten() {
                if !c.is_finite() {
                    return Err(GeometryError::NonFinite { what: "uv of face", index: fi });
                }
                if *c < 0.0 || *c > 1.0 {
                    *c = c.clamp(0.0, 1.0);
                    clamped_uv += 1;
                }
            }
        }
        Ok(Self {
            vertices,
            faces,
            uv_corners,
            clamped_uv,
        })
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            faces: Vec::new(),
            uv_corners: Vec::new(),
            clamped_uv: 0,
        }
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn uv_corners(&self) -> &[[[f64; 2]; 3]] {
        &self.uv_corners
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Number of uv components that were clamped into `[0, 1]` at construction.
    pub fn clamped_uv(&self) -> usize {
        self.clamped_uv
    }

    /// The three corner positions of `face`.
    pub fn triangle(&self, face: usize) -> [[f64; 3]; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Interpolates the uv coordinate at barycentric `weights` on `face`.
    pub fn uv_of(&self, face: usize, weights: [f64; 3]) -> Result<[f64; 2], GeometryError> {
        let corners = self.uv_corners.get(face).ok_or(GeometryError::FaceOutOfRange {
            face,
            count: self.faces.len(),
        })?;
        let sum = weights[0] + weights[1] + weights[2];
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidBarycentric);
        }
        Ok(interpolate_uv(corners, weights))
    }

    /// Interpolates the 3D position at barycentric `weights` on `face`.
    pub fn point_of(&self, face: usize, weights: [f64; 3]) -> Result<[f64; 3], GeometryError> {
        if face >= self.faces.len() {
            return Err(GeometryError::FaceOutOfRange {
                face,
                count: self.faces.len(),
            });
        }
        Ok(interpolate_point(&self.triangle(face), weights))
    }
}

pub(crate) fn interpolate_uv(c: &[[f64; 2]; 3], w: [f64; 3]) -> [f64; 2] {
    [
        w[0] * c[0][0] + w[1] * c[1][0] + w[2] * c[2][0],
        w[0] * c[0][1] + w[1] * c[1][1] + w[2] * c[2][1],
    ]
}

pub(crate) fn interpolate_point(t: &[[f64; 3]; 3], w: [f64; 3]) -> [f64; 3] {
    core::array::from_fn(|k| w[0] * t[0][k] + w[1] * t[1][k] + w[2] * t[2][k])
}
