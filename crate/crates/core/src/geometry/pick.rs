//! Ray picking against the mesh surface.

use super::mesh::{interpolate_point, interpolate_uv};
use super::{Mesh, TexelGrid};
use crate::math::sqrt;

/// Where a pick ray first meets the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickResult {
    pub face_id: u32,
    /// Weights of the face's three corners, non-negative and summing to 1.
    pub barycentric: [f64; 3],
    /// Distance along the normalized ray.
    pub distance: f64,
    pub point3d: [f64; 3],
    pub uv: [f64; 2],
    pub texel: (usize, usize),
}

/// Casts a ray and returns the nearest hit with `t > 0`, or `None` on a miss.
///
/// Faces are hit from either side. On exactly equal distances the lower face
/// index wins. A zero or non-finite direction never hits.
pub fn pick(
    mesh: &Mesh,
    origin: [f64; 3],
    direction: [f64; 3],
    grid: &TexelGrid,
) -> Option<PickResult> {
    let len = sqrt(direction.iter().map(|d| d * d).sum::<f64>());
    if !(len > 0.0) || !len.is_finite() || origin.iter().any(|o| !o.is_finite()) {
        return None;
    }
    let dir = direction.map(|d| d / len);
    let ray = ShearedRay::new(origin, dir);

    let mut best: Option<(f64, usize, [f64; 3])> = None;
    for face in 0..mesh.face_count() {
        if let Some((t, bary)) = ray.intersect(&mesh.triangle(face)) {
            if best.is_none_or(|(bt, _, _)| t < bt) {
                best = Some((t, face, bary));
            }
        }
    }

    best.map(|(t, face, bary)| {
        let uv = interpolate_uv(&mesh.uv_corners()[face], bary);
        PickResult {
            face_id: face as u32,
            barycentric: bary,
            distance: t,
            point3d: interpolate_point(&mesh.triangle(face), bary),
            uv,
            texel: grid.texel_of(uv),
        }
    })
}

/// Ray prepared for the watertight ray/triangle test of Woop, Benthin and
/// Wald: the ray is permuted so its dominant axis is z, then sheared onto +z.
struct ShearedRay {
    origin: [f64; 3],
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl ShearedRay {
    fn new(origin: [f64; 3], dir: [f64; 3]) -> Self {
        let mut kz = 0;
        for k in 1..3 {
            if dir[k].abs() > dir[kz].abs() {
                kz = k;
            }
        }
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            core::mem::swap(&mut kx, &mut ky);
        }
        Self {
            origin,
            kx,
            ky,
            kz,
            sx: dir[kx] / dir[kz],
            sy: dir[ky] / dir[kz],
            sz: 1.0 / dir[kz],
        }
    }

    /// `(t, barycentric)` of a two-sided hit with `t > 0`.
    fn intersect(&self, tri: &[[f64; 3]; 3]) -> Option<(f64, [f64; 3])> {
        let rel = tri.map(|p| [p[0] - self.origin[0], p[1] - self.origin[1], p[2] - self.origin[2]]);
        let sheared = rel.map(|p| {
            (
                p[self.kx] - self.sx * p[self.kz],
                p[self.ky] - self.sy * p[self.kz],
                self.sz * p[self.kz],
            )
        });
        let (ax, ay, az) = sheared[0];
        let (bx, by, bz) = sheared[1];
        let (cx, cy, cz) = sheared[2];

        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;

        let any_neg = u < 0.0 || v < 0.0 || w < 0.0;
        let any_pos = u > 0.0 || v > 0.0 || w > 0.0;
        if any_neg && any_pos {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let t = (u * az + v * bz + w * cz) / det;
        if !(t > 0.0) || !t.is_finite() {
            return None;
        }
        Some((t, [u / det, v / det, w / det]))
    }
}
