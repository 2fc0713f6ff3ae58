//! uv-atlas occupancy: which face owns each texel.
//!
//! Triangles are rasterized in pixel space on a fixed-point lattice with
//! [`SUBPIXEL_BITS`] fractional bits, which makes every inside test exact.
//! A texel belongs to a face when its center lies strictly inside the face's
//! uv triangle, or on an edge the top-left rule assigns to that face. Where uv
//! triangles overlap, the lowest face index wins.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{GeometryError, Mesh, TexelGrid};
use crate::mask::Mask;
use crate::math::floor;
use crate::par;

/// Fractional bits of the pixel-space lattice uv corners are snapped to.
pub const SUBPIXEL_BITS: u32 = 16;
const ONE: i64 = 1 << SUBPIXEL_BITS;
const HALF: i64 = ONE / 2;
// Keeps |edge function| < 2^63 for any triangle inside the atlas.
const MAX_DIM: usize = 1 << 15;
/// uv triangles with a smaller area (in uv units) are skipped as degenerate.
pub const DEGENERATE_UV_AREA: f64 = 1e-12;
const BAND_ROWS: usize = 32;

/// Per-texel owning face, row 0 at the top of the atlas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceIdMap {
    width: usize,
    height: usize,
    ids: Vec<u32>,
    degenerate: usize,
}

impl FaceIdMap {
    /// Sentinel for texels not covered by any face.
    pub const NONE: u32 = u32::MAX;

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn owner(&self, col: usize, row: usize) -> Option<u32> {
        if col >= self.width || row >= self.height {
            return None;
        }
        let id = self.ids[row * self.width + col];
        (id != Self::NONE).then_some(id)
    }

    /// Row-major face ids with [`FaceIdMap::NONE`] for empty texels.
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Faces skipped because their uv triangle has (near) zero area.
    pub fn degenerate_faces(&self) -> usize {
        self.degenerate
    }

    pub fn occupancy(&self) -> Mask {
        let bits = self.ids.iter().map(|&id| id != Self::NONE).collect();
        Mask::from_bits(self.width, self.height, bits).expect("dimensions match")
    }

    pub fn occupied_count(&self) -> usize {
        self.ids.iter().filter(|&&id| id != Self::NONE).count()
    }
}

/// Rasterizes with the default `v = 0 at bottom` convention on all cores.
pub fn rasterize_occupancy(
    mesh: &Mesh,
    width: usize,
    height: usize,
) -> Result<FaceIdMap, GeometryError> {
    rasterize_occupancy_with(mesh, &TexelGrid::new(width, height), 0)
}

/// Rasterizes the uv triangles of `mesh` onto `grid`.
///
/// Rows are processed in bands over `workers` threads (`0` = all cores). The
/// result does not depend on the worker count.
pub fn rasterize_occupancy_with(
    mesh: &Mesh,
    grid: &TexelGrid,
    workers: usize,
) -> Result<FaceIdMap, GeometryError> {
    let (width, height) = (grid.width, grid.height);
    if width > MAX_DIM || height > MAX_DIM {
        return Err(GeometryError::AtlasTooLarge(width, height));
    }
    let (faces, degenerate) = prepare_faces(mesh, grid);

    let band_count = height.div_ceil(BAND_ROWS);
    let mut bands: Vec<Vec<u32>> = vec![Vec::new(); band_count];
    for (i, f) in faces.iter().enumerate() {
        for band in (f.row0 / BAND_ROWS)..=(f.row1 / BAND_ROWS) {
            bands[band].push(i as u32);
        }
    }

    let mut ids = vec![FaceIdMap::NONE; width * height];
    par::for_each_row(&mut ids, BAND_ROWS * width, workers, |band, out| {
        let row_base = band * BAND_ROWS;
        let rows = out.len() / width;
        for &fi in &bands[band] {
            let f = &faces[fi as usize];
            let r0 = f.row0.max(row_base);
            let r1 = f.row1.min(row_base + rows - 1);
            for row in r0..=r1 {
                let line = &mut out[(row - row_base) * width..][..width];
                f.scan_row(row, line);
            }
        }
    });

    Ok(FaceIdMap {
        width,
        height,
        ids,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    ax: i64,
    ay: i64,
    dx: i64,
    dy: i64,
    // 0 on owned (top or left) edges, 1 otherwise: inside iff value >= bias
    bias: i64,
}

impl Edge {
    fn new(a: (i64, i64), b: (i64, i64)) -> Self {
        let (dx, dy) = (b.0 - a.0, b.1 - a.1);
        // interior lies along (-dy, dx); owned = top (horizontal, interior
        // below) or left (interior to the right)
        let owned = (dy == 0 && dx > 0) || dy < 0;
        Self {
            ax: a.0,
            ay: a.1,
            dx,
            dy,
            bias: if owned { 0 } else { 1 },
        }
    }

    #[inline]
    fn eval(&self, px: i64, py: i64) -> i64 {
        self.dx * (py - self.ay) - self.dy * (px - self.ax)
    }
}

struct PreparedFace {
    id: u32,
    edges: [Edge; 3],
    col0: usize,
    col1: usize,
    row0: usize,
    row1: usize,
}

impl PreparedFace {
    fn scan_row(&self, row: usize, line: &mut [u32]) {
        let py = row as i64 * ONE + HALF;
        let px0 = self.col0 as i64 * ONE + HALF;
        let mut e = self.edges.map(|edge| edge.eval(px0, py));
        let step = self.edges.map(|edge| -edge.dy * ONE);
        for col in self.col0..=self.col1 {
            if e[0] >= self.edges[0].bias
                && e[1] >= self.edges[1].bias
                && e[2] >= self.edges[2].bias
                && line[col] == FaceIdMap::NONE
            {
                line[col] = self.id;
            }
            for k in 0..3 {
                e[k] += step[k];
            }
        }
    }
}

/// Snaps a continuous pixel coordinate onto the fixed-point lattice.
fn snap(p: f64) -> i64 {
    floor(p * ONE as f64 + 0.5) as i64
}

fn prepare_faces(mesh: &Mesh, grid: &TexelGrid) -> (Vec<PreparedFace>, usize) {
    let mut out = Vec::with_capacity(mesh.face_count());
    let mut degenerate = 0;
    for (id, uv) in mesh.uv_corners().iter().enumerate() {
        let uv_area2 = (uv[1][0] - uv[0][0]) * (uv[2][1] - uv[0][1])
            - (uv[2][0] - uv[0][0]) * (uv[1][1] - uv[0][1]);
        if uv_area2.abs() * 0.5 < DEGENERATE_UV_AREA {
            degenerate += 1;
            continue;
        }
        let mut p = uv.map(|c| {
            let (x, y) = grid.to_pixel(c);
            (snap(x), snap(y))
        });
        let area2 = (p[1].0 - p[0].0) * (p[2].1 - p[0].1) - (p[1].1 - p[0].1) * (p[2].0 - p[0].0);
        if area2 == 0 {
            degenerate += 1;
            continue;
        }
        if area2 < 0 {
            p.swap(1, 2);
        }

        let xmin = p.iter().map(|q| q.0).min().unwrap();
        let xmax = p.iter().map(|q| q.0).max().unwrap();
        let ymin = p.iter().map(|q| q.1).min().unwrap();
        let ymax = p.iter().map(|q| q.1).max().unwrap();
        let Some((col0, col1)) = texel_span(xmin, xmax, grid.width) else {
            continue;
        };
        let Some((row0, row1)) = texel_span(ymin, ymax, grid.height) else {
            continue;
        };

        out.push(PreparedFace {
            id: id as u32,
            edges: [
                Edge::new(p[0], p[1]),
                Edge::new(p[1], p[2]),
                Edge::new(p[2], p[0]),
            ],
            col0,
            col1,
            row0,
            row1,
        });
    }
    (out, degenerate)
}

/// Texel indices whose centers fall in `[lo, hi]`, clamped to `0..n`.
fn texel_span(lo: i64, hi: i64, n: usize) -> Option<(usize, usize)> {
    // center of texel i is i*ONE + HALF
    let first = -(-(lo - HALF)).div_euclid(ONE);
    let last = (hi - HALF).div_euclid(ONE);
    let first = first.max(0);
    let last = last.min(n as i64 - 1);
    (first <= last).then_some((first as usize, last as usize))
}

/// Faces for which the masked share of their owned texels is at least
/// `min_fraction`. Faces that own no texel are never selected.
pub fn mask_to_faces(
    mask: &Mask,
    facemap: &FaceIdMap,
    min_fraction: f64,
) -> Result<BTreeSet<u32>, GeometryError> {
    if mask.width() != facemap.width || mask.height() != facemap.height {
        return Err(GeometryError::DimensionMismatch {
            mask_w: mask.width(),
            mask_h: mask.height(),
            map_w: facemap.width,
            map_h: facemap.height,
        });
    }
    if !(0.0..=1.0).contains(&min_fraction) {
        return Err(GeometryError::InvalidFraction(min_fraction));
    }
    let max_id = facemap
        .ids
        .iter()
        .filter(|&&id| id != FaceIdMap::NONE)
        .max();
    let Some(&max_id) = max_id else {
        return Ok(BTreeSet::new());
    };
    let mut owned = vec![0usize; max_id as usize + 1];
    let mut hit = vec![0usize; max_id as usize + 1];
    for (&id, &m) in facemap.ids.iter().zip(mask.bits()) {
        if id != FaceIdMap::NONE {
            owned[id as usize] += 1;
            hit[id as usize] += m as usize;
        }
    }
    Ok(owned
        .iter()
        .zip(&hit)
        .enumerate()
        .filter(|(_, (&o, &h))| o > 0 && h as f64 / o as f64 >= min_fraction)
        .map(|(id, _)| id as u32)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_split() -> Mesh {
        // unit uv square split along the diagonal (0,0)-(1,1)
        Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![
                [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]],
                [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            ],
        )
        .unwrap()
    }

    #[test]
    fn empty_mesh_is_all_none() {
        let map = rasterize_occupancy(&Mesh::empty(), 5, 3).unwrap();
        assert!(map.ids().iter().all(|&id| id == FaceIdMap::NONE));
        assert_eq!(map.occupied_count(), 0);
    }

    #[test]
    fn split_square_is_fully_and_singly_covered() {
        let map = rasterize_occupancy(&square_split(), 4, 4).unwrap();
        assert_eq!(map.occupied_count(), 16);
        // the diagonal passes through texel centers (i+.5, 3-i+.5) in pixel space
        // along u = v; each is owned by exactly one face
        let mut per_face = [0; 2];
        for &id in map.ids() {
            per_face[id as usize] += 1;
        }
        assert_eq!(per_face[0] + per_face[1], 16);
        assert!(per_face[0] >= 6 && per_face[1] >= 6);
    }

    #[test]
    fn degenerate_uv_triangle_is_counted() {
        let m = Mesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
            vec![[[0.2, 0.2], [0.5, 0.5], [0.8, 0.8]]],
        )
        .unwrap();
        let map = rasterize_occupancy(&m, 8, 8).unwrap();
        assert_eq!(map.degenerate_faces(), 1);
        assert_eq!(map.occupied_count(), 0);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let m = square_split();
        let g = TexelGrid::new(67, 129);
        let a = rasterize_occupancy_with(&m, &g, 1).unwrap();
        let b = rasterize_occupancy_with(&m, &g, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overlapping_faces_lowest_index_wins() {
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let m = Mesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 1, 2]],
            vec![tri, tri],
        )
        .unwrap();
        let map = rasterize_occupancy(&m, 16, 16).unwrap();
        assert!(map.ids().iter().all(|&id| id == 0 || id == FaceIdMap::NONE));
    }

    #[test]
    fn oversized_atlas_rejected() {
        assert!(matches!(
            rasterize_occupancy(&Mesh::empty(), 1 << 16, 4),
            Err(GeometryError::AtlasTooLarge(..))
        ));
    }

    fn facemap_with(width: usize, ids: Vec<u32>) -> FaceIdMap {
        FaceIdMap {
            width,
            height: ids.len() / width,
            ids,
            degenerate: 0,
        }
    }

    #[test]
    fn mask_to_faces_threshold_boundary() {
        // face 3 owns 10 texels, 4 of them masked
        let mut ids = vec![3u32; 10];
        ids.extend([FaceIdMap::NONE; 2]);
        let map = facemap_with(4, ids);
        let mut mask = Mask::new(4, 3);
        for c in 0..4 {
            mask.set(c, 0, true);
        }
        assert!(mask_to_faces(&mask, &map, 0.5).unwrap().is_empty());
        assert_eq!(mask_to_faces(&mask, &map, 0.4).unwrap(), BTreeSet::from([3]));
    }

    #[test]
    fn mask_to_faces_full_and_empty() {
        let ids = vec![7, 7, 2, 2, FaceIdMap::NONE, 7];
        let map = facemap_with(3, ids.clone());
        let bits = ids.iter().map(|&i| i == 7).collect();
        let mask = Mask::from_bits(3, 2, bits).unwrap();
        assert_eq!(mask_to_faces(&mask, &map, 1.0).unwrap(), BTreeSet::from([7]));
        assert!(mask_to_faces(&Mask::new(3, 2), &map, 0.0).unwrap().contains(&2));
        assert!(mask_to_faces(&Mask::new(3, 2), &map, 0.1).unwrap().is_empty());
    }

    #[test]
    fn mask_to_faces_dimension_mismatch() {
        let map = facemap_with(3, vec![0; 6]);
        assert!(matches!(
            mask_to_faces(&Mask::new(2, 3), &map, 0.5),
            Err(GeometryError::DimensionMismatch { .. })
        ));
    }
}
