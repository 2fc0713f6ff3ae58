//! Triangle meshes with per-corner uv coordinates, and the conversions
//! between surface points, uv coordinates and atlas texels.
//!
//! Texel convention: pixel space has `x = u·width` and, for the default
//! [`VAxis::BottomUp`], `y = (1 − v)·height`, so `v = 0` is the bottom row of
//! the texture. Texel `(col, row)` covers `[col, col+1) × [row, row+1)` and its
//! center is `(col + 0.5, row + 0.5)`.

mod mesh;
mod pick;
mod raster;
mod texel;

pub use mesh::Mesh;
pub use pick::{pick, PickResult};
pub use raster::{mask_to_faces, rasterize_occupancy, rasterize_occupancy_with, FaceIdMap};
pub use texel::{uv_to_texel, TexelGrid, VAxis};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("face {face} references vertex {index} but the mesh has {count} vertices")]
    VertexOutOfRange { face: usize, index: u32, count: usize },
    #[error("face {face} has three identical vertex indices")]
    DegenerateFace { face: usize },
    #[error("{0} uv corner sets given for {1} faces")]
    UvCountMismatch(usize, usize),
    #[error("non-finite coordinate in {what} {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("face id {face} out of range ({count} faces)")]
    FaceOutOfRange { face: usize, count: usize },
    #[error("barycentric weights must be non-negative and sum to 1")]
    InvalidBarycentric,
    #[error("mask is {mask_w}x{mask_h} but the face map is {map_w}x{map_h}")]
    DimensionMismatch {
        mask_w: usize,
        mask_h: usize,
        map_w: usize,
        map_h: usize,
    },
    #[error("min_fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("atlas {0}x{1} is larger than the supported maximum")]
    AtlasTooLarge(usize, usize),
}
