//! Core algorithms for turning registered multi-illumination textures of a
//! uv-mapped mesh into a calibrated multispectral cube and classifying it with
//! the spectral angle mapper.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. File formats, the command-line driver and the HTTP service live in
//! the companion `uvsam` crate.
//!
//! Pipeline, in order:
//!
//! 1. [`imaging::patch_stats`] measures the reflectance-standard patch on the
//!    acquired visible and UV-fluorescence textures.
//! 2. [`calibration`] turns those into per-channel normalization and
//!    stray-light vectors and applies them texel by texel.
//! 3. [`geometry::rasterize_occupancy`] decides which atlas texels carry
//!    surface data, and [`cube::assemble`] stacks the calibrated channels into
//!    a [`cube::SpectralCube`] restricted to those texels.
//! 4. [`classify::sam_map`] and friends compute per-texel spectral angles to
//!    a reference spectrum and extract threshold regions, which
//!    [`geometry::mask_to_faces`] maps back onto the mesh.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod calibration;
pub mod classify;
pub mod cube;
pub mod geometry;
pub mod imaging;
pub mod mask;

mod math;
mod par;

pub use calibration::{NormVector, StrayLight, UvfReport};
pub use classify::{LabelMap, Overlay, ReferenceSpectrum, Rgba, SamMap};
pub use cube::{BandDescriptor, SpectralCube};
pub use geometry::{FaceIdMap, Mesh, PickResult, TexelGrid, VAxis};
pub use imaging::{BandMeta, ChannelStats, Modality, PatchRect, Texture};
pub use mask::Mask;
