//! File formats, the project pipeline and the HTTP service around
//! [`uvsam_core`].

pub mod cube_store;
pub mod error;
pub mod fixture;
pub mod manifest;
pub mod obj;
pub mod pfm;
pub mod pipeline;
pub mod rle;
pub mod run_dir;
pub mod service;
pub mod texture_io;

pub use error::{Error, Result};
pub use manifest::Project;
pub use obj::load_mesh;
pub use texture_io::{load_texture, save_texture};
