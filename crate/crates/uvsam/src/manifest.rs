//! Project manifest (TOML) and its validation.
//!
//! ```toml
//! [project]
//! name = "fixture"
//! output_dir = "out"
//!
//! [mesh]
//! path = "mesh.obj"
//!
//! [atlas]
//! width = 1024
//! height = 1024
//! v_flip = false
//!
//! [[texture]]
//! path = "vis.pfm"
//! modality = "VIS"
//! role = "acquired"
//!
//! [[texture]]
//! path = "uvf.pfm"
//! modality = "UVF"
//!
//! [calibration]
//! vis_patch = [8, 8, 17, 17]
//! uvf_patch = [8, 8, 17, 17]
//! nominal = [0.99, 0.99, 0.99]
//!
//! [classify]
//! theta_max = 0.15
//! radius = 0
//! min_face_fraction = 0.5
//!
//! [provenance]
//! color_temperature_k = 5000
//! ```
//!
//! Relative paths are resolved against the manifest's directory. Textures
//! with role `calibrated` are appended to the cube after VIS and UVF, in
//! manifest order.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use uvsam_core::calibration::SPECTRALON_NOMINAL;
use uvsam_core::classify::DEFAULT_THETA_MAX;
use uvsam_core::{Modality, PatchRect, TexelGrid, VAxis};

use crate::error::{Error, Result};

pub const DEFAULT_MIN_FACE_FRACTION: f64 = 0.5;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    #[serde(default)]
    project: ProjectSection,
    mesh: MeshSection,
    atlas: AtlasSection,
    #[serde(default, rename = "texture")]
    textures: Vec<TextureEntry>,
    calibration: CalibrationSection,
    #[serde(default)]
    classify: ClassifySection,
    #[serde(default)]
    provenance: toml::Table,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectSection {
    name: Option<String>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshSection {
    path: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AtlasSection {
    width: usize,
    height: usize,
    #[serde(default)]
    v_flip: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Acquired,
    Calibrated,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TextureEntry {
    path: PathBuf,
    modality: String,
    #[serde(default)]
    role: Role,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationSection {
    vis_patch: [usize; 4],
    uvf_patch: [usize; 4],
    nominal: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ClassifySection {
    theta_max: f64,
    radius: usize,
    min_face_fraction: f64,
}

impl Default for ClassifySection {
    fn default() -> Self {
        Self {
            theta_max: DEFAULT_THETA_MAX,
            radius: 0,
            min_face_fraction: DEFAULT_MIN_FACE_FRACTION,
        }
    }
}

/// An already-calibrated band carried into the cube unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtraBand {
    pub path: PathBuf,
    pub modality: Modality,
}

/// A validated manifest with absolute paths.
#[derive(Debug, Clone)]
pub struct Project {
    pub manifest_path: PathBuf,
    pub name: String,
    pub mesh_path: PathBuf,
    pub vis_path: PathBuf,
    pub uvf_path: PathBuf,
    pub extra_bands: Vec<ExtraBand>,
    pub grid: TexelGrid,
    pub vis_patch: PatchRect,
    pub uvf_patch: PatchRect,
    pub nominal: Vec<f64>,
    pub theta_max: f64,
    pub radius: usize,
    pub min_face_fraction: f64,
    pub output_dir: PathBuf,
    pub provenance: toml::Table,
}

fn invalid(message: impl Into<String>) -> Error {
    Error::Validation(message.into())
}

fn patch(name: &str, p: [usize; 4], grid: &TexelGrid) -> Result<PatchRect> {
    let [col0, row0, col1, row1] = p;
    if col0 > col1 || row0 > row1 {
        return Err(invalid(format!("{name} {p:?} is empty")));
    }
    let rect = PatchRect::new(col0, row0, col1, row1);
    if !rect.is_within(grid.width, grid.height) {
        return Err(invalid(format!(
            "{name} {p:?} exceeds the {}x{} atlas",
            grid.width, grid.height
        )));
    }
    Ok(rect)
}

fn existing(base: &Path, path: &Path, what: &str) -> Result<PathBuf> {
    let full = base.join(path);
    if !full.is_file() {
        return Err(invalid(format!("{what} {} does not exist", full.display())));
    }
    Ok(full)
}

impl Project {
    /// Reads and fully validates a manifest. `out` overrides the output
    /// directory named in the file.
    pub fn load(path: &Path, out: Option<&Path>) -> Result<Project> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read manifest {}: {e}", path.display())))?;
        let file: ManifestFile = toml::from_str(&text)
            .map_err(|e| invalid(format!("manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(file, path, base, out)
    }

    fn from_file(file: ManifestFile, path: &Path, base: &Path, out: Option<&Path>) -> Result<Project> {
        let AtlasSection {
            width,
            height,
            v_flip,
        } = file.atlas;
        if width == 0 || height == 0 {
            return Err(invalid(format!("atlas dimensions {width}x{height} must be positive")));
        }
        let v_axis = if v_flip { VAxis::TopDown } else { VAxis::BottomUp };
        let grid = TexelGrid::new(width, height).with_v_axis(v_axis);

        let mesh_path = existing(base, &file.mesh.path, "mesh")?;
        let mut vis = Vec::new();
        let mut uvf = Vec::new();
        let mut extra_bands = Vec::new();
        for entry in &file.textures {
            let modality: Modality = entry
                .modality
                .parse()
                .map_err(|_| invalid(format!("unknown modality {:?}", entry.modality)))?;
            let full = existing(base, &entry.path, "texture")?;
            match (entry.role, modality) {
                (Role::Acquired, Modality::Vis) => vis.push(full),
                (Role::Acquired, Modality::Uvf) => uvf.push(full),
                (Role::Acquired, m) => {
                    return Err(invalid(format!(
                        "no calibration is defined for acquired {m} texture {}; supply it with role \"calibrated\"",
                        full.display()
                    )))
                }
                (Role::Calibrated, modality) => extra_bands.push(ExtraBand {
                    path: full,
                    modality,
                }),
            }
        }
        let single = |list: Vec<PathBuf>, m: &str| match list.len() {
            1 => Ok(list.into_iter().next().unwrap()),
            0 => Err(invalid(format!("manifest has no acquired {m} texture"))),
            n => Err(invalid(format!("manifest has {n} acquired {m} textures, expected one"))),
        };
        let vis_path = single(vis, "VIS")?;
        let uvf_path = single(uvf, "UVF")?;

        let vis_patch = patch("vis_patch", file.calibration.vis_patch, &grid)?;
        let uvf_patch = patch("uvf_patch", file.calibration.uvf_patch, &grid)?;
        let nominal = file
            .calibration
            .nominal
            .unwrap_or_else(|| vec![SPECTRALON_NOMINAL; 3]);
        if nominal.len() != 3 || nominal.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(invalid(format!(
                "nominal must hold 3 reflectances in (0, 1], got {nominal:?}"
            )));
        }
        let c = file.classify;
        if !(c.theta_max >= 0.0 && c.theta_max.is_finite()) {
            return Err(invalid(format!("theta_max {} must be finite and >= 0", c.theta_max)));
        }
        if !(0.0..=1.0).contains(&c.min_face_fraction) {
            return Err(invalid(format!(
                "min_face_fraction {} must lie in [0, 1]",
                c.min_face_fraction
            )));
        }
        let output_dir = match out {
            Some(o) => o.to_path_buf(),
            None => base.join(file.project.output_dir.unwrap_or_else(|| "output".into())),
        };
        Ok(Project {
            manifest_path: path.to_path_buf(),
            name: file.project.name.unwrap_or_else(|| "project".into()),
            mesh_path,
            vis_path,
            uvf_path,
            extra_bands,
            grid,
            vis_patch,
            uvf_patch,
            nominal,
            theta_max: c.theta_max,
            radius: c.radius,
            min_face_fraction: c.min_face_fraction,
            output_dir,
            provenance: file.provenance,
        })
    }
}
