//! Synthetic two-material project with known ground truth.
//!
//! A 25×10 quad grid (500 triangles) spans uv `[1/16, 15/16]²` over a gently
//! curved height field. Material A covers two disjoint uv disks, material B
//! the rest of the surface. Shading and 1% per-channel noise vary magnitude
//! but barely move the spectral direction. Background texels hold random
//! values, except for a Spectralon patch in the top-left corner.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use uvsam_core::geometry::rasterize_occupancy;
use uvsam_core::{Mesh, TexelGrid};

use crate::error::{Error, Result};
use crate::obj::write_obj;
use crate::pfm::{self, Pfm};

pub const GRID_COLS: usize = 25;
pub const GRID_ROWS: usize = 10;
pub const UV_MIN: f64 = 0.0625;
pub const UV_MAX: f64 = 0.9375;

/// Illumination on the VIS capture; equals the expected `R_norm`.
pub const ILLUMINATION: [f64; 3] = [0.82, 0.78, 0.70];
/// Stray visible light on the UVF capture; equals the expected `S_target`.
pub const STRAY: [f64; 3] = [0.020, 0.015, 0.030];
pub const NOMINAL: f64 = 0.99;

/// Calibrated VIS RGB then UVF RGB.
pub const MATERIAL_A: [f64; 6] = [0.62, 0.35, 0.20, 0.05, 0.12, 0.30];
pub const MATERIAL_B: [f64; 6] = [0.25, 0.40, 0.55, 0.20, 0.08, 0.04];
pub const NOISE: f64 = 0.01;

const DISKS_A: [([f64; 2], f64); 2] = [([0.35, 0.55], 0.18), ([0.75, 0.30], 0.08)];
const RELIEF: f64 = 0.02;
const EXTENT: f64 = 0.4;

pub const LABEL_BACKGROUND: u8 = 0;
pub const LABEL_A: u8 = 1;
pub const LABEL_B: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureConfig {
    pub size: usize,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            size: 1024,
            seed: 20240601,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Pick {
    pub uv: [f64; 2],
    pub texel: [usize; 2],
    pub ray_origin: [f64; 3],
    pub ray_direction: [f64; 3],
}

/// Facts about a generated fixture, also written as `fixture.json`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FixtureInfo {
    pub size: usize,
    pub seed: u64,
    pub patch: [usize; 4],
    pub material_a: Pick,
    pub material_b: Pick,
    pub background_texel: [usize; 2],
    pub expected_r_norm: [f64; 3],
    pub expected_s_target: [f64; 3],
    pub texels_a: usize,
    pub texels_b: usize,
}

pub fn fixture_mesh() -> Mesh {
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..=GRID_ROWS {
        for i in 0..=GRID_COLS {
            let u = UV_MIN + (UV_MAX - UV_MIN) * i as f64 / GRID_COLS as f64;
            let v = UV_MIN + (UV_MAX - UV_MIN) * j as f64 / GRID_ROWS as f64;
            let z = RELIEF
                * (2.0 * std::f64::consts::PI * u).sin()
                * (std::f64::consts::PI * v).cos();
            vertices.push([(u - 0.5) * EXTENT, (v - 0.5) * EXTENT, z]);
            uvs.push([u, v]);
        }
    }
    let stride = GRID_COLS as u32 + 1;
    let mut faces = Vec::new();
    for j in 0..GRID_ROWS as u32 {
        for i in 0..GRID_COLS as u32 {
            let a = j * stride + i;
            let (b, c, d) = (a + 1, a + stride + 1, a + stride);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    let uv_corners = faces
        .iter()
        .map(|f| f.map(|k| uvs[k as usize]))
        .collect();
    Mesh::new(vertices, faces, uv_corners).expect("fixture mesh is valid")
}

fn in_material_a(uv: [f64; 2]) -> bool {
    DISKS_A.iter().any(|&(c, r)| {
        let (du, dv) = (uv[0] - c[0], uv[1] - c[1]);
        du * du + dv * dv <= r * r
    })
}

fn shading(uv: [f64; 2]) -> f64 {
    0.7 + 0.25 * (5.0 * uv[0]).sin() * (3.0 * uv[1]).cos()
}

/// Spectralon patch rectangle for an atlas of `size` texels, inside the
/// background corner of row 0.
pub fn patch_rect(size: usize) -> [usize; 4] {
    let p = (size / 16).saturating_sub(3).clamp(1, 10);
    [2, 2, 1 + p, 1 + p]
}

/// Surface point whose uv is `uv`, with a vertical ray onto it.
fn pick_for(mesh: &Mesh, grid: &TexelGrid, uv: [f64; 2]) -> Pick {
    let texel = grid.texel_of(uv);
    let uv = grid.texel_center_uv(texel.0, texel.1);
    for (f, c) in mesh.uv_corners().iter().enumerate() {
        let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
        let w1 = ((uv[0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (uv[1] - c[0][1])) / det;
        let w2 = ((c[1][0] - c[0][0]) * (uv[1] - c[0][1]) - (uv[0] - c[0][0]) * (c[1][1] - c[0][1])) / det;
        let w0 = 1.0 - w1 - w2;
        if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
            let p = mesh.point_of(f, [w0, w1, w2]).expect("weights are valid");
            return Pick {
                uv,
                texel: [texel.0, texel.1],
                ray_origin: [p[0], p[1], p[2] + 1.0],
                ray_direction: [0.0, 0.0, -1.0],
            };
        }
    }
    panic!("uv {uv:?} is not on the fixture mesh");
}

/// Writes mesh, textures, ground truth, manifest and README into `dir`.
pub fn make_fixture(dir: &Path, config: &FixtureConfig) -> Result<FixtureInfo> {
    let size = config.size;
    if !(64..=8192).contains(&size) {
        return Err(Error::Validation(format!("fixture size {size} outside 64..=8192")));
    }
    std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mesh = fixture_mesh();
    let grid = TexelGrid::new(size, size);
    let facemap = rasterize_occupancy(&mesh, size, size).map_err(Error::stage("rasterization"))?;
    let patch = patch_rect(size);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = size * size;
    let mut vis = vec![0f32; n * 3];
    let mut uvf = vec![0f32; n * 3];
    let mut truth = vec![0f32; n];
    let (mut texels_a, mut texels_b) = (0, 0);
    for row in 0..size {
        for col in 0..size {
            let t = row * size + col;
            let noise: [f64; 6] = std::array::from_fn(|_| 1.0 + NOISE * (2.0 * rng.random::<f64>() - 1.0));
            let garbage: [f64; 6] = std::array::from_fn(|_| rng.random::<f64>());
            let (v, u) = if facemap.owner(col, row).is_some() {
                let uv = grid.texel_center_uv(col, row);
                let (material, label) = if in_material_a(uv) {
                    texels_a += 1;
                    (MATERIAL_A, LABEL_A)
                } else {
                    texels_b += 1;
                    (MATERIAL_B, LABEL_B)
                };
                truth[t] = f32::from(label);
                let s = shading(uv);
                let cv: [f64; 3] = std::array::from_fn(|k| s * material[k] * noise[k]);
                let cu: [f64; 3] = std::array::from_fn(|k| s * material[k + 3] * noise[k + 3]);
                (
                    std::array::from_fn(|k| cv[k] * ILLUMINATION[k]),
                    std::array::from_fn(|k| cu[k] + STRAY[k] * cv[k]),
                )
            } else if (patch[0]..=patch[2]).contains(&col) && (patch[1]..=patch[3]).contains(&row) {
                (ILLUMINATION.map(|l| NOMINAL * l), STRAY)
            } else {
                (
                    std::array::from_fn(|k| garbage[k]),
                    std::array::from_fn(|k| 0.2 * garbage[k + 3]),
                )
            };
            let [a, b, c]: [f64; 3] = v;
            vis[3 * t..3 * t + 3].copy_from_slice(&[a as f32, b as f32, c as f32]);
            let [a, b, c]: [f64; 3] = u;
            uvf[3 * t..3 * t + 3].copy_from_slice(&[a as f32, b as f32, c as f32]);
        }
    }

    let info = FixtureInfo {
        size,
        seed: config.seed,
        patch,
        material_a: pick_for(&mesh, &grid, DISKS_A[0].0),
        material_b: pick_for(&mesh, &grid, [0.85, 0.80]),
        background_texel: [0, 0],
        expected_r_norm: ILLUMINATION,
        expected_s_target: STRAY,
        texels_a,
        texels_b,
    };

    let rgb = |data| Pfm {
        width: size,
        height: size,
        channels: 3,
        data,
    };
    let files: Vec<(&str, Vec<u8>)> = vec![
        ("mesh.obj", write_obj(&mesh).into_bytes()),
        ("vis.pfm", pfm::encode(&rgb(vis))),
        ("uvf.pfm", pfm::encode(&rgb(uvf))),
        ("ground_truth.pfm", pfm::encode(&Pfm::gray(size, size, truth))),
        ("manifest.toml", manifest_text(size, config.seed, patch).into_bytes()),
        ("fixture.json", {
            let mut s = serde_json::to_string_pretty(&info).expect("info serializes");
            s.push('\n');
            s.into_bytes()
        }),
        ("README.md", readme_text(&info).into_bytes()),
    ];
    for (name, bytes) in files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(Error::io(&path))?;
    }
    Ok(info)
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.toml")
}

fn manifest_text(size: usize, seed: u64, patch: [usize; 4]) -> String {
    format!(
        r#"[project]
name = "two-material fixture"
output_dir = "out"

[mesh]
path = "mesh.obj"

[atlas]
width = {size}
height = {size}
v_flip = false

[[texture]]
path = "vis.pfm"
modality = "VIS"
role = "acquired"

[[texture]]
path = "uvf.pfm"
modality = "UVF"
role = "acquired"

[calibration]
vis_patch = {patch:?}
uvf_patch = {patch:?}
nominal = [0.99, 0.99, 0.99]

[classify]
theta_max = 0.15
radius = 0
min_face_fraction = 0.5

[provenance]
source = "synthetic fixture"
seed = {seed}
color_temperature_k = 5000
"#
    )
}

fn readme_text(info: &FixtureInfo) -> String {
    let [l0, l1, l2] = ILLUMINATION;
    let [s0, s1, s2] = STRAY;
    let [c0, r0, c1, r1] = info.patch;
    format!(
        r#"# Two-material fixture

Generated by `uvsam make-fixture` (size {size}, seed {seed}).

| file | content |
|------|---------|
| `mesh.obj` | 25×10 quad grid, 500 triangles, uv in [0.0625, 0.9375]² |
| `vis.pfm`, `uvf.pfm` | acquired VIS and UVF textures, {size}×{size}×3 |
| `ground_truth.pfm` | 0 background, 1 material A, 2 material B |
| `manifest.toml` | project manifest |
| `fixture.json` | pick locations and expected calibration values |

## Calibration by hand

The Spectralon patch covers texels ({c0}, {r0}) to ({c1}, {r1}). Every patch
texel of `vis.pfm` holds 0.99 × illumination, so the median is that value
and

    R_norm = R_target / 0.99
           = (0.99·{l0}, 0.99·{l1}, 0.99·{l2}) / 0.99
           = ({l0}, {l1}, {l2})

up to the 32-bit rounding of the stored samples (about 1e-8). The patch
texels of `uvf.pfm` hold the stray light directly, so

    S_target = ({s0}, {s1}, {s2})

`calibrate` reports both in `calibration_report.json`.

## Materials

Calibrated spectra (VIS RGB, UVF RGB) before shading and noise:

    A = {a:?}
    B = {b:?}

The angle between A and B is about 0.78 rad. Shading scales whole spectra
and leaves angles unchanged; the 1% noise keeps texels of one material
within about 0.02 rad of each other. With `theta_max = 0.15` a reference
inside A selects exactly the {na} texels labelled 1.

Material A pick: uv {ua:?}, texel {ta:?}.
"#,
        size = info.size,
        seed = info.seed,
        a = MATERIAL_A,
        b = MATERIAL_B,
        na = info.texels_a,
        ua = info.material_a.uv,
        ta = info.material_a.texel,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_shape() {
        let mesh = fixture_mesh();
        assert_eq!(mesh.face_count(), 500);
        assert_eq!(mesh.vertex_count(), 286);
    }

    #[test]
    fn patch_stays_in_background() {
        for size in [64, 128, 256, 1024, 4096] {
            let [c0, r0, c1, r1] = patch_rect(size);
            assert!(c0 <= c1 && r0 <= r1);
            // Row 0 is v = 1, above the mesh; columns stay left of it.
            assert!((c1 as f64 + 1.0) <= UV_MIN * size as f64);
            assert!((r1 as f64 + 1.0) <= (1.0 - UV_MAX) * size as f64);
        }
    }

    #[test]
    fn material_angle_is_wide() {
        let dot: f64 = MATERIAL_A.iter().zip(&MATERIAL_B).map(|(a, b)| a * b).sum();
        let na: f64 = MATERIAL_A.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nb: f64 = MATERIAL_B.iter().map(|b| b * b).sum::<f64>().sqrt();
        let angle = (dot / (na * nb)).acos();
        assert!(angle > 0.7, "{angle}");
    }

    #[test]
    fn small_fixture_is_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let config = FixtureConfig { size: 96, seed: 3 };
        let ia = make_fixture(a.path(), &config).unwrap();
        let ib = make_fixture(b.path(), &config).unwrap();
        assert_eq!(ia, ib);
        for f in ["vis.pfm", "uvf.pfm", "mesh.obj", "ground_truth.pfm"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap()
            );
        }
        assert!(ia.texels_a > 0 && ia.texels_b > 0);
    }
}
