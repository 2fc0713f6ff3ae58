//! The `calibrate`, `build-cube` and `classify` commands, and the
//! classification session shared with the service.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uvsam_core::calibration::{calibrate_uvf, calibrate_vis, compute_norm};
use uvsam_core::classify::{
    classify_multi, connected_region, make_overlay, region_stats, sam_map, threshold_region,
    RegionStats,
};
use uvsam_core::geometry::{mask_to_faces, pick, rasterize_occupancy_with};
use uvsam_core::imaging::patch_stats;
use uvsam_core::{
    BandMeta, FaceIdMap, LabelMap, Mask, Mesh, Modality, ReferenceSpectrum, Rgba, SamMap,
    SpectralCube, StrayLight, TexelGrid, Texture,
};

use crate::cube_store::{self, mask_to_pfm};
use crate::error::{Error, Result};
use crate::manifest::Project;
use crate::obj::load_mesh;
use crate::pfm::{self, Pfm};
use crate::run_dir::{latest_dir, Run};
use crate::texture_io::{encode_png, load_texture, read_image, texture_to_pfm};

pub const VIS_CALIB: &str = "vis_calib.pfm";
pub const UVF_CALIB: &str = "uvf_calib.pfm";
pub const OVERLAY: &str = "overlay.png";

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn json(value: &impl Serialize) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

fn check_dims(tex: &Texture, grid: &TexelGrid, path: &Path) -> Result<()> {
    if (tex.width(), tex.height()) != (grid.width, grid.height) {
        return Err(Error::Validation(format!(
            "{} is {}x{} but the manifest atlas is {}x{}",
            path.display(),
            tex.width(),
            tex.height(),
            grid.width,
            grid.height
        )));
    }
    Ok(())
}

fn load_checked(path: &Path, meta: BandMeta, grid: &TexelGrid) -> Result<Texture> {
    let tex = load_texture(path, meta)?;
    check_dims(&tex, grid, path)?;
    Ok(tex)
}

fn rect(p: &uvsam_core::PatchRect) -> [usize; 4] {
    [p.col0, p.row0, p.col1, p.row1]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CalibrationReport {
    pub manifest: String,
    pub vis_source: String,
    pub uvf_source: String,
    pub vis_patch: [usize; 4],
    pub uvf_patch: [usize; 4],
    pub r_target: Vec<f64>,
    pub r_nominal: Vec<f64>,
    pub r_norm: Vec<f64>,
    pub s_target: Vec<f64>,
    /// Calibrated VIS samples above 1 (kept, not clamped).
    pub vis_above_one: usize,
    pub uvf_clamped: usize,
    pub uvf_max_undershoot: f64,
    pub provenance: toml::Table,
}

/// Calibrates the acquired VIS and UVF textures of `project`.
pub fn calibrate(project: &Project, workers: usize) -> Result<(CalibrationReport, PathBuf)> {
    let grid = &project.grid;
    let vis = load_checked(&project.vis_path, BandMeta::new(Modality::Vis, 3), grid)?;
    let uvf = load_checked(&project.uvf_path, BandMeta::new(Modality::Uvf, 3), grid)?;

    let target = patch_stats(&vis, &project.vis_patch).map_err(Error::stage("VIS patch statistics"))?;
    let norm = compute_norm(&target, &project.nominal).map_err(Error::stage("normalization vector"))?;
    let vis_calib = calibrate_vis(&vis, &norm, workers).map_err(Error::stage("VIS calibration"))?;
    let stray_stats =
        patch_stats(&uvf, &project.uvf_patch).map_err(Error::stage("UVF patch statistics"))?;
    let stray = StrayLight::from_stats(&stray_stats).map_err(Error::stage("stray light"))?;
    let (uvf_calib, uvf_report) =
        calibrate_uvf(&uvf, &stray, &vis_calib, workers).map_err(Error::stage("UVF calibration"))?;

    let report = CalibrationReport {
        manifest: file_name(&project.manifest_path),
        vis_source: file_name(&project.vis_path),
        uvf_source: file_name(&project.uvf_path),
        vis_patch: rect(&project.vis_patch),
        uvf_patch: rect(&project.uvf_patch),
        r_target: norm.target().to_vec(),
        r_nominal: norm.nominal().to_vec(),
        r_norm: norm.r_norm().to_vec(),
        s_target: stray.s_target().to_vec(),
        vis_above_one: vis_calib.data().iter().filter(|&&v| v > 1.0).count(),
        uvf_clamped: uvf_report.clamped,
        uvf_max_undershoot: uvf_report.max_undershoot,
        provenance: project.provenance.clone(),
    };

    let mut run = Run::begin(&project.output_dir, "calibrate")?;
    run.write(VIS_CALIB, &pfm::encode(&texture_to_pfm(&vis_calib)))?;
    run.write(UVF_CALIB, &pfm::encode(&texture_to_pfm(&uvf_calib)))?;
    run.write("calibration_report.json", &json(&report))?;
    let dir = run.finish()?;
    Ok((report, dir))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BuildReport {
    pub width: usize,
    pub height: usize,
    pub bands: Vec<String>,
    pub valid_texels: usize,
    pub faces: usize,
    pub degenerate_faces: usize,
    pub clamped_uv: usize,
}

fn upstream(project: &Project, name: &str, verb: &str) -> Result<PathBuf> {
    let path = latest_dir(&project.output_dir).join(name);
    if !path.is_file() {
        return Err(Error::Validation(format!(
            "{} not found; run `{verb}` first",
            path.display()
        )));
    }
    Ok(path)
}

/// Rasterizes the mesh occupancy and stacks the calibrated bands.
pub fn build_cube(project: &Project, workers: usize) -> Result<(BuildReport, PathBuf)> {
    let grid = &project.grid;
    let vis_path = upstream(project, VIS_CALIB, "calibrate")?;
    let uvf_path = upstream(project, UVF_CALIB, "calibrate")?;
    let vis = load_checked(&vis_path, BandMeta::new(Modality::Vis, 3).calibrated(), grid)?;
    let uvf = load_checked(&uvf_path, BandMeta::new(Modality::Uvf, 3).calibrated(), grid)?;
    let mut extras = Vec::new();
    for band in &project.extra_bands {
        let raw = read_image(&band.path)?;
        let meta = BandMeta::new(band.modality, raw.channels).calibrated();
        let tex = Texture::new(raw.width, raw.height, raw.channels, raw.data, meta)
            .map_err(|e| Error::format(&band.path, e.to_string()))?;
        check_dims(&tex, grid, &band.path)?;
        extras.push((file_name(&band.path), tex));
    }
    let mesh = load_mesh(&project.mesh_path)?;

    let facemap = rasterize_occupancy_with(&mesh, grid, workers).map_err(Error::stage("rasterization"))?;
    let mut inputs: Vec<(&str, &Texture)> = vec![(VIS_CALIB, &vis), (UVF_CALIB, &uvf)];
    inputs.extend(extras.iter().map(|(n, t)| (n.as_str(), t)));
    let cube = uvsam_core::cube::assemble(&inputs, facemap.occupancy())
        .map_err(Error::stage("cube assembly"))?;

    let report = BuildReport {
        width: cube.width(),
        height: cube.height(),
        bands: cube
            .bands()
            .iter()
            .map(|b| format!("{}-{}", b.modality, b.channel))
            .collect(),
        valid_texels: cube.valid().count(),
        faces: mesh.face_count(),
        degenerate_faces: facemap.degenerate_faces(),
        clamped_uv: mesh.clamped_uv(),
    };
    let mut run = Run::begin(&project.output_dir, "build-cube")?;
    for (name, bytes) in cube_store::encode_cube(&cube) {
        run.write(&name, &bytes)?;
    }
    run.write("build_report.json", &json(&report))?;
    let dir = run.finish()?;
    Ok((report, dir))
}

/// How the operator designates the reference texel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Uv([f64; 2]),
    Texel(usize, usize),
    Ray { origin: [f64; 3], direction: [f64; 3] },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Picked {
    pub texel: (usize, usize),
    pub uv: [f64; 2],
    pub face: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyParams {
    pub theta_max: f64,
    pub radius: usize,
    pub connected: bool,
    pub min_face_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub picked: Picked,
    pub reference: Vec<f64>,
    pub sam: SamMap,
    pub region: Mask,
    pub stats: RegionStats,
    pub faces: BTreeSet<u32>,
}

/// Stats block written next to the classification maps.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassifyStats {
    pub reference_texel: [usize; 2],
    pub reference_uv: [f64; 2],
    pub reference_face: Option<u32>,
    pub reference_spectrum: Vec<f64>,
    pub theta_max: f64,
    pub radius: usize,
    pub connected: bool,
    pub min_face_fraction: f64,
    pub selected_texels: usize,
    pub min_angle: Option<f64>,
    pub median_angle: Option<f64>,
    pub selected_faces: usize,
}

impl Classification {
    pub fn stats_block(&self, params: &ClassifyParams) -> ClassifyStats {
        ClassifyStats {
            reference_texel: [self.picked.texel.0, self.picked.texel.1],
            reference_uv: self.picked.uv,
            reference_face: self.picked.face,
            reference_spectrum: self.reference.clone(),
            theta_max: params.theta_max,
            radius: params.radius,
            connected: params.connected,
            min_face_fraction: params.min_face_fraction,
            selected_texels: self.stats.count,
            min_angle: self.stats.min_angle,
            median_angle: self.stats.median_angle,
            selected_faces: self.faces.len(),
        }
    }
}

/// Cube, mesh and texel ownership loaded once and shared read-only.
pub struct Session {
    pub cube: SpectralCube,
    pub mesh: Mesh,
    pub facemap: FaceIdMap,
    pub grid: TexelGrid,
}

impl Session {
    pub fn open(project: &Project, workers: usize) -> Result<Session> {
        let dir = latest_dir(&project.output_dir);
        upstream(project, cube_store::DESCRIPTOR, "build-cube")?;
        let cube = cube_store::load_cube(&dir)?;
        let grid = project.grid;
        if (cube.width(), cube.height()) != (grid.width, grid.height) {
            return Err(Error::Validation(format!(
                "cube is {}x{} but the manifest atlas is {}x{}; rerun `build-cube`",
                cube.width(),
                cube.height(),
                grid.width,
                grid.height
            )));
        }
        let mesh = load_mesh(&project.mesh_path)?;
        let facemap =
            rasterize_occupancy_with(&mesh, &grid, workers).map_err(Error::stage("rasterization"))?;
        if facemap.occupancy() != *cube.valid() {
            return Err(Error::Validation(
                "cube validity mask does not match the mesh occupancy; rerun `build-cube`".into(),
            ));
        }
        Ok(Session {
            cube,
            mesh,
            facemap,
            grid,
        })
    }

    pub fn resolve(&self, reference: &Reference) -> Result<Picked> {
        let picked = match *reference {
            Reference::Uv(uv) => {
                if !uv.iter().all(|c| (0.0..=1.0).contains(c)) {
                    return Err(Error::Validation(format!("uv {uv:?} outside [0, 1]")));
                }
                let texel = self.grid.texel_of(uv);
                Picked {
                    texel,
                    uv,
                    face: self.facemap.owner(texel.0, texel.1),
                }
            }
            Reference::Texel(col, row) => {
                if col >= self.grid.width || row >= self.grid.height {
                    return Err(Error::Validation(format!(
                        "texel ({col}, {row}) outside the {}x{} atlas",
                        self.grid.width, self.grid.height
                    )));
                }
                Picked {
                    texel: (col, row),
                    uv: self.grid.texel_center_uv(col, row),
                    face: self.facemap.owner(col, row),
                }
            }
            Reference::Ray { origin, direction } => {
                if direction.iter().all(|&d| d == 0.0)
                    || origin.iter().chain(&direction).any(|v| !v.is_finite())
                {
                    return Err(Error::Validation("ray needs a finite non-zero direction".into()));
                }
                let hit = pick(&self.mesh, origin, direction, &self.grid).ok_or(Error::NoSurfaceHit)?;
                Picked {
                    texel: hit.texel,
                    uv: hit.uv,
                    face: Some(hit.face_id),
                }
            }
        };
        let (col, row) = picked.texel;
        if !self.cube.valid().get(col, row) {
            return Err(Error::NotOnSurface { col, row });
        }
        Ok(picked)
    }

    fn reference_spectrum(&self, picked: &Picked, radius: usize, label: &str) -> Result<ReferenceSpectrum> {
        let (col, row) = picked.texel;
        let vector = self
            .cube
            .mean_spectrum(col, row, radius)
            .map_err(Error::stage("reference spectrum"))?
            .ok_or(Error::NotOnSurface { col, row })?;
        ReferenceSpectrum::new(label, vector).map_err(|e| {
            Error::Validation(format!("reference texel ({col}, {row}) is unusable: {e}"))
        })
    }

    pub fn classify(
        &self,
        reference: &Reference,
        params: &ClassifyParams,
        workers: usize,
    ) -> Result<Classification> {
        check_params(params)?;
        let picked = self.resolve(reference)?;
        let spectrum = self.reference_spectrum(&picked, params.radius, "reference")?;
        let sam = sam_map(&self.cube, &spectrum, workers).map_err(Error::stage("spectral angle map"))?;
        let mut region = threshold_region(&sam, params.theta_max).map_err(Error::stage("threshold"))?;
        if params.connected {
            region = connected_region(&region, picked.texel);
        }
        let stats = region_stats(&sam, &region);
        let faces = mask_to_faces(&region, &self.facemap, params.min_face_fraction)
            .map_err(Error::stage("face selection"))?;
        Ok(Classification {
            picked,
            reference: spectrum.vector().to_vec(),
            sam,
            region,
            stats,
            faces,
        })
    }
}

fn check_params(params: &ClassifyParams) -> Result<()> {
    if !(params.theta_max >= 0.0 && params.theta_max.is_finite()) {
        return Err(Error::Validation(format!(
            "theta_max {} must be finite and >= 0",
            params.theta_max
        )));
    }
    if !(0.0..=1.0).contains(&params.min_face_fraction) {
        return Err(Error::Validation(format!(
            "min_face_fraction {} must lie in [0, 1]",
            params.min_face_fraction
        )));
    }
    Ok(())
}

pub fn sam_to_pfm(sam: &SamMap) -> Pfm {
    Pfm::gray(
        sam.width(),
        sam.height(),
        sam.angles().iter().map(|&a| a as f32).collect(),
    )
}

pub fn overlay_png(region: &Mask) -> Vec<u8> {
    let overlay = make_overlay(region, Rgba::MAGENTA);
    encode_png(overlay.width, overlay.height, 4, &overlay.to_bytes())
}

fn faces_text(faces: &BTreeSet<u32>) -> String {
    let mut out = String::new();
    for f in faces {
        let _ = writeln!(out, "{f}");
    }
    out
}

/// Single-reference classification written to a run directory.
pub fn classify(
    project: &Project,
    reference: &Reference,
    params: &ClassifyParams,
    workers: usize,
) -> Result<(ClassifyStats, PathBuf)> {
    check_params(params)?;
    let session = Session::open(project, workers)?;
    let result = session.classify(reference, params, workers)?;
    let stats = result.stats_block(params);

    let mut run = Run::begin(&project.output_dir, "classify")?;
    run.write("sam.pfm", &pfm::encode(&sam_to_pfm(&result.sam)))?;
    run.write("region.pfm", &pfm::encode(&mask_to_pfm(&result.region)))?;
    run.write(OVERLAY, &overlay_png(&result.region))?;
    run.write("faces.txt", faces_text(&result.faces).as_bytes())?;
    run.write("stats.json", &json(&stats))?;
    let dir = run.finish()?;
    Ok((stats, dir))
}

/// One entry of a reference list file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceEntry {
    pub label: String,
    pub texel: Option<[usize; 2]>,
    pub uv: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferenceFile {
    #[serde(rename = "reference")]
    references: Vec<ReferenceEntry>,
}

/// Parses a TOML list of `[[reference]]` tables, each with a `label` and
/// exactly one of `texel = [c, r]` or `uv = [u, v]`.
pub fn load_reference_file(path: &Path) -> Result<Vec<(String, Reference)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    let file: ReferenceFile = toml::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    if file.references.is_empty() {
        return Err(Error::Validation(format!("{} lists no references", path.display())));
    }
    file.references
        .into_iter()
        .map(|e| match (e.texel, e.uv) {
            (Some([c, r]), None) => Ok((e.label, Reference::Texel(c, r))),
            (None, Some(uv)) => Ok((e.label, Reference::Uv(uv))),
            _ => Err(Error::Validation(format!(
                "reference {:?} needs exactly one of texel or uv",
                e.label
            ))),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LabelSummary {
    pub label: String,
    pub index: usize,
    pub reference_texel: [usize; 2],
    pub reference_spectrum: Vec<f64>,
    pub texels: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MultiStats {
    pub theta_max: f64,
    pub radius: usize,
    pub labels: Vec<LabelSummary>,
    pub unclassified_valid_texels: usize,
}

pub fn label_counts(labels: &LabelMap, n: usize) -> Vec<usize> {
    let mut counts = vec![0; n];
    for &l in labels.labels() {
        if l != LabelMap::UNCLASSIFIED {
            counts[l as usize] += 1;
        }
    }
    counts
}

/// Multi-reference classification: `labels.pfm` holds the reference index
/// per texel, or -1.
pub fn classify_labels(
    project: &Project,
    references: &[(String, Reference)],
    theta_max: f64,
    radius: usize,
    workers: usize,
) -> Result<(MultiStats, PathBuf)> {
    check_params(&ClassifyParams {
        theta_max,
        radius,
        connected: false,
        min_face_fraction: 0.0,
    })?;
    let session = Session::open(project, workers)?;
    let mut spectra = Vec::new();
    let mut picks = Vec::new();
    for (label, reference) in references {
        let picked = session.resolve(reference)?;
        spectra.push(session.reference_spectrum(&picked, radius, label)?);
        picks.push(picked);
    }
    let labels = classify_multi(&session.cube, &spectra, theta_max, workers)
        .map_err(Error::stage("multi-reference classification"))?;
    let counts = label_counts(&labels, spectra.len());
    let classified: usize = counts.iter().sum();
    let stats = MultiStats {
        theta_max,
        radius,
        labels: references
            .iter()
            .zip(&picks)
            .zip(&spectra)
            .enumerate()
            .map(|(i, (((label, _), p), s))| LabelSummary {
                label: label.clone(),
                index: i,
                reference_texel: [p.texel.0, p.texel.1],
                reference_spectrum: s.vector().to_vec(),
                texels: counts[i],
            })
            .collect(),
        unclassified_valid_texels: session.cube.valid().count() - classified,
    };
    let plane = Pfm::gray(
        labels.width(),
        labels.height(),
        labels.labels().iter().map(|&l| l as f32).collect(),
    );
    let mut run = Run::begin(&project.output_dir, "classify")?;
    run.write("labels.pfm", &pfm::encode(&plane))?;
    run.write("stats.json", &json(&stats))?;
    let dir = run.finish()?;
    Ok((stats, dir))
}
