//! On-disk cube: `cube.toml` descriptor, one single-channel PFM per band and
//! a 0/1 validity mask PFM, all in one directory.

use std::path::Path;

use serde::{Deserialize, Serialize};
use uvsam_core::{BandDescriptor, Mask, SpectralCube};

use crate::error::{Error, Result};
use crate::pfm::{self, Pfm};

pub const DESCRIPTOR: &str = "cube.toml";
pub const MASK_FILE: &str = "valid_mask.pfm";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Descriptor {
    width: usize,
    height: usize,
    mask: String,
    valid_texels: usize,
    #[serde(rename = "band")]
    bands: Vec<BandEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BandEntry {
    modality: String,
    channel: String,
    source: String,
    file: String,
}

pub fn mask_to_pfm(mask: &Mask) -> Pfm {
    let data = mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    Pfm::gray(mask.width(), mask.height(), data)
}

/// Encodes `cube` as `(file name, bytes)` pairs, descriptor last.
pub fn encode_cube(cube: &SpectralCube) -> Vec<(String, Vec<u8>)> {
    let (w, h) = (cube.width(), cube.height());
    let mut files = Vec::new();
    let mut entries = Vec::new();
    for (i, band) in cube.bands().iter().enumerate() {
        let file = format!("band_{i:02}.pfm");
        let plane = cube.band_plane(i).into_iter().map(|v| v as f32).collect();
        files.push((file.clone(), pfm::encode(&Pfm::gray(w, h, plane))));
        entries.push(BandEntry {
            modality: band.modality.to_string(),
            channel: band.channel.clone(),
            source: band.source.clone(),
            file,
        });
    }
    files.push((MASK_FILE.to_string(), pfm::encode(&mask_to_pfm(cube.valid()))));
    let descriptor = Descriptor {
        width: w,
        height: h,
        mask: MASK_FILE.to_string(),
        valid_texels: cube.valid().count(),
        bands: entries,
    };
    let text = toml::to_string(&descriptor).expect("descriptor serializes");
    files.push((DESCRIPTOR.to_string(), text.into_bytes()));
    files
}

fn read_plane(dir: &Path, file: &str, width: usize, height: usize) -> Result<Vec<f32>> {
    let path = dir.join(file);
    let bytes = std::fs::read(&path).map_err(Error::io(&path))?;
    let p = pfm::decode(&bytes).map_err(|e| Error::format(&path, e.to_string()))?;
    if (p.width, p.height, p.channels) != (width, height, 1) {
        return Err(Error::format(
            &path,
            format!(
                "expected {width}x{height}x1, found {}x{}x{}",
                p.width, p.height, p.channels
            ),
        ));
    }
    Ok(p.data)
}

pub fn load_cube(dir: &Path) -> Result<SpectralCube> {
    let path = dir.join(DESCRIPTOR);
    let text = std::fs::read_to_string(&path).map_err(Error::io(&path))?;
    let d: Descriptor = toml::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    let (w, h, b) = (d.width, d.height, d.bands.len());

    let mask_plane = read_plane(dir, &d.mask, w, h)?;
    let mut bits = Vec::with_capacity(w * h);
    for &v in &mask_plane {
        match v {
            0.0 => bits.push(false),
            1.0 => bits.push(true),
            other => return Err(Error::format(dir.join(&d.mask), format!("mask value {other}"))),
        }
    }
    let valid = Mask::from_bits(w, h, bits).expect("plane has w*h samples");

    let mut data = vec![0.0f64; w * h * b];
    let mut bands = Vec::with_capacity(b);
    for (i, entry) in d.bands.iter().enumerate() {
        let plane = read_plane(dir, &entry.file, w, h)?;
        for (t, &v) in plane.iter().enumerate() {
            data[t * b + i] = f64::from(v);
        }
        let modality = entry
            .modality
            .parse()
            .map_err(|_| Error::format(&path, format!("unknown modality {:?}", entry.modality)))?;
        bands.push(BandDescriptor {
            modality,
            channel: entry.channel.clone(),
            source: entry.source.clone(),
        });
    }
    SpectralCube::from_interleaved(w, h, bands, data, valid)
        .map_err(|e| Error::format(&path, e.to_string()))
}
