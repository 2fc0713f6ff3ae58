//! Spectral Angle Mapper classification.
//!
//! The angle between a texel spectrum `u` and a reference `v` is
//! `θ = arccos(u·v / (‖u‖‖v‖))`. It ignores vector magnitude, so texels of the
//! same material under brighter or dimmer illumination get the same angle.
//! Regions are pure per-texel predicates `θ ≤ θ_max`.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::cube::SpectralCube;
use crate::imaging::median;
use crate::mask::Mask;
use crate::math::{acos, sqrt};
use crate::par;

/// Default angular threshold in radians.
pub const DEFAULT_THETA_MAX: f64 = 0.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("spectra have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("reference has {got} bands but the cube has {expected}")]
    BandMismatch { expected: usize, got: usize },
    #[error("reference spectrum must be finite, non-negative and non-zero")]
    InvalidReference,
    #[error("at least one reference spectrum is required")]
    NoReferences,
    #[error("angular threshold {0} must be a non-negative number")]
    InvalidThreshold(f64),
}

/// Spectral angle in radians, or `None` when either vector has zero magnitude.
///
/// The cosine is clamped to `[-1, 1]` before `arccos`, so rounding can never
/// produce NaN.
pub fn spectral_angle(u: &[f64], v: &[f64]) -> Result<Option<f64>, ClassifyError> {
    if u.len() != v.len() {
        return Err(ClassifyError::LengthMismatch(u.len(), v.len()));
    }
    Ok(angle_to(u, v, norm2(v)))
}

#[inline]
fn norm2(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x * x)
}

// `v_norm2` must be `norm2(v)`; callers hoist it out of per-texel loops.
#[inline]
fn angle_to(u: &[f64], v: &[f64], v_norm2: f64) -> Option<f64> {
    let mut dot = 0.0;
    let mut u_norm2 = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        u_norm2 += a * a;
    }
    if u_norm2 == 0.0 || v_norm2 == 0.0 {
        return None;
    }
    // sqrt of the product keeps u == v exact: sqrt(fl(s·s)) == s
    let cos = (dot / sqrt(u_norm2 * v_norm2)).clamp(-1.0, 1.0);
    Some(acos(cos))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpectrum {
    pub label: String,
    vector: Vec<f64>,
    norm2: f64,
}

impl ReferenceSpectrum {
    pub fn new(label: impl Into<String>, vector: Vec<f64>) -> Result<Self, ClassifyError> {
        if vector.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ClassifyError::InvalidReference);
        }
        let n2 = norm2(&vector);
        if !(n2 > 0.0) {
            return Err(ClassifyError::InvalidReference);
        }
        Ok(Self {
            label: label.into(),
            vector,
            norm2: n2,
        })
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }
}

/// Per-texel spectral angle to one reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SamMap {
    width: usize,
    height: usize,
    angles: Vec<f64>,
}

impl SamMap {
    /// Stored for masked-out texels and zero-magnitude spectra.
    pub const UNDEFINED: f64 = -1.0;

    /// Wraps row-major angles; each must be [`SamMap::UNDEFINED`] or in `[0, π]`.
    pub fn from_angles(width: usize, height: usize, angles: Vec<f64>) -> Option<Self> {
        let ok = angles.len() == width * height
            && angles
                .iter()
                .all(|&a| a == Self::UNDEFINED || (0.0..=core::f64::consts::PI).contains(&a));
        ok.then_some(Self {
            width,
            height,
            angles,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> Option<f64> {
        let a = self.angles[row * self.width + col];
        (a != Self::UNDEFINED).then_some(a)
    }

    /// Row-major angles with [`SamMap::UNDEFINED`] where undefined.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn defined_count(&self) -> usize {
        self.angles.iter().filter(|&&a| a != Self::UNDEFINED).count()
    }
}

/// Angle of every valid texel of `cube` to `reference`, over `workers`
/// threads (`0` = all cores).
pub fn sam_map(
    cube: &SpectralCube,
    reference: &ReferenceSpectrum,
    workers: usize,
) -> Result<SamMap, ClassifyError> {
    let b = cube.band_count();
    if reference.vector.len() != b {
        return Err(ClassifyError::BandMismatch {
            expected: b,
            got: reference.vector.len(),
        });
    }
    let width = cube.width();
    let mut angles = vec![SamMap::UNDEFINED; width * cube.height()];
    let (v, vn2) = (&reference.vector[..], reference.norm2);
    par::for_each_row(&mut angles, width, workers, |row, out| {
        for (col, slot) in out.iter_mut().enumerate() {
            if let Some(u) = cube.spectrum_unchecked(col, row) {
                if let Some(a) = angle_to(u, v, vn2) {
                    *slot = a;
                }
            }
        }
    });
    Ok(SamMap {
        width,
        height: cube.height(),
        angles,
    })
}

/// Texels with a defined angle `θ ≤ theta_max`.
pub fn threshold_region(map: &SamMap, theta_max: f64) -> Result<Mask, ClassifyError> {
    if !(theta_max >= 0.0) {
        return Err(ClassifyError::InvalidThreshold(theta_max));
    }
    let bits = map
        .angles
        .iter()
        .map(|&a| a != SamMap::UNDEFINED && a <= theta_max)
        .collect();
    Ok(Mask::from_bits(map.width, map.height, bits).expect("dimensions match"))
}

/// Per-texel index of the winning reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<i32>,
}

impl LabelMap {
    pub const UNCLASSIFIED: i32 = -1;

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> Option<usize> {
        let l = self.labels[row * self.width + col];
        (l != Self::UNCLASSIFIED).then_some(l as usize)
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }
}

/// Labels each texel with the reference of smallest angle, if that angle is
/// within `theta_max`. Equal angles go to the lower reference index.
pub fn classify_multi(
    cube: &SpectralCube,
    refs: &[ReferenceSpectrum],
    theta_max: f64,
    workers: usize,
) -> Result<LabelMap, ClassifyError> {
    if refs.is_empty() {
        return Err(ClassifyError::NoReferences);
    }
    if !(theta_max >= 0.0) {
        return Err(ClassifyError::InvalidThreshold(theta_max));
    }
    let b = cube.band_count();
    if let Some(r) = refs.iter().find(|r| r.vector.len() != b) {
        return Err(ClassifyError::BandMismatch {
            expected: b,
            got: r.vector.len(),
        });
    }
    let width = cube.width();
    let mut labels = vec![LabelMap::UNCLASSIFIED; width * cube.height()];
    par::for_each_row(&mut labels, width, workers, |row, out| {
        for (col, slot) in out.iter_mut().enumerate() {
            let Some(u) = cube.spectrum_unchecked(col, row) else {
                continue;
            };
            let mut best: Option<(usize, f64)> = None;
            for (k, r) in refs.iter().enumerate() {
                if let Some(a) = angle_to(u, &r.vector, r.norm2) {
                    if best.is_none_or(|(_, ba)| a < ba) {
                        best = Some((k, a));
                    }
                }
            }
            if let Some((k, a)) = best {
                if a <= theta_max {
                    *slot = k as i32;
                }
            }
        }
    });
    Ok(LabelMap {
        width,
        height: cube.height(),
        labels,
    })
}

/// 8-bit straight-alpha color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgba(pub [u8; 4]);

impl Rgba {
    pub const MAGENTA: Rgba = Rgba([255, 0, 255, 255]);
    pub const TRANSPARENT: Rgba = Rgba([0, 0, 0, 0]);
}

/// RGBA overlay texture, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlay {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgba>,
}

impl Overlay {
    /// Pixels flattened to `RGBARGBA…` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|p| p.0).collect()
    }
}

/// Paints masked texels with `color`, everything else fully transparent.
pub fn make_overlay(mask: &Mask, color: Rgba) -> Overlay {
    Overlay {
        width: mask.width(),
        height: mask.height(),
        pixels: mask
            .bits()
            .iter()
            .map(|&b| if b { color } else { Rgba::TRANSPARENT })
            .collect(),
    }
}

/// The 4-connected component of `mask` containing `seed`; empty when the
/// seed is not set. Optional post-step, not part of the per-texel predicate.
pub fn connected_region(mask: &Mask, seed: (usize, usize)) -> Mask {
    let (w, h) = (mask.width(), mask.height());
    let mut out = Mask::new(w, h);
    if !mask.get(seed.0, seed.1) {
        return out;
    }
    let mut queue = VecDeque::from([seed]);
    out.set(seed.0, seed.1, true);
    while let Some((c, r)) = queue.pop_front() {
        let neighbors = [
            (c.wrapping_sub(1), r),
            (c + 1, r),
            (c, r.wrapping_sub(1)),
            (c, r + 1),
        ];
        for (nc, nr) in neighbors {
            if mask.get(nc, nr) && !out.get(nc, nr) {
                out.set(nc, nr, true);
                queue.push_back((nc, nr));
            }
        }
    }
    out
}

/// Summary of the angles inside a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub count: usize,
    pub min_angle: Option<f64>,
    pub median_angle: Option<f64>,
}

pub fn region_stats(map: &SamMap, region: &Mask) -> RegionStats {
    let mut angles: Vec<f64> = map
        .angles
        .iter()
        .zip(region.bits())
        .filter(|(&a, &m)| m && a != SamMap::UNDEFINED)
        .map(|(&a, _)| a)
        .collect();
    let min_angle = angles.iter().copied().reduce(f64::min);
    RegionStats {
        count: angles.len(),
        min_angle,
        median_angle: median(&mut angles),
    }
}
