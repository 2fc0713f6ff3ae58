//! Registered multispectral cube over the uv atlas.
//!
//! Every calibrated texture channel becomes one band; because all textures
//! share the mesh's uv parameterization, texel `(col, row)` of every band
//! describes the same surface point. Only texels covered by the mesh (the
//! occupancy mask) carry spectra.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::imaging::{Modality, Texture};
use crate::mask::Mask;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CubeError {
    #[error("band {band} is {got_w}x{got_h}, expected {width}x{height}")]
    DimensionMismatch {
        band: usize,
        width: usize,
        height: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("validity mask is {0}x{1}, expected {2}x{3}")]
    MaskMismatch(usize, usize, usize, usize),
    #[error("a cube needs at least 2 bands, got {0}")]
    TooFewBands(usize),
    #[error("texel ({col},{row}) outside the {width}x{height} cube")]
    OutOfBounds {
        col: usize,
        row: usize,
        width: usize,
        height: usize,
    },
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid sample {value} at index {index}")]
    InvalidSample { index: usize, value: f64 },
}

/// Where one band of the cube came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandDescriptor {
    pub modality: Modality,
    pub channel: String,
    /// Identifier of the source texture (typically its file name).
    pub source: String,
}

/// `width × height × B` spectra stored band-interleaved by texel, plus the
/// validity mask. Invalid texels hold zeros and read back as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCube {
    width: usize,
    height: usize,
    bands: Vec<BandDescriptor>,
    data: Vec<f64>,
    valid: Mask,
}

/// Stacks the channels of `textures`, in order, into a cube.
///
/// Each input is `(source name, texture)`. With VIS then UVF this yields the
/// canonical order VIS-R, VIS-G, VIS-B, UVF-R, UVF-G, UVF-B.
pub fn assemble(textures: &[(&str, &Texture)], valid: Mask) -> Result<SpectralCube, CubeError> {
    let band_count: usize = textures.iter().map(|(_, t)| t.channels()).sum();
    if band_count < 2 {
        return Err(CubeError::TooFewBands(band_count));
    }
    let (width, height) = (textures[0].1.width(), textures[0].1.height());
    for (band, (_, t)) in textures.iter().enumerate() {
        if t.width() != width || t.height() != height {
            return Err(CubeError::DimensionMismatch {
                band,
                width,
                height,
                got_w: t.width(),
                got_h: t.height(),
            });
        }
    }
    if valid.width() != width || valid.height() != height {
        return Err(CubeError::MaskMismatch(valid.width(), valid.height(), width, height));
    }

    let bands: Vec<BandDescriptor> = textures
        .iter()
        .flat_map(|(source, t)| {
            t.meta().channel_names.iter().map(move |ch| BandDescriptor {
                modality: t.meta().modality,
                channel: ch.clone(),
                source: source.to_string(),
            })
        })
        .collect();

    let mut data = vec![0.0; width * height * band_count];
    for (i, (spectrum, &ok)) in data.chunks_mut(band_count).zip(valid.bits()).enumerate() {
        if !ok {
            continue;
        }
        let mut b = 0;
        for (_, t) in textures {
            let c = t.channels();
            spectrum[b..b + c].copy_from_slice(&t.data()[i * c..(i + 1) * c]);
            b += c;
        }
    }

    Ok(SpectralCube {
        width,
        height,
        bands,
        data,
        valid,
    })
}

impl SpectralCube {
    /// Builds a cube from band-interleaved `data`. Samples of invalid texels
    /// are zeroed; valid samples must be finite and non-negative.
    pub fn from_interleaved(
        width: usize,
        height: usize,
        bands: Vec<BandDescriptor>,
        mut data: Vec<f64>,
        valid: Mask,
    ) -> Result<Self, CubeError> {
        let b = bands.len();
        if b < 2 {
            return Err(CubeError::TooFewBands(b));
        }
        let expected = width * height * b;
        if data.len() != expected {
            return Err(CubeError::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        if valid.width() != width || valid.height() != height {
            return Err(CubeError::MaskMismatch(valid.width(), valid.height(), width, height));
        }
        for (t, (spectrum, &ok)) in data.chunks_mut(b).zip(valid.bits()).enumerate() {
            if !ok {
                spectrum.fill(0.0);
                continue;
            }
            if let Some(k) = spectrum.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(CubeError::InvalidSample {
                    index: t * b + k,
                    value: spectrum[k],
                });
            }
        }
        Ok(Self {
            width,
            height,
            bands,
            data,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn bands(&self) -> &[BandDescriptor] {
        &self.bands
    }

    pub fn valid(&self) -> &Mask {
        &self.valid
    }

    /// Band-interleaved samples, zero at invalid texels.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One band as a row-major plane.
    pub fn band_plane(&self, band: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(band)
            .step_by(self.bands.len())
            .copied()
            .collect()
    }

    /// The spectrum at `(col, row)`, or `None` when the texel is masked out.
    pub fn spectrum_at(&self, col: usize, row: usize) -> Result<Option<&[f64]>, CubeError> {
        self.check_bounds(col, row)?;
        Ok(self.spectrum_unchecked(col, row))
    }

    #[inline]
    pub(crate) fn spectrum_unchecked(&self, col: usize, row: usize) -> Option<&[f64]> {
        let i = row * self.width + col;
        if !self.valid.bits()[i] {
            return None;
        }
        let b = self.bands.len();
        Some(&self.data[i * b..(i + 1) * b])
    }

    /// Mean spectrum over the valid texels of the `(2r+1)²` window centered on
    /// `(col, row)`. `None` when the center itself is masked out.
    pub fn mean_spectrum(
        &self,
        col: usize,
        row: usize,
        radius: usize,
    ) -> Result<Option<Vec<f64>>, CubeError> {
        self.check_bounds(col, row)?;
        if self.spectrum_unchecked(col, row).is_none() {
            return Ok(None);
        }
        let mut sum = vec![0.0; self.bands.len()];
        let mut n = 0usize;
        let rows = row.saturating_sub(radius)..=(row + radius).min(self.height - 1);
        for r in rows {
            for c in col.saturating_sub(radius)..=(col + radius).min(self.width - 1) {
                if let Some(s) = self.spectrum_unchecked(c, r) {
                    sum.iter_mut().zip(s).for_each(|(acc, v)| *acc += v);
                    n += 1;
                }
            }
        }
        sum.iter_mut().for_each(|v| *v /= n as f64);
        Ok(Some(sum))
    }

    fn check_bounds(&self, col: usize, row: usize) -> Result<(), CubeError> {
        if col >= self.width || row >= self.height {
            return Err(CubeError::OutOfBounds {
                col,
                row,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}
