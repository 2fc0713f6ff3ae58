//! Floating-point textures with band metadata, and reflectance-standard patch
//! statistics.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("texture has a zero dimension ({0}x{1})")]
    ZeroDimension(usize, usize),
    #[error("unsupported channel count {0}")]
    UnsupportedChannels(usize),
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("negative value {value} at sample {index}")]
    Negative { index: usize, value: f64 },
    #[error("{names} channel names given for {channels} channels")]
    ChannelNames { names: usize, channels: usize },
    #[error("patch ({col0},{row0})-({col1},{row1}) is empty or outside the {width}x{height} texture")]
    PatchOutOfBounds {
        col0: usize,
        row0: usize,
        col1: usize,
        row1: usize,
        width: usize,
        height: usize,
    },
    #[error("unknown modality {0:?}")]
    UnknownModality(String),
}

/// Illumination/imaging modality a texture was captured under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    /// Visible light, reflected.
    Vis,
    /// UV-induced visible fluorescence.
    Uvf,
    /// Infrared reflectance.
    Irr,
    Other,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Vis => "VIS",
            Modality::Uvf => "UVF",
            Modality::Irr => "IRR",
            Modality::Other => "OTHER",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = ImagingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "VIS" => Ok(Modality::Vis),
            "UVF" => Ok(Modality::Uvf),
            "IRR" => Ok(Modality::Irr),
            "OTHER" => Ok(Modality::Other),
            _ => Err(ImagingError::UnknownModality(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandMeta {
    pub modality: Modality,
    /// One name per channel, e.g. `["R", "G", "B"]`.
    pub channel_names: Vec<String>,
    /// Set once radiometric calibration has been applied.
    pub calibrated: bool,
}

impl BandMeta {
    /// Uncalibrated metadata with default channel names (`L` or `R,G,B`).
    pub fn new(modality: Modality, channels: usize) -> Self {
        let names: &[&str] = match channels {
            1 => &["L"],
            3 => &["R", "G", "B"],
            _ => &[],
        };
        Self {
            modality,
            channel_names: names.iter().map(|s| s.to_string()).collect(),
            calibrated: false,
        }
    }

    pub fn calibrated(mut self) -> Self {
        self.calibrated = true;
        self
    }
}

/// A `width × height × channels` texture, row 0 at the top, channels
/// interleaved per texel.
///
/// Values are finite and non-negative. They are held as `f64` in memory; the
/// on-disk formats store 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
    meta: BandMeta,
}

impl Texture {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
        meta: BandMeta,
    ) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::ZeroDimension(width, height));
        }
        if channels != 1 && channels != 3 {
            return Err(ImagingError::UnsupportedChannels(channels));
        }
        if meta.channel_names.len() != channels {
            return Err(ImagingError::ChannelNames {
                names: meta.channel_names.len(),
                channels,
            });
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(ImagingError::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(ImagingError::NonFinite(i));
            }
            if v < 0.0 {
                return Err(ImagingError::Negative { index: i, value: v });
            }
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            meta,
        })
    }

    /// A texture with every sample set to `value`.
    pub fn constant(
        width: usize,
        height: usize,
        value: &[f64],
        meta: BandMeta,
    ) -> Result<Self, ImagingError> {
        let mut data = vec![0.0; width * height * value.len()];
        if !value.is_empty() {
            for px in data.chunks_mut(value.len()) {
                px.copy_from_slice(value);
            }
        }
        Self::new(width, height, value.len(), data, meta)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn meta(&self) -> &BandMeta {
        &self.meta
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// The channel values of texel `(col, row)`.
    #[inline]
    pub fn texel(&self, col: usize, row: usize) -> &[f64] {
        let i = (row * self.width + col) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn same_shape(&self, other: &Texture) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
        meta: BandMeta,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
            meta,
        }
    }
}

/// Inclusive texel rectangle `[col0, col1] × [row0, row1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchRect {
    pub col0: usize,
    pub row0: usize,
    pub col1: usize,
    pub row1: usize,
}

impl PatchRect {
    pub fn new(col0: usize, row0: usize, col1: usize, row1: usize) -> Self {
        Self {
            col0,
            row0,
            col1,
            row1,
        }
    }

    pub fn is_within(&self, width: usize, height: usize) -> bool {
        self.col0 <= self.col1 && self.row0 <= self.row1 && self.col1 < width && self.row1 < height
    }

    pub fn texel_count(&self) -> usize {
        (self.col1 + 1 - self.col0) * (self.row1 + 1 - self.row0)
    }
}

/// Per-channel medians of a patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub medians: Vec<f64>,
}

/// Median of each channel over the texels of `rect`.
///
/// For an even number of texels the median is the midpoint of the two middle
/// order statistics.
pub fn patch_stats(tex: &Texture, rect: &PatchRect) -> Result<ChannelStats, ImagingError> {
    if !rect.is_within(tex.width, tex.height) {
        return Err(ImagingError::PatchOutOfBounds {
            col0: rect.col0,
            row0: rect.row0,
            col1: rect.col1,
            row1: rect.row1,
            width: tex.width,
            height: tex.height,
        });
    }
    let mut scratch = Vec::with_capacity(rect.texel_count());
    let medians = (0..tex.channels)
        .map(|ch| {
            scratch.clear();
            for row in rect.row0..=rect.row1 {
                for col in rect.col0..=rect.col1 {
                    scratch.push(tex.texel(col, row)[ch]);
                }
            }
            median(&mut scratch).expect("patch is non-empty")
        })
        .collect();
    Ok(ChannelStats { medians })
}

/// Median of `values` (reordered in place); `None` when empty.
pub fn median(values: &mut [f64]) -> Option<f64> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    values.sort_unstable_by(f64::total_cmp);
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}
