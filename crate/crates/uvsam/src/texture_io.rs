//! Texture files: PFM and 8/16-bit PNG in, PFM out.

use std::io::Cursor;
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};
use uvsam_core::{BandMeta, Texture};

use crate::error::{Error, Result};
use crate::pfm::{self, Pfm};

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Samples of an image file before band metadata is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

/// Decodes PFM as-is, or PNG promoted to `[0, 1]` by `2ⁿ − 1`.
pub fn decode_image(bytes: &[u8]) -> std::result::Result<RawImage, String> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"PF") || bytes.starts_with(b"Pf") {
        let p = pfm::decode(bytes).map_err(|e| e.to_string())?;
        if let Some(i) = p.data.iter().position(|v| !v.is_finite()) {
            return Err(format!("non-finite sample at index {i}"));
        }
        Ok(RawImage {
            width: p.width,
            height: p.height,
            channels: p.channels,
            data: p.data.into_iter().map(f64::from).collect(),
        })
    } else {
        Err("unsupported format (expected PFM or PNG)".into())
    }
}

fn decode_png(bytes: &[u8]) -> std::result::Result<RawImage, String> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let info = reader.info();
    let channels = match info.color_type {
        ColorType::Grayscale => 1,
        ColorType::Rgb => 3,
        ColorType::GrayscaleAlpha => return Err("unsupported channel count 2".into()),
        ColorType::Rgba => return Err("unsupported channel count 4".into()),
        ColorType::Indexed => return Err("unsupported color type (palette)".into()),
    };
    let depth = info.bit_depth;
    if !matches!(depth, BitDepth::Eight | BitDepth::Sixteen) {
        return Err(format!("unsupported bit depth {}", depth as u8));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "image too large".to_string())?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let buf = &buf[..frame.buffer_size()];
    let data: Vec<f64> = match depth {
        BitDepth::Eight => buf.iter().map(|&b| f64::from(b) / 255.0).collect(),
        _ => buf
            .chunks_exact(2)
            .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])) / 65535.0)
            .collect(),
    };
    Ok(RawImage {
        width,
        height,
        channels,
        data,
    })
}

pub fn read_image(path: &Path) -> Result<RawImage> {
    let bytes = std::fs::read(path).map_err(Error::io(path))?;
    decode_image(&bytes).map_err(|m| Error::format(path, m))
}

/// Loads a texture; `meta` must name as many channels as the file holds.
pub fn load_texture(path: &Path, meta: BandMeta) -> Result<Texture> {
    let raw = read_image(path)?;
    Texture::new(raw.width, raw.height, raw.channels, raw.data, meta)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn texture_to_pfm(tex: &Texture) -> Pfm {
    Pfm {
        width: tex.width(),
        height: tex.height(),
        channels: tex.channels(),
        data: tex.data().iter().map(|&v| v as f32).collect(),
    }
}

/// Writes `tex` as little-endian PFM, samples narrowed to 32-bit.
pub fn save_texture(tex: &Texture, path: &Path) -> Result<()> {
    std::fs::write(path, pfm::encode(&texture_to_pfm(tex))).map_err(Error::io(path))
}

/// Encodes 8-bit samples, `channels` of 1, 3 or 4.
pub fn encode_png(width: usize, height: usize, channels: usize, samples: &[u8]) -> Vec<u8> {
    let color = match channels {
        1 => ColorType::Grayscale,
        3 => ColorType::Rgb,
        4 => ColorType::Rgba,
        n => panic!("no PNG color type for {n} channels"),
    };
    let mut out = Vec::new();
    let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(BitDepth::Eight);
    let mut writer = encoder.write_header().expect("in-memory PNG header");
    writer
        .write_image_data(samples)
        .expect("in-memory PNG data");
    writer.finish().expect("in-memory PNG finish");
    out
}
