//! Portable float map codec.
//!
//! `PF` holds three channels, `Pf` one. A negative scale marks little-endian
//! samples. Rows are stored bottom-to-top; [`Pfm::data`] is always top-first.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PfmError {
    #[error("not a PFM file (magic {0:?})")]
    BadMagic(String),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("dimension 0 ({0}x{1})")]
    ZeroDimension(usize, usize),
    #[error("expected {expected} data bytes, found {got}")]
    DataLength { expected: usize, got: usize },
}

/// A decoded float map, rows top-first, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Pfm {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Pfm {
    pub fn gray(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            channels: 1,
            data,
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self, what: &str) -> Result<&'a str, PfmError> {
        self.skip_space();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PfmError::BadHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| PfmError::BadHeader(format!("non-ASCII {what}")))
    }
}

fn parse<T: std::str::FromStr>(token: &str, what: &str) -> Result<T, PfmError> {
    token
        .parse()
        .map_err(|_| PfmError::BadHeader(format!("invalid {what} {token:?}")))
}

pub fn decode(bytes: &[u8]) -> Result<Pfm, PfmError> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.token("magic").map_err(|_| PfmError::BadMagic(String::new()))?;
    let channels = match magic {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(PfmError::BadMagic(other.chars().take(8).collect())),
    };
    let width: usize = parse(cur.token("width")?, "width")?;
    let height: usize = parse(cur.token("height")?, "height")?;
    let scale: f32 = parse(cur.token("scale")?, "scale")?;
    if !scale.is_finite() || scale == 0.0 {
        return Err(PfmError::BadHeader(format!("invalid scale {scale}")));
    }
    if width == 0 || height == 0 {
        return Err(PfmError::ZeroDimension(width, height));
    }
    // Exactly one whitespace byte separates the header from the samples.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(PfmError::BadHeader("missing separator after scale".into())),
    }
    let row_len = width
        .checked_mul(channels)
        .ok_or_else(|| PfmError::BadHeader("size overflow".into()))?;
    let expected = row_len
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| PfmError::BadHeader("size overflow".into()))?;
    let body = &bytes[cur.pos..];
    if body.len() != expected {
        return Err(PfmError::DataLength {
            expected,
            got: body.len(),
        });
    }
    let little = scale < 0.0;
    let mut data = Vec::with_capacity(row_len * height);
    for file_row in body.chunks_exact(row_len * 4).rev() {
        data.extend(file_row.chunks_exact(4).map(|b| {
            let b = [b[0], b[1], b[2], b[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        }));
    }
    Ok(Pfm {
        width,
        height,
        channels,
        data,
    })
}

/// Encodes little-endian with scale `-1`.
pub fn encode(pfm: &Pfm) -> Vec<u8> {
    let magic = if pfm.channels == 3 { "PF" } else { "Pf" };
    let header = format!("{magic}\n{} {}\n-1.0\n", pfm.width, pfm.height);
    let row_len = pfm.width * pfm.channels;
    let mut out = Vec::with_capacity(header.len() + pfm.data.len() * 4);
    out.extend_from_slice(header.as_bytes());
    for row in pfm.data.chunks_exact(row_len).rev() {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}
