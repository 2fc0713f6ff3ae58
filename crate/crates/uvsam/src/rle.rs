//! Row-wise run-length encoding of masks.
//!
//! Each row is a list of run lengths alternating unset/set, starting with an
//! unset run (which may be 0). Run lengths of a row sum to the width.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use uvsam_core::Mask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<Vec<u32>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RleError {
    #[error("expected {expected} rows, found {got}")]
    RowCount { expected: usize, got: usize },
    #[error("row {row} covers {got} texels, expected {expected}")]
    RowLength { row: usize, expected: usize, got: usize },
}

pub fn encode(mask: &Mask) -> RleMask {
    let w = mask.width();
    let rows = mask
        .bits()
        .chunks(w.max(1))
        .take(mask.height())
        .map(|row| {
            let mut runs = Vec::new();
            let mut current = false;
            let mut len = 0u32;
            for &bit in row {
                if bit != current {
                    runs.push(len);
                    current = bit;
                    len = 0;
                }
                len += 1;
            }
            runs.push(len);
            runs
        })
        .collect();
    RleMask {
        width: w,
        height: mask.height(),
        rows,
    }
}

pub fn decode(rle: &RleMask) -> Result<Mask, RleError> {
    if rle.rows.len() != rle.height {
        return Err(RleError::RowCount {
            expected: rle.height,
            got: rle.rows.len(),
        });
    }
    let mut bits = Vec::with_capacity(rle.width * rle.height);
    for (r, runs) in rle.rows.iter().enumerate() {
        let total: u64 = runs.iter().map(|&n| u64::from(n)).sum();
        if total != rle.width as u64 {
            return Err(RleError::RowLength {
                row: r,
                expected: rle.width,
                got: total as usize,
            });
        }
        for (i, &n) in runs.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, n as usize));
        }
    }
    Ok(Mask::from_bits(rle.width, rle.height, bits).expect("row lengths checked"))
}
