use crate::math::floor;

/// Orientation of the texture v axis relative to image rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VAxis {
    /// `v = 0` is the bottom image row (the usual mesh-interchange convention).
    #[default]
    BottomUp,
    /// `v = 0` is the top image row.
    TopDown,
}

/// Atlas dimensions plus the v-axis convention used to address texels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TexelGrid {
    pub width: usize,
    pub height: usize,
    pub v_axis: VAxis,
}

impl TexelGrid {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            v_axis: VAxis::BottomUp,
        }
    }

    pub fn with_v_axis(mut self, v_axis: VAxis) -> Self {
        self.v_axis = v_axis;
        self
    }

    /// Continuous pixel coordinates `(x, y)` of a uv coordinate, y pointing down.
    #[inline]
    pub fn to_pixel(&self, uv: [f64; 2]) -> (f64, f64) {
        let x = uv[0] * self.width as f64;
        let y = match self.v_axis {
            VAxis::BottomUp => (1.0 - uv[1]) * self.height as f64,
            VAxis::TopDown => uv[1] * self.height as f64,
        };
        (x, y)
    }

    /// The texel containing `uv`; inputs outside `[0, 1]²` are clamped.
    pub fn texel_of(&self, uv: [f64; 2]) -> (usize, usize) {
        let (x, y) = self.to_pixel([clamp01(uv[0]), clamp01(uv[1])]);
        (
            to_index(x, self.width),
            to_index(y, self.height),
        )
    }

    /// uv coordinate of the center of texel `(col, row)`.
    pub fn texel_center_uv(&self, col: usize, row: usize) -> [f64; 2] {
        let u = (col as f64 + 0.5) / self.width as f64;
        let t = (row as f64 + 0.5) / self.height as f64;
        match self.v_axis {
            VAxis::BottomUp => [u, 1.0 - t],
            VAxis::TopDown => [u, t],
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn clamp01(x: f64) -> f64 {
    // NaN maps to 0
    if x >= 0.0 {
        x.min(1.0)
    } else {
        0.0
    }
}

fn to_index(p: f64, n: usize) -> usize {
    let i = floor(p);
    if i <= 0.0 {
        0
    } else {
        (i as usize).min(n.saturating_sub(1))
    }
}

/// `(col, row)` of `uv` in a `width × height` atlas with `v = 0` at the bottom.
///
/// `col = min(⌊u·width⌋, width−1)`, `row = min(⌊(1−v)·height⌋, height−1)`.
pub fn uv_to_texel(uv: [f64; 2], width: usize, height: usize) -> (usize, usize) {
    TexelGrid::new(width, height).texel_of(uv)
}
