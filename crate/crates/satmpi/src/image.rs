//! Dense row-major image grid used by the renderer, losses, and metrics.

use crate::error::{Error, Result};

/// H x W x C grid of `f64` samples, row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize, usize) -> f64>(
        height: usize,
        width: usize,
        channels: usize,
        mut f: F,
    ) -> Self {
        let mut img = Self::zeros(height, width, channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    img.data[(y * width + x) * channels + c] = f(y, x, c);
                }
            }
        }
        img
    }

    #[inline]
    pub fn idx(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, v: f64) {
        let i = self.idx(y, x, c);
        self.data[i] = v;
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.height == other.height
            && self.width == other.width
            && self.channels == other.channels
    }

    pub fn require_same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!(
                "{what}: {}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    /// Box-filter downsample by an integer factor (both dimensions must be
    /// divisible by it).
    pub fn box_downsample(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.height % factor != 0 || self.width % factor != 0 {
            return Err(Error::ShapeMismatch(format!(
                "cannot downsample {}x{} by {factor}",
                self.height, self.width
            )));
        }
        let (h, w) = (self.height / factor, self.width / factor);
        let norm = 1.0 / (factor * factor) as f64;
        let mut out = Self::zeros(h, w, self.channels);
        for y in 0..h {
            for x in 0..w {
                for c in 0..self.channels {
                    let mut acc = 0.0;
                    for dy in 0..factor {
                        for dx in 0..factor {
                            acc += self.at(y * factor + dy, x * factor + dx, c);
                        }
                    }
                    out.set(y, x, c, acc * norm);
                }
            }
        }
        Ok(out)
    }

    /// Luminance (ITU-R BT.601) of a 3-channel image.
    pub fn luminance(&self) -> Result<Self> {
        if self.channels != 3 {
            return Err(Error::ShapeMismatch(format!(
                "luminance needs 3 channels, got {}",
                self.channels
            )));
        }
        let mut out = Self::zeros(self.height, self.width, 1);
        for y in 0..self.height {
            for x in 0..self.width {
                let v = 0.299 * self.at(y, x, 0) + 0.587 * self.at(y, x, 1)
                    + 0.114 * self.at(y, x, 2);
                out.set(y, x, 0, v);
            }
        }
        Ok(out)
    }
}
