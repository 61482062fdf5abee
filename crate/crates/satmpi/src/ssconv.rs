//! Spectral-to-spatial convolution: a bank of r^2*c small kernels followed
//! by depth-to-space rearrangement, upsampling a feature map by `r` while
//! preserving its channel count.
//!
//! ```text
//! conv_bank:      (h, w, c)      -> (h, w, r^2 c)    3x3 taps, zero padded
//! depth_to_space: (h, w, r^2 c)  -> (rh, rw, c)
//! out(r*y + c1, r*x + c2, k) = in(y, x, k r^2 + c1 r + c2)
//! ```
//!
//! Kernels are applied as cross-correlations (no flip), stride 1. The bank
//! is caller-supplied data; nothing here is learned.

use crate::error::{Error, Result};
use crate::image::Image;

/// Feature maps share the dense image grid layout.
pub type FeatureMap = Image;

/// `count` kernels of shape 3 x 3 x `in_channels`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    pub count: usize,
    pub in_channels: usize,
    /// `count * 3 * 3 * in_channels`, kernel-major.
    pub data: Vec<f64>,
}

impl KernelBank {
    pub fn new(count: usize, in_channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != count * 9 * in_channels {
            return Err(Error::ShapeMismatch(format!(
                "kernel bank data length {} for {count} kernels of 3x3x{in_channels}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvariantViolation(
                "kernel bank holds non-finite values".into(),
            ));
        }
        Ok(Self {
            count,
            in_channels,
            data,
        })
    }

    pub fn zeros(count: usize, in_channels: usize) -> Self {
        Self {
            count,
            in_channels,
            data: vec![0.0; count * 9 * in_channels],
        }
    }

    #[inline]
    pub fn tap(&self, kernel: usize, ky: usize, kx: usize, c: usize) -> f64 {
        self.data[((kernel * 3 + ky) * 3 + kx) * self.in_channels + c]
    }

    pub fn set_tap(&mut self, kernel: usize, ky: usize, kx: usize, c: usize, v: f64) {
        self.data[((kernel * 3 + ky) * 3 + kx) * self.in_channels + c] = v;
    }

    /// Bank that makes [`ssconv`] a nearest-neighbor x`r` upsampler: kernel
    /// `k r^2 + c1 r + c2` is a center delta on channel `k`.
    pub fn nearest_neighbor(r: usize, channels: usize) -> Self {
        let mut bank = Self::zeros(r * r * channels, channels);
        for k in 0..channels {
            for c1 in 0..r {
                for c2 in 0..r {
                    bank.set_tap(k * r * r + c1 * r + c2, 1, 1, k, 1.0);
                }
            }
        }
        bank
    }
}

/// Cross-correlate a feature map with every kernel in the bank; output
/// channel `i` is the response of kernel `i`. Zero padding, stride 1.
pub fn conv_bank(f: &FeatureMap, bank: &KernelBank) -> Result<FeatureMap> {
    if bank.in_channels != f.channels {
        return Err(Error::ShapeMismatch(format!(
            "bank expects {} channels, feature map has {}",
            bank.in_channels, f.channels
        )));
    }
    let (h, w) = (f.height, f.width);
    let mut out = FeatureMap::zeros(h, w, bank.count);
    for y in 0..h {
        for x in 0..w {
            for i in 0..bank.count {
                let mut acc = 0.0;
                for ky in 0..3 {
                    let yy = y as isize + ky as isize - 1;
                    if yy < 0 || yy >= h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let xx = x as isize + kx as isize - 1;
                        if xx < 0 || xx >= w as isize {
                            continue;
                        }
                        for c in 0..f.channels {
                            acc += f.at(yy as usize, xx as usize, c) * bank.tap(i, ky, kx, c);
                        }
                    }
                }
                out.set(y, x, i, acc);
            }
        }
    }
    Ok(out)
}

/// Rearrange `r^2` channel groups into `r x r` spatial blocks.
pub fn depth_to_space(f: &FeatureMap, r: usize) -> Result<FeatureMap> {
    if r == 0 || f.channels % (r * r) != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} channels not divisible by r^2 = {}",
            f.channels,
            r * r
        )));
    }
    let c_out = f.channels / (r * r);
    let mut out = FeatureMap::zeros(f.height * r, f.width * r, c_out);
    for y in 0..f.height {
        for x in 0..f.width {
            for k in 0..c_out {
                for c1 in 0..r {
                    for c2 in 0..r {
                        let v = f.at(y, x, k * r * r + c1 * r + c2);
                        out.set(r * y + c1, r * x + c2, k, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`depth_to_space`].
pub fn space_to_depth(f: &FeatureMap, r: usize) -> Result<FeatureMap> {
    if r == 0 || f.height % r != 0 || f.width % r != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} not divisible by r = {r}",
            f.height, f.width
        )));
    }
    let (h, w) = (f.height / r, f.width / r);
    let mut out = FeatureMap::zeros(h, w, f.channels * r * r);
    for y in 0..h {
        for x in 0..w {
            for k in 0..f.channels {
                for c1 in 0..r {
                    for c2 in 0..r {
                        let v = f.at(r * y + c1, r * x + c2, k);
                        out.set(y, x, k * r * r + c1 * r + c2, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Convolve with the bank, then rearrange depth to space: `(h, w, c)` to
/// `(rh, rw, c)`.
pub fn ssconv(f: &FeatureMap, bank: &KernelBank, r: usize) -> Result<FeatureMap> {
    if bank.count != r * r * f.channels {
        return Err(Error::ShapeMismatch(format!(
            "bank of {} kernels cannot upsample {} channels by r = {r}",
            bank.count, f.channels
        )));
    }
    depth_to_space(&conv_bank(f, bank)?, r)
}
