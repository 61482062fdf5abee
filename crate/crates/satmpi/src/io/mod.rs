//! File formats: PFM float images, PGM/PPM previews, masked flat-binary
//! rasters with a JSON header (DSM), the MPI container, and CSV point
//! batches. All float payloads are little-endian 32-bit and round-trip
//! bit-exactly.

mod csv_points;
mod dsm;
mod mpi_bin;
mod pfm;
mod pnm;

pub use csv_points::{
    read_geo_csv, read_image_csv, write_geo_csv, write_image_csv,
};
pub use dsm::{dsm_from_altitude, read_dsm, write_dsm, GridSpec};
pub use mpi_bin::{read_mpi, write_mpi};
pub use pfm::{read_pfm, write_pfm};
pub use pnm::write_pnm;

use crate::error::{Error, Result};
use crate::image::Image;

/// Float raster with 1 or 3 channels and an optional validity mask.
/// Images store values in `[0, 1]`; DSM grids store meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, channel-interleaved samples.
    pub data: Vec<f32>,
    /// Per-pixel validity; `None` means fully valid.
    pub mask: Option<Vec<bool>>,
}

impl Raster {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        let raster = Self {
            width,
            height,
            channels,
            data,
            mask,
        };
        raster.validate()?;
        Ok(raster)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::DimensionMismatch("raster with zero extent".into()));
        }
        if self.channels != 1 && self.channels != 3 {
            return Err(Error::DimensionMismatch(format!(
                "rasters carry 1 or 3 channels, got {}",
                self.channels
            )));
        }
        if self.data.len() != self.width * self.height * self.channels {
            return Err(Error::DimensionMismatch(format!(
                "raster data length {} for {}x{}x{}",
                self.data.len(),
                self.width,
                self.height,
                self.channels
            )));
        }
        if !self.data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvariantViolation(
                "raster holds non-finite samples".into(),
            ));
        }
        if let Some(mask) = &self.mask {
            if mask.len() != self.width * self.height {
                return Err(Error::DimensionMismatch(format!(
                    "mask length {} for {}x{} raster",
                    mask.len(),
                    self.width,
                    self.height
                )));
            }
        }
        Ok(())
    }

    /// Widen to the `f64` compute representation.
    pub fn to_image(&self) -> Image {
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    /// Narrow an image to raster storage.
    pub fn from_image(img: &Image, mask: Option<Vec<bool>>) -> Self {
        Self {
            width: img.width,
            height: img.height,
            channels: img.channels,
            data: img.data.iter().map(|&v| v as f32).collect(),
            mask,
        }
    }
}
