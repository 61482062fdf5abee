//! Cross-view MPI warping through geodetic object space.
//!
//! A plane grid is carried between views in two legs: localize every MPI
//! cell to (lat, lon) at its plane altitude with one camera, then project
//! those ground points into the other camera's image. Resampling an MPI
//! through such a correspondence field is a backward warp: the field is
//! built on the *destination* grid (localized with the destination camera)
//! and holds *source* image coordinates, so bilinear gathers pull source
//! values onto destination cells. Cells that localize or project outside
//! the usable volume are masked invalid and resample to zero (transparent).
//!
//! Gradients of anything downstream of a warp flow through the sampled
//! values only; the sampling coordinates are treated as constants.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geo::GeoRef;
use crate::image::Image;
use crate::mpi::{AltitudeSampling, Mpi};
use crate::render::{composite, plane_spacing, RenderOutput};
use crate::rpc::RpcModel;

/// Geodetic position of every MPI cell (`N x H x W`, plane-major).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundGrid {
    pub n_planes: usize,
    pub height: usize,
    pub width: usize,
    /// Degrees.
    pub lat: Vec<f64>,
    /// Degrees.
    pub lon: Vec<f64>,
    /// Meters; plane `i` entries equal the sampling height `h_i` exactly.
    pub hei: Vec<f64>,
    /// False where localization failed.
    pub valid: Vec<bool>,
}

/// Image coordinates of every MPI cell in another view (`N x H x W`).
#[derive(Debug, Clone, PartialEq)]
pub struct WarpField {
    pub n_planes: usize,
    pub height: usize,
    pub width: usize,
    /// Pixels (column).
    pub samp: Vec<f64>,
    /// Pixels (row).
    pub line: Vec<f64>,
    /// False where the cell was already invalid, projection failed, or the
    /// coordinates fall outside the referenced raster.
    pub valid: Vec<bool>,
}

/// Rendered RGB pulled back through the synthesized altitude map.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceReprojection {
    pub rgb: Image,
    /// Per-pixel validity; out-of-bounds samples are zeroed and must be
    /// excluded from losses.
    pub valid: Vec<bool>,
}

/// Localize an H x W pixel grid at every plane altitude.
///
/// Localization failures flag the cell invalid instead of aborting.
pub fn mpi_to_ground(
    sampling: &AltitudeSampling,
    height: usize,
    width: usize,
    rpc: &RpcModel,
) -> GroundGrid {
    let n = sampling.n_planes();
    let cells = n * height * width;
    let mut grid = GroundGrid {
        n_planes: n,
        height,
        width,
        lat: vec![0.0; cells],
        lon: vec![0.0; cells],
        hei: vec![0.0; cells],
        valid: vec![false; cells],
    };
    let rows: Vec<(usize, Vec<(f64, f64, bool)>)> = (0..n * height)
        .into_par_iter()
        .map(|chunk| {
            let plane = chunk / height;
            let y = chunk % height;
            let h = sampling.heights[plane];
            let row: Vec<(f64, f64, bool)> = (0..width)
                .map(|x| match rpc.localize_point(x as f64, y as f64, h) {
                    Ok((lat, lon)) if lat.is_finite() && lon.is_finite() => (lat, lon, true),
                    _ => (0.0, 0.0, false),
                })
                .collect();
            (chunk, row)
        })
        .collect();
    for (chunk, row) in rows {
        let plane = chunk / height;
        let base = chunk * width;
        for (x, (lat, lon, ok)) in row.into_iter().enumerate() {
            grid.lat[base + x] = lat;
            grid.lon[base + x] = lon;
            grid.hei[base + x] = sampling.heights[plane];
            grid.valid[base + x] = ok;
        }
    }
    grid
}

/// Project a ground grid into a view, masking cells that land outside
/// `[0, W) x [0, H)` of the referenced raster or fail to project.
pub fn ground_to_view(
    grid: &GroundGrid,
    rpc: &RpcModel,
    target_size: (usize, usize),
) -> WarpField {
    let (target_h, target_w) = target_size;
    let cells = grid.lat.len();
    let mut field = WarpField {
        n_planes: grid.n_planes,
        height: grid.height,
        width: grid.width,
        samp: vec![0.0; cells],
        line: vec![0.0; cells],
        valid: vec![false; cells],
    };
    for i in 0..cells {
        if !grid.valid[i] {
            continue;
        }
        if let Ok((samp, line)) = rpc.project_point(grid.lat[i], grid.lon[i], grid.hei[i]) {
            field.samp[i] = samp;
            field.line[i] = line;
            field.valid[i] = samp.is_finite()
                && line.is_finite()
                && samp >= 0.0
                && samp < target_w as f64
                && line >= 0.0
                && line < target_h as f64;
        }
    }
    field
}

/// Bilinear sample with zero padding outside the raster.
#[inline]
pub(crate) fn bilinear_tap(
    data: &[f64],
    height: usize,
    width: usize,
    channels: usize,
    samp: f64,
    line: f64,
    channel: usize,
) -> f64 {
    let x0 = samp.floor();
    let y0 = line.floor();
    let dx = samp - x0;
    let dy = line - y0;
    let mut acc = 0.0;
    for (yy, wy) in [(y0, 1.0 - dy), (y0 + 1.0, dy)] {
        if wy == 0.0 || yy < 0.0 || yy >= height as f64 {
            continue;
        }
        let row = yy as usize * width;
        for (xx, wx) in [(x0, 1.0 - dx), (x0 + 1.0, dx)] {
            if wx == 0.0 || xx < 0.0 || xx >= width as f64 {
                continue;
            }
            acc += wy * wx * data[(row + xx as usize) * channels + channel];
        }
    }
    acc
}

/// Pull MPI values through a warp field plane by plane. Invalid cells
/// become fully transparent zeros.
pub fn resample_mpi(src: &Mpi, field: &WarpField) -> Result<Mpi> {
    if field.n_planes != src.n_planes() {
        return Err(Error::ShapeMismatch(format!(
            "warp field has {} planes, mpi has {}",
            field.n_planes,
            src.n_planes()
        )));
    }
    let (h, w) = (field.height, field.width);
    let (src_h, src_w) = (src.height, src.width);
    let mut out = Mpi::zeros(h, w, src.sampling.clone());
    let plane_src = src_h * src_w;
    let plane_out = h * w;
    for i in 0..field.n_planes {
        let rgb_plane = &src.rgb[i * plane_src * 3..(i + 1) * plane_src * 3];
        let pan_plane = &src.pan[i * plane_src..(i + 1) * plane_src];
        let sig_plane = &src.sigma[i * plane_src..(i + 1) * plane_src];
        for px in 0..plane_out {
            let cell = i * plane_out + px;
            if !field.valid[cell] {
                continue;
            }
            let (s, l) = (field.samp[cell], field.line[cell]);
            for c in 0..3 {
                out.rgb[cell * 3 + c] = bilinear_tap(rgb_plane, src_h, src_w, 3, s, l, c);
            }
            out.pan[cell] = bilinear_tap(pan_plane, src_h, src_w, 1, s, l, 0);
            out.sigma[cell] = bilinear_tap(sig_plane, src_h, src_w, 1, s, l, 0);
        }
    }
    Ok(out)
}

/// Warp a source-view MPI into a target view and render it there.
///
/// The correspondence field is built backward: the target grid is localized
/// with the target camera and projected into the source view, so the
/// resample gathers source values onto target cells. Returns the warped MPI
/// and its rendering under the target camera.
pub fn warp_src_to_tgt(
    mpi: &Mpi,
    rpc_src: &RpcModel,
    rpc_tgt: &RpcModel,
    geo_ref: &GeoRef,
) -> Result<(Mpi, RenderOutput)> {
    let grid = mpi_to_ground(&mpi.sampling, mpi.height, mpi.width, rpc_tgt);
    let field = ground_to_view(&grid, rpc_src, (mpi.height, mpi.width));
    let warped = resample_mpi(mpi, &field)?;
    let spacing = plane_spacing(rpc_tgt, &mpi.sampling, mpi.height, mpi.width, geo_ref)?;
    let render = composite(&warped, &spacing)?;
    Ok((warped, render))
}

/// Reproject the rendered source view through its own altitude map.
///
/// Each pixel's estimated surface point `(x, y, H(x, y))` is localized with
/// the source camera, dropped to the reference altitude of `geo_ref`, and
/// projected back into the source image; the rendered RGB is sampled there.
/// For a nadir camera the map is the identity; for oblique cameras the
/// displacement is the parallax between the altitude estimate and the
/// reference plane, which vanishes where the estimate sits on it.
pub fn reproject_source(
    render: &RenderOutput,
    mpi: &Mpi,
    rpc_src: &RpcModel,
    geo_ref: &GeoRef,
) -> Result<SourceReprojection> {
    if render.height() != mpi.height || render.width() != mpi.width {
        return Err(Error::ShapeMismatch(format!(
            "render {}x{} vs mpi {}x{}",
            render.height(),
            render.width(),
            mpi.height,
            mpi.width
        )));
    }
    let (h, w) = (render.height(), render.width());
    let coords = reproject_source_coords(&render.altitude, rpc_src, geo_ref);
    let mut out = SourceReprojection {
        rgb: Image::zeros(h, w, 3),
        valid: vec![false; h * w],
    };
    sample_rgb_at(&render.rgb, &coords, &mut out);
    Ok(out)
}

/// Per-pixel source-image coordinates induced by an altitude map; separated
/// out so the fitter can freeze them within an optimization step.
pub(crate) fn reproject_source_coords(
    altitude: &Image,
    rpc_src: &RpcModel,
    geo_ref: &GeoRef,
) -> Vec<(f64, f64, bool)> {
    let (h, w) = (altitude.height, altitude.width);
    (0..h * w)
        .map(|px| {
            let (y, x) = (px / w, px % w);
            let hei = altitude.data[px];
            let ok = rpc_src
                .localize_point(x as f64, y as f64, hei)
                .and_then(|(lat, lon)| rpc_src.project_point(lat, lon, geo_ref.alt_m));
            match ok {
                Ok((samp, line))
                    if samp.is_finite()
                        && line.is_finite()
                        && samp >= 0.0
                        && samp < w as f64
                        && line >= 0.0
                        && line < h as f64 =>
                {
                    (samp, line, true)
                }
                _ => (0.0, 0.0, false),
            }
        })
        .collect()
}

pub(crate) fn sample_rgb_at(
    rgb: &Image,
    coords: &[(f64, f64, bool)],
    out: &mut SourceReprojection,
) {
    let (h, w) = (rgb.height, rgb.width);
    for (px, &(samp, line, ok)) in coords.iter().enumerate() {
        if !ok {
            continue;
        }
        for c in 0..3 {
            out.rgb.data[px * 3 + c] = bilinear_tap(&rgb.data, h, w, 3, samp, line, c);
        }
        out.valid[px] = true;
    }
}
