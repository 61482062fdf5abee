//! Rational polynomial camera model.
//!
//! A rational polynomial camera maps normalized geodetic coordinates to
//! normalized image coordinates through ratios of cubic polynomials:
//!
//! ```text
//! samp_n = A_num(hei, lat, lon) / A_den(hei, lat, lon)
//! line_n = B_num(hei, lat, lon) / B_den(hei, lat, lon)
//! ```
//!
//! Each polynomial is stored as a 4x4x4 coefficient tensor indexed by the
//! exponents of (hei, lat, lon); only entries with total degree <= 3 may be
//! non-zero, which leaves the 20 terms of the RPC00B convention. The inverse
//! mapping (localization: image + height -> ground) is either read from a
//! second set of tensors over (hei, samp, line) or, when a file omits them,
//! solved per point by a damped Newton iteration on the forward map.
//!
//! All projection/localization entry points exist in both pixel space and
//! normalized space, so callers pick the convention explicitly.

mod format;

pub use format::{parse_rpc, serialize_rpc};

use crate::error::{Error, Result};

/// Guard for rational denominators in normalized space. Values at or below
/// this magnitude signal a point outside the camera's validity volume.
pub const DENOMINATOR_GUARD: f64 = 1e-8;

/// Newton localization iteration budget.
pub const NEWTON_MAX_ITERATIONS: usize = 50;

/// Newton convergence threshold in normalized pixels.
pub const NEWTON_TOLERANCE: f64 = 1e-6;

/// RPC00B coefficient order as (hei, lat, lon) exponent triples.
///
/// Coefficient n of a `*_COEFF_1..20` list populates tensor entry
/// `RPC00B_EXPONENTS[n-1]`. The published monomial order is
/// 1, L, P, H, LP, LH, PH, L2, P2, H2, PLH, L3, LP2, LH2, L2P, P3, PH2,
/// L2H, P2H, H3 with L = lon, P = lat, H = hei.
pub const RPC00B_EXPONENTS: [(usize, usize, usize); 20] = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 1, 0),
    (1, 0, 0),
    (0, 1, 1),
    (1, 0, 1),
    (1, 1, 0),
    (0, 0, 2),
    (0, 2, 0),
    (2, 0, 0),
    (1, 1, 1),
    (0, 0, 3),
    (0, 2, 1),
    (2, 0, 1),
    (0, 1, 2),
    (0, 3, 0),
    (2, 1, 0),
    (1, 0, 2),
    (1, 2, 0),
    (3, 0, 0),
];

/// Cubic polynomial in three variables stored as a 4x4x4 coefficient tensor.
///
/// Index `[i][j][k]` carries the coefficient of `a^i * b^j * c^k` where the
/// arguments are (hei, lat, lon) for projection tensors and
/// (hei, samp, line) for localization tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyTensor(pub [[[f64; 4]; 4]; 4]);

impl PolyTensor {
    /// All-zero tensor.
    pub fn zeros() -> Self {
        Self([[[0.0; 4]; 4]; 4])
    }

    /// Constant polynomial with value one (the standard denominator).
    pub fn one() -> Self {
        let mut t = Self::zeros();
        t.0[0][0][0] = 1.0;
        t
    }

    /// Build a tensor from the 20 RPC00B-ordered coefficients.
    pub fn from_rpc_coeffs(coeffs: &[f64; 20]) -> Self {
        let mut t = Self::zeros();
        for (n, &(i, j, k)) in RPC00B_EXPONENTS.iter().enumerate() {
            t.0[i][j][k] = coeffs[n];
        }
        t
    }

    /// Flatten back to the 20 RPC00B-ordered coefficients.
    pub fn to_rpc_coeffs(&self) -> [f64; 20] {
        let mut coeffs = [0.0; 20];
        for (n, &(i, j, k)) in RPC00B_EXPONENTS.iter().enumerate() {
            coeffs[n] = self.0[i][j][k];
        }
        coeffs
    }

    /// Evaluate the polynomial at normalized `(a, b, c)`.
    ///
    /// Monomials are formed on the fly; entries with total degree above
    /// three never contribute, whatever they hold.
    pub fn eval(&self, a: f64, b: f64, c: f64) -> f64 {
        let pa = [1.0, a, a * a, a * a * a];
        let pb = [1.0, b, b * b, b * b * b];
        let pc = [1.0, c, c * c, c * c * c];
        let mut acc = 0.0;
        for i in 0..4 {
            for j in 0..4 - i {
                for k in 0..4 - i - j {
                    let w = self.0[i][j][k];
                    if w != 0.0 {
                        acc += w * pa[i] * pb[j] * pc[k];
                    }
                }
            }
        }
        acc
    }

    /// Evaluate the polynomial and its partial derivatives in `b` and `c`.
    ///
    /// Used by the Newton fallback, which solves for (lat, lon) at fixed
    /// height.
    pub fn eval_with_grad_bc(&self, a: f64, b: f64, c: f64) -> (f64, f64, f64) {
        let pa = [1.0, a, a * a, a * a * a];
        let pb = [1.0, b, b * b, b * b * b];
        let pc = [1.0, c, c * c, c * c * c];
        let (mut v, mut db, mut dc) = (0.0, 0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 - i {
                for k in 0..4 - i - j {
                    let w = self.0[i][j][k];
                    if w == 0.0 {
                        continue;
                    }
                    v += w * pa[i] * pb[j] * pc[k];
                    if j > 0 {
                        db += w * pa[i] * (j as f64) * pb[j - 1] * pc[k];
                    }
                    if k > 0 {
                        dc += w * pa[i] * pb[j] * (k as f64) * pc[k - 1];
                    }
                }
            }
        }
        (v, db, dc)
    }

    /// True when every entry of total degree above three is exactly zero.
    pub fn satisfies_degree_bound(&self) -> bool {
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    if i + j + k > 3 && self.0[i][j][k] != 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .flatten()
            .all(|v| v.is_finite())
    }
}

/// Inverse (localization) tensors over the image tensor
/// `Y[i][l][m] = hei^i * samp^l * line^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseTensors {
    /// Latitude numerator (C_num).
    pub lat_num: PolyTensor,
    /// Latitude denominator (C_den).
    pub lat_den: PolyTensor,
    /// Longitude numerator (D_num).
    pub lon_num: PolyTensor,
    /// Longitude denominator (D_den).
    pub lon_den: PolyTensor,
}

/// One camera: forward projection tensors, optional localization tensors,
/// and the normalization offsets/scales.
///
/// Immutable after construction; all operations are pure, so a model can be
/// shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct RpcModel {
    /// Sample numerator (A_num).
    pub proj_num_samp: PolyTensor,
    /// Sample denominator (A_den).
    pub proj_den_samp: PolyTensor,
    /// Line numerator (B_num).
    pub proj_num_line: PolyTensor,
    /// Line denominator (B_den).
    pub proj_den_line: PolyTensor,
    /// Localization tensors, when the source provided them.
    pub inverse: Option<InverseTensors>,

    /// Latitude offset, degrees.
    pub lat_off: f64,
    /// Latitude scale, degrees.
    pub lat_scale: f64,
    /// Longitude offset, degrees.
    pub lon_off: f64,
    /// Longitude scale, degrees.
    pub lon_scale: f64,
    /// Height offset, meters.
    pub hei_off: f64,
    /// Height scale, meters.
    pub hei_scale: f64,
    /// Sample (column) offset, pixels.
    pub samp_off: f64,
    /// Sample scale, pixels.
    pub samp_scale: f64,
    /// Line (row) offset, pixels.
    pub line_off: f64,
    /// Line scale, pixels.
    pub line_scale: f64,
}

/// Parallel arrays of geodetic points (degrees, degrees, meters).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeoPointBatch {
    pub lat: Vec<f64>,
    pub lon: Vec<f64>,
    pub hei: Vec<f64>,
}

impl GeoPointBatch {
    pub fn new(lat: Vec<f64>, lon: Vec<f64>, hei: Vec<f64>) -> Result<Self> {
        if lat.len() != lon.len() || lat.len() != hei.len() {
            return Err(Error::ShapeMismatch(format!(
                "geodetic batch lengths {}/{}/{}",
                lat.len(),
                lon.len(),
                hei.len()
            )));
        }
        if !lat.iter().chain(&lon).chain(&hei).all(|v| v.is_finite()) {
            return Err(Error::InvariantViolation(
                "geodetic batch holds non-finite values".into(),
            ));
        }
        Ok(Self { lat, lon, hei })
    }

    pub fn len(&self) -> usize {
        self.lat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lat.is_empty()
    }
}

/// Parallel arrays of image points (pixels; samp = column, line = row).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImagePointBatch {
    pub samp: Vec<f64>,
    pub line: Vec<f64>,
}

impl ImagePointBatch {
    pub fn new(samp: Vec<f64>, line: Vec<f64>) -> Result<Self> {
        if samp.len() != line.len() {
            return Err(Error::ShapeMismatch(format!(
                "image batch lengths {}/{}",
                samp.len(),
                line.len()
            )));
        }
        if !samp.iter().chain(&line).all(|v| v.is_finite()) {
            return Err(Error::InvariantViolation(
                "image batch holds non-finite values".into(),
            ));
        }
        Ok(Self { samp, line })
    }

    pub fn len(&self) -> usize {
        self.samp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samp.is_empty()
    }
}

impl RpcModel {
    /// Check the structural invariants: positive scales, finite entries,
    /// degree bound, and unit denominator constants.
    pub fn validate(&self) -> Result<()> {
        for (name, scale) in [
            ("LAT_SCALE", self.lat_scale),
            ("LONG_SCALE", self.lon_scale),
            ("HEIGHT_SCALE", self.hei_scale),
            ("SAMP_SCALE", self.samp_scale),
            ("LINE_SCALE", self.line_scale),
        ] {
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::InvariantViolation(format!(
                    "{name} must be strictly positive, got {scale}"
                )));
            }
        }
        for off in [
            self.lat_off,
            self.lon_off,
            self.hei_off,
            self.samp_off,
            self.line_off,
        ] {
            if !off.is_finite() {
                return Err(Error::InvariantViolation("non-finite offset".into()));
            }
        }
        let mut tensors: Vec<(&str, &PolyTensor, bool)> = vec![
            ("SAMP_NUM", &self.proj_num_samp, false),
            ("SAMP_DEN", &self.proj_den_samp, true),
            ("LINE_NUM", &self.proj_num_line, false),
            ("LINE_DEN", &self.proj_den_line, true),
        ];
        if let Some(inv) = &self.inverse {
            tensors.push(("LAT_NUM", &inv.lat_num, false));
            tensors.push(("LAT_DEN", &inv.lat_den, true));
            tensors.push(("LONG_NUM", &inv.lon_num, false));
            tensors.push(("LONG_DEN", &inv.lon_den, true));
        }
        for (name, t, is_den) in tensors {
            if !t.is_finite() {
                return Err(Error::InvariantViolation(format!(
                    "{name} tensor holds non-finite coefficients"
                )));
            }
            if !t.satisfies_degree_bound() {
                return Err(Error::InvariantViolation(format!(
                    "{name} tensor has coefficients above total degree 3"
                )));
            }
            if is_den && t.0[0][0][0] != 1.0 {
                return Err(Error::InvariantViolation(format!(
                    "{name} constant coefficient must be 1, got {}",
                    t.0[0][0][0]
                )));
            }
        }
        Ok(())
    }

    /// Normalize a geodetic point.
    pub fn normalize_ground(&self, lat: f64, lon: f64, hei: f64) -> (f64, f64, f64) {
        (
            (lat - self.lat_off) / self.lat_scale,
            (lon - self.lon_off) / self.lon_scale,
            (hei - self.hei_off) / self.hei_scale,
        )
    }

    /// Normalize an image point plus height.
    pub fn normalize_image(&self, samp: f64, line: f64, hei: f64) -> (f64, f64, f64) {
        (
            (samp - self.samp_off) / self.samp_scale,
            (line - self.line_off) / self.line_scale,
            (hei - self.hei_off) / self.hei_scale,
        )
    }

    /// Forward projection in normalized space.
    pub fn project_normalized(&self, lat_n: f64, lon_n: f64, hei_n: f64) -> Result<(f64, f64)> {
        self.project_normalized_at(lat_n, lon_n, hei_n, 0)
    }

    fn project_normalized_at(
        &self,
        lat_n: f64,
        lon_n: f64,
        hei_n: f64,
        index: usize,
    ) -> Result<(f64, f64)> {
        let den_s = self.proj_den_samp.eval(hei_n, lat_n, lon_n);
        let den_l = self.proj_den_line.eval(hei_n, lat_n, lon_n);
        for den in [den_s, den_l] {
            if den.abs() <= DENOMINATOR_GUARD {
                return Err(Error::DenominatorNearZero {
                    index,
                    value: den.abs(),
                });
            }
        }
        let samp_n = self.proj_num_samp.eval(hei_n, lat_n, lon_n) / den_s;
        let line_n = self.proj_num_line.eval(hei_n, lat_n, lon_n) / den_l;
        Ok((samp_n, line_n))
    }

    /// Project one geodetic point to pixel coordinates.
    pub fn project_point(&self, lat: f64, lon: f64, hei: f64) -> Result<(f64, f64)> {
        let (lat_n, lon_n, hei_n) = self.normalize_ground(lat, lon, hei);
        let (samp_n, line_n) = self.project_normalized(lat_n, lon_n, hei_n)?;
        Ok((
            samp_n * self.samp_scale + self.samp_off,
            line_n * self.line_scale + self.line_off,
        ))
    }

    /// Project a batch of geodetic points. Element-wise identical to
    /// [`RpcModel::project_point`].
    pub fn project(&self, pts: &GeoPointBatch) -> Result<ImagePointBatch> {
        let mut samp = Vec::with_capacity(pts.len());
        let mut line = Vec::with_capacity(pts.len());
        for idx in 0..pts.len() {
            let (lat_n, lon_n, hei_n) =
                self.normalize_ground(pts.lat[idx], pts.lon[idx], pts.hei[idx]);
            let (samp_n, line_n) = self.project_normalized_at(lat_n, lon_n, hei_n, idx)?;
            samp.push(samp_n * self.samp_scale + self.samp_off);
            line.push(line_n * self.line_scale + self.line_off);
        }
        Ok(ImagePointBatch { samp, line })
    }

    /// Localization in normalized space, picking the tensor path when the
    /// model has inverse tensors and the Newton fallback otherwise.
    pub fn localize_normalized(&self, samp_n: f64, line_n: f64, hei_n: f64) -> Result<(f64, f64)> {
        self.localize_normalized_at(samp_n, line_n, hei_n, 0)
    }

    fn localize_normalized_at(
        &self,
        samp_n: f64,
        line_n: f64,
        hei_n: f64,
        index: usize,
    ) -> Result<(f64, f64)> {
        match &self.inverse {
            Some(inv) => {
                let den_lat = inv.lat_den.eval(hei_n, samp_n, line_n);
                let den_lon = inv.lon_den.eval(hei_n, samp_n, line_n);
                for den in [den_lat, den_lon] {
                    if den.abs() <= DENOMINATOR_GUARD {
                        return Err(Error::DenominatorNearZero {
                            index,
                            value: den.abs(),
                        });
                    }
                }
                Ok((
                    inv.lat_num.eval(hei_n, samp_n, line_n) / den_lat,
                    inv.lon_num.eval(hei_n, samp_n, line_n) / den_lon,
                ))
            }
            None => self.localize_newton(samp_n, line_n, hei_n, index),
        }
    }

    /// Localize one pixel at a given height, returning (lat, lon) degrees.
    pub fn localize_point(&self, samp: f64, line: f64, hei: f64) -> Result<(f64, f64)> {
        let (samp_n, line_n, hei_n) = self.normalize_image(samp, line, hei);
        let (lat_n, lon_n) = self.localize_normalized(samp_n, line_n, hei_n)?;
        Ok((
            lat_n * self.lat_scale + self.lat_off,
            lon_n * self.lon_scale + self.lon_off,
        ))
    }

    /// Localize a batch of image points at per-point heights.
    pub fn localize(&self, pts: &ImagePointBatch, hei: &[f64]) -> Result<GeoPointBatch> {
        if hei.len() != pts.len() {
            return Err(Error::ShapeMismatch(format!(
                "height array length {} for batch of {}",
                hei.len(),
                pts.len()
            )));
        }
        let mut lat = Vec::with_capacity(pts.len());
        let mut lon = Vec::with_capacity(pts.len());
        for idx in 0..pts.len() {
            let (samp_n, line_n, hei_n) =
                self.normalize_image(pts.samp[idx], pts.line[idx], hei[idx]);
            let (lat_n, lon_n) = self.localize_normalized_at(samp_n, line_n, hei_n, idx)?;
            lat.push(lat_n * self.lat_scale + self.lat_off);
            lon.push(lon_n * self.lon_scale + self.lon_off);
        }
        Ok(GeoPointBatch {
            lat,
            lon,
            hei: hei.to_vec(),
        })
    }

    /// Damped Newton solve of `project(lat, lon; hei) = (samp, line)` on
    /// the 2x2 normalized system, starting from the offsets (normalized
    /// origin).
    fn localize_newton(
        &self,
        samp_t: f64,
        line_t: f64,
        hei_n: f64,
        index: usize,
    ) -> Result<(f64, f64)> {
        let residual = |lat_n: f64, lon_n: f64| -> Result<(f64, f64, [f64; 4])> {
            let (ns, ns_lat, ns_lon) = self.proj_num_samp.eval_with_grad_bc(hei_n, lat_n, lon_n);
            let (ds, ds_lat, ds_lon) = self.proj_den_samp.eval_with_grad_bc(hei_n, lat_n, lon_n);
            let (nl, nl_lat, nl_lon) = self.proj_num_line.eval_with_grad_bc(hei_n, lat_n, lon_n);
            let (dl, dl_lat, dl_lon) = self.proj_den_line.eval_with_grad_bc(hei_n, lat_n, lon_n);
            for den in [ds, dl] {
                if den.abs() <= DENOMINATOR_GUARD {
                    return Err(Error::DenominatorNearZero {
                        index,
                        value: den.abs(),
                    });
                }
            }
            let rs = ns / ds - samp_t;
            let rl = nl / dl - line_t;
            // d(N/D) = (N' D - N D') / D^2
            let j = [
                (ns_lat * ds - ns * ds_lat) / (ds * ds),
                (ns_lon * ds - ns * ds_lon) / (ds * ds),
                (nl_lat * dl - nl * dl_lat) / (dl * dl),
                (nl_lon * dl - nl * dl_lon) / (dl * dl),
            ];
            Ok((rs, rl, j))
        };

        let (mut lat_n, mut lon_n) = (0.0, 0.0);
        let (mut rs, mut rl, mut jac) = residual(lat_n, lon_n)?;
        for _ in 0..NEWTON_MAX_ITERATIONS {
            let norm = rs.abs().max(rl.abs());
            if norm < NEWTON_TOLERANCE {
                return Ok((lat_n, lon_n));
            }
            let det = jac[0] * jac[3] - jac[1] * jac[2];
            if det.abs() <= 1e-14 {
                return Err(Error::NoConvergence {
                    index,
                    residual: norm,
                });
            }
            let step_lat = -(jac[3] * rs - jac[1] * rl) / det;
            let step_lon = -(-jac[2] * rs + jac[0] * rl) / det;

            // backtrack until the residual norm actually drops
            let mut damping = 1.0;
            let mut accepted = None;
            for _ in 0..25 {
                let cand_lat = lat_n + damping * step_lat;
                let cand_lon = lon_n + damping * step_lon;
                if let Ok((crs, crl, cj)) = residual(cand_lat, cand_lon) {
                    if crs.abs().max(crl.abs()) < norm {
                        accepted = Some((cand_lat, cand_lon, crs, crl, cj));
                        break;
                    }
                }
                damping *= 0.5;
            }
            match accepted {
                Some((nlat, nlon, nrs, nrl, nj)) => {
                    lat_n = nlat;
                    lon_n = nlon;
                    rs = nrs;
                    rl = nrl;
                    jac = nj;
                }
                None => {
                    return Err(Error::NoConvergence {
                        index,
                        residual: norm,
                    })
                }
            }
        }
        let norm = rs.abs().max(rl.abs());
        if norm < NEWTON_TOLERANCE {
            Ok((lat_n, lon_n))
        } else {
            Err(Error::NoConvergence {
                index,
                residual: norm,
            })
        }
    }

    /// Copy of this camera for the same scene imaged at `1/factor`
    /// resolution (box-downsampled with aligned block centers).
    pub fn scaled_image(&self, factor: u32) -> Self {
        let f = f64::from(factor);
        let half = (f - 1.0) / 2.0;
        let mut scaled = self.clone();
        scaled.samp_off = (self.samp_off - half) / f;
        scaled.samp_scale = self.samp_scale / f;
        scaled.line_off = (self.line_off - half) / f;
        scaled.line_scale = self.line_scale / f;
        scaled
    }
}
