//! Geodetic reference and local tangent-plane conversion.
//!
//! Scene extents here are well under a kilometer, so plane spacings and DSM
//! grids use a local east/north/up frame anchored at a reference point
//! rather than full ECEF. Meters per degree come from the series expansion
//! of the WGS-84 meridian and parallel arc lengths:
//!
//! ```text
//! m/deg lat = 111132.954 - 559.822 cos(2φ) + 1.175 cos(4φ)
//! m/deg lon = 111412.84 cos(φ) - 93.5 cos(3φ)
//! ```

/// Anchor of the local east/north/up frame.
///
/// `alt_m` doubles as the scene's reference surface height: source-view
/// reprojection parallax is measured against this plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoRef {
    /// Anchor latitude in degrees.
    pub lat_deg: f64,
    /// Anchor longitude in degrees.
    pub lon_deg: f64,
    /// Anchor altitude in meters.
    pub alt_m: f64,
}

impl GeoRef {
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        Self {
            lat_deg,
            lon_deg,
            alt_m,
        }
    }

    /// Meters per degree of latitude at the anchor.
    pub fn meters_per_deg_lat(&self) -> f64 {
        let phi = self.lat_deg.to_radians();
        111_132.954 - 559.822 * (2.0 * phi).cos() + 1.175 * (4.0 * phi).cos()
    }

    /// Meters per degree of longitude at the anchor.
    pub fn meters_per_deg_lon(&self) -> f64 {
        let phi = self.lat_deg.to_radians();
        111_412.84 * phi.cos() - 93.5 * (3.0 * phi).cos()
    }

    /// Convert geodetic (lat, lon, hei) to local (east, north, up) meters.
    pub fn to_enu(&self, lat_deg: f64, lon_deg: f64, hei_m: f64) -> [f64; 3] {
        [
            (lon_deg - self.lon_deg) * self.meters_per_deg_lon(),
            (lat_deg - self.lat_deg) * self.meters_per_deg_lat(),
            hei_m - self.alt_m,
        ]
    }

    /// Convert local (east, north) meters back to (lat, lon) degrees.
    pub fn from_en(&self, east_m: f64, north_m: f64) -> (f64, f64) {
        (
            self.lat_deg + north_m / self.meters_per_deg_lat(),
            self.lon_deg + east_m / self.meters_per_deg_lon(),
        )
    }
}
