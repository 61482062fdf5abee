//! Multiplane-image data structures, altitude sampling, and the frequency
//! encoding of plane indices.
//!
//! A scene frustum is represented by `N` fronto-parallel planes at uniformly
//! sampled altitudes, each holding per-pixel RGB color, panchromatic
//! intensity, and volume density. Altitude ranges for satellite scenes can
//! span zero elevation, so sampling is uniform in altitude rather than in
//! inverse depth. Planes are stored top-down (highest altitude first) so
//! that plane order matches front-to-back compositing order.

use crate::error::{Error, Result};

/// Default number of planes for scene fitting.
pub const DEFAULT_N_PLANES: usize = 32;

/// Default number of frequency levels for height embeddings.
pub const DEFAULT_EMBED_LEVELS: usize = 10;

/// Uniform altitude sampling between the highest and lowest plane.
#[derive(Debug, Clone, PartialEq)]
pub struct AltitudeSampling {
    /// Highest plane, meters (camera side).
    pub h_near: f64,
    /// Lowest plane, meters.
    pub h_far: f64,
    /// Sampled plane altitudes, strictly decreasing from `h_near` to `h_far`.
    pub heights: Vec<f64>,
}

impl AltitudeSampling {
    /// Sample `n_planes` altitudes uniformly: `h[i] = h_near - i * spacing`.
    pub fn new(h_near: f64, h_far: f64, n_planes: usize) -> Result<Self> {
        if !(h_near > h_far) {
            return Err(Error::InvalidRange(format!(
                "h_near ({h_near}) must exceed h_far ({h_far})"
            )));
        }
        if n_planes < 2 {
            return Err(Error::InvalidRange(format!(
                "need at least 2 planes, got {n_planes}"
            )));
        }
        let step = (h_near - h_far) / (n_planes - 1) as f64;
        let heights = (0..n_planes)
            .map(|i| {
                if i == n_planes - 1 {
                    h_far
                } else {
                    h_near - i as f64 * step
                }
            })
            .collect();
        Ok(Self {
            h_near,
            h_far,
            heights,
        })
    }

    pub fn n_planes(&self) -> usize {
        self.heights.len()
    }

    /// Plane spacing in meters (uniform by construction).
    pub fn spacing(&self) -> f64 {
        (self.h_near - self.h_far) / (self.n_planes() - 1) as f64
    }

    /// Relative index of plane `i` in `[0, 1]`, the input to [`posenc`].
    pub fn relative_index(&self, i: usize) -> f64 {
        i as f64 / (self.n_planes() - 1) as f64
    }
}

/// Frequency positional encoding of a height sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightEmbedding {
    /// Number of frequency octaves.
    pub levels: usize,
    /// `[sin(2^0 pi h), cos(2^0 pi h), ..., sin(2^{L-1} pi h), cos(2^{L-1} pi h)]`
    pub values: Vec<f64>,
}

/// Encode a normalized height sample `h` in `[0, 1]` with `levels` octaves.
pub fn posenc(h: f64, levels: usize) -> HeightEmbedding {
    let mut values = Vec::with_capacity(2 * levels);
    for l in 0..levels {
        let phase = (1u64 << l) as f64 * std::f64::consts::PI * h;
        values.push(phase.sin());
        values.push(phase.cos());
    }
    HeightEmbedding { levels, values }
}

/// N planes of (rgb, pan, sigma) samples over an H x W pixel grid.
///
/// `rgb` and `pan` are radiance values in `[0, 1]`; `sigma` is a
/// non-negative volume density in 1/meter. Plane-major storage:
/// `cell(plane, y, x) = (plane * height + y) * width + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mpi {
    pub height: usize,
    pub width: usize,
    /// Length `n_planes * height * width * 3`.
    pub rgb: Vec<f64>,
    /// Length `n_planes * height * width`.
    pub pan: Vec<f64>,
    /// Length `n_planes * height * width`.
    pub sigma: Vec<f64>,
    pub sampling: AltitudeSampling,
}

impl Mpi {
    /// Fully transparent black MPI.
    pub fn zeros(height: usize, width: usize, sampling: AltitudeSampling) -> Self {
        let cells = sampling.n_planes() * height * width;
        Self {
            height,
            width,
            rgb: vec![0.0; cells * 3],
            pan: vec![0.0; cells],
            sigma: vec![0.0; cells],
            sampling,
        }
    }

    pub fn n_planes(&self) -> usize {
        self.sampling.n_planes()
    }

    /// Cells per plane.
    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn cell(&self, plane: usize, y: usize, x: usize) -> usize {
        (plane * self.height + y) * self.width + x
    }

    /// Check value-range and dimension invariants.
    pub fn validate(&self) -> Result<()> {
        let cells = self.n_planes() * self.plane_len();
        if self.rgb.len() != cells * 3 || self.pan.len() != cells || self.sigma.len() != cells {
            return Err(Error::ShapeMismatch(format!(
                "mpi channel lengths rgb={} pan={} sigma={} for {} cells",
                self.rgb.len(),
                self.pan.len(),
                self.sigma.len(),
                cells
            )));
        }
        if !self.rgb.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::InvariantViolation("rgb outside [0,1]".into()));
        }
        if !self.pan.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(Error::InvariantViolation("pan outside [0,1]".into()));
        }
        if !self.sigma.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::InvariantViolation(
                "sigma must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_plane_sampling_hits_endpoints() {
        let s = AltitudeSampling::new(10.0, 0.0, 2).unwrap();
        assert_eq!(s.heights, vec![10.0, 0.0]);
    }

    #[test]
    fn four_plane_sampling_matches_hand_arithmetic() {
        // bounds [-26.1, 2.4], four planes
        let s = AltitudeSampling::new(2.4, -26.1, 4).unwrap();
        let expect = [2.4, -7.1, -16.6, -26.1];
        for (h, e) in s.heights.iter().zip(expect) {
            assert!((h - e).abs() < 1e-12, "{h} vs {e}");
        }
    }

    #[test]
    fn spacing_is_uniform() {
        let s = AltitudeSampling::new(103.7, -42.9, 57).unwrap();
        let step = s.heights[0] - s.heights[1];
        for w in s.heights.windows(2) {
            let d = w[0] - w[1];
            assert!((d - step).abs() <= 1e-9 * step.abs());
        }
        assert_eq!(s.heights[0], 103.7);
        assert_eq!(*s.heights.last().unwrap(), -42.9);
    }

    #[test]
    fn reversed_index_swaps_near_and_far() {
        let s = AltitudeSampling::new(7.5, -3.25, 9).unwrap();
        let r = AltitudeSampling::new(7.5, -3.25, 9).unwrap();
        let n = s.n_planes();
        for i in 0..n {
            let mirrored = s.h_near + s.h_far - r.heights[n - 1 - i];
            assert!((s.heights[i] - mirrored).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        assert!(matches!(
            AltitudeSampling::new(0.0, 0.0, 4),
            Err(Error::InvalidRange(_))
        ));
        assert!(matches!(
            AltitudeSampling::new(-5.0, 5.0, 4),
            Err(Error::InvalidRange(_))
        ));
        assert!(matches!(
            AltitudeSampling::new(5.0, -5.0, 1),
            Err(Error::InvalidRange(_))
        ));
    }

    #[test]
    fn posenc_zero_phase() {
        let e = posenc(0.0, 2);
        assert_eq!(e.values, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn posenc_half_phase() {
        // sin/cos at pi/2 and pi
        let e = posenc(0.5, 2);
        let expect = [1.0, 0.0, 0.0, -1.0];
        for (v, x) in e.values.iter().zip(expect) {
            assert!((v - x).abs() < 1e-15, "{v} vs {x}");
        }
    }

    #[test]
    fn posenc_stays_in_unit_interval_and_has_fixed_length() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let h: f64 = rng.gen_range(0.0..=1.0);
            let e = posenc(h, 10);
            assert_eq!(e.values.len(), 20);
            assert!(e.values.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn posenc_is_deterministic() {
        assert_eq!(posenc(0.37, 6), posenc(0.37, 6));
    }

    #[test]
    fn mpi_validate_flags_bad_sigma() {
        let sampling = AltitudeSampling::new(1.0, 0.0, 2).unwrap();
        let mut mpi = Mpi::zeros(2, 2, sampling);
        mpi.sigma[3] = -0.5;
        assert!(matches!(
            mpi.validate(),
            Err(Error::InvariantViolation(_))
        ));
    }
}
