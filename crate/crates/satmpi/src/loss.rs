//! Loss terms for scene fitting.
//!
//! Every fidelity term is a masked mean absolute difference, optionally
//! summed over a list of scales; reprojection terms reuse the same L1 core
//! over geometrically re-projected renderings. Means (not sums) keep the
//! weights comparable across image sizes. The weighted combination is
//!
//! ```text
//! total = w_pan * pan + w_color * color + w_reproject * reproject
//!       + w_depth * depth
//! ```

use crate::error::{Error, Result};
use crate::image::Image;

/// Ratios of the loss terms. All non-negative; `depth` is zero unless a
/// ground-truth surface supervises the fit.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossWeights {
    pub pan: f64,
    pub color: f64,
    pub reproject: f64,
    #[serde(default)]
    pub depth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            pan: 1.0,
            color: 1.0,
            reproject: 10.0,
            depth: 0.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pan", self.pan),
            ("color", self.color),
            ("reproject", self.reproject),
            ("depth", self.depth),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "loss weight {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Unweighted values of the four loss terms at one scale.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossTerms {
    pub pan: f64,
    pub color: f64,
    pub reproject: f64,
    pub depth: f64,
}

/// Aggregated loss values plus the per-scale breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub pan: f64,
    pub color: f64,
    pub reproject: f64,
    pub depth: f64,
    pub total: f64,
    pub per_scale: Vec<LossTerms>,
}

/// One (prediction, truth, mask) triple of a multiscale pyramid.
pub struct ScalePair<'a> {
    pub pred: &'a Image,
    pub truth: &'a Image,
    pub mask: Option<&'a [bool]>,
}

/// Masked mean absolute difference of one scale.
pub fn l1_masked(pred: &Image, truth: &Image, mask: Option<&[bool]>) -> Result<f64> {
    pred.require_same_shape(truth, "l1 operands")?;
    if let Some(m) = mask {
        if m.len() != pred.height * pred.width {
            return Err(Error::ShapeMismatch(format!(
                "mask length {} for {}x{} image",
                m.len(),
                pred.height,
                pred.width
            )));
        }
    }
    let channels = pred.channels;
    let mut acc = 0.0;
    let mut count = 0usize;
    for px in 0..pred.height * pred.width {
        if mask.map_or(true, |m| m[px]) {
            for c in 0..channels {
                acc += (pred.data[px * channels + c] - truth.data[px * channels + c]).abs();
            }
            count += channels;
        }
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(acc / count as f64)
}

/// Sum of masked mean absolute differences over a list of scales.
/// Single-scale callers pass one element.
pub fn l1_multiscale(scales: &[ScalePair<'_>]) -> Result<(f64, Vec<f64>)> {
    if scales.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut per_scale = Vec::with_capacity(scales.len());
    for s in scales {
        per_scale.push(l1_masked(s.pred, s.truth, s.mask)?);
    }
    Ok((per_scale.iter().sum(), per_scale))
}

/// Single-view reprojection loss: L1 between the altitude-map reprojection
/// of the rendered source view and the source reference.
pub fn loss_src_reproject(
    i_proj_src: &Image,
    i_src: &Image,
    mask: Option<&[bool]>,
) -> Result<f64> {
    l1_masked(i_proj_src, i_src, mask)
}

/// Sparse-view reprojection loss, averaged over target views.
pub fn loss_tgt_reproject(targets: &[ScalePair<'_>]) -> Result<f64> {
    if targets.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut acc = 0.0;
    for t in targets {
        acc += l1_masked(t.pred, t.truth, t.mask)?;
    }
    Ok(acc / targets.len() as f64)
}

/// Combine per-scale terms with the loss weights.
pub fn total_loss(per_scale: &[LossTerms], weights: &LossWeights) -> LossReport {
    let mut sum = LossTerms::default();
    for t in per_scale {
        sum.pan += t.pan;
        sum.color += t.color;
        sum.reproject += t.reproject;
        sum.depth += t.depth;
    }
    let total = weights.pan * sum.pan
        + weights.color * sum.color
        + weights.reproject * sum.reproject
        + weights.depth * sum.depth;
    LossReport {
        pan: sum.pan,
        color: sum.color,
        reproject: sum.reproject,
        depth: sum.depth,
        total,
        per_scale: per_scale.to_vec(),
    }
}
