//! Image and surface quality metrics: PSNR, SSIM, and the DSM error
//! statistics MAE (masked mean absolute error) and ME (masked median
//! absolute error).

use crate::error::{Error, Result};
use crate::image::Image;

/// PSNR cap reported for (near-)identical inputs.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Peak signal-to-noise ratio in dB: `10 log10(peak^2 / mse)`, capped at
/// 99 dB when the mean squared error drops below 1e-12.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    a.require_same_shape(b, "psnr operands")?;
    let mut acc = 0.0;
    for (x, y) in a.data.iter().zip(&b.data) {
        let d = x - y;
        acc += d * d;
    }
    let mse = acc / a.data.len() as f64;
    if mse < 1e-12 {
        Ok(PSNR_CAP_DB)
    } else {
        Ok(10.0 * (peak * peak / mse).log10())
    }
}

/// Structural similarity index, averaged over channels.
///
/// Gaussian window (11x11, sigma 1.5, shrunk to fit small images),
/// K1 = 0.01, K2 = 0.03, unit dynamic range, local statistics evaluated
/// where the window fits entirely inside the image.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.require_same_shape(b, "ssim operands")?;
    let max_win = a.height.min(a.width).min(11);
    let win = if max_win % 2 == 0 { max_win - 1 } else { max_win };
    let radius = win / 2;
    let kernel = gaussian_kernel(win, 1.5);

    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let mut channel_means = Vec::with_capacity(a.channels);
    for c in 0..a.channels {
        let plane_a = extract_channel(a, c);
        let plane_b = extract_channel(b, c);
        let mu_a = filter_valid(&plane_a, a.height, a.width, &kernel);
        let mu_b = filter_valid(&plane_b, a.height, a.width, &kernel);
        let sq_a: Vec<f64> = plane_a.iter().map(|v| v * v).collect();
        let sq_b: Vec<f64> = plane_b.iter().map(|v| v * v).collect();
        let ab: Vec<f64> = plane_a.iter().zip(&plane_b).map(|(x, y)| x * y).collect();
        let mu_sq_a = filter_valid(&sq_a, a.height, a.width, &kernel);
        let mu_sq_b = filter_valid(&sq_b, a.height, a.width, &kernel);
        let mu_ab = filter_valid(&ab, a.height, a.width, &kernel);

        let valid_h = a.height - 2 * radius;
        let valid_w = a.width - 2 * radius;
        let mut acc = 0.0;
        for i in 0..valid_h * valid_w {
            let var_a = mu_sq_a[i] - mu_a[i] * mu_a[i];
            let var_b = mu_sq_b[i] - mu_b[i] * mu_b[i];
            let cov = mu_ab[i] - mu_a[i] * mu_b[i];
            let num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
            let den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
            acc += num / den;
        }
        channel_means.push(acc / (valid_h * valid_w) as f64);
    }
    Ok(channel_means.iter().sum::<f64>() / a.channels as f64)
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let half = (size / 2) as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn extract_channel(img: &Image, c: usize) -> Vec<f64> {
    (0..img.height * img.width)
        .map(|px| img.data[px * img.channels + c])
        .collect()
}

/// Separable Gaussian filtering, valid region only.
fn filter_valid(plane: &[f64], h: usize, w: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = kernel.len() / 2;
    let w_valid = w - 2 * radius;
    let h_valid = h - 2 * radius;
    // horizontal pass
    let mut tmp = vec![0.0; h * w_valid];
    for y in 0..h {
        for x in 0..w_valid {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                acc += k * plane[y * w + x + t];
            }
            tmp[y * w_valid + x] = acc;
        }
    }
    // vertical pass
    let mut out = vec![0.0; h_valid * w_valid];
    for y in 0..h_valid {
        for x in 0..w_valid {
            let mut acc = 0.0;
            for (t, k) in kernel.iter().enumerate() {
                acc += k * tmp[(y + t) * w_valid + x];
            }
            out[y * w_valid + x] = acc;
        }
    }
    out
}

/// Masked mean absolute height error in meters.
pub fn mae(dsm_a: &Image, dsm_b: &Image, mask: Option<&[bool]>) -> Result<f64> {
    let diffs = masked_abs_diffs(dsm_a, dsm_b, mask)?;
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// Masked median absolute height error in meters. Even counts take the
/// mean of the middle pair.
pub fn me(dsm_a: &Image, dsm_b: &Image, mask: Option<&[bool]>) -> Result<f64> {
    let mut diffs = masked_abs_diffs(dsm_a, dsm_b, mask)?;
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = diffs.len();
    if n % 2 == 1 {
        Ok(diffs[n / 2])
    } else {
        Ok(0.5 * (diffs[n / 2 - 1] + diffs[n / 2]))
    }
}

fn masked_abs_diffs(a: &Image, b: &Image, mask: Option<&[bool]>) -> Result<Vec<f64>> {
    a.require_same_shape(b, "dsm operands")?;
    if let Some(m) = mask {
        if m.len() != a.height * a.width {
            return Err(Error::ShapeMismatch(format!(
                "mask length {} for {}x{} dsm",
                m.len(),
                a.height,
                a.width
            )));
        }
    }
    let mut out = Vec::new();
    for px in 0..a.height * a.width {
        if mask.map_or(true, |m| m[px]) {
            for c in 0..a.channels {
                out.push((a.data[px * a.channels + c] - b.data[px * a.channels + c]).abs());
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, c: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(h, w, c, |_, _, _| rng.gen_range(0.0..1.0))
    }

    #[test]
    fn identical_images_hit_the_caps() {
        let img = random_image(16, 16, 3, 1);
        assert_eq!(psnr(&img, &img, 1.0).unwrap(), 99.0);
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_mse_gives_twenty_db() {
        let a = Image::zeros(10, 10, 1);
        let mut b = a.clone();
        for v in &mut b.data {
            *v = 0.1; // mse = 0.01
        }
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn psnr_is_symmetric() {
        let a = random_image(8, 8, 1, 2);
        let b = random_image(8, 8, 1, 3);
        assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
    }

    #[test]
    fn ssim_is_symmetric_and_penalizes_noise() {
        let a = random_image(20, 20, 1, 4);
        let mut b = a.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for v in &mut b.data {
            *v = (*v + rng.gen_range(-0.2..0.2)).clamp(0.0, 1.0);
        }
        let s_ab = ssim(&a, &b).unwrap();
        let s_ba = ssim(&b, &a).unwrap();
        assert!((s_ab - s_ba).abs() < 1e-12);
        assert!(s_ab < 0.99);
        assert!(s_ab > 0.0);
    }

    #[test]
    fn ssim_handles_images_smaller_than_the_window() {
        let a = random_image(5, 5, 1, 6);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dsm_offset_on_half_the_mask() {
        // +2 m on exactly half the cells: MAE 1.0; the sorted middle pair
        // is (0, 2), so the even-count median lands on 1.0
        let a = Image::zeros(2, 4, 1);
        let mut b = a.clone();
        for px in 0..4 {
            b.data[px] = 2.0;
        }
        assert_eq!(mae(&a, &b, None).unwrap(), 1.0);
        assert_eq!(me(&a, &b, None).unwrap(), 1.0);
    }

    #[test]
    fn dsm_offset_on_a_minority_keeps_the_median_at_zero() {
        // +5 m on 2 of 10 cells: MAE 1.0, median 0.0
        let a = Image::zeros(2, 5, 1);
        let mut b = a.clone();
        b.data[0] = 5.0;
        b.data[7] = 5.0;
        assert_eq!(mae(&a, &b, None).unwrap(), 1.0);
        assert_eq!(me(&a, &b, None).unwrap(), 0.0);
    }

    #[test]
    fn median_of_odd_count_is_middle_element() {
        let a = Image::zeros(1, 5, 1);
        let mut b = a.clone();
        b.data = vec![0.0, 1.0, 3.0, 7.0, 2.0];
        assert_eq!(me(&a, &b, None).unwrap(), 2.0);
    }

    #[test]
    fn me_ignores_perturbations_above_the_median() {
        let a = Image::zeros(1, 5, 1);
        let mut b = a.clone();
        b.data = vec![0.1, 0.2, 0.3, 4.0, 9.0];
        let before = me(&a, &b, None).unwrap();
        b.data[3] = 40.0;
        b.data[4] = 900.0;
        assert_eq!(me(&a, &b, None).unwrap(), before);
    }

    #[test]
    fn empty_mask_is_rejected() {
        let a = Image::zeros(2, 2, 1);
        let mask = vec![false; 4];
        assert!(matches!(mae(&a, &a, Some(&mask)), Err(Error::EmptyMask)));
        assert!(matches!(me(&a, &a, Some(&mask)), Err(Error::EmptyMask)));
    }

    #[test]
    fn masked_cells_are_excluded() {
        let a = Image::zeros(1, 4, 1);
        let mut b = a.clone();
        b.data = vec![2.0, 100.0, 4.0, 100.0];
        let mask = vec![true, false, true, false];
        assert_eq!(mae(&a, &b, Some(&mask)).unwrap(), 3.0);
    }
}
