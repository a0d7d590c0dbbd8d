//! Fusion quality metrics: redmean color distance, PSNR and SSIM.

use crate::error::Result;
use crate::plane::{ImagePair, Plane, RgbImage};
use crate::structure::{convolve_separable, gaussian_kernel};

/// Redmean-weighted RGB distance of one color pair, channels in `0..=255`.
#[inline]
pub fn color_distance_pixel(a: [f64; 3], b: [f64; 3]) -> f64 {
    let r_mean = (a[0] + b[0]) / 2.0;
    let dr = a[0] - b[0];
    let dg = a[1] - b[1];
    let db = a[2] - b[2];
    ((2.0 + r_mean / 256.0) * dr * dr + 4.0 * dg * dg + (2.0 + (255.0 - r_mean) / 256.0) * db * db)
        .sqrt()
}

/// Mean per-pixel color distance between two `[0, 1]` images, evaluated on
/// the 0..255 scale without rounding.
pub fn color_distance(visible: &RgbImage, fused: &RgbImage) -> Result<f64> {
    visible.r.ensure_same_size(&fused.r)?;
    let [ar, ag, ab] = visible.channels().map(Plane::as_slice);
    let [br, bg, bb] = fused.channels().map(Plane::as_slice);
    let w = visible.r.width();
    let total: f64 = (0..visible.r.height())
        .map(|y| {
            (y * w..(y + 1) * w)
                .map(|i| {
                    color_distance_pixel(
                        [ar[i] * 255.0, ag[i] * 255.0, ab[i] * 255.0],
                        [br[i] * 255.0, bg[i] * 255.0, bb[i] * 255.0],
                    )
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / ar.len() as f64)
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

fn sum_sq_diff(a: &Plane, b: &Plane) -> Result<f64> {
    a.ensure_same_size(b)?;
    Ok(a.as_slice()
        .chunks(a.width())
        .zip(b.as_slice().chunks(b.width()))
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
        })
        .sum())
}

/// PSNR in dB over a single plane. Identical inputs give `f64::INFINITY`.
pub fn psnr_plane(a: &Plane, b: &Plane, peak: f64) -> Result<f64> {
    Ok(psnr_from_mse(sum_sq_diff(a, b)? / a.len() as f64, peak))
}

/// PSNR in dB with the MSE pooled over all three channels.
pub fn psnr(a: &RgbImage, b: &RgbImage, peak: f64) -> Result<f64> {
    let mut sse = 0.0;
    for (pa, pb) in a.channels().into_iter().zip(b.channels()) {
        sse += sum_sq_diff(pa, pb)?;
    }
    Ok(psnr_from_mse(sse / (3 * a.r.len()) as f64, peak))
}

const SSIM_SIGMA: f64 = 1.5;
const SSIM_RADIUS: usize = 5;

/// Mean SSIM over an 11x11 Gaussian window (sigma 1.5) for `[0, 1]` planes.
pub fn ssim(a: &Plane, b: &Plane) -> Result<f64> {
    a.ensure_same_size(b)?;
    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let kernel = gaussian_kernel(SSIM_SIGMA, SSIM_RADIUS);
    let blur = |p: &Plane| convolve_separable(p, &kernel);

    let mu_a = blur(a);
    let mu_b = blur(b);
    let aa = blur(&a.zip_map_unchecked(a, |x, y| x * y));
    let bb = blur(&b.zip_map_unchecked(b, |x, y| x * y));
    let ab = blur(&a.zip_map_unchecked(b, |x, y| x * y));

    let n = a.len();
    let (ma, mb, saa, sbb, sab) = (
        mu_a.as_slice(),
        mu_b.as_slice(),
        aa.as_slice(),
        bb.as_slice(),
        ab.as_slice(),
    );
    let mut total = 0.0;
    for i in 0..n {
        let va = saa[i] - ma[i] * ma[i];
        let vb = sbb[i] - mb[i] * mb[i];
        let cov = sab[i] - ma[i] * mb[i];
        let num = (2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2);
        let den = (ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2);
        total += num / den;
    }
    Ok(total / n as f64)
}

/// Metric bundle for one fused result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsReport {
    pub cd: f64,
    /// `f64::INFINITY` when the fused image equals the visible input.
    pub psnr_vs_visible: f64,
    pub ssim_vs_visible: f64,
    pub ssim_vs_nir: f64,
}

pub fn metrics_report(pair: &ImagePair, fused: &RgbImage) -> Result<MetricsReport> {
    let vis = pair.visible();
    let fused_luma = fused.luma();
    Ok(MetricsReport {
        cd: color_distance(vis, fused)?,
        psnr_vs_visible: psnr(fused, vis, 1.0)?,
        ssim_vs_visible: ssim(&fused_luma, &vis.luma())?,
        ssim_vs_nir: ssim(&fused_luma, pair.nir())?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_plane;
    use proptest::prelude::*;

    fn rgb(seed: u64, w: usize, h: usize) -> RgbImage {
        RgbImage::new(
            random_plane(w, h, seed),
            random_plane(w, h, seed + 1),
            random_plane(w, h, seed + 2),
        )
        .unwrap()
    }

    fn single(r: f64, g: f64, b: f64) -> RgbImage {
        let p = |v| Plane::filled(1, 1, v / 255.0);
        RgbImage::new(p(r), p(g), p(b)).unwrap()
    }

    #[test]
    fn cd_identical_is_zero() {
        let a = rgb(1, 9, 7);
        assert_eq!(color_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn cd_red_vs_black() {
        // r = 127.5, R' = 255, G' = B' = 0: 255 * sqrt(2 + 127.5/256) = 403.0329.
        let expect = 255.0 * (2.0f64 + 127.5 / 256.0).sqrt();
        let cd = color_distance(&single(255.0, 0.0, 0.0), &single(0.0, 0.0, 0.0)).unwrap();
        assert!((cd - expect).abs() < 1e-9);
        assert!((cd - 403.0329).abs() < 0.01);
    }

    #[test]
    fn cd_single_channel_bounds() {
        for &(base, d) in &[(0.0, 10.0), (100.0, 50.0), (200.0, 55.0)] {
            let a = single(base, base, base);
            for ch in 0..3 {
                let mut v = [base; 3];
                v[ch] += d;
                let b = single(v[0], v[1], v[2]);
                let cd = color_distance(&a, &b).unwrap();
                if ch == 1 {
                    assert!((cd - 2.0 * d).abs() < 1e-9);
                } else {
                    assert!(cd >= 2f64.sqrt() * d - 1e-9);
                    assert!(cd <= (2.0 + 255.0 / 256.0f64).sqrt() * d + 1e-9);
                }
            }
        }
    }

    #[test]
    fn cd_rejects_mismatch() {
        assert!(color_distance(&rgb(0, 4, 4), &rgb(0, 4, 5)).is_err());
    }

    #[test]
    fn psnr_examples() {
        let a = rgb(3, 8, 8);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
        let zeros = RgbImage::from_gray(&Plane::zeros(5, 5));
        let ones = RgbImage::from_gray(&Plane::filled(5, 5, 1.0));
        assert!(psnr(&zeros, &ones, 1.0).unwrap().abs() < 1e-12);
        assert!(psnr_plane(&zeros.r, &ones.r, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn psnr_falls_as_noise_grows() {
        let clean = random_plane(32, 32, 4);
        let noise = random_plane(32, 32, 5).map(|v| v - 0.5);
        let at = |amp: f64| {
            let noisy = clean.zip_map(&noise, |c, n| c + amp * n).unwrap();
            psnr_plane(&clean, &noisy, 1.0).unwrap()
        };
        let (p1, p2, p3) = (at(0.01), at(0.05), at(0.2));
        assert!(p1 > p2 && p2 > p3);
    }

    #[test]
    fn ssim_examples() {
        let a = random_plane(24, 24, 6);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);

        let binary = a.map(|v| if v > 0.5 { 0.95 } else { 0.05 });
        let inverted = binary.map(|v| 1.0 - v);
        assert!(ssim(&binary, &inverted).unwrap() < 0.1);
        assert!(ssim(&a, &Plane::zeros(24, 23)).is_err());
    }

    #[test]
    fn ssim_near_one_for_close_images() {
        let a = random_plane(24, 24, 8);
        let b = a.map(|v| v * 0.99 + 0.005);
        let s = ssim(&a, &b).unwrap();
        assert!(s > 0.95 && s < 1.0);
    }

    #[test]
    fn report_identity_cases() {
        let vis = rgb(10, 16, 16);
        let nir = random_plane(16, 16, 20);
        let pair = ImagePair::new(vis.clone(), nir.clone()).unwrap();
        let r = metrics_report(&pair, &vis).unwrap();
        assert_eq!(r.cd, 0.0);
        assert_eq!(r.psnr_vs_visible, f64::INFINITY);
        assert_eq!(r.ssim_vs_visible, 1.0);

        let r = metrics_report(&pair, &RgbImage::from_gray(&nir)).unwrap();
        assert!((r.ssim_vs_nir - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cd_is_symmetric(seed in 0u64..100_000) {
            let a = rgb(seed, 6, 5);
            let b = rgb(seed + 100, 6, 5);
            let ab = color_distance(&a, &b).unwrap();
            let ba = color_distance(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn ssim_in_range(seed in 0u64..100_000) {
            let s = ssim(&random_plane(13, 12, seed), &random_plane(13, 12, seed + 9)).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
