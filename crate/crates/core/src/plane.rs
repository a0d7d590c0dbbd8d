//! Raster primitives: the single-channel [`Plane`], RGB triples, registered
//! visible/NIR pairs, and the windowed statistics every filter is built on.
//!
//! All windowed operations replicate edge pixels outward.

use crate::error::{FusionError, Result};
use crate::par;

/// Single-channel row-major raster of intensities, nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(FusionError::BadLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be non-zero");
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn<F>(width: usize, height: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync + Send,
    {
        let mut p = Self::zeros(width, height);
        par::for_each_chunk(&mut p.data, width, |y, row| {
            for (x, v) in row.iter_mut().enumerate() {
                *v = f(x, y);
            }
        });
        p
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    /// Always false; planes have at least one pixel.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Value at `(x, y)` with coordinates clamped into the raster.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.data[cy * self.width + cx]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn ensure_same_size(&self, other: &Plane) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(FusionError::DimensionMismatch {
                expected: self.dimensions(),
                found: other.dimensions(),
            });
        }
        Ok(())
    }

    pub fn map<F>(&self, f: F) -> Plane
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let mut out = self.clone();
        par::for_each_chunk(&mut out.data, self.width, |_, row| {
            for v in row.iter_mut() {
                *v = f(*v);
            }
        });
        out
    }

    /// Elementwise combination of two same-sized planes.
    pub fn zip_map<F>(&self, other: &Plane, f: F) -> Result<Plane>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        self.ensure_same_size(other)?;
        Ok(self.zip_map_unchecked(other, f))
    }

    pub(crate) fn zip_map_unchecked<F>(&self, other: &Plane, f: F) -> Plane
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        debug_assert_eq!(self.dimensions(), other.dimensions());
        let w = self.width;
        let mut out = Plane::zeros(w, self.height);
        par::for_each_chunk(&mut out.data, w, |y, row| {
            let a = &self.data[y * w..(y + 1) * w];
            let b = &other.data[y * w..(y + 1) * w];
            for ((o, &a), &b) in row.iter_mut().zip(a).zip(b) {
                *o = f(a, b);
            }
        });
        out
    }

    pub fn add(&self, other: &Plane) -> Result<Plane> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Plane) -> Result<Plane> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, k: f64) -> Plane {
        self.map(|v| v * k)
    }

    pub fn clamp01(&self) -> Plane {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Arithmetic mean, summed row by row in a fixed order.
    pub fn mean(&self) -> f64 {
        self.data
            .chunks(self.width)
            .map(|r| r.iter().sum::<f64>())
            .sum::<f64>()
            / self.data.len() as f64
    }

    /// Global (population) variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data
            .chunks(self.width)
            .map(|r| r.iter().map(|v| (v - m) * (v - m)).sum::<f64>())
            .sum::<f64>()
            / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Plane) -> Result<f64> {
        self.ensure_same_size(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Three co-registered color planes.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    pub r: Plane,
    pub g: Plane,
    pub b: Plane,
}

impl RgbImage {
    pub fn new(r: Plane, g: Plane, b: Plane) -> Result<Self> {
        r.ensure_same_size(&g)?;
        r.ensure_same_size(&b)?;
        Ok(RgbImage { r, g, b })
    }

    /// Gray image with the same plane in all three channels.
    pub fn from_gray(gray: &Plane) -> Self {
        RgbImage {
            r: gray.clone(),
            g: gray.clone(),
            b: gray.clone(),
        }
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.r.dimensions()
    }

    pub fn channels(&self) -> [&Plane; 3] {
        [&self.r, &self.g, &self.b]
    }

    /// Rec. 601 luma.
    pub fn luma(&self) -> Plane {
        let rg = self
            .r
            .zip_map_unchecked(&self.g, |r, g| 0.299 * r + 0.587 * g);
        rg.zip_map_unchecked(&self.b, |rg, b| rg + 0.114 * b)
    }

    pub fn clamp01(&self) -> RgbImage {
        RgbImage {
            r: self.r.clamp01(),
            g: self.g.clamp01(),
            b: self.b.clamp01(),
        }
    }

    pub fn max_abs_diff(&self, other: &RgbImage) -> Result<f64> {
        Ok(self
            .r
            .max_abs_diff(&other.r)?
            .max(self.g.max_abs_diff(&other.g)?)
            .max(self.b.max_abs_diff(&other.b)?))
    }
}

/// A registered visible RGB capture and its NIR companion.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePair {
    visible: RgbImage,
    nir: Plane,
}

impl ImagePair {
    pub fn new(visible: RgbImage, nir: Plane) -> Result<Self> {
        visible.r.ensure_same_size(&nir)?;
        Ok(ImagePair { visible, nir })
    }

    pub fn visible(&self) -> &RgbImage {
        &self.visible
    }

    pub fn nir(&self) -> &Plane {
        &self.nir
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.nir.dimensions()
    }
}

/// Sums of each `(2r+1)`-wide window of `row`, edge-replicated, by a running
/// sum.
fn row_window_sums(row: &[f64], radius: usize, out: &mut [f64]) {
    let n = row.len();
    let last = n - 1;
    let at = |i: isize| row[i.clamp(0, last as isize) as usize];
    let r = radius as isize;
    let mut acc: f64 = (-r..=r).map(at).sum();
    // Indices whose add/sub taps both fall inside the row skip the clamp.
    let lo = radius.min(n);
    let hi = n.saturating_sub(radius + 1).max(lo);
    for (i, o) in out[..lo].iter_mut().enumerate() {
        *o = acc;
        let i = i as isize;
        acc += at(i + r + 1) - at(i - r);
    }
    for i in lo..hi {
        out[i] = acc;
        acc += row[i + radius + 1] - row[i - radius];
    }
    for (i, o) in out.iter_mut().enumerate().skip(hi) {
        *o = acc;
        let i = i as isize;
        acc += at(i + r + 1) - at(i - r);
    }
}

/// Output rows per independently seeded strip of the vertical pass. Fixed so
/// results do not depend on the number of worker threads.
pub(crate) const STRIP_ROWS: usize = 128;

/// Box means of several derived quantities in one sweep.
///
/// For every row `y`, `produce(y, rows)` fills `channels` rows of `width`
/// values (laid out back to back in `rows`). Each is box-averaged over the
/// `(2r+1)²` edge-replicated window, and `consume(y, means, out)` turns the
/// `channels` mean rows for `y` into `out_rows` output rows. Returns the output
/// rows interleaved per image row: `[y][out_row][x]`.
///
/// Separable running sums make the cost per pixel independent of `radius`.
/// Horizontal sums live in a ring of `2r + 2` rows per strip, so no
/// full-size intermediate is allocated.
pub(crate) fn windowed_means<P, C>(
    width: usize,
    height: usize,
    radius: usize,
    channels: usize,
    out_rows: usize,
    produce: P,
    consume: C,
) -> Vec<f64>
where
    P: Fn(usize, &mut [f64]) + Sync + Send,
    C: Fn(usize, &[f64], &mut [f64]) + Sync + Send,
{
    let (w, h, k) = (width, height, channels);
    let stride = k * w;
    let norm = 1.0 / ((2 * radius + 1) * (2 * radius + 1)) as f64;
    let r = radius as isize;
    let slots = 2 * radius + 2;
    let out_stride = out_rows * w;

    let mut out = vec![0.0; out_stride * h];
    par::for_each_chunk(&mut out, out_stride * STRIP_ROWS, |strip, block| {
        let y0 = (strip * STRIP_ROWS) as isize;
        let mut src = vec![0.0; stride];
        let mut ring = vec![0.0; slots * stride];
        // Horizontal sums of virtual row `yv` (clamped into the image) go to
        // ring slot `(yv + r) mod slots`; `yv + r` is never negative.
        let mut fill = |yv: isize, ring: &mut [f64]| {
            produce(yv.clamp(0, h as isize - 1) as usize, &mut src);
            let slot = (yv + r) as usize % slots;
            let dst = &mut ring[slot * stride..(slot + 1) * stride];
            for (s, o) in src.chunks(w).zip(dst.chunks_mut(w)) {
                row_window_sums(s, radius, o);
            }
        };
        let slot_of = |yv: isize| (yv + r) as usize % slots;

        let mut acc = vec![0.0; stride];
        for yv in y0 - r..=y0 + r {
            fill(yv, &mut ring);
            let row = &ring[slot_of(yv) * stride..(slot_of(yv) + 1) * stride];
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let mut means = vec![0.0; stride];
        let n_rows = block.len() / out_stride;
        for (i, rows) in block.chunks_mut(out_stride).enumerate() {
            let y = y0 + i as isize;
            for (m, a) in means.iter_mut().zip(&acc) {
                *m = a * norm;
            }
            consume(y as usize, &means, rows);
            if i + 1 == n_rows {
                break;
            }
            fill(y + r + 1, &mut ring);
            let (add, sub) = (slot_of(y + r + 1), slot_of(y - r));
            let add = &ring[add * stride..(add + 1) * stride];
            let sub = &ring[sub * stride..(sub + 1) * stride];
            for j in 0..stride {
                acc[j] += add[j] - sub[j];
            }
        }
    });
    out
}

/// Mean over the `(2r+1)²` window around every pixel, with edge replication.
///
/// Cost per pixel does not depend on `radius`. Radius 0 returns the input
/// unchanged.
pub fn box_mean(input: &Plane, radius: usize) -> Plane {
    if radius == 0 {
        return input.clone();
    }
    let (w, h) = input.dimensions();
    let data = windowed_means(
        w,
        h,
        radius,
        1,
        1,
        |y, row| row.copy_from_slice(input.row(y)),
        |_, means, out| out.copy_from_slice(means),
    );
    Plane {
        width: w,
        height: h,
        data,
    }
}

/// Local mean and variance rows of `input`, interleaved `[y][mean, var][x]`.
///
/// Moments are taken about the first pixel's value, which limits cancellation
/// and makes constant planes come out with exactly zero variance.
pub(crate) fn local_moments(input: &Plane, radius: usize) -> Vec<f64> {
    let (w, h) = input.dimensions();
    let shift = input.as_slice()[0];
    windowed_means(
        w,
        h,
        radius,
        2,
        2,
        |y, rows| {
            let (c, c2) = rows.split_at_mut(w);
            for ((c, c2), &v) in c.iter_mut().zip(c2).zip(input.row(y)) {
                *c = v - shift;
                *c2 = *c * *c;
            }
        },
        |_, means, out| {
            let (m, m2) = means.split_at(w);
            let (mean, var) = out.split_at_mut(w);
            for x in 0..w {
                mean[x] = m[x] + shift;
                var[x] = (m2[x] - m[x] * m[x]).max(0.0);
            }
        },
    )
}

/// Splits `[y][k][x]` interleaved rows into `k` planes.
pub(crate) fn deinterleave(width: usize, height: usize, k: usize, data: &[f64]) -> Vec<Plane> {
    (0..k)
        .map(|i| {
            let mut p = Plane::zeros(width, height);
            par::for_each_chunk(&mut p.data, width, |y, row| {
                let start = (y * k + i) * width;
                row.copy_from_slice(&data[start..start + width]);
            });
            p
        })
        .collect()
}

/// Min-max rescale to `[0, 1]`. A constant plane maps to all zeros.
pub fn normalize01(input: &Plane) -> Plane {
    normalize01_owned(input.clone())
}

/// In-place variant of [`normalize01`].
pub(crate) fn normalize01_owned(mut p: Plane) -> Plane {
    let (lo, hi) = p.min_max();
    let range = hi - lo;
    if !range.is_finite() || range <= 0.0 {
        p.data.fill(0.0);
        return p;
    }
    let inv = 1.0 / range;
    let w = p.width;
    par::for_each_chunk(&mut p.data, w, |_, row| {
        for v in row.iter_mut() {
            *v = ((*v - lo) * inv).clamp(0.0, 1.0);
        }
    });
    p
}

/// Local mean and variance over `(2r+1)²` windows. Variance is clamped at 0.
pub fn plane_stats(input: &Plane, radius: usize) -> (Plane, Plane) {
    let (w, h) = input.dimensions();
    let mut planes = deinterleave(w, h, 2, &local_moments(input, radius)).into_iter();
    let mean = planes.next().expect("mean plane");
    let var = planes.next().expect("variance plane");
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{brute_box_mean, brute_window, random_plane};
    use proptest::prelude::*;

    #[test]
    fn box_mean_matches_oracle_across_strips() {
        let p = random_plane(7, 2 * STRIP_ROWS + 37, 9);
        for r in [1, 6, 40, 200] {
            let err = box_mean(&p, r)
                .max_abs_diff(&brute_box_mean(&p, r))
                .unwrap();
            assert!(err < 1e-9, "radius {r}: {err}");
        }
    }

    #[test]
    fn from_vec_rejects_bad_lengths() {
        assert!(Plane::from_vec(0, 3, vec![]).is_err());
        assert!(Plane::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(Plane::from_vec(2, 2, vec![0.0; 4]).is_ok());
    }

    #[test]
    fn box_mean_of_constant_is_constant() {
        let p = Plane::filled(17, 9, 0.37);
        for r in [1, 2, 5, 20] {
            let m = box_mean(&p, r);
            assert!(m.as_slice().iter().all(|v| (v - 0.37).abs() < 1e-12));
        }
    }

    #[test]
    fn box_mean_radius_zero_is_identity() {
        let p = random_plane(13, 7, 1);
        assert_eq!(box_mean(&p, 0), p);
    }

    #[test]
    fn box_mean_matches_sliding_window() {
        let p = random_plane(32, 32, 7);
        let fast = box_mean(&p, 3);
        let slow = brute_box_mean(&p, 3);
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-9);
    }

    #[test]
    fn box_mean_radius_larger_than_image() {
        let p = random_plane(5, 3, 2);
        let fast = box_mean(&p, 9);
        let slow = brute_box_mean(&p, 9);
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-12);
    }

    #[test]
    fn single_pixel_plane() {
        let p = Plane::filled(1, 1, 0.25);
        assert_eq!(box_mean(&p, 4).get(0, 0), 0.25);
        let (_, var) = plane_stats(&p, 2);
        assert_eq!(var.get(0, 0), 0.0);
    }

    #[test]
    fn normalize01_examples() {
        let p = Plane::from_vec(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(normalize01(&p).as_slice(), &[0.0, 0.5, 1.0]);

        let c = Plane::filled(4, 4, 0.8);
        assert!(normalize01(&c).as_slice().iter().all(|&v| v == 0.0));

        let r = random_plane(20, 11, 3).map(|v| 5.0 * v - 2.0);
        let n = normalize01(&r);
        assert_eq!(n.min_max(), (0.0, 1.0));
    }

    #[test]
    fn plane_stats_checkerboard_interior() {
        let p = Plane::from_fn(8, 8, |x, y| ((x + y) % 2) as f64);
        let (mean, var) = plane_stats(&p, 1);
        for (x, y) in [(3, 3), (4, 3), (2, 5)] {
            let w = brute_window(&p, x, y, 1);
            let m = w.iter().sum::<f64>() / w.len() as f64;
            let v = w.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / w.len() as f64;
            assert!((mean.get(x, y) - m).abs() < 1e-12);
            assert!((var.get(x, y) - v).abs() < 1e-12);
        }
        // 5 of one value and 4 of the other: 20/81.
        assert!((var.get(3, 3) - 20.0 / 81.0).abs() < 1e-12);
    }

    #[test]
    fn plane_stats_constant_has_zero_variance() {
        let (_, var) = plane_stats(&Plane::filled(9, 9, 0.6), 2);
        assert!(var.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plane_stats_matches_brute_force() {
        for seed in 0..4 {
            let p = random_plane(32, 32, 100 + seed);
            let (_, var) = plane_stats(&p, 2);
            for y in 0..32 {
                for x in 0..32 {
                    let w = brute_window(&p, x, y, 2);
                    let m = w.iter().sum::<f64>() / w.len() as f64;
                    let v = w.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / w.len() as f64;
                    assert!((var.get(x, y) - v).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn zip_map_rejects_mismatch() {
        let a = Plane::zeros(3, 3);
        let b = Plane::zeros(3, 4);
        assert!(matches!(
            a.add(&b),
            Err(FusionError::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn box_mean_is_linear(seed in 0u64..10_000, a in -3.0f64..3.0, b in -3.0f64..3.0, r in 0usize..6) {
            let x = random_plane(19, 13, seed);
            let y = random_plane(19, 13, seed + 1);
            let combo = x.zip_map(&y, |u, v| a * u + b * v).unwrap();
            let lhs = box_mean(&combo, r);
            let rhs = box_mean(&x, r).zip_map(&box_mean(&y, r), |u, v| a * u + b * v).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9);
        }

        #[test]
        fn box_mean_stays_within_input_range(seed in 0u64..10_000, r in 0usize..8) {
            let x = random_plane(23, 17, seed);
            let (lo, hi) = x.min_max();
            let m = box_mean(&x, r);
            prop_assert!(m.as_slice().iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        }

        #[test]
        fn normalize01_is_idempotent(seed in 0u64..10_000, k in 0.1f64..10.0) {
            let x = random_plane(15, 15, seed).scale(k);
            let once = normalize01(&x);
            let twice = normalize01(&once);
            prop_assert!(once.max_abs_diff(&twice).unwrap() < 1e-9);
        }

        #[test]
        fn variance_is_never_negative(seed in 0u64..10_000, r in 1usize..6) {
            let x = random_plane(21, 14, seed).map(|v| 1e3 + v * 1e-4);
            let (_, var) = plane_stats(&x, r);
            prop_assert!(var.as_slice().iter().all(|&v| v >= 0.0));
        }
    }
}
