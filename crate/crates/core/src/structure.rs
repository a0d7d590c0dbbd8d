//! Complementarity structure maps: normalized visible-minus-NIR difference
//! maps passed through an extended difference-of-Gaussians (XDoG).
//!
//! Level 0 works on the original channels, level 1 on the first base layers.
//! The map built at level `i` later weights detail layer `D(i+1)`.

use crate::decompose::LayerStack;
use crate::error::{FusionError, Result};
use crate::par;
use crate::plane::{normalize01_owned, ImagePair, Plane, STRIP_ROWS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XDogParams {
    /// Standard deviation of the narrower Gaussian, in pixels.
    pub sigma: f64,
    /// Ratio between the wide and narrow Gaussian.
    pub k: f64,
    /// Sharpening strength.
    pub p: f64,
    /// Soft-threshold level.
    pub eps_t: f64,
    /// Soft-threshold steepness.
    pub phi: f64,
}

impl Default for XDogParams {
    fn default() -> Self {
        XDogParams {
            sigma: 0.8,
            k: 1.6,
            p: 20.0,
            eps_t: 0.01,
            phi: 10.0,
        }
    }
}

impl XDogParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma > 0.0
            && self.k > 1.0
            && self.phi > 0.0
            && [self.sigma, self.k, self.p, self.eps_t, self.phi]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(FusionError::InvalidParameter(format!(
                "xdog requires sigma > 0, k > 1, phi > 0 and finite values, got {self:?}"
            )))
        }
    }
}

/// `normalize01(visible - nir)`.
pub fn difference_map(visible: &Plane, nir: &Plane) -> Result<Plane> {
    Ok(normalize01_owned(visible.sub(nir)?))
}

/// Normalized Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur truncated at `ceil(3 sigma)`.
pub fn gaussian_blur(input: &Plane, sigma: f64) -> Result<Plane> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(FusionError::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    Ok(convolve_separable(input, &gaussian_kernel(sigma, radius)))
}

/// Convolves rows then columns with a symmetric odd-length kernel, replicating
/// edges.
pub(crate) fn convolve_separable(input: &Plane, kernel: &[f64]) -> Plane {
    convolve_multi(input, &[kernel], |_, blurred, out| {
        out.copy_from_slice(blurred)
    })
}

fn convolve_row(src: &[f64], kernel: &[f64], padded: &mut Vec<f64>, out: &mut [f64]) {
    let r = kernel.len() / 2;
    let n = src.len();
    padded.clear();
    padded.extend(std::iter::repeat_n(src[0], r));
    padded.extend_from_slice(src);
    padded.extend(std::iter::repeat_n(src[n - 1], r));
    out.fill(0.0);
    // Tap-major order keeps the inner loop a straight vector multiply-add.
    for (i, &k) in kernel.iter().enumerate() {
        for (o, s) in out.iter_mut().zip(&padded[i..i + n]) {
            *o += k * s;
        }
    }
}

/// Blurs `input` with several separable kernels in one sweep. For each row
/// `y`, `consume(y, blurred, out)` receives the blurred rows back to back
/// (one per kernel) and writes the output row. Horizontally blurred rows are
/// kept in a per-strip ring, so only the output is full size.
fn convolve_multi<C>(input: &Plane, kernels: &[&[f64]], consume: C) -> Plane
where
    C: Fn(usize, &[f64], &mut [f64]) + Sync + Send,
{
    let (w, h) = input.dimensions();
    let k = kernels.len();
    let stride = k * w;
    let rmax = kernels.iter().map(|k| k.len() / 2).max().unwrap_or(0) as isize;
    let slots = 2 * rmax as usize + 1;

    let mut out = Plane::zeros(w, h);
    par::for_each_chunk(out.as_mut_slice(), w * STRIP_ROWS, |strip, block| {
        let y0 = (strip * STRIP_ROWS) as isize;
        let mut padded = Vec::with_capacity(w + 2 * rmax as usize);
        let mut ring = vec![0.0; slots * stride];
        let slot_of = |yv: isize| (yv + rmax) as usize % slots;
        let mut fill = |yv: isize, ring: &mut [f64]| {
            let src = input.row(yv.clamp(0, h as isize - 1) as usize);
            let slot = slot_of(yv);
            let dst = &mut ring[slot * stride..(slot + 1) * stride];
            for (kernel, o) in kernels.iter().zip(dst.chunks_mut(w)) {
                convolve_row(src, kernel, &mut padded, o);
            }
        };
        for yv in y0 - rmax..y0 + rmax {
            fill(yv, &mut ring);
        }
        let mut blurred = vec![0.0; stride];
        for (i, row) in block.chunks_mut(w).enumerate() {
            let y = y0 + i as isize;
            fill(y + rmax, &mut ring);
            blurred.fill(0.0);
            for (j, kernel) in kernels.iter().enumerate() {
                let r = (kernel.len() / 2) as isize;
                let acc = &mut blurred[j * w..(j + 1) * w];
                for (t, &c) in kernel.iter().enumerate() {
                    let slot = slot_of(y + t as isize - r);
                    let src = &ring[slot * stride + j * w..slot * stride + (j + 1) * w];
                    for (a, s) in acc.iter_mut().zip(src) {
                        *a += c * s;
                    }
                }
            }
            consume(y as usize, &blurred, row);
        }
    });
    out
}

/// Narrow and wide Gaussian kernels of the sharpened DoG.
fn dog_kernels(params: &XDogParams) -> (Vec<f64>, Vec<f64>) {
    let kernel = |sigma: f64| gaussian_kernel(sigma, (3.0 * sigma).ceil() as usize);
    (kernel(params.sigma), kernel(params.k * params.sigma))
}

/// Sharpened difference of Gaussians `(1 + p) G_sigma - p G_{k sigma}`, before
/// thresholding.
pub fn sharpened_dog(input: &Plane, params: &XDogParams) -> Result<Plane> {
    params.validate()?;
    let (narrow, wide) = dog_kernels(params);
    let p = params.p;
    let w = input.width();
    Ok(convolve_multi(
        input,
        &[&narrow, &wide],
        |_, blurred, out| {
            let (n, g) = blurred.split_at(w);
            for x in 0..w {
                out[x] = (1.0 + p) * n[x] - p * g[x];
            }
        },
    ))
}

/// XDoG structure response in `[0, 1]`, larger where local structure is
/// stronger.
///
/// The usual stylization output `T` is 1 where the sharpened DoG is at or
/// above `eps_t` and `1 + tanh(phi (S - eps_t))` below it; this returns
/// `normalize01(1 - T)`.
pub fn xdog(input: &Plane, params: &XDogParams) -> Result<Plane> {
    params.validate()?;
    let (narrow, wide) = dog_kernels(params);
    let (p, eps_t, phi) = (params.p, params.eps_t, params.phi);
    let w = input.width();
    let inverted = convolve_multi(input, &[&narrow, &wide], |_, blurred, out| {
        let (n, g) = blurred.split_at(w);
        for x in 0..w {
            let s = (1.0 + p) * n[x] - p * g[x];
            // -tanh(z) for z <= 0 via exp_m1, cheaper than tanh. Clamping z
            // at 0 yields exactly 0 above the threshold with no branch, so
            // cost does not depend on the image content.
            let e = (2.0 * phi * (s - eps_t).min(0.0)).exp_m1();
            out[x] = -e / (e + 2.0);
        }
    });
    Ok(normalize01_owned(inverted))
}

/// XDoG responses for every visible channel and NIR at both levels.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureMaps {
    /// `dog_c[c][i]` for `c` in r, g, b and level `i` in 0, 1.
    pub dog_c: [[Plane; 2]; 3],
    /// NIR responses per level.
    pub dog_n: [Plane; 2],
}

/// Decomposition of all four channels of a pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStacks {
    pub r: LayerStack,
    pub g: LayerStack,
    pub b: LayerStack,
    pub n: LayerStack,
}

impl ChannelStacks {
    pub fn visible(&self) -> [&LayerStack; 3] {
        [&self.r, &self.g, &self.b]
    }
}

pub fn structure_maps(
    pair: &ImagePair,
    stacks: &ChannelStacks,
    params: &XDogParams,
) -> Result<StructureMaps> {
    params.validate()?;
    let vis = pair.visible().channels();
    let nir = pair.nir();
    for s in stacks.visible().into_iter().chain([&stacks.n]) {
        nir.ensure_same_size(&s.base1)?;
    }

    // Jobs 0..6: visible channel c at level i; 6..8: NIR at level i.
    fn level<'a>(stack: &'a LayerStack, original: &'a Plane, i: usize) -> &'a Plane {
        if i == 0 {
            original
        } else {
            &stack.base1
        }
    }
    let jobs: Vec<(&Plane, Option<&Plane>)> = (0..8)
        .map(|j| {
            if j < 6 {
                let (c, i) = (j / 2, j % 2);
                (
                    level(stacks.visible()[c], vis[c], i),
                    Some(level(&stacks.n, nir, i)),
                )
            } else {
                (level(&stacks.n, nir, j - 6), None)
            }
        })
        .collect();

    let mut maps = par::map(&jobs, |(a, b)| match b {
        Some(b) => difference_map(a, b).and_then(|d| xdog(&d, params)),
        None => xdog(a, params),
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .into_iter();

    let mut next = || maps.next().expect("eight structure maps");
    let dog_c = [[next(), next()], [next(), next()], [next(), next()]];
    let dog_n = [next(), next()];
    Ok(StructureMaps { dog_c, dog_n })
}
