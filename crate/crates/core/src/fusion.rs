//! Complementarity weighting and reconstruction.
//!
//! Visible structure strength `x` and NIR structure strength `y` map to a
//! visible weight through
//!
//! ```text
//! w(x, y) = atan(x) / (atan(x / (1 - y)) + alpha)
//! ```
//!
//! Strong NIR structure pushes the visible weight down, so detail is taken
//! from NIR where NIR is informative and from the visible channel elsewhere.
//! Fused detail layers replace the visible ones on top of the visible base
//! layer; NIR base layers never reach the output.

use std::time::{Duration, Instant};

use crate::decompose::{decompose, FilterParams, LayerStack};
use crate::error::{FusionError, Result};
use crate::par;
use crate::plane::{ImagePair, Plane, RgbImage};
use crate::structure::{structure_maps, ChannelStacks, StructureMaps, XDogParams};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArctanIParams {
    /// Denominator offset; bounds the weight ceiling below 1.
    pub alpha: f64,
    /// `y` is clamped to `[0, 1 - y_clamp]`.
    pub y_clamp: f64,
}

impl Default for ArctanIParams {
    fn default() -> Self {
        ArctanIParams {
            alpha: 0.5,
            y_clamp: 1e-3,
        }
    }
}

impl ArctanIParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha > 0.0 && self.alpha.is_finite() && self.y_clamp > 0.0 && self.y_clamp < 1.0 {
            Ok(())
        } else {
            Err(FusionError::InvalidParameter(format!(
                "arctanI requires alpha > 0 and 0 < y_clamp < 1, got {self:?}"
            )))
        }
    }
}

/// Visible-channel weight for structure strengths `x` (visible) and `y` (NIR).
#[inline]
pub fn arctan_i(x: f64, y: f64, params: &ArctanIParams) -> f64 {
    let y = y.clamp(0.0, 1.0 - params.y_clamp);
    x.atan() / ((x / (1.0 - y)).atan() + params.alpha)
}

/// Per-channel, per-level visible weights. `fuwt[c][i]` weights detail layer
/// `D(i+1)` of channel `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    pub fuwt: [[Plane; 2]; 3],
}

pub fn fusion_weights(maps: &StructureMaps, params: &ArctanIParams) -> Result<WeightMap> {
    params.validate()?;
    let jobs: Vec<(usize, usize)> = (0..3).flat_map(|c| (0..2).map(move |i| (c, i))).collect();
    let planes = par::map(&jobs, |&(c, i)| {
        maps.dog_c[c][i].zip_map(&maps.dog_n[i], |x, y| arctan_i(x, y, params))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut it = planes.into_iter();
    let mut next = || it.next().expect("six weight planes");
    Ok(WeightMap {
        fuwt: [[next(), next()], [next(), next()], [next(), next()]],
    })
}

/// `visible * w + nir * (1 - w)`, elementwise.
pub fn fuse_layers(visible: &Plane, nir: &Plane, weight: &Plane) -> Result<Plane> {
    visible.ensure_same_size(nir)?;
    visible.ensure_same_size(weight)?;
    let vw = visible.zip_map_unchecked(weight, |d, w| d * w);
    let nw = nir.zip_map_unchecked(weight, |d, w| d * (1.0 - w));
    Ok(vw.zip_map_unchecked(&nw, |a, b| a + b))
}

/// `base + edge + detail` without clamping.
pub fn reconstruct_unclamped(base: &Plane, edge: &Plane, detail: &Plane) -> Result<Plane> {
    base.add(edge)?.add(detail)
}

/// `base + edge + detail`, clamped to `[0, 1]` for encoding.
pub fn reconstruct(base: &Plane, edge: &Plane, detail: &Plane) -> Result<Plane> {
    Ok(reconstruct_unclamped(base, edge, detail)?.clamp01())
}

/// `R2 + fuse(D2) + fuse(D1)` for one visible channel in a single pass.
fn fuse_channel(vis: &LayerStack, nir: &LayerStack, w_detail: &Plane, w_edge: &Plane) -> Plane {
    let w = vis.base2.width();
    let mut out = Plane::zeros(w, vis.base2.height());
    par::for_each_chunk(out.as_mut_slice(), w, |y, row| {
        let (base, dc, ec) = (vis.base2.row(y), vis.detail.row(y), vis.edge.row(y));
        let (dn, en) = (nir.detail.row(y), nir.edge.row(y));
        let (w1, w2) = (w_detail.row(y), w_edge.row(y));
        for x in 0..w {
            let detail = dc[x] * w1[x] + dn[x] * (1.0 - w1[x]);
            let edge = ec[x] * w2[x] + en[x] * (1.0 - w2[x]);
            row[x] = base[x] + edge + detail;
        }
    });
    out
}

/// Every tunable of the fusion pipeline.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FusionParams {
    pub filter: FilterParams,
    pub xdog: XDogParams,
    pub arctan: ArctanIParams,
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        self.filter.validate()?;
        self.xdog.validate()?;
        self.arctan.validate()
    }
}

/// Wall-clock time spent in each pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub decompose: Duration,
    pub xdog: Duration,
    pub weights: Duration,
    pub fuse: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.decompose + self.xdog + self.weights + self.fuse
    }
}

#[derive(Clone, Debug)]
pub struct FusionOutput {
    /// Fused channels before the final clamp.
    pub raw: RgbImage,
    pub timings: StageTimings,
}

impl FusionOutput {
    /// Fused image clamped to `[0, 1]`.
    pub fn image(&self) -> RgbImage {
        self.raw.clamp01()
    }
}

/// Runs the full pipeline on a registered pair.
pub fn fuse_pair(pair: &ImagePair, params: &FusionParams) -> Result<FusionOutput> {
    params.validate()?;
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let v = pair.visible();
    let sources = [&v.r, &v.g, &v.b, pair.nir()];
    let mut stacks = par::map(&sources, |p| decompose(p, &params.filter))
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    let mut next = || stacks.next().expect("four layer stacks");
    let stacks = ChannelStacks {
        r: next(),
        g: next(),
        b: next(),
        n: next(),
    };
    timings.decompose = t.elapsed();

    let t = Instant::now();
    let maps = structure_maps(pair, &stacks, &params.xdog)?;
    timings.xdog = t.elapsed();

    let t = Instant::now();
    let weights = fusion_weights(&maps, &params.arctan)?;
    timings.weights = t.elapsed();

    let t = Instant::now();
    let vis = stacks.visible();
    let channels = par::map(&[0usize, 1, 2], |&c| {
        fuse_channel(vis[c], &stacks.n, &weights.fuwt[c][0], &weights.fuwt[c][1])
    });
    let [r, g, b]: [Plane; 3] = channels.try_into().expect("three channels");
    timings.fuse = t.elapsed();

    Ok(FusionOutput {
        raw: RgbImage { r, g, b },
        timings,
    })
}
