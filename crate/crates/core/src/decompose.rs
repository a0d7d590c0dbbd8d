//! Edge-preserving smoothing and the two-scale base/detail decomposition.
//!
//! The first scale uses a weighted guided filter, whose regularizer shrinks on
//! edges so sharp transitions survive while flat noisy areas are smoothed. The
//! second scale runs a plain guided filter on that result. Each channel `R0`
//! splits as
//!
//! ```text
//! R1 = WGIF(R0, R0)     D1 = R0 - R1    (texture)
//! R2 = GIF(R1, R1)      D2 = R1 - R2    (edges)
//! ```
//!
//! so `R0 = R2 + D2 + D1` up to rounding.

use crate::error::{FusionError, Result};
use crate::par;
use crate::plane::{local_moments, windowed_means, Plane};

/// Radii and regularizers for both decomposition scales.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterParams {
    /// Weighted guided filter window radius (texture scale).
    pub wgif_radius: usize,
    pub wgif_eps: f64,
    /// Stabilizer inside the edge-aware weight, in squared intensity units.
    pub wgif_lambda: f64,
    /// Guided filter window radius (edge scale).
    pub gif_radius: usize,
    pub gif_eps: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            wgif_radius: 2,
            wgif_eps: 1e-4,
            wgif_lambda: 1e-6,
            gif_radius: 8,
            gif_eps: 4e-3,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.wgif_radius == 0 || self.gif_radius == 0 {
            return Err(FusionError::InvalidParameter(
                "filter radii must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("wgif_eps", self.wgif_eps),
            ("gif_eps", self.gif_eps),
            ("wgif_lambda", self.wgif_lambda),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(FusionError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(FusionError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

/// Fills the rows for one image row.
type RowFn<'a> = Box<dyn Fn(usize, &mut [f64]) + Sync + Send + 'a>;

/// Local linear model core shared by both filters. `moments` holds the
/// guide's local mean and variance rows at `radius` (see `local_moments`);
/// `reg(k, var)` yields the regularizer for the window centred at flat pixel
/// index `k`, whose guide variance is `var`.
fn local_linear<R>(guide: &Plane, input: &Plane, moments: &[f64], radius: usize, reg: R) -> Plane
where
    R: Fn(usize, f64) -> f64 + Sync + Send,
{
    let (w, h) = guide.dimensions();
    let mean_row = |y: usize| &moments[2 * y * w..(2 * y + 1) * w];
    let var_row = |y: usize| &moments[(2 * y + 1) * w..(2 * y + 2) * w];

    // Per-window coefficients a, b for row y, written into `rows` = [a | b].
    let coeffs: RowFn = if std::ptr::eq(guide, input) || guide == input {
        // cov(I, I) = var(I) and mean(p) = mean(I).
        Box::new(move |y, rows: &mut [f64]| {
            let (a, b) = rows.split_at_mut(w);
            let (m, v) = (mean_row(y), var_row(y));
            for x in 0..w {
                a[x] = v[x] / (v[x] + reg(y * w + x, v[x]));
                b[x] = m[x] - a[x] * m[x];
            }
        })
    } else {
        let shift = guide.as_slice()[0];
        // [mean(p), mean((I - s) p)]
        let cross = windowed_means(
            w,
            h,
            radius,
            2,
            2,
            |y, rows| {
                let (p, ip) = rows.split_at_mut(w);
                for x in 0..w {
                    p[x] = input.row(y)[x];
                    ip[x] = (guide.row(y)[x] - shift) * p[x];
                }
            },
            |_, means, out| out.copy_from_slice(means),
        );
        Box::new(move |y, rows: &mut [f64]| {
            let (a, b) = rows.split_at_mut(w);
            let (m, v) = (mean_row(y), var_row(y));
            let mp = &cross[2 * y * w..(2 * y + 1) * w];
            let mip = &cross[(2 * y + 1) * w..(2 * y + 2) * w];
            for x in 0..w {
                let cov = mip[x] - (m[x] - shift) * mp[x];
                a[x] = cov / (v[x] + reg(y * w + x, v[x]));
                b[x] = mp[x] - a[x] * m[x];
            }
        })
    };

    let data = windowed_means(w, h, radius, 2, 1, coeffs, |y, means, out| {
        let (ma, mb) = means.split_at(w);
        let g = guide.row(y);
        for x in 0..w {
            out[x] = ma[x] * g[x] + mb[x];
        }
    });
    Plane::from_vec(w, h, data).expect("filter output matches guide dimensions")
}

/// Guided filter: per window `a = cov(I,p) / (var(I) + eps)`,
/// `b = mean(p) - a mean(I)`; output `mean(a) I + mean(b)`.
pub fn guided_filter(guide: &Plane, input: &Plane, radius: usize, eps: f64) -> Result<Plane> {
    guide.ensure_same_size(input)?;
    check_positive("eps", eps)?;
    let moments = local_moments(guide, radius);
    Ok(local_linear(guide, input, &moments, radius, |_, _| eps))
}

/// Mean of `1 / (var + λ)` over the image, from interleaved moments.
fn mean_inverse_variance(w: usize, h: usize, moments: &[f64], lambda: f64) -> f64 {
    let var_row = |y: usize| &moments[(2 * y + 1) * w..(2 * y + 2) * w];
    let inv_sum: f64 = (0..h)
        .map(|y| var_row(y).iter().map(|v| 1.0 / (v + lambda)).sum::<f64>())
        .sum();
    inv_sum / (w * h) as f64
}

/// Edge-aware weight `Γ(p) = mean_q (var(p) + λ) / (var(q) + λ)`, using local
/// variance of `guide` at `radius`. Greater than 1 on edges, below 1 in flat
/// regions; the mean of `1/Γ` over the image is exactly 1.
pub fn edge_aware_weight(guide: &Plane, radius: usize, lambda: f64) -> Result<Plane> {
    check_positive("lambda", lambda)?;
    let (w, h) = guide.dimensions();
    let moments = local_moments(guide, radius);
    let inv_mean = mean_inverse_variance(w, h, &moments, lambda);
    let mut gamma = Plane::zeros(w, h);
    par::for_each_chunk(gamma.as_mut_slice(), w, |y, row| {
        let var = &moments[(2 * y + 1) * w..(2 * y + 2) * w];
        for (g, v) in row.iter_mut().zip(var) {
            *g = (v + lambda) * inv_mean;
        }
    });
    Ok(gamma)
}

/// Weighted guided filter: the guided filter with regularizer `eps / Γ(k)` in
/// window `k`.
pub fn weighted_guided_filter(
    guide: &Plane,
    input: &Plane,
    radius: usize,
    eps: f64,
    lambda: f64,
) -> Result<Plane> {
    guide.ensure_same_size(input)?;
    check_positive("eps", eps)?;
    check_positive("lambda", lambda)?;
    let (w, h) = guide.dimensions();
    let moments = local_moments(guide, radius);
    let inv_mean = mean_inverse_variance(w, h, &moments, lambda);
    Ok(local_linear(guide, input, &moments, radius, |_, v| {
        eps / ((v + lambda) * inv_mean)
    }))
}

/// Weighted guided filter with a caller-supplied edge-aware weight.
pub fn weighted_guided_filter_with_weight(
    guide: &Plane,
    input: &Plane,
    radius: usize,
    eps: f64,
    gamma: &Plane,
) -> Result<Plane> {
    guide.ensure_same_size(input)?;
    guide.ensure_same_size(gamma)?;
    check_positive("eps", eps)?;
    if let Some(bad) = gamma.as_slice().iter().find(|&&v| v.is_nan() || v <= 0.0) {
        return Err(FusionError::InvalidParameter(format!(
            "edge-aware weight must be positive, found {bad}"
        )));
    }
    let moments = local_moments(guide, radius);
    let g = gamma.as_slice();
    Ok(local_linear(guide, input, &moments, radius, |k, _| {
        eps / g[k]
    }))
}

/// Base and detail layers of one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack {
    /// First base layer, `R1`.
    pub base1: Plane,
    /// Second base layer, `R2`.
    pub base2: Plane,
    /// Texture layer `D1 = R0 - R1`.
    pub detail: Plane,
    /// Edge layer `D2 = R1 - R2`.
    pub edge: Plane,
}

impl LayerStack {
    /// `R2 + D2 + D1`.
    pub fn recompose(&self) -> Plane {
        let s = self.base2.zip_map_unchecked(&self.edge, |a, b| a + b);
        s.zip_map_unchecked(&self.detail, |a, b| a + b)
    }
}

pub fn decompose(channel: &Plane, params: &FilterParams) -> Result<LayerStack> {
    params.validate()?;
    let base1 = weighted_guided_filter(
        channel,
        channel,
        params.wgif_radius,
        params.wgif_eps,
        params.wgif_lambda,
    )?;
    let base2 = guided_filter(&base1, &base1, params.gif_radius, params.gif_eps)?;
    let detail = channel.zip_map_unchecked(&base1, |a, b| a - b);
    let edge = base1.zip_map_unchecked(&base2, |a, b| a - b);
    Ok(LayerStack {
        base1,
        base2,
        detail,
        edge,
    })
}
