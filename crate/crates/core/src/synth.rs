//! Deterministic synthetic visible/NIR/ground-truth triples.
//!
//! The scene has a smooth color gradient, flat colored shapes and a block of
//! fine gray bars. A shadow mask darkens part of it; the ground truth is the
//! shadowed scene as a noise-free camera would see it. The visible capture
//! adds Gaussian noise inside the shadow, and the NIR capture is the unshadowed
//! scene's luma, standing in for an actively illuminated NIR sensor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::plane::{ImagePair, Plane, RgbImage};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthParams {
    /// Illumination gain inside the shadow mask.
    pub shadow_gain: f64,
    /// Standard deviation of visible noise inside the shadow mask.
    pub noise_sigma: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            shadow_gain: 0.85,
            noise_sigma: 0.05,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticTriple {
    pub truth: RgbImage,
    pub pair: ImagePair,
    /// 1 inside the shadow region, 0 elsewhere.
    pub shadow: Plane,
}

enum Shape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
        }
    }
}

pub fn generate(width: usize, height: usize, seed: u64, params: &SynthParams) -> SyntheticTriple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (wf, hf) = (width as f64, height as f64);

    let mut shapes = Vec::new();
    for i in 0..6 {
        let color = [
            rng.random_range(0.15..0.95),
            rng.random_range(0.15..0.95),
            rng.random_range(0.15..0.95),
        ];
        let shape = if i % 2 == 0 {
            let x0 = rng.random_range(0.0..0.75) * wf;
            let y0 = rng.random_range(0.0..0.75) * hf;
            Shape::Rect {
                x0,
                y0,
                x1: x0 + rng.random_range(0.1..0.3) * wf,
                y1: y0 + rng.random_range(0.1..0.3) * hf,
            }
        } else {
            Shape::Disk {
                cx: rng.random_range(0.15..0.85) * wf,
                cy: rng.random_range(0.15..0.85) * hf,
                r: rng.random_range(0.05..0.15) * wf.min(hf),
            }
        };
        shapes.push((shape, color));
    }
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.2..0.5));

    // Bars: a block of vertical stripes whose period shrinks down the block.
    let bars = (0.55 * wf, 0.1 * hf, 0.9 * wf, 0.45 * hf);
    let shadow_edge = rng.random_range(0.4..0.6) * wf;

    let channel = |c: usize| {
        Plane::from_fn(width, height, |x, y| {
            let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut v = tint[c] + 0.3 * (xf / wf) * (1.0 - yf / hf) + 0.1 * (c as f64) * yf / hf;
            for (shape, color) in &shapes {
                if shape.contains(xf, yf) {
                    v = color[c];
                }
            }
            if xf >= bars.0 && xf < bars.2 && yf >= bars.1 && yf < bars.3 {
                let t = (yf - bars.1) / (bars.3 - bars.1);
                let period = 10.0 - 7.0 * t;
                let on = ((xf - bars.0) / period).floor() as i64 % 2 == 0;
                v = if on { 0.85 } else { 0.2 };
            }
            v.clamp(0.0, 1.0)
        })
    };
    let lit = RgbImage {
        r: channel(0),
        g: channel(1),
        b: channel(2),
    };
    let shadow = Plane::from_fn(width, height, |x, y| {
        // Slanted boundary so the mask is not axis aligned.
        let boundary = shadow_edge + 0.25 * (y as f64 - hf / 2.0);
        if x as f64 >= boundary {
            1.0
        } else {
            0.0
        }
    });

    let darken = |p: &Plane| {
        p.zip_map(
            &shadow,
            |v, m| if m > 0.0 { v * params.shadow_gain } else { v },
        )
        .expect("same dimensions")
    };
    let truth = RgbImage {
        r: darken(&lit.r),
        g: darken(&lit.g),
        b: darken(&lit.b),
    };

    let normal = Normal::new(0.0, params.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let mut degrade = |p: &Plane| {
        let mut out = p.clone();
        for (v, &m) in out.as_mut_slice().iter_mut().zip(shadow.as_slice()) {
            if m > 0.0 && params.noise_sigma > 0.0 {
                *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
        out
    };
    let visible = RgbImage {
        r: degrade(&truth.r),
        g: degrade(&truth.g),
        b: degrade(&truth.b),
    };
    let nir = lit.luma();
    let pair = ImagePair::new(visible, nir).expect("planes share dimensions");
    SyntheticTriple {
        truth,
        pair,
        shadow,
    }
}

/// Seeds of the bundled synthetic corpus.
pub const CORPUS_SEEDS: [u64; 3] = [11, 23, 47];

/// The bundled corpus: one triple per entry of [`CORPUS_SEEDS`].
pub fn corpus(width: usize, height: usize) -> Vec<(String, SyntheticTriple)> {
    CORPUS_SEEDS
        .iter()
        .map(|&s| {
            (
                format!("synth{s:03}"),
                generate(width, height, s, &SynthParams::default()),
            )
        })
        .collect()
}
