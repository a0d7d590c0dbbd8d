//! Brute-force oracles and fixtures shared by unit tests.

use crate::plane::Plane;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_plane(width: usize, height: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..width * height).map(|_| rng.random::<f64>()).collect();
    Plane::from_vec(width, height, data).unwrap()
}

/// Edge-replicated window samples around `(x, y)`.
pub fn brute_window(p: &Plane, x: usize, y: usize, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            out.push(p.get_clamped(x as isize + dx, y as isize + dy));
        }
    }
    out
}

pub fn brute_box_mean(p: &Plane, radius: usize) -> Plane {
    let mut out = Plane::zeros(p.width(), p.height());
    for y in 0..p.height() {
        for x in 0..p.width() {
            let w = brute_window(p, x, y, radius);
            out.set(x, y, w.iter().sum::<f64>() / w.len() as f64);
        }
    }
    out
}

/// Local linear model evaluated window by window: coefficients per window from
/// direct enumeration, then averaged over every window covering the pixel.
/// `reg` gives the regularizer for the window centred at a pixel index.
pub fn brute_guided(
    guide: &Plane,
    input: &Plane,
    radius: usize,
    reg: &dyn Fn(usize) -> f64,
) -> Plane {
    let (w, h) = guide.dimensions();
    let mut a = Plane::zeros(w, h);
    let mut b = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let gi = brute_window(guide, x, y, radius);
            let pi = brute_window(input, x, y, radius);
            let n = gi.len() as f64;
            let mg = gi.iter().sum::<f64>() / n;
            let mp = pi.iter().sum::<f64>() / n;
            let var = gi.iter().map(|g| (g - mg) * (g - mg)).sum::<f64>() / n;
            let cov = gi
                .iter()
                .zip(&pi)
                .map(|(g, p)| (g - mg) * (p - mp))
                .sum::<f64>()
                / n;
            let ak = cov / (var + reg(y * w + x));
            a.set(x, y, ak);
            b.set(x, y, mp - ak * mg);
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let aw = brute_window(&a, x, y, radius);
            let bw = brute_window(&b, x, y, radius);
            let n = aw.len() as f64;
            let ma = aw.iter().sum::<f64>() / n;
            let mb = bw.iter().sum::<f64>() / n;
            out.set(x, y, ma * guide.get(x, y) + mb);
        }
    }
    out
}

/// Vertical step at column `edge` from `lo` to `hi`, plus Gaussian noise.
pub fn noisy_step(
    width: usize,
    height: usize,
    edge: usize,
    lo: f64,
    hi: f64,
    sigma: f64,
    seed: u64,
) -> Plane {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma.max(1e-300)).unwrap();
    let mut p = Plane::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            let base = if x < edge { lo } else { hi };
            let n = if sigma > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            };
            p.set(x, y, base + n);
        }
    }
    p
}
