//! Procedural test scene with natural-image-like statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EncodedImage;

/// Smoothly interpolated lattice noise at one scale.
struct Lattice {
    cell: f64,
    cols: usize,
    values: Vec<f64>,
}

impl Lattice {
    fn new(width: usize, height: usize, cell: f64, rng: &mut ChaCha8Rng) -> Self {
        let cols = (width as f64 / cell).ceil() as usize + 2;
        let rows = (height as f64 / cell).ceil() as usize + 2;
        let values = (0..cols * rows).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        Lattice { cell, cols, values }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = (x / self.cell, y / self.cell);
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (smooth(fx - ix as f64), smooth(fy - iy as f64));
        let v = |i: usize, j: usize| self.values[j * self.cols + i];
        let top = v(ix, iy) * (1.0 - tx) + v(ix + 1, iy) * tx;
        let bottom = v(ix, iy + 1) * (1.0 - tx) + v(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn smooth(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn fractal(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Vec<Lattice> {
    // scales stop at 64 px so the texture stays statistically stationary
    let mut cell = 2.0;
    let mut out = Vec::new();
    while cell <= 64.0 {
        out.push(Lattice::new(width, height, cell, rng));
        cell *= 2.0;
    }
    out
}

fn fractal_sample(octaves: &[Lattice], x: f64, y: f64) -> f64 {
    // amplitude grows as the square root of scale: flatter than 1/f, so the
    // fine bands carry plenty of contrast
    let mut sum = 0.0;
    let mut norm = 0.0;
    for o in octaves {
        let a = o.cell.sqrt();
        sum += a * o.sample(x, y);
        norm += a;
    }
    sum / norm
}

/// An 8-bit sRGB scene: 1/f luminance and colour texture overlaid with
/// hard-edged coloured discs and bars scattered uniformly. Statistics are
/// roughly stationary, so filtering differences across the frame come
/// from eccentricity rather than content.
pub fn test_scene(width: usize, height: usize, seed: u64) -> EncodedImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lum = fractal(width, height, &mut rng);
    let rg = fractal(width, height, &mut rng);
    let yv = fractal(width, height, &mut rng);

    let area = (width * height) as f64;
    let n_shapes = (area / 6000.0).ceil() as usize;
    let shapes: Vec<(f64, f64, f64, f64, [f64; 3], bool)> = (0..n_shapes)
        .map(|_| {
            let cx = rng.random::<f64>() * width as f64;
            let cy = rng.random::<f64>() * height as f64;
            let r = 3.0 + rng.random::<f64>() * 14.0;
            let angle = rng.random::<f64>() * std::f64::consts::PI;
            let colour = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            (cx, cy, r, angle, colour, rng.random::<bool>())
        })
        .collect();

    let mut pixels = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = (x as f64, y as f64);
            let l = 0.45 + 0.9 * fractal_sample(&lum, fx, fy);
            let a = 0.5 * fractal_sample(&rg, fx, fy);
            let b = 0.5 * fractal_sample(&yv, fx, fy);
            let mut p = [l + a - 0.3 * b, l - 0.6 * a - 0.3 * b, l + 0.9 * b];
            for &(cx, cy, r, angle, colour, disc) in &shapes {
                let (dx, dy) = (fx - cx, fy - cy);
                let inside = if disc {
                    dx * dx + dy * dy <= r * r
                } else {
                    let (c, s) = (angle.cos(), angle.sin());
                    (dx * c + dy * s).abs() <= r && (-dx * s + dy * c).abs() <= r * 0.25
                };
                if inside {
                    p = colour;
                }
            }
            pixels.push(p.map(|v: f64| v.clamp(0.0, 1.0)));
        }
    }
    EncodedImage::new(width, height, 8, pixels)
        .expect("dimensions match")
        .quantized()
}
