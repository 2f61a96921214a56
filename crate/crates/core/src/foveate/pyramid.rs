use std::sync::OnceLock;

use super::Plane;
use crate::error::{Error, Result};

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
const MIN_SIZE: usize = KERNEL.len();

/// Laplacian decomposition of one plane, finest band first.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPyramid {
    pub bands: Vec<Plane>,
    pub residual: Plane,
}

impl LaplacianPyramid {
    pub fn levels(&self) -> usize {
        self.bands.len()
    }

    /// Inverse transform: expand the residual and add bands back, coarse to fine.
    pub fn collapse(&self) -> Plane {
        let mut cur = self.residual.clone();
        for band in self.bands.iter().rev() {
            let mut up = expand(&cur, band.width(), band.height());
            for (u, b) in up.data_mut().iter_mut().zip(band.data()) {
                *u += b;
            }
            cur = up;
        }
        cur
    }
}

/// Largest band count accepted for a `width` x `height` plane.
pub fn max_levels(width: usize, height: usize) -> usize {
    let m = width.min(height);
    if m == 0 {
        0
    } else {
        m.ilog2() as usize
    }
}

fn check(plane: &Plane, levels: usize) -> Result<()> {
    let (w, h) = (plane.width(), plane.height());
    if w.min(h) < MIN_SIZE {
        return Err(Error::InvalidInput(format!(
            "image {w}x{h} is smaller than the {MIN_SIZE}-tap kernel support"
        )));
    }
    if levels == 0 || levels > max_levels(w, h) {
        return Err(Error::InvalidInput(format!(
            "pyramid levels must be in 1..={} for a {w}x{h} image, got {levels}",
            max_levels(w, h)
        )));
    }
    Ok(())
}

pub fn build_pyramid(plane: &Plane, levels: usize) -> Result<LaplacianPyramid> {
    let mut gauss = gaussian_pyramid(plane, levels)?;
    let residual = gauss.pop().expect("gaussian pyramid is never empty");
    let bands = gauss
        .iter()
        .zip(gauss.iter().skip(1).chain(std::iter::once(&residual)))
        .map(|(level, next)| {
            let mut band = level.clone();
            let up = expand(next, level.width(), level.height());
            for (b, u) in band.data_mut().iter_mut().zip(up.data()) {
                *b -= u;
            }
            band
        })
        .collect();
    Ok(LaplacianPyramid { bands, residual })
}

/// Gaussian levels `0..=levels`, level 0 being the input.
pub fn gaussian_pyramid(plane: &Plane, levels: usize) -> Result<Vec<Plane>> {
    check(plane, levels)?;
    let mut out = Vec::with_capacity(levels + 1);
    out.push(plane.clone());
    for k in 0..levels {
        let next = reduce(&out[k]);
        out.push(next);
    }
    Ok(out)
}

/// Whole-sample symmetric extension (`-1 -> 1`, `n -> n-2`).
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}

/// Blur with the 5-tap kernel and keep every other sample.
pub fn reduce(src: &Plane) -> Plane {
    let (w, h) = (src.width(), src.height());
    let (w2, h2) = (w.div_ceil(2), h.div_ceil(2));
    // horizontal pass at even columns
    let mut tmp = Plane::new(w2, h);
    for y in 0..h {
        for x2 in 0..w2 {
            let cx = (2 * x2) as isize;
            let mut acc = 0.0;
            for (t, k) in KERNEL.iter().enumerate() {
                acc += k * src.get(reflect(cx + t as isize - 2, w), y);
            }
            tmp.set(x2, y, acc);
        }
    }
    let mut out = Plane::new(w2, h2);
    for y2 in 0..h2 {
        let cy = (2 * y2) as isize;
        for x2 in 0..w2 {
            let mut acc = 0.0;
            for (t, k) in KERNEL.iter().enumerate() {
                acc += k * tmp.get(x2, reflect(cy + t as isize - 2, h));
            }
            out.set(x2, y2, acc);
        }
    }
    out
}

/// Zero-insertion upsampling to `width` x `height` followed by the kernel
/// with gain 2 per axis.
pub fn expand(src: &Plane, width: usize, height: usize) -> Plane {
    debug_assert_eq!(src.width(), width.div_ceil(2));
    debug_assert_eq!(src.height(), height.div_ceil(2));
    let mut tmp = Plane::new(width, src.height());
    for y in 0..src.height() {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, k) in KERNEL.iter().enumerate() {
                let j = reflect(x as isize + t as isize - 2, width);
                if j.is_multiple_of(2) {
                    acc += k * src.get(j / 2, y);
                }
            }
            tmp.set(x, y, 2.0 * acc);
        }
    }
    let mut out = Plane::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (t, k) in KERNEL.iter().enumerate() {
                let j = reflect(y as isize + t as isize - 2, height);
                if j.is_multiple_of(2) {
                    acc += k * tmp.get(x, j / 2);
                }
            }
            out.set(x, y, 2.0 * acc);
        }
    }
    out
}

/// Frequency response of the 5-tap kernel, `f` in cycles per sample.
#[inline]
fn kernel_response(f: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * f;
    (6.0 + 8.0 * w.cos() + 2.0 * (2.0 * w).cos()) / 16.0
}

/// Idealised (alias-free) response of band `k` to a full-resolution
/// frequency `f` in cycles per pixel.
pub fn band_response(k: usize, f: f64) -> f64 {
    let mut g = 1.0;
    for j in 0..k {
        g *= kernel_response(f * (1u64 << j) as f64);
    }
    let h = kernel_response(f * (1u64 << k) as f64);
    g * (1.0 - h * h)
}

/// Frequency in cycles per full-resolution pixel at which band `k` responds
/// most strongly. Band 0 peaks at the Nyquist limit; coarser bands peak a
/// little below half the Nyquist limit of their own level.
pub fn band_peak_frequency(k: usize) -> f64 {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..16).map(peak_search).collect());
    cache.get(k).copied().unwrap_or_else(|| peak_search(k))
}

fn peak_search(k: usize) -> f64 {
    let n = 20_000;
    let (mut best_f, mut best) = (0.5, band_response(k, 0.5));
    for i in 1..n {
        let f = 0.5 * i as f64 / n as f64;
        let r = band_response(k, f);
        if r > best {
            best = r;
            best_f = f;
        }
    }
    // refine inside the neighbouring scan cells
    let step = 0.5 / n as f64;
    let (mut a, mut b) = ((best_f - step).max(0.0), (best_f + step).min(0.5));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-13 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        // ties move right so the flat top of band 0 resolves to Nyquist
        if band_response(k, c) > band_response(k, d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, |x, y| {
            let v = (x as f64 * 12.9898 + y as f64 * 78.233).sin() * 43758.5453;
            v - v.floor()
        })
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(6, 5), 2);
        assert_eq!(reflect(-3, 2), 1);
        assert_eq!(reflect(4, 1), 0);
    }

    #[test]
    fn constant_plane_has_zero_bands() {
        let p = Plane::filled(37, 23, 0.25);
        let pyr = build_pyramid(&p, 4).unwrap();
        for b in &pyr.bands {
            assert!(b.data().iter().all(|v| *v == 0.0));
        }
        assert!(pyr.residual.data().iter().all(|v| *v == 0.25));
    }

    #[test]
    fn band_dimensions_halve_with_ceil() {
        let pyr = build_pyramid(&noise(37, 21), 4).unwrap();
        let dims: Vec<_> = pyr.bands.iter().map(|b| (b.width(), b.height())).collect();
        assert_eq!(dims, vec![(37, 21), (19, 11), (10, 6), (5, 3)]);
        assert_eq!((pyr.residual.width(), pyr.residual.height()), (3, 2));
    }

    #[test]
    fn impulse_reconstructs() {
        let mut p = Plane::new(32, 32);
        p.set(13, 7, 1.0);
        let pyr = build_pyramid(&p, 5).unwrap();
        assert!(pyr.collapse().max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn reconstruction_for_odd_and_small_sizes() {
        for (w, h) in [(16, 16), (17, 16), (31, 45), (64, 33), (5, 9)] {
            let p = noise(w, h);
            for levels in 1..=max_levels(w, h) {
                let pyr = build_pyramid(&p, levels).unwrap();
                assert!(pyr.collapse().max_abs_diff(&p) < 1e-12, "{w}x{h} levels {levels}");
            }
        }
    }

    #[test]
    fn rejects_bad_sizes_and_levels() {
        assert!(build_pyramid(&Plane::new(4, 40), 1).is_err());
        assert!(build_pyramid(&Plane::new(16, 16), 0).is_err());
        assert!(build_pyramid(&Plane::new(16, 16), 5).is_err());
        assert!(build_pyramid(&Plane::new(16, 16), 4).is_ok());
    }

    #[test]
    fn band_peaks() {
        assert!((band_peak_frequency(0) - 0.5).abs() < 1e-9);
        let mut prev = band_peak_frequency(0);
        for k in 1..6 {
            let f = band_peak_frequency(k);
            assert!(f < prev && f > 0.0);
            // peaks sit between the next level's Nyquist/2 and Nyquist
            assert!(f > 0.125 / (1u64 << (k - 1)) as f64 * 0.5 && f < 0.25 / (1u64 << (k - 1)) as f64);
            prev = f;
        }
    }
}
