//! Filtering properties on the bundled test scene.

use std::path::Path;

use retina_limit::foveate::io::read_image;
use retina_limit::foveate::{foveate_image, EncodedImage, FoveateOutput, ViewingConfig};
use retina_limit::{ColorChannel, ModelParamSet};

const RING_DEG: f64 = 5.0;

fn scene() -> EncodedImage {
    read_image(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/test_scene.png")).unwrap()
}

fn run(img: &EncodedImage, ppd: f64) -> FoveateOutput {
    let view = ViewingConfig::from_ppd(
        ppd,
        img.width,
        img.height,
        ViewingConfig::center_gaze(img.width, img.height),
    )
    .unwrap();
    foveate_image(img, &view, &ModelParamSet::reference(), &Default::default()).unwrap()
}

/// Mean absolute code-value change per 5-degree ring, in 8-bit units.
fn ring_degradation(img: &EncodedImage, out: &FoveateOutput) -> Vec<f64> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for y in 0..img.height {
        for x in 0..img.width {
            let ring = out.eccentricity.ring_index(RING_DEG, x, y);
            if sums.len() <= ring {
                sums.resize(ring + 1, (0.0, 0));
            }
            let (a, b) = (img.pixels[y * img.width + x], out.image.pixels[y * img.width + x]);
            let d: f64 = (0..3).map(|k| (a[k] - b[k]).abs() * 255.0).sum::<f64>() / 3.0;
            sums[ring].0 += d;
            sums[ring].1 += 1;
        }
    }
    sums.into_iter().map(|(s, n)| s / n as f64).collect()
}

#[test]
fn degradation_grows_with_eccentricity() {
    let img = scene();
    let out = run(&img, 12.0);
    let rings = ring_degradation(&img, &out);
    assert!(rings.len() >= 4, "{rings:?}");
    for w in rings.windows(2) {
        assert!(w[1] > w[0], "{rings:?}");
    }
}

#[test]
fn chromatic_content_removed_first_in_periphery() {
    let img = scene();
    let out = run(&img, 12.0);
    let f = &out.stats.filter;
    let ach = f
        .channel(ColorChannel::Achromatic)
        .zeroed_fraction_between(10.0, f64::INFINITY)
        .unwrap();
    for c in [ColorChannel::RedGreen, ColorChannel::YellowViolet] {
        let chrom = f.channel(c).zeroed_fraction_between(10.0, f64::INFINITY).unwrap();
        assert!(chrom >= ach, "{c}: {chrom} < {ach}");
    }
}

#[test]
fn foveal_cutoffs_at_sixty_ppd() {
    // every channel resolves the finest band (30 cpd) at the gaze point when
    // contrast is full, but yellow-violet loses it within a fraction of a degree
    let m = ModelParamSet::reference();
    for c in ColorChannel::ALL {
        let p = m.params(c);
        assert!(p.threshold_resolution_at_contrast(0.0, 1.0).unwrap() > 60.0, "{c}");
    }
    let yv = m.params(ColorChannel::YellowViolet);
    assert!(yv.threshold_resolution_at_contrast(0.2, 1.0).unwrap() < 60.0);
}

#[test]
fn output_is_reproducible() {
    let img = scene();
    let a = run(&img, 30.0);
    let b = run(&img, 30.0);
    assert_eq!(a.image, b.image);
    assert_eq!(a.stats, b.stats);
}
