use std::path::Path;

use image::{DynamicImage, ImageBuffer, Rgb};

use super::{DklPyramid, EncodedImage, LaplacianPyramid};
use crate::csf::ColorChannel;
use crate::error::Result;

/// Reads a PNG (or any format the `image` crate decodes). 16-bit sources
/// stay 16-bit; everything else is read as 8-bit. Alpha is dropped.
pub fn read_image(path: &Path) -> Result<EncodedImage> {
    let img = image::open(path)?;
    from_dynamic(&img)
}

pub fn from_dynamic(img: &DynamicImage) -> Result<EncodedImage> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let sixteen = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    if sixteen {
        let buf = img.to_rgb16();
        let pixels = buf.pixels().map(|p| p.0.map(|v| v as f64 / 65535.0)).collect();
        EncodedImage::new(w, h, 16, pixels)
    } else {
        let buf = img.to_rgb8();
        let pixels = buf.pixels().map(|p| p.0.map(|v| v as f64 / 255.0)).collect();
        EncodedImage::new(w, h, 8, pixels)
    }
}

pub fn to_dynamic(img: &EncodedImage) -> DynamicImage {
    let (w, h) = (img.width as u32, img.height as u32);
    if img.bit_depth == 16 {
        let data: Vec<u16> = img
            .pixels
            .iter()
            .flat_map(|p| p.map(|v| (v.clamp(0.0, 1.0) * 65535.0).round() as u16))
            .collect();
        DynamicImage::ImageRgb16(ImageBuffer::from_raw(w, h, data).expect("buffer size matches"))
    } else {
        let data: Vec<u8> = img
            .pixels
            .iter()
            .flat_map(|p| p.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect();
        DynamicImage::ImageRgb8(ImageBuffer::from_raw(w, h, data).expect("buffer size matches"))
    }
}

pub fn write_png(path: &Path, img: &EncodedImage) -> Result<()> {
    to_dynamic(img).save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}

fn band_image(before: &super::Plane, after: &super::Plane) -> ImageBuffer<Rgb<u8>, Vec<u8>> {
    let scale = before.max_abs();
    let gain = if scale > 0.0 { 0.5 / scale } else { 0.0 };
    let (w, h) = (after.width() as u32, after.height() as u32);
    ImageBuffer::from_fn(w, h, |x, y| {
        let (x, y) = (x as usize, y as usize);
        let a = after.get(x, y);
        if a == 0.0 && before.get(x, y) != 0.0 {
            // removed coefficients in red
            Rgb([200, 30, 30])
        } else {
            let g = ((0.5 + a * gain).clamp(0.0, 1.0) * 255.0).round() as u8;
            Rgb([g, g, g])
        }
    })
}

/// Writes one PNG per channel and band (`<channel>_band<k>_<freq>cpd.png`), grey
/// around mid-level for surviving coefficients and red where the filter
/// removed contrast. Returns the written paths.
pub fn dump_pyramid(dir: &Path, original: &DklPyramid, filtered: &DklPyramid) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for c in ColorChannel::ALL {
        let (a, b): (&LaplacianPyramid, &LaplacianPyramid) = (&original.planes[c.index()], &filtered.planes[c.index()]);
        for (k, (before, after)) in a.bands.iter().zip(&b.bands).enumerate() {
            let path = dir.join(format!("{}_band{k}_{:.2}cpd.png", c.as_str(), original.band_cpd[k]));
            band_image(before, after).save_with_format(&path, image::ImageFormat::Png)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_8_and_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        for depth in [8u8, 16] {
            let m = if depth == 8 { 255.0 } else { 65535.0 };
            let pixels: Vec<[f64; 3]> = (0..12)
                .map(|i| [(i as f64 * 17.0 % m) / m, ((i * 5) as f64 % m) / m, 1.0])
                .collect();
            let img = EncodedImage::new(4, 3, depth, pixels).unwrap();
            let path = dir.path().join(format!("t{depth}.png"));
            write_png(&path, &img).unwrap();
            let back = read_image(&path).unwrap();
            assert_eq!(back.bit_depth, depth);
            assert_eq!(back, img.quantized());
        }
    }
}
