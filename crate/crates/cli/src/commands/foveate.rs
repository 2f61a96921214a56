use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ArgGroup;
use retina_limit::foveate::io::{dump_pyramid, read_image, write_png};
use retina_limit::foveate::{foveate_image, FilterMode, FoveateOptions, ThresholdOptions, ViewingConfig};
use retina_limit::DisplayGeometry;

use crate::data::DataSources;
use crate::output::{write_json, Cell, Format, Table};
use crate::usage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gaze {
    Center,
    At(f64, f64),
}

fn parse_gaze(s: &str) -> Result<Gaze, String> {
    if matches!(s, "center" | "centre") {
        return Ok(Gaze::Center);
    }
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected 'x,y' or 'center', got '{s}'"));
    }
    let x = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok(Gaze::At(x, y))
}

/// Ring width in degrees, `None` for continuous eccentricity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rings(pub Option<f64>);

fn parse_rings(s: &str) -> Result<Rings, String> {
    if s == "off" {
        return Ok(Rings(None));
    }
    match s.parse::<f64>() {
        Ok(w) if w > 0.0 && w.is_finite() => Ok(Rings(Some(w))),
        _ => Err(format!("expected a positive ring width in degrees or 'off', got '{s}'")),
    }
}

#[derive(Debug, clap::Args)]
#[command(group(ArgGroup::new("geometry").required(true).args(["ppd", "display_width_m"])))]
pub struct Args {
    /// Input image (8 or 16-bit PNG, sRGB).
    #[arg(long)]
    pub input: PathBuf,
    /// Output PNG, written at the input bit depth.
    #[arg(long)]
    pub output: PathBuf,
    /// Gaze point in pixels as x,y, or 'center'.
    #[arg(long, default_value = "center", value_parser = parse_gaze)]
    pub gaze: Gaze,
    /// Pixels per degree at the gaze point.
    #[arg(long, conflicts_with_all = ["display_width_m", "display_px", "distance_m"])]
    pub ppd: Option<f64>,
    /// Physical display width in metres; the image is shown 1:1 at its centre.
    #[arg(long, requires_all = ["display_px", "distance_m"])]
    pub display_width_m: Option<f64>,
    /// Horizontal pixel count of the display.
    #[arg(long, requires = "display_width_m")]
    pub display_px: Option<u32>,
    /// Viewing distance in metres.
    #[arg(long, requires = "display_width_m")]
    pub distance_m: Option<f64>,
    /// Quantise eccentricity into rings of this many degrees, or 'off'.
    #[arg(long, default_value = "off", value_parser = parse_rings)]
    pub rings: Rings,
    /// Number of pyramid bands; the deepest with a residual of at least 8
    /// pixels by default.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Write per-band visualisations (removed coefficients in red) here.
    #[arg(long)]
    pub dump_pyramid: Option<PathBuf>,
    /// Write filtering statistics as JSON to this path.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Attenuate near-threshold contrast smoothly instead of removing it.
    #[arg(long)]
    pub soft: bool,
}

pub fn run(args: &Args, data: &DataSources, format: Format) -> Result<()> {
    let img = read_image(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let (w, h) = (img.width, img.height);
    let gaze = match args.gaze {
        Gaze::Center => ViewingConfig::center_gaze(w, h),
        Gaze::At(x, y) => (x, y),
    };
    let view = match (args.ppd, args.display_width_m, args.display_px, args.distance_m) {
        (Some(ppd), None, None, None) => ViewingConfig::from_ppd(ppd, w, h, gaze),
        (None, Some(width), Some(px), Some(dist)) => {
            let v_px = ((px as f64 * h as f64 / w as f64).round() as u32).max(1);
            let pitch = width / px as f64;
            let display = DisplayGeometry::new(width, pitch * v_px as f64, px, v_px, dist)?;
            ViewingConfig::from_display(&display, w, h, gaze)
        }
        _ => {
            return Err(usage(
                "give --ppd, or all of --display-width-m, --display-px and --distance-m",
            ))
        }
    }
    .map_err(|e| usage(e.to_string()))?;
    let model = data.model()?;
    let opts = FoveateOptions {
        levels: args.levels,
        rings_deg: args.rings.0,
        threshold: ThresholdOptions {
            mode: if args.soft { FilterMode::Soft } else { FilterMode::Hard },
            ..Default::default()
        },
        ..Default::default()
    };
    let result = foveate_image(&img, &view, &model, &opts)?;
    write_png(&args.output, &result.image).with_context(|| format!("writing {}", args.output.display()))?;
    if let Some(dir) = &args.dump_pyramid {
        dump_pyramid(dir, &result.original, &result.filtered)
            .with_context(|| format!("writing pyramid images to {}", dir.display()))?;
    }
    if let Some(path) = &args.stats {
        std::fs::write(path, serde_json::to_string_pretty(&result.stats)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => write_json(&mut out, &result.stats)?,
        Format::Csv | Format::Table => {
            if format == Format::Table {
                writeln!(
                    out,
                    "{}x{} at {:.2} ppd, eccentricity up to {:.2} deg, {} bands",
                    w,
                    h,
                    result.stats.image_ppd,
                    result.stats.max_eccentricity_deg,
                    result.stats.band_cpd.len()
                )?;
            }
            let mut t = Table::new(vec!["channel", "coefficients", "zeroed", "zeroed_fraction"]);
            for c in &result.stats.channels {
                t.push(vec![
                    Cell::from(c.channel.as_str()),
                    (c.coefficients as usize).into(),
                    (c.zeroed as usize).into(),
                    c.zeroed_fraction.into(),
                ]);
            }
            t.write(&mut out, format, "foveate")?;
            if format == Format::Table {
                writeln!(out, "out of gamut: {:.2}%", 100.0 * result.stats.out_of_gamut_fraction)?;
            }
        }
    }
    Ok(())
}
