use std::io::Write;

use anyhow::Result;
use clap::{ArgGroup, ValueEnum};
use retina_limit::units::{center_ppd, METERS_PER_INCH};
use retina_limit::{ColorChannel, DisplayGeometry};
use serde::Serialize;

use super::{parse_channel, warn_extrapolation};
use crate::data::DataSources;
use crate::output::{write_json, Cell, Format, Table, OUTPUT_SCHEMA};
use crate::usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 27 inch 3840x2160 monitor, 0.5977 m wide.
    #[value(name = "eizo-27-4k")]
    Eizo274k,
    /// 55 inch 1920x1080 television.
    #[value(name = "fhd-55")]
    Fhd55,
}

/// Display size and resolution, from a preset or explicit flags.
#[derive(Debug, clap::Args)]
pub struct DisplayArgs {
    /// Named display.
    #[arg(long, value_enum, conflicts_with_all = ["diagonal_in", "width_m", "height_m", "h_pixels", "v_pixels"])]
    pub preset: Option<Preset>,
    /// Screen diagonal in inches (square pixels assumed).
    #[arg(long, conflicts_with_all = ["width_m", "height_m"])]
    pub diagonal_in: Option<f64>,
    /// Screen width in metres.
    #[arg(long)]
    pub width_m: Option<f64>,
    /// Screen height in metres; derived from square pixels when omitted.
    #[arg(long, requires = "width_m")]
    pub height_m: Option<f64>,
    /// Horizontal pixel count.
    #[arg(long)]
    pub h_pixels: Option<u32>,
    /// Vertical pixel count.
    #[arg(long)]
    pub v_pixels: Option<u32>,
}

impl DisplayArgs {
    /// Geometry at a placeholder distance of 1 m.
    pub fn geometry(&self) -> Result<DisplayGeometry> {
        if let Some(p) = self.preset {
            return Ok(match p {
                Preset::Eizo274k => DisplayGeometry::reference_27in_4k(1.0)?,
                Preset::Fhd55 => DisplayGeometry::from_diagonal(55.0 * METERS_PER_INCH, 1920, 1080, 1.0)?,
            });
        }
        let (Some(h), Some(v)) = (self.h_pixels, self.v_pixels) else {
            return Err(usage(
                "give --preset, or --h-pixels and --v-pixels with --diagonal-in or --width-m",
            ));
        };
        match (self.diagonal_in, self.width_m) {
            (Some(d), None) => Ok(DisplayGeometry::from_diagonal(d * METERS_PER_INCH, h, v, 1.0)?),
            (None, Some(w)) => {
                let height = self.height_m.unwrap_or(w * v as f64 / h as f64);
                Ok(DisplayGeometry::new(w, height, h, v, 1.0)?)
            }
            _ => Err(usage("display size needs exactly one of --diagonal-in or --width-m")),
        }
    }
}

#[derive(Debug, clap::Args)]
#[command(group(ArgGroup::new("distance").required(true).args(["distance_m", "distance_heights"])))]
pub struct Args {
    #[command(flatten)]
    pub display: DisplayArgs,
    /// Viewing distance in metres.
    #[arg(long)]
    pub distance_m: Option<f64>,
    /// Viewing distance in display heights.
    #[arg(long)]
    pub distance_heights: Option<f64>,
    /// Colour channel: achromatic, red_green or yellow_violet.
    #[arg(long, default_value = "achromatic", value_parser = parse_channel)]
    pub channel: ColorChannel,
    /// Eccentricity in degrees.
    #[arg(long, default_value_t = 0.0)]
    pub eccentricity: f64,
    /// Fraction of the population the display must satisfy.
    #[arg(long, default_value_t = 0.5)]
    pub percentile: f64,
}

#[derive(Debug, Serialize)]
struct CalcReport {
    schema: u32,
    center_ppd: f64,
    distance_m: f64,
    distance_heights: f64,
    channel: ColorChannel,
    eccentricity_deg: f64,
    percentile: f64,
    threshold_ppd: f64,
    verdict: &'static str,
    fraction_satisfied: f64,
}

pub fn run(args: &Args, data: &DataSources, format: Format) -> Result<()> {
    let base = args.display.geometry()?;
    let distance = match (args.distance_m, args.distance_heights) {
        (Some(d), None) => d,
        (None, Some(n)) => n * base.height_m,
        _ => return Err(usage("give exactly one of --distance-m or --distance-heights")),
    };
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(usage("viewing distance must be positive"));
    }
    if !(args.percentile > 0.0 && args.percentile < 1.0) {
        return Err(usage("--percentile must lie strictly between 0 and 1"));
    }
    warn_extrapolation(args.eccentricity);
    let geometry = base.with_distance(distance);
    let population = data.population()?;
    let ppd = center_ppd(&geometry);
    let threshold = population.threshold_quantile(args.channel, args.eccentricity, args.percentile)?;
    let report = CalcReport {
        schema: OUTPUT_SCHEMA,
        center_ppd: ppd,
        distance_m: distance,
        distance_heights: geometry.distance_in_heights(),
        channel: args.channel,
        eccentricity_deg: args.eccentricity,
        percentile: args.percentile,
        threshold_ppd: threshold,
        verdict: if ppd >= threshold { "exceeds" } else { "falls short" },
        fraction_satisfied: population.fraction_satisfied(args.channel, args.eccentricity, ppd)?,
    };
    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => write_json(&mut out, &report)?,
        Format::Csv => {
            let mut t = Table::new(vec![
                "center_ppd",
                "distance_m",
                "distance_heights",
                "channel",
                "eccentricity_deg",
                "percentile",
                "threshold_ppd",
                "verdict",
                "fraction_satisfied",
            ]);
            t.push(vec![
                Cell::from(report.center_ppd),
                report.distance_m.into(),
                report.distance_heights.into(),
                report.channel.as_str().into(),
                report.eccentricity_deg.into(),
                report.percentile.into(),
                report.threshold_ppd.into(),
                report.verdict.into(),
                report.fraction_satisfied.into(),
            ]);
            t.write(&mut out, format, "calc")?;
        }
        Format::Table => {
            writeln!(
                out,
                "display: {:.1} ppd at the centre from {:.3} m ({:.2} display heights)",
                report.center_ppd, report.distance_m, report.distance_heights
            )?;
            writeln!(
                out,
                "threshold: {:.1} ppd ({}, {} deg, percentile {})",
                report.threshold_ppd, report.channel, report.eccentricity_deg, report.percentile
            )?;
            writeln!(out, "verdict: {}", report.verdict)?;
            writeln!(out, "fraction satisfied: {:.4}", report.fraction_satisfied)?;
        }
    }
    Ok(())
}
