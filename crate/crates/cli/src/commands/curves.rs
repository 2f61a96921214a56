use anyhow::Result;
use clap::ValueEnum;
use retina_limit::units::{required_lines, required_ppi};
use retina_limit::ColorChannel;

use super::{parse_channel, warn_extrapolation};
use crate::data::DataSources;
use crate::output::{Cell, Format, Table};
use crate::usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    /// Threshold quantiles per channel against eccentricity.
    #[value(alias = "1b")]
    Population,
    /// Vertical lines needed against viewing distance in display heights.
    #[value(alias = "1c")]
    Lines,
    /// Pixel density needed against viewing distance in metres.
    #[value(alias = "1d")]
    Ppi,
}

impl Figure {
    /// Default grid: `(from, to, points)`.
    fn default_grid(self) -> (f64, f64, usize) {
        match self {
            Figure::Population => (0.0, 20.0, 21),
            Figure::Lines => (1.0, 10.0, 181),
            Figure::Ppi => (0.25, 3.0, 56),
        }
    }
}

const POPULATION_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Which curve family to emit.
    #[arg(long, value_enum)]
    pub figure: Figure,
    /// First grid value: eccentricity in degrees (population), distance in
    /// display heights (lines) or metres (ppi). Defaults 0, 1 and 0.25.
    #[arg(long)]
    pub from: Option<f64>,
    /// Last grid value. Defaults 20, 10 and 3.
    #[arg(long)]
    pub to: Option<f64>,
    /// Number of evenly spaced grid points, ends included. Defaults 21, 181 and 56.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Population fractions for lines and ppi curves.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.5, 0.95])]
    pub percentiles: Vec<f64>,
    /// Channel; population curves cover all three when omitted, the others
    /// default to achromatic.
    #[arg(long, value_parser = parse_channel)]
    pub channel: Option<ColorChannel>,
    /// Eccentricity in degrees for lines and ppi curves.
    #[arg(long, default_value_t = 0.0)]
    pub eccentricity: f64,
}

fn grid(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![from];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                to
            } else {
                from + (to - from) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

pub fn run(args: &Args, data: &DataSources, format: Format) -> Result<()> {
    let (f0, t0, n0) = args.figure.default_grid();
    let (from, to, n) = (args.from.unwrap_or(f0), args.to.unwrap_or(t0), args.steps.unwrap_or(n0));
    if n == 0 || !(from.is_finite() && to.is_finite()) || from > to {
        return Err(usage("grid needs --from <= --to and --steps >= 1"));
    }
    let percentiles: &[f64] = &args.percentiles;
    if percentiles.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(usage("percentiles must lie strictly between 0 and 1"));
    }
    let xs = grid(from, to, n);
    let population = data.population()?;
    let table = match args.figure {
        Figure::Population => {
            if from < 0.0 {
                return Err(usage("eccentricity grid must be non-negative"));
            }
            warn_extrapolation(to);
            let channels: Vec<ColorChannel> = match args.channel {
                Some(c) => vec![c],
                None => ColorChannel::ALL.to_vec(),
            };
            let mut t = Table::new(vec!["eccentricity_deg", "channel", "q05", "q25", "q50", "q75", "q95"]);
            for &c in &channels {
                for &e in &xs {
                    let mut row = vec![Cell::from(e), c.as_str().into()];
                    for q in POPULATION_QUANTILES {
                        row.push(population.threshold_quantile(c, e, q)?.into());
                    }
                    t.push(row);
                }
            }
            t
        }
        Figure::Lines | Figure::Ppi => {
            if from <= 0.0 {
                return Err(usage("distance grid must be positive"));
            }
            warn_extrapolation(args.eccentricity);
            let channel = args.channel.unwrap_or(ColorChannel::Achromatic);
            let lines = args.figure == Figure::Lines;
            let mut t = Table::new(if lines {
                vec!["distance_heights", "percentile", "threshold_ppd", "lines"]
            } else {
                vec!["distance_m", "percentile", "threshold_ppd", "ppi"]
            });
            for &x in &xs {
                for &p in percentiles {
                    let th = population.threshold_quantile(channel, args.eccentricity, p)?;
                    let y = if lines {
                        required_lines(x, th)?
                    } else {
                        required_ppi(x, th)?
                    };
                    t.push(vec![x.into(), p.into(), th.into(), y.into()]);
                }
            }
            t
        }
    };
    let kind = match args.figure {
        Figure::Population => "population",
        Figure::Lines => "lines",
        Figure::Ppi => "ppi",
    };
    table.write(&mut std::io::stdout().lock(), format, kind)
}
