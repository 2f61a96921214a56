use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use retina_limit::fitting::{
    fit_model, fit_psychometric, flag_outliers, read_thresholds_csv, read_trials_csv, Baseline, FitResult,
    ModelFitOptions, PsychometricFit, PsychometricFitOptions, ThresholdRecord, TrialRecord,
};
use retina_limit::ColorChannel;
use serde::Serialize;

use super::parse_channel;
use crate::data::DataSources;
use crate::output::{write_json, Cell, Format, Table, OUTPUT_SCHEMA};
use crate::usage;

fn parse_baseline(s: &str) -> Result<Baseline, String> {
    match s {
        "initial" => Ok(Baseline::Initial),
        "free" => Ok(Baseline::Free),
        v => v
            .parse::<f64>()
            .map(Baseline::Fixed)
            .map_err(|_| format!("expected 'initial', 'free' or a number, got '{v}'")),
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// CSV with columns observer_id, channel, eccentricity_deg, value and,
    /// for trial data, correct.
    #[arg(long)]
    pub input: PathBuf,
    /// Fit only this channel; every channel present in the input otherwise.
    #[arg(long, value_parser = parse_channel)]
    pub channel: Option<ColorChannel>,
    /// Sensitivity of the measured stimulus; the model's value for the
    /// channel when omitted. Needs --channel.
    #[arg(long, requires = "channel")]
    pub sensitivity: Option<f64>,
    /// Input rows are individual 2IFC trials (value is the stimulus ppd);
    /// thresholds are fitted per observer and condition first.
    #[arg(long)]
    pub trials: bool,
    /// Fit the psychometric slope as well as the threshold.
    #[arg(long, requires = "trials")]
    pub fit_slope: bool,
    /// Baseline treatment: initial (hold at the model value), free, or a
    /// fixed log10 value.
    #[arg(long, default_value = "initial", value_parser = parse_baseline)]
    pub baseline: Baseline,
    /// Skip the per-condition outlier rejection (applied only when some
    /// condition has at least three thresholds).
    #[arg(long)]
    pub no_outliers: bool,
    /// Write a model file with the fitted channels replaced.
    #[arg(long)]
    pub write_model: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct ThresholdFit {
    observer_id: String,
    channel: ColorChannel,
    eccentricity: f64,
    trials: usize,
    #[serde(flatten)]
    fit: PsychometricFit,
}

#[derive(Debug, Serialize)]
struct Skipped {
    observer_id: String,
    channel: ColorChannel,
    eccentricity: f64,
    reason: String,
}

#[derive(Debug, Serialize)]
struct FitReport {
    schema: u32,
    input: String,
    records: usize,
    psychometric: Vec<ThresholdFit>,
    skipped: Vec<Skipped>,
    excluded: Vec<ThresholdRecord>,
    fits: Vec<FitResult>,
}

/// Groups trials by observer and condition, keeping first-seen order.
fn group_trials(trials: &[TrialRecord]) -> Vec<Vec<TrialRecord>> {
    let mut order: Vec<(String, ColorChannel, u64)> = Vec::new();
    let mut groups: BTreeMap<(String, ColorChannel, u64), Vec<TrialRecord>> = BTreeMap::new();
    for t in trials {
        let key = (t.observer_id.clone(), t.channel, t.eccentricity.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(t.clone());
    }
    order
        .into_iter()
        .map(|k| groups.remove(&k).unwrap_or_default())
        .collect()
}

/// Size of the largest (channel, eccentricity) group.
fn largest_condition(records: &[ThresholdRecord]) -> usize {
    let mut counts: BTreeMap<(ColorChannel, u64), usize> = BTreeMap::new();
    for r in records {
        *counts.entry((r.channel, r.eccentricity.to_bits())).or_default() += 1;
    }
    counts.into_values().max().unwrap_or(0)
}

pub fn run(args: &Args, data: &DataSources, format: Format) -> Result<()> {
    let file = File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let mut psychometric = Vec::new();
    let mut skipped = Vec::new();
    let mut records = if args.trials {
        let trials = read_trials_csv(file)?;
        let opts = PsychometricFitOptions {
            fit_slope: args.fit_slope,
            ..Default::default()
        };
        let mut out = Vec::new();
        for group in group_trials(&trials) {
            let first = &group[0];
            match fit_psychometric(&group, &opts) {
                Ok(fit) => {
                    out.push(ThresholdRecord::new(
                        first.observer_id.clone(),
                        first.channel,
                        first.eccentricity,
                        fit.threshold_ppd,
                    ));
                    psychometric.push(ThresholdFit {
                        observer_id: first.observer_id.clone(),
                        channel: first.channel,
                        eccentricity: first.eccentricity,
                        trials: group.len(),
                        fit,
                    });
                }
                Err(e) => {
                    log::warn!(
                        "no threshold for {} {} at {} deg: {e}",
                        first.observer_id,
                        first.channel,
                        first.eccentricity
                    );
                    skipped.push(Skipped {
                        observer_id: first.observer_id.clone(),
                        channel: first.channel,
                        eccentricity: first.eccentricity,
                        reason: e.to_string(),
                    });
                }
            }
        }
        out
    } else {
        read_thresholds_csv(file)?
    };
    if !args.no_outliers && largest_condition(&records) >= 3 {
        flag_outliers(&mut records);
    }
    let excluded: Vec<ThresholdRecord> = records.iter().filter(|r| r.is_excluded()).cloned().collect();

    let channels: Vec<ColorChannel> = match args.channel {
        Some(c) => vec![c],
        None => ColorChannel::ALL
            .into_iter()
            .filter(|c| records.iter().any(|r| r.channel == *c))
            .collect(),
    };
    if channels.is_empty() {
        return Err(usage(format!("{} holds no threshold records", args.input.display())));
    }
    let mut model = data.model()?;
    let mut fits = Vec::new();
    for &c in &channels {
        let initial = model.params(c);
        let sensitivity = args.sensitivity.unwrap_or(initial.stimulus_sensitivity);
        let opts = ModelFitOptions {
            initial: Some(initial),
            baseline: args.baseline,
            ..Default::default()
        };
        let fit = fit_model(&records, c, sensitivity, &opts).with_context(|| format!("fitting channel {c}"))?;
        model = model.with_channel(c, fit.params(), fit.provenance.clone());
        fits.push(fit);
    }
    if let Some(path) = &args.write_model {
        std::fs::write(path, model.to_json()?).with_context(|| format!("writing {}", path.display()))?;
    }

    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => write_json(
            &mut out,
            &FitReport {
                schema: OUTPUT_SCHEMA,
                input: args.input.display().to_string(),
                records: records.len(),
                psychometric,
                skipped,
                excluded,
                fits,
            },
        )?,
        Format::Csv | Format::Table => {
            let mut t = Table::new(vec![
                "channel",
                "log_s0",
                "k_rho",
                "k_ecc",
                "rss",
                "threshold_ppd_0deg",
                "converged",
            ]);
            for f in &fits {
                t.push(vec![
                    Cell::from(f.channel.as_str()),
                    f.estimates.log_s0.into(),
                    f.estimates.k_rho.into(),
                    f.estimates.k_ecc.into(),
                    f.residual_sum_of_squares.into(),
                    f.params().threshold_resolution(0.0)?.into(),
                    f.converged.to_string().into(),
                ]);
            }
            t.write(&mut out, format, "fit")?;
            if format == Format::Table && !excluded.is_empty() {
                writeln!(out, "{} record(s) excluded as outliers", excluded.len())?;
            }
        }
    }
    Ok(())
}
