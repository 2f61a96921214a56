use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use retina_limit::fitting::write_trials_csv;
use retina_limit::freq;
use retina_limit::psychophysics::{
    run_session, Prior, PsychometricFunction, QuestConfig, RepeatRule, SessionLabels, SessionSummary, DEFAULT_GUESS,
    DEFAULT_LAPSE, DEFAULT_SLOPE,
};
use retina_limit::ColorChannel;
use serde::Serialize;

use super::parse_channel;
use crate::data::DataSources;
use crate::output::{write_json, Format, OUTPUT_SCHEMA};
use crate::usage;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Channel label copied onto the simulated trials.
    #[arg(long, default_value = "achromatic", value_parser = parse_channel)]
    pub channel: ColorChannel,
    /// Eccentricity label (degrees) copied onto the simulated trials.
    #[arg(long, default_value_t = 0.0)]
    pub eccentricity: f64,
    /// Threshold of the simulated observer in ppd.
    #[arg(long)]
    pub true_threshold_ppd: f64,
    /// Number of independent sessions.
    #[arg(long, default_value_t = 1)]
    pub sessions: u64,
    /// Seed of the first session; session i uses seed + i.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weibull slope of the observer and of the QUEST likelihood.
    #[arg(long, default_value_t = DEFAULT_SLOPE)]
    pub slope: f64,
    /// Centre of the QUEST prior in ppd.
    #[arg(long, default_value_t = 60.0)]
    pub prior_mean_ppd: f64,
    /// One presentation per update instead of majority of three.
    #[arg(long)]
    pub single: bool,
    /// Write every presentation to this CSV.
    #[arg(long)]
    pub trials_out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    schema: u32,
    true_threshold_ppd: f64,
    sessions: u64,
    first_seed: u64,
    mean_estimate_ppd: f64,
    median_estimate_ppd: f64,
    sd_estimate_ppd: f64,
    relative_bias: f64,
    mean_updates: f64,
    min_updates: usize,
    max_updates: usize,
    presentations: usize,
    per_session: Vec<SessionSummary>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn run(args: &Args, _data: &DataSources, format: Format) -> Result<()> {
    if !(args.true_threshold_ppd > 0.0 && args.true_threshold_ppd.is_finite()) {
        return Err(usage("--true-threshold-ppd must be positive"));
    }
    if args.sessions == 0 {
        return Err(usage("--sessions must be at least 1"));
    }
    let observer = PsychometricFunction::new(
        freq::from_ppd(args.true_threshold_ppd),
        args.slope,
        DEFAULT_GUESS,
        DEFAULT_LAPSE,
    )?;
    let defaults = QuestConfig::default();
    let prior_sd = match defaults.prior {
        Prior::Gaussian { sd, .. } => sd,
        Prior::Uniform => 0.5,
    };
    let config = QuestConfig {
        prior: Prior::Gaussian {
            mean_ppd: args.prior_mean_ppd,
            sd: prior_sd,
        },
        slope_beta: args.slope,
        repeat: if args.single {
            RepeatRule::Single
        } else {
            RepeatRule::MajorityOfThree
        },
        ..defaults
    };

    let mut trials_writer = match &args.trials_out {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let mut summaries = Vec::with_capacity(args.sessions as usize);
    let mut all_trials = Vec::new();
    let mut presentations = 0;
    for i in 0..args.sessions {
        let seed = args.seed.wrapping_add(i);
        let labels = SessionLabels {
            observer_id: format!("sim-{seed}"),
            channel: args.channel,
            eccentricity: args.eccentricity,
        };
        let result = run_session(&observer, &config, &labels, seed)?;
        presentations += result.trials.len();
        if trials_writer.is_some() {
            all_trials.extend(result.trials.iter().cloned());
        }
        summaries.push(result.summary(seed));
    }
    if let Some(w) = trials_writer.as_mut() {
        write_trials_csv(&mut *w, &all_trials)?;
        w.flush()?;
    }

    let estimates: Vec<f64> = summaries.iter().map(|s| s.estimate_ppd).collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let sd = if estimates.len() > 1 {
        (estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let updates: Vec<usize> = summaries.iter().map(|s| s.updates).collect();
    let report = SimulationReport {
        schema: OUTPUT_SCHEMA,
        true_threshold_ppd: args.true_threshold_ppd,
        sessions: args.sessions,
        first_seed: args.seed,
        mean_estimate_ppd: mean,
        median_estimate_ppd: median(&estimates),
        sd_estimate_ppd: sd,
        relative_bias: mean / args.true_threshold_ppd - 1.0,
        mean_updates: updates.iter().sum::<usize>() as f64 / n,
        min_updates: updates.iter().copied().min().unwrap_or(0),
        max_updates: updates.iter().copied().max().unwrap_or(0),
        presentations,
        per_session: summaries,
    };
    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => write_json(&mut out, &report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for s in &report.per_session {
                w.serialize(s)?;
            }
            w.flush()?;
        }
        Format::Table => {
            writeln!(
                out,
                "{} session(s), true threshold {:.2} ppd",
                report.sessions, report.true_threshold_ppd
            )?;
            writeln!(
                out,
                "estimate: mean {:.2}, median {:.2}, sd {:.2} ppd (bias {:+.2}%)",
                report.mean_estimate_ppd,
                report.median_estimate_ppd,
                report.sd_estimate_ppd,
                100.0 * report.relative_bias
            )?;
            writeln!(
                out,
                "updates per session: {}-{} (mean {:.1}), {} presentations in total",
                report.min_updates, report.max_updates, report.mean_updates, report.presentations
            )?;
        }
    }
    Ok(())
}
