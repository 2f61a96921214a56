use std::io::{Read, Write};

use super::{ThresholdRecord, TrialRecord};
use crate::csf::ColorChannel;
use crate::error::{Error, Result};

const HEADER: [&str; 5] = ["observer_id", "channel", "eccentricity_deg", "value", "correct"];

struct Columns {
    observer: usize,
    channel: usize,
    ecc: usize,
    value: usize,
    correct: Option<usize>,
}

fn columns(headers: &csv::StringRecord) -> Result<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let need = |name: &str| find(name).ok_or_else(|| Error::InvalidInput(format!("missing CSV column '{name}'")));
    Ok(Columns {
        observer: need("observer_id")?,
        channel: need("channel")?,
        ecc: need("eccentricity_deg")?,
        value: need("value")?,
        correct: find("correct"),
    })
}

fn field(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<&str> {
    rec.get(idx)
        .map(str::trim)
        .ok_or_else(|| Error::InvalidInput(format!("line {line}: missing field")))
}

fn number(rec: &csv::StringRecord, idx: usize, line: u64, what: &str) -> Result<f64> {
    let s = field(rec, idx, line)?;
    s.parse()
        .map_err(|_| Error::InvalidInput(format!("line {line}: {what} '{s}' is not a number")))
}

fn parse_bool(s: &str, line: u64) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(Error::InvalidInput(format!(
            "line {line}: correct '{s}' is not a boolean"
        ))),
    }
}

fn rows<R: Read>(reader: R) -> Result<(Columns, Vec<(u64, csv::StringRecord)>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cols = columns(rdr.headers()?)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok((cols, out))
}

fn common(cols: &Columns, rec: &csv::StringRecord, line: u64) -> Result<(String, ColorChannel, f64, f64)> {
    let observer = field(rec, cols.observer, line)?.to_string();
    let channel: ColorChannel = field(rec, cols.channel, line)?
        .parse()
        .map_err(|e: Error| Error::InvalidInput(format!("line {line}: {e}")))?;
    let ecc = number(rec, cols.ecc, line, "eccentricity")?;
    if !(ecc >= 0.0 && ecc.is_finite()) {
        return Err(Error::InvalidInput(format!("line {line}: eccentricity must be >= 0")));
    }
    let value = number(rec, cols.value, line, "value")?;
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "line {line}: value must be a positive ppd"
        )));
    }
    Ok((observer, channel, ecc, value))
}

/// Reads per-observer thresholds; `value` is the threshold in ppd. A
/// `correct` column, if present, is ignored.
pub fn read_thresholds_csv<R: Read>(reader: R) -> Result<Vec<ThresholdRecord>> {
    let (cols, rows) = rows(reader)?;
    rows.iter()
        .map(|(line, rec)| {
            let (observer, channel, ecc, value) = common(&cols, rec, *line)?;
            Ok(ThresholdRecord::new(observer, channel, ecc, value))
        })
        .collect()
}

/// Reads binary trials; `value` is the stimulus in ppd and `correct` is
/// required.
pub fn read_trials_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let (cols, rows) = rows(reader)?;
    let correct = cols
        .correct
        .ok_or_else(|| Error::InvalidInput("trial CSV needs a 'correct' column".into()))?;
    rows.iter()
        .map(|(line, rec)| {
            let (observer_id, channel, eccentricity, stimulus_ppd) = common(&cols, rec, *line)?;
            Ok(TrialRecord {
                observer_id,
                channel,
                eccentricity,
                stimulus_ppd,
                correct: parse_bool(field(rec, correct, *line)?, *line)?,
            })
        })
        .collect()
}

pub fn write_trials_csv<W: Write>(writer: W, trials: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for t in trials {
        w.write_record([
            t.observer_id.as_str(),
            t.channel.as_str(),
            &t.eccentricity.to_string(),
            &t.stimulus_ppd.to_string(),
            if t.correct { "1" } else { "0" },
        ])?;
    }
    w.flush()?;
    Ok(())
}
