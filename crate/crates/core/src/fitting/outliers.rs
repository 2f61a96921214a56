use std::collections::BTreeMap;

use super::ThresholdRecord;

/// Modified Z-score above which a value is an outlier.
pub const OUTLIER_Z: f64 = 3.5;
/// Scale factor turning MAD into a normal-consistent spread estimate.
const MAD_FACTOR: f64 = 0.6745;
/// Mean-absolute-deviation consistency constant (sqrt(pi/2)), used when the
/// MAD is zero.
pub const MAD_CONSISTENCY: f64 = 1.2533;

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Modified Z-score of each value, `None` for groups smaller than three.
///
/// `z = 0.6745 * |v - median| / MAD`. When the MAD is zero the mean absolute
/// deviation about the median is used instead, as `|v - median| /
/// (1.2533 * meanAD)`. All-equal groups score zero.
pub fn modified_z_scores(values: &[f64]) -> Option<Vec<f64>> {
    if values.len() < 3 {
        return None;
    }
    let med = median(&sorted(values.iter().copied()));
    let dev = sorted(values.iter().map(|v| (v - med).abs()));
    let mad = median(&dev);
    let scores = if mad > 0.0 {
        values.iter().map(|v| MAD_FACTOR * (v - med).abs() / mad).collect()
    } else {
        let mean_ad = dev.iter().sum::<f64>() / dev.len() as f64;
        if mean_ad > 0.0 {
            values
                .iter()
                .map(|v| (v - med).abs() / (MAD_CONSISTENCY * mean_ad))
                .collect()
        } else {
            vec![0.0; values.len()]
        }
    };
    Some(scores)
}

/// Flags values whose modified Z-score exceeds 3.5. Groups smaller than three
/// are left unflagged with a warning.
pub fn mad_outliers(values: &[f64]) -> Vec<bool> {
    match modified_z_scores(values) {
        Some(z) => z.into_iter().map(|z| z > OUTLIER_Z).collect(),
        None => {
            log::warn!("outlier group of {} values is too small to flag", values.len());
            vec![false; values.len()]
        }
    }
}

/// Applies [`mad_outliers`] per (channel, eccentricity) group, marking
/// records as excluded. Returns the number of newly flagged records.
pub fn flag_outliers(records: &mut [ThresholdRecord]) -> usize {
    let mut groups: BTreeMap<(crate::ColorChannel, u64), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry((r.channel, r.eccentricity.to_bits())).or_default().push(i);
    }
    let mut flagged = 0;
    for idx in groups.values() {
        let values: Vec<f64> = idx.iter().map(|&i| records[i].threshold_ppd).collect();
        let z = modified_z_scores(&values);
        for (k, flag) in mad_outliers(&values).into_iter().enumerate() {
            if flag && records[idx[k]].excluded.is_none() {
                let score = z.as_ref().map(|z| z[k]).unwrap_or(f64::NAN);
                records[idx[k]].excluded = Some(format!("modified z-score {score:.2} > {OUTLIER_Z}"));
                flagged += 1;
            }
        }
    }
    flagged
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ColorChannel;

    #[test]
    fn hand_computed_fixture() {
        let v = [10.0, 11.0, 12.0, 11.0, 10.0, 50.0];
        // median 11, |dev| = [1,0,1,0,1,39] -> MAD = 1
        let z = modified_z_scores(&v).unwrap();
        assert!((z[5] - 0.6745 * 39.0).abs() < 1e-12);
        assert_eq!(mad_outliers(&v), vec![false, false, false, false, false, true]);
    }

    #[test]
    fn all_equal_group_is_clean() {
        assert_eq!(mad_outliers(&[4.0; 7]), vec![false; 7]);
    }

    #[test]
    fn zero_mad_fallback() {
        // more than half the values coincide, so the MAD is zero
        let v = [5.0, 5.0, 5.0, 5.0, 6.0, 30.0];
        let z = modified_z_scores(&v).unwrap();
        let mean_ad = 26.0 / 6.0;
        assert!((z[5] - 25.0 / (1.2533 * mean_ad)).abs() < 1e-12);
        assert_eq!(mad_outliers(&v), vec![false, false, false, false, false, true]);
    }

    #[test]
    fn small_groups_not_flagged() {
        assert_eq!(mad_outliers(&[1.0, 100.0]), vec![false, false]);
        assert!(modified_z_scores(&[1.0, 2.0]).is_none());
    }

    #[test]
    fn grouping_by_condition() {
        let mut recs: Vec<ThresholdRecord> = [10.0, 11.0, 12.0, 11.0, 10.0, 50.0]
            .iter()
            .enumerate()
            .map(|(i, v)| ThresholdRecord::new(format!("o{i}"), ColorChannel::Achromatic, 0.0, *v))
            .collect();
        // a second condition where 50 is ordinary
        for (i, v) in [48.0, 50.0, 52.0].iter().enumerate() {
            recs.push(ThresholdRecord::new(format!("p{i}"), ColorChannel::RedGreen, 0.0, *v));
        }
        assert_eq!(flag_outliers(&mut recs), 1);
        assert!(recs[5].is_excluded());
        assert!(recs[6..].iter().all(|r| !r.is_excluded()));
    }
}
