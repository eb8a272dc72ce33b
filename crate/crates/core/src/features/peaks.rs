use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::signal::Recording;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakConfig {
    /// Minimum distance between accepted peaks. Converted to samples with the
    /// recording's (nominal) sample rate.
    pub min_separation_seconds: f64,
    /// Minimum topographic prominence as a fraction of the peak-to-peak range.
    pub min_prominence_fraction: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            min_separation_seconds: 0.33,
            min_prominence_fraction: 0.3,
        }
    }
}

impl PeakConfig {
    pub fn separation_samples(&self, sample_rate: f64) -> f64 {
        self.min_separation_seconds * sample_rate
    }
}

pub fn detect_peaks(recording: &Recording, cfg: &PeakConfig) -> Vec<usize> {
    find_peaks(
        recording.samples(),
        cfg.separation_samples(recording.sample_rate()),
        cfg.min_prominence_fraction,
    )
}

/// Strict interior local maxima with prominence at least
/// `prominence_fraction * (max - min)`, thinned so that accepted peaks are at
/// least `min_distance` samples apart. Higher peaks win separation conflicts;
/// equal heights keep the earlier index.
pub fn find_peaks(x: &[f64], min_distance: f64, prominence_fraction: f64) -> Vec<usize> {
    if x.len() < 3 {
        return Vec::new();
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let min_prominence = prominence_fraction * (hi - lo);

    let mut candidates: Vec<usize> = (1..x.len() - 1)
        .filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1])
        .filter(|&i| prominence(x, i) >= min_prominence)
        .collect();

    candidates.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut kept = BTreeSet::new();
    for i in candidates {
        let clear_left = kept
            .range(..i)
            .next_back()
            .is_none_or(|&j: &usize| (i - j) as f64 >= min_distance);
        let clear_right = kept
            .range(i..)
            .next()
            .is_none_or(|&j: &usize| (j - i) as f64 >= min_distance);
        if clear_left && clear_right {
            kept.insert(i);
        }
    }
    kept.into_iter().collect()
}

/// Height of a peak above the higher of its two bases; each base is the
/// minimum between the peak and the nearest strictly higher sample on that
/// side (or the signal edge).
pub fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}
