//! Handcrafted per-trial features.
//!
//! Four amplitude statistics (minimum, maximum, mean, standard deviation) and
//! three rhythm features derived from detected peaks (peak rate, mean
//! inter-beat interval, RMSSD). Rhythm features are in samples, which means
//! SN-samples on subject-normalized recordings.

mod peaks;

use serde::{Deserialize, Serialize};

pub use peaks::{detect_peaks, find_peaks, prominence, PeakConfig};

use crate::error::{Error, Result};
use crate::signal::{Recording, SubjectId};

pub const FEATURE_COUNT: usize = 7;
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] =
    ["min", "max", "mean", "std", "peak_rate", "ibi", "rmssd"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub minimum: f64,
    pub maximum: f64,
    pub mean: f64,
    pub std_dev: f64,
    /// Peaks per sample.
    pub peak_rate: f64,
    /// Mean distance between consecutive peaks, in samples.
    pub ibi_mean: f64,
    /// Root mean square of successive IBI differences, in samples.
    pub rmssd: f64,
}

impl FeatureVector {
    /// Fixed column order: min, max, mean, std, peak_rate, ibi, rmssd.
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.minimum,
            self.maximum,
            self.mean,
            self.std_dev,
            self.peak_rate,
            self.ibi_mean,
            self.rmssd,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_COUNT]) -> Self {
        Self {
            minimum: a[0],
            maximum: a[1],
            mean: a[2],
            std_dev: a[3],
            peak_rate: a[4],
            ibi_mean: a[5],
            rmssd: a[6],
        }
    }
}

pub fn extract_features(recording: &Recording, cfg: &PeakConfig) -> Result<FeatureVector> {
    let peaks = detect_peaks(recording, cfg);
    features_from_peaks(recording.samples(), &peaks)
}

/// The seven features given the samples and already-detected peak indices.
pub fn features_from_peaks(samples: &[f64], peaks: &[usize]) -> Result<FeatureVector> {
    if peaks.len() < 3 {
        return Err(Error::TooFewPeaks {
            found: peaks.len(),
            required: 3,
        });
    }
    let n = samples.len() as f64;
    let (minimum, maximum) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mean = samples.iter().sum::<f64>() / n;
    let std_dev = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();

    let ibis: Vec<f64> = peaks.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let ibi_mean = ibis.iter().sum::<f64>() / ibis.len() as f64;
    let sq: f64 = ibis.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    let rmssd = (sq / (ibis.len() - 1) as f64).sqrt();

    Ok(FeatureVector {
        minimum,
        maximum,
        mean,
        std_dev,
        peak_rate: peaks.len() as f64 / n,
        ibi_mean,
        rmssd,
    })
}

/// Subject resting-state means of the three rhythm features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineFeatureStats {
    pub subject_id: SubjectId,
    pub peak_rate: f64,
    pub ibi_mean: f64,
    pub rmssd: f64,
}

impl BaselineFeatureStats {
    pub fn from_baselines(subject_id: SubjectId, baselines: &[FeatureVector]) -> Result<Self> {
        if baselines.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = baselines.len() as f64;
        let mean_of = |f: fn(&FeatureVector) -> f64| baselines.iter().map(f).sum::<f64>() / n;
        let stats = Self {
            subject_id,
            peak_rate: mean_of(|v| v.peak_rate),
            ibi_mean: mean_of(|v| v.ibi_mean),
            rmssd: mean_of(|v| v.rmssd),
        };
        stats.check()?;
        Ok(stats)
    }

    fn check(&self) -> Result<()> {
        for (feature, v) in [
            ("peak_rate", self.peak_rate),
            ("ibi", self.ibi_mean),
            ("rmssd", self.rmssd),
        ] {
            if v == 0.0 || !v.is_finite() {
                return Err(Error::ZeroBaselineFeature { feature });
            }
        }
        Ok(())
    }
}

/// `(feature - baseline_mean) / baseline_mean` on peak rate, IBI and RMSSD;
/// amplitude features pass through.
pub fn subject_feature_normalize(fv: &FeatureVector, stats: &BaselineFeatureStats) -> Result<FeatureVector> {
    stats.check()?;
    let rel = |x: f64, base: f64| (x - base) / base;
    Ok(FeatureVector {
        peak_rate: rel(fv.peak_rate, stats.peak_rate),
        ibi_mean: rel(fv.ibi_mean, stats.ibi_mean),
        rmssd: rel(fv.rmssd, stats.rmssd),
        ..*fv
    })
}

/// Per-column z-score parameters fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub means: Vec<f64>,
    pub std_devs: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooShort {
                len: rows.len(),
                min: 2,
            });
        }
        let dim = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.len(),
            });
        }
        let n = rows.len() as f64;
        let means: Vec<f64> = (0..dim)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let std_devs: Vec<f64> = (0..dim)
            .map(|j| (rows.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        if let Some(index) = std_devs
            .iter()
            .zip(&means)
            .position(|(&s, &m)| !(s > 0.0) || s <= m.abs() * 1e-14)
        {
            return Err(Error::DegenerateFeature { index });
        }
        Ok(Self { means, std_devs })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            std_devs: vec![1.0; dim],
        }
    }

    /// No clipping: values far outside the training range stay finite and unbounded.
    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.means.iter().zip(&self.std_devs))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}

pub fn fit_standardization(train: &[FeatureVector]) -> Result<StandardizationParams> {
    let rows: Vec<Vec<f64>> = train.iter().map(|f| f.to_array().to_vec()).collect();
    StandardizationParams::fit(&rows)
}

pub fn apply_standardization(fv: &FeatureVector, params: &StandardizationParams) -> Result<FeatureVector> {
    let out = params.apply(&fv.to_array())?;
    let mut a = [0.0; FEATURE_COUNT];
    a.copy_from_slice(&out);
    Ok(FeatureVector::from_array(a))
}
