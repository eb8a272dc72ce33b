//! Amplitude Z-score and personalized heartbeat-frequency normalization.
//!
//! Frequency normalization maps each subject onto a shared time axis in which
//! the resting heartbeat has the same period for everybody. With resting
//! heartbeat `f_b` (beats/s) and sampling rate `f_c` (samples/s), the
//! heartbeat in beats per sample is `f_Nb = f_b / f_c`; choosing a common
//! target `f_SNb` beats per SN-sample gives the personal resampling ratio
//!
//! ```text
//! f_SNc = f_Nb / f_SNb = (f_b / f_c) * (1 / f_SNb)    [SN-samples per sample]
//! ```
//!
//! All of a subject's recordings are resampled by that single ratio.

mod resample;

use serde::{Deserialize, Serialize};

pub use resample::{output_length, resample, Interpolation};

use crate::error::{Error, Result};
use crate::features::{detect_peaks, PeakConfig};
use crate::signal::{Domain, Recording, SamplingSpec, SubjectId, SubjectSession};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZScoreParams {
    pub mu: f64,
    pub sigma: f64,
}

impl ZScoreParams {
    pub const IDENTITY: ZScoreParams = ZScoreParams { mu: 0.0, sigma: 1.0 };
}

/// Mean and population standard deviation.
pub fn fit_zscore(samples: &[f64]) -> Result<ZScoreParams> {
    if samples.len() < 2 {
        return Err(Error::TooShort {
            len: samples.len(),
            min: 2,
        });
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if !(sigma > 0.0) || sigma <= mu.abs() * 1e-14 {
        return Err(Error::ConstantSignal);
    }
    Ok(ZScoreParams { mu, sigma })
}

pub fn apply_zscore(recording: &Recording, params: ZScoreParams) -> Result<Recording> {
    if params == ZScoreParams::IDENTITY {
        return Ok(recording.clone());
    }
    let out = recording
        .samples()
        .iter()
        .map(|x| (x - params.mu) / params.sigma)
        .collect();
    recording.with_samples(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    /// Target resting heartbeat in beats per SN-sample.
    pub f_snb: f64,
    pub min_plausible_bpm: f64,
    pub max_plausible_bpm: f64,
    pub interpolation: Interpolation,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            f_snb: 1.0 / 128.0,
            min_plausible_bpm: 30.0,
            max_plausible_bpm: 220.0,
            interpolation: Interpolation::WindowedSinc,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_snb > 0.0 && self.f_snb < 0.5) {
            return Err(Error::Config(format!(
                "f_snb must lie in (0, 0.5), got {}",
                self.f_snb
            )));
        }
        if !(self.min_plausible_bpm > 0.0 && self.min_plausible_bpm < self.max_plausible_bpm) {
            return Err(Error::Config("plausible bpm range is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineProfile {
    pub subject_id: SubjectId,
    /// Resting heartbeat, beats per second.
    pub f_b: f64,
    /// Resting heartbeat, beats per sample.
    pub f_nb: f64,
    /// Personal resampling ratio, SN-samples per sample.
    pub f_snc: f64,
    pub n_baselines_used: usize,
}

/// Mean of per-baseline heartbeat frequencies, each `f_c / mean(IBI)`.
pub fn estimate_baseline_frequency(
    baselines: &[Recording],
    peak_cfg: &PeakConfig,
    cfg: &NormalizationConfig,
) -> Result<f64> {
    if baselines.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = 0.0;
    for rec in baselines {
        let peaks = detect_peaks(rec, peak_cfg);
        if peaks.len() < 3 {
            return Err(Error::TooFewPeaks {
                found: peaks.len(),
                required: 3,
            });
        }
        let mean_ibi = (peaks[peaks.len() - 1] - peaks[0]) as f64 / (peaks.len() - 1) as f64;
        total += rec.sample_rate() / mean_ibi;
    }
    let f_b = total / baselines.len() as f64;
    let bpm = f_b * 60.0;
    if bpm < cfg.min_plausible_bpm || bpm > cfg.max_plausible_bpm {
        return Err(Error::ImplausibleHeartRate { bpm });
    }
    Ok(f_b)
}

pub fn personal_resampling_frequency(f_b: f64, f_c: f64, cfg: &NormalizationConfig) -> Result<f64> {
    for (what, value) in [("f_b", f_b), ("f_c", f_c), ("f_SNb", cfg.f_snb)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveInput { what, value });
        }
    }
    Ok((f_b / f_c) * (1.0 / cfg.f_snb))
}

/// Maps a discrete-time recording into the subject-normalized domain.
pub fn resample_to_snd(recording: &Recording, f_snc: f64, method: Interpolation) -> Result<Recording> {
    if recording.domain() != Domain::DiscreteTime {
        return Err(Error::WrongDomain {
            expected: Domain::DiscreteTime.name(),
        });
    }
    if !(f_snc > 0.0 && f_snc.is_finite()) {
        return Err(Error::NonPositiveInput {
            what: "f_SNc",
            value: f_snc,
        });
    }
    let out = resample(recording.samples(), f_snc, method);
    if out.is_empty() {
        return Err(Error::TooShort {
            len: recording.len(),
            min: (1.0 / f_snc).ceil() as usize,
        });
    }
    let spec = SamplingSpec::new(recording.sample_rate() * f_snc, Domain::SubjectNormalized)?;
    Ok(recording.with_samples(out)?.with_spec(spec))
}

pub fn baseline_profile(
    session: &SubjectSession,
    cfg: &NormalizationConfig,
    peak_cfg: &PeakConfig,
) -> Result<BaselineProfile> {
    let baselines: Vec<Recording> = session
        .baselines()
        .iter()
        .map(|t| t.recording.clone())
        .collect();
    let f_c = baselines[0].sample_rate();
    if let Some(other) = baselines.iter().find(|r| r.sample_rate() != f_c) {
        return Err(Error::MixedSampleRates {
            first: f_c,
            other: other.sample_rate(),
        });
    }
    let f_b = estimate_baseline_frequency(&baselines, peak_cfg, cfg)?;
    let f_snc = personal_resampling_frequency(f_b, f_c, cfg)?;
    Ok(BaselineProfile {
        subject_id: session.subject_id().clone(),
        f_b,
        f_nb: f_b / f_c,
        f_snc,
        n_baselines_used: baselines.len(),
    })
}

/// Computes the subject's profile from all baselines and resamples every trial,
/// baselines included, with the single personal ratio.
pub fn normalize_subject(
    session: &SubjectSession,
    cfg: &NormalizationConfig,
    peak_cfg: &PeakConfig,
) -> Result<(BaselineProfile, SubjectSession)> {
    cfg.validate()?;
    let profile = baseline_profile(session, cfg, peak_cfg)?;
    let normalized = session.map_recordings(|r| resample_to_snd(r, profile.f_snc, cfg.interpolation))?;
    Ok((profile, normalized))
}
