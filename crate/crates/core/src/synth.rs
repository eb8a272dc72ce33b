//! Seeded synthetic PPG cohorts with known heart rates and crest positions.
//!
//! Each beat is a raised-cosine upstroke followed by an exponential decay that
//! is tapered to reach zero at the next onset. Beat lengths carry Gaussian
//! jitter. HighCL trials beat faster than the subject's baseline by a fixed
//! multiplier; LowCL trials beat at the baseline rate.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, Recording, SamplingSpec, SubjectId, SubjectSession, Task, Trial};

/// Fraction of each beat spent on the upstroke.
const RISE_FRACTION: f64 = 0.2;
/// Decay time constant as a fraction of the beat length.
const DECAY_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub subjects: usize,
    pub trials_per_class: usize,
    pub baselines_per_subject: usize,
    pub trial_seconds: f64,
    pub baseline_seconds: f64,
    pub sample_rate: f64,
    pub min_bpm: f64,
    pub max_bpm: f64,
    pub hrv_jitter_fraction: f64,
    pub min_gain: f64,
    pub max_gain: f64,
    pub load_bpm_multiplier: f64,
    /// White-noise standard deviation relative to the unit pulse height.
    pub noise_sigma_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            subjects: 20,
            trials_per_class: 6,
            baselines_per_subject: 3,
            trial_seconds: 60.0,
            baseline_seconds: 60.0,
            sample_rate: 128.0,
            min_bpm: 60.0,
            max_bpm: 100.0,
            hrv_jitter_fraction: 0.03,
            min_gain: 0.5,
            max_gain: 2.0,
            load_bpm_multiplier: 1.15,
            noise_sigma_fraction: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trial_seconds", self.trial_seconds),
            ("baseline_seconds", self.baseline_seconds),
            ("sample_rate", self.sample_rate),
            ("min_bpm", self.min_bpm),
            ("min_gain", self.min_gain),
            ("load_bpm_multiplier", self.load_bpm_multiplier),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("synth.{name} must be positive, got {v}")));
        }
        if self.max_bpm < self.min_bpm || self.max_gain < self.min_gain {
            return Err(Error::Config("synth ranges must have min <= max".into()));
        }
        if !(0.0..0.5).contains(&self.hrv_jitter_fraction) || !(self.noise_sigma_fraction >= 0.0) {
            return Err(Error::Config(
                "synth jitter must be in [0, 0.5) and noise non-negative".into(),
            ));
        }
        if self.subjects < 2 || self.baselines_per_subject == 0 {
            return Err(Error::Config(
                "synth needs at least 2 subjects and 1 baseline each".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSubjectSpec {
    pub subject_id: SubjectId,
    pub baseline_bpm: f64,
    pub hrv_jitter_fraction: f64,
    pub amplitude_gain: f64,
    pub load_bpm_multiplier: f64,
    pub noise_sigma_fraction: f64,
}

/// Ground truth for one generated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTruth {
    pub subject_id: SubjectId,
    pub task: Task,
    pub trial_index: usize,
    pub bpm: f64,
    pub amplitude_gain: f64,
    pub crests: Vec<usize>,
}

/// Pulse value at time `t` samples after an onset, for a beat lasting `period` samples.
fn pulse(t: f64, period: f64) -> f64 {
    let rise = RISE_FRACTION * period;
    if t < rise {
        0.5 - 0.5 * (PI * t / rise).cos()
    } else {
        let tau = DECAY_FRACTION * period;
        let floor = (-(period - rise) / tau).exp();
        (((-(t - rise) / tau).exp()) - floor) / (1.0 - floor)
    }
}

/// Unit-height beat train and the index of each complete beat's crest.
pub fn generate_beat_train<R: Rng + ?Sized>(
    bpm: f64,
    duration_s: f64,
    f_c: f64,
    jitter: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<usize>) {
    let len = (duration_s * f_c).round() as usize;
    let nominal = 60.0 * f_c / bpm;
    let draw = |rng: &mut R| {
        let z: f64 = StandardNormal.sample(rng);
        nominal * (1.0 + jitter * z).max(0.5)
    };
    // The first beat starts before sample 0 at a random phase.
    let first = draw(rng);
    let mut onsets = vec![-rng.random::<f64>() * first];
    let mut periods = vec![first];
    while onsets.last().unwrap() + periods.last().unwrap() < len as f64 {
        onsets.push(onsets.last().unwrap() + periods.last().unwrap());
        periods.push(draw(rng));
    }

    let mut samples = vec![0.0; len];
    let mut beat = 0;
    for (n, s) in samples.iter_mut().enumerate() {
        let t = n as f64;
        while t >= onsets[beat] + periods[beat] {
            beat += 1;
        }
        *s = pulse(t - onsets[beat], periods[beat]);
    }

    let crests = onsets
        .iter()
        .zip(&periods)
        .filter_map(|(&on, &p)| {
            let start = on.ceil();
            let end = (on + p).ceil();
            if start < 1.0 || end > len as f64 - 1.0 {
                return None;
            }
            let (start, end) = (start as usize, end as usize);
            (start..end).reduce(|a, b| if samples[b] > samples[a] { b } else { a })
        })
        .collect();
    (samples, crests)
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn subject_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn subject_id_for(index: usize) -> SubjectId {
    SubjectId::new(format!("S{:03}", index + 1))
}

pub fn draw_subject_spec<R: Rng + ?Sized>(index: usize, cfg: &SynthConfig, rng: &mut R) -> SyntheticSubjectSpec {
    let baseline_bpm = if cfg.max_bpm > cfg.min_bpm {
        rng.random_range(cfg.min_bpm..cfg.max_bpm)
    } else {
        cfg.min_bpm
    };
    SyntheticSubjectSpec {
        subject_id: subject_id_for(index),
        baseline_bpm,
        hrv_jitter_fraction: cfg.hrv_jitter_fraction,
        amplitude_gain: log_uniform(rng, cfg.min_gain, cfg.max_gain),
        load_bpm_multiplier: cfg.load_bpm_multiplier,
        noise_sigma_fraction: cfg.noise_sigma_fraction,
    }
}

/// `gain * (train + sigma * white)`; noise is drawn even at sigma 0 so the
/// random stream does not depend on the noise level.
fn render<R: Rng + ?Sized>(train: &[f64], spec: &SyntheticSubjectSpec, rng: &mut R) -> Vec<f64> {
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    train
        .iter()
        .map(|&v| spec.amplitude_gain * (v + spec.noise_sigma_fraction * noise.sample(rng)))
        .collect()
}

/// One subject: baselines first, then HighCL (MC) and LowCL (AL) trials interleaved.
pub fn generate_subject(
    index: usize,
    cfg: &SynthConfig,
    seed: u64,
) -> Result<(SyntheticSubjectSpec, SubjectSession, Vec<TrialTruth>)> {
    let mut rng = subject_rng(seed, index);
    let spec = draw_subject_spec(index, cfg, &mut rng);
    let sampling = SamplingSpec::discrete(cfg.sample_rate)?;

    let mut plan = vec![(Task::Baseline, None, spec.baseline_bpm, cfg.baseline_seconds); cfg.baselines_per_subject];
    for _ in 0..cfg.trials_per_class {
        plan.push((
            Task::MathCalculation,
            Some(ClassLabel::HighCl),
            spec.baseline_bpm * spec.load_bpm_multiplier,
            cfg.trial_seconds,
        ));
        plan.push((Task::AudioListening, Some(ClassLabel::LowCl), spec.baseline_bpm, cfg.trial_seconds));
    }

    let mut trials = Vec::with_capacity(plan.len());
    let mut truth = Vec::with_capacity(plan.len());
    for (trial_index, (task, label, bpm, seconds)) in plan.into_iter().enumerate() {
        let (train, crests) =
            generate_beat_train(bpm, seconds, cfg.sample_rate, spec.hrv_jitter_fraction, &mut rng);
        let samples = render(&train, &spec, &mut rng);
        let rec = Recording::new(samples, sampling, spec.subject_id.clone(), "ppg")?;
        trials.push(Trial::new(rec, task, label, trial_index));
        truth.push(TrialTruth {
            subject_id: spec.subject_id.clone(),
            task,
            trial_index,
            bpm,
            amplitude_gain: spec.amplitude_gain,
            crests,
        });
    }
    let session = SubjectSession::from_trials(spec.subject_id.clone(), trials)?;
    Ok((spec, session, truth))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCohort {
    pub subjects: Vec<SyntheticSubjectSpec>,
    pub sessions: Vec<SubjectSession>,
    pub truth: Vec<TrialTruth>,
}

/// `cfg.subjects` and `cfg.trials_per_class` set the cohort shape. Subjects are
/// generated in parallel from independent streams of the same seed.
pub fn generate_cohort(cfg: &SynthConfig, seed: u64) -> Result<SyntheticCohort> {
    cfg.validate()?;
    let parts: Vec<_> = (0..cfg.subjects)
        .into_par_iter()
        .map(|i| generate_subject(i, cfg, seed))
        .collect::<Result<_>>()?;
    let mut cohort = SyntheticCohort {
        subjects: Vec::with_capacity(parts.len()),
        sessions: Vec::with_capacity(parts.len()),
        truth: Vec::new(),
    };
    for (spec, session, truth) in parts {
        cohort.subjects.push(spec);
        cohort.sessions.push(session);
        cohort.truth.extend(truth);
    }
    Ok(cohort)
}
