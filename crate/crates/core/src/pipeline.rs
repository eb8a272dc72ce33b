//! End-to-end orchestration: denoise, normalize, extract features, evaluate.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::classify::ClassifierSettings;
use crate::config::{PipelineConfig, Strategy};
use crate::dataset::{label_session, LabelingScheme};
use crate::error::{Error, Result, StageExt};
use crate::evaluate::{run_loso, Instance};
use crate::features::{extract_features, subject_feature_normalize, BaselineFeatureStats, PeakConfig};
use crate::io::{self, SummaryRow};
use crate::normalize::{apply_zscore, fit_zscore, normalize_subject, BaselineProfile};
use crate::signal::{concatenate_trials, split_by_markers, SubjectSession, Task, Trial};
use crate::synth::generate_cohort;
use crate::wavelet::denoise;

/// Denoises every recording of every session.
pub fn denoise_sessions(sessions: &[SubjectSession], cfg: &PipelineConfig) -> Result<Vec<SubjectSession>> {
    let spec = cfg.wavelet.spec()?;
    let rule = cfg.wavelet.threshold;
    sessions
        .par_iter()
        .map(|s| s.map_recordings(|r| denoise(r, &spec, rule)))
        .collect::<Result<_>>()
        .stage("denoise")
}

/// Z-scores a group of trials as one concatenated signal and splits it back.
fn zscore_group(trials: &[Trial]) -> Result<Vec<Trial>> {
    if trials.is_empty() {
        return Ok(Vec::new());
    }
    let (joined, markers) = concatenate_trials(trials)?;
    let params = fit_zscore(joined.samples())?;
    let scaled = apply_zscore(&joined, params)?;
    split_by_markers(&scaled, &markers)
}

/// Amplitude normalization of one subject. Trials whose task is listed in
/// `separate` form their own concatenation; everything else forms another.
pub fn amplitude_normalize(session: &SubjectSession, separate: &[Task]) -> Result<SubjectSession> {
    let (apart, joint): (Vec<Trial>, Vec<Trial>) = session
        .trials_in_order()
        .into_iter()
        .partition(|t| separate.contains(&t.task));
    let mut trials = zscore_group(&joint)?;
    trials.extend(zscore_group(&apart)?);
    SubjectSession::from_trials(session.subject_id().clone(), trials)
}

/// Signal-level part of a strategy. SubjFeatN acts on features, so at this
/// level it matches AmpN. Profiles are only produced by PersFreqN.
pub fn normalize_sessions(
    denoised: &[SubjectSession],
    strategy: Strategy,
    cfg: &PipelineConfig,
) -> Result<(Vec<SubjectSession>, Vec<BaselineProfile>)> {
    let separate = cfg.dataset.separate_tasks()?;
    let parts: Vec<(SubjectSession, Option<BaselineProfile>)> = denoised
        .par_iter()
        .map(|s| {
            let amp = amplitude_normalize(s, &separate)?;
            match strategy {
                Strategy::PersFreqN => {
                    let (profile, snd) = normalize_subject(&amp, &cfg.normalization, &cfg.peaks)?;
                    Ok((snd, Some(profile)))
                }
                Strategy::AmpN | Strategy::SubjFeatN => Ok((amp, None)),
            }
        })
        .collect::<Result<_>>()
        .stage("normalize")?;
    let mut sessions = Vec::with_capacity(parts.len());
    let mut profiles = Vec::new();
    for (s, p) in parts {
        sessions.push(s);
        profiles.extend(p);
    }
    Ok((sessions, profiles))
}

fn session_instances(
    session: &SubjectSession,
    strategy: Strategy,
    scheme: &LabelingScheme,
    peaks: &PeakConfig,
) -> Result<Vec<Instance>> {
    let stats = if strategy == Strategy::SubjFeatN {
        let base = session
            .baselines()
            .iter()
            .map(|t| extract_features(&t.recording, peaks))
            .collect::<Result<Vec<_>>>()?;
        Some(BaselineFeatureStats::from_baselines(session.subject_id().clone(), &base)?)
    } else {
        None
    };
    label_session(session, scheme)?
        .into_iter()
        .map(|trial| {
            let mut fv = extract_features(&trial.recording, peaks)?;
            if let Some(stats) = &stats {
                fv = subject_feature_normalize(&fv, stats)?;
            }
            Ok(Instance {
                subject_id: session.subject_id().clone(),
                task: trial.task,
                label: trial.class_label,
                features: fv.to_array().to_vec(),
            })
        })
        .collect()
}

/// Labeled feature rows for normalized sessions, in session then trial order.
pub fn extract_instances(
    sessions: &[SubjectSession],
    strategy: Strategy,
    cfg: &PipelineConfig,
) -> Result<Vec<Instance>> {
    let scheme = cfg.dataset.scheme();
    let per_subject: Vec<Vec<Instance>> = sessions
        .par_iter()
        .map(|s| session_instances(s, strategy, &scheme, &cfg.peaks))
        .collect::<Result<_>>()
        .stage("features")?;
    Ok(per_subject.into_iter().flatten().collect())
}

/// LOSO for each configured classifier, in config order.
pub fn evaluate_instances(
    instances: &[Instance],
    strategy: Strategy,
    cfg: &PipelineConfig,
) -> Result<Vec<SummaryRow>> {
    let settings: ClassifierSettings = cfg.classifier.settings();
    cfg.classifiers
        .iter()
        .map(|&kind| {
            Ok(SummaryRow {
                strategy,
                report: run_loso(instances, kind, &settings, cfg.standardize_per_fold)?,
            })
        })
        .collect::<Result<_>>()
        .stage("evaluate")
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOutput {
    pub strategy: Strategy,
    pub profiles: Vec<BaselineProfile>,
    pub instances: Vec<Instance>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub strategies: Vec<StrategyOutput>,
}

impl PipelineOutput {
    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.strategies.iter().flat_map(|s| s.rows.clone()).collect()
    }

    /// Highest accuracy over classifiers for one strategy.
    pub fn best_accuracy(&self, strategy: Strategy) -> Option<f64> {
        self.strategies
            .iter()
            .find(|s| s.strategy == strategy)?
            .rows
            .iter()
            .map(|r| r.report.metrics.accuracy)
            .reduce(f64::max)
    }
}

/// Loads the configured manifest or generates the synthetic cohort.
pub fn load_sessions(cfg: &PipelineConfig) -> Result<Vec<SubjectSession>> {
    match &cfg.paths.manifest {
        Some(m) => io::ingest(m).stage("ingest"),
        None => Ok(generate_cohort(&cfg.synth, cfg.seed).stage("synth")?.sessions),
    }
}

/// Runs every configured strategy on already-loaded sessions. Nothing is written.
pub fn run_on_sessions(sessions: &[SubjectSession], cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let denoised = denoise_sessions(sessions, cfg)?;
    let mut strategies = Vec::new();
    for &strategy in &cfg.strategies {
        let (normalized, profiles) = normalize_sessions(&denoised, strategy, cfg)?;
        let instances = extract_instances(&normalized, strategy, cfg)?;
        let rows = evaluate_instances(&instances, strategy, cfg)?;
        strategies.push(StrategyOutput {
            strategy,
            profiles,
            instances,
            rows,
        });
    }
    Ok(PipelineOutput { strategies })
}

/// Runs `f` on a pool with the configured thread count.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn profiles_path(dir: &Path) -> PathBuf {
    dir.join("profiles.csv")
}

pub fn features_path(dir: &Path, strategy: Strategy) -> PathBuf {
    dir.join(format!("features_{strategy}.csv"))
}

/// Writes profiles, features, per-fold and summary tables into `dir`.
pub fn write_outputs(dir: &Path, out: &PipelineOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let profiles: Vec<BaselineProfile> = out
        .strategies
        .iter()
        .flat_map(|s| s.profiles.clone())
        .collect();
    if !profiles.is_empty() {
        io::write_profiles(&profiles_path(dir), &profiles)?;
    }
    for s in &out.strategies {
        io::write_features(&features_path(dir, s.strategy), &s.instances)?;
    }
    let rows = out.summary_rows();
    io::write_folds(&dir.join("folds.csv"), &rows)?;
    io::write_summary(&dir.join("summary.csv"), &rows)?;
    Ok(())
}

/// Full run with outputs written to `cfg.paths.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    with_threads(cfg.threads, || {
        let sessions = load_sessions(cfg)?;
        let out = run_on_sessions(&sessions, cfg)?;
        write_outputs(&cfg.paths.output_dir, &out)?;
        Ok(out)
    })?
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Recording, SamplingSpec};

    fn trial(task: Task, x: Vec<f64>, index: usize) -> Trial {
        let rec = Recording::new(x, SamplingSpec::discrete(128.0).unwrap(), "A".into(), "ppg").unwrap();
        Trial::new(rec, task, None, index)
    }

    #[test]
    fn amplitude_normalization_uses_the_joined_signal() {
        let s = SubjectSession::from_trials(
            "A".into(),
            vec![
                trial(Task::Baseline, vec![0.0, 2.0], 0),
                trial(Task::MathCalculation, vec![4.0, 6.0], 1),
                trial(Task::AudioListening, vec![10.0, 20.0], 2),
            ],
        )
        .unwrap();
        let joint = amplitude_normalize(&s, &[]).unwrap();
        let all: Vec<f64> = joint.trials_in_order().iter().flat_map(|t| t.recording.samples().to_vec()).collect();
        let p = fit_zscore(&all).unwrap();
        assert!(p.mu.abs() < 1e-12 && (p.sigma - 1.0).abs() < 1e-12);
        // the math trial alone is not standardized
        let mc = &joint.task_trials()[0].recording;
        assert!(fit_zscore(mc.samples()).unwrap().sigma < 0.5);

        let split = amplitude_normalize(&s, &[Task::AudioListening]).unwrap();
        let al = split.trials_in_order()[2].recording.samples().to_vec();
        assert_eq!(al, vec![-1.0, 1.0]);
        assert_eq!(split.trials_in_order().len(), 3);
    }
}
