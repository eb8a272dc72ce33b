//! Recordings, trials and subject sessions shared by every pipeline stage.
//!
//! Recordings are uniformly sampled single-channel PPG traces. A recording is
//! tagged with the time domain it lives in: the ordinary discrete-time domain
//! of the acquisition device, or the subject-normalized domain produced by
//! personalized resampling, where one resting heartbeat spans a fixed number
//! of samples for every subject.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    DiscreteTime,
    SubjectNormalized,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::DiscreteTime => "discrete-time",
            Domain::SubjectNormalized => "subject-normalized",
        }
    }
}

/// Sampling metadata of a recording.
///
/// For subject-normalized recordings `sample_rate` is the nominal rate in
/// SN-samples per second implied by the resampling (`f_c * f_SNc`). It is kept
/// for bookkeeping and for converting time-based peak-detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    sample_rate: f64,
    domain: Domain,
}

impl SamplingSpec {
    pub fn new(sample_rate: f64, domain: Domain) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate));
        }
        Ok(Self {
            sample_rate,
            domain,
        })
    }

    pub fn discrete(sample_rate: f64) -> Result<Self> {
        Self::new(sample_rate, Domain::DiscreteTime)
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubjectId(String);

impl SubjectId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SubjectId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// A uniformly sampled PPG trace. Samples are always non-empty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    samples: Vec<f64>,
    spec: SamplingSpec,
    subject_id: SubjectId,
    channel_label: String,
}

impl Recording {
    pub fn new(
        samples: Vec<f64>,
        spec: SamplingSpec,
        subject_id: SubjectId,
        channel_label: impl Into<String>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            spec,
            subject_id,
            channel_label: channel_label.into(),
        })
    }

    /// Same metadata, new sample content.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(
            samples,
            self.spec,
            self.subject_id.clone(),
            self.channel_label.clone(),
        )
    }

    pub fn with_spec(mut self, spec: SamplingSpec) -> Self {
        self.spec = spec;
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn spec(&self) -> SamplingSpec {
        self.spec
    }

    pub fn sample_rate(&self) -> f64 {
        self.spec.sample_rate
    }

    pub fn domain(&self) -> Domain {
        self.spec.domain
    }

    pub fn subject_id(&self) -> &SubjectId {
        &self.subject_id
    }

    pub fn channel_label(&self) -> &str {
        &self.channel_label
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    Baseline,
    MathProblems,
    StroopTest,
    LogicProblems,
    NeutralState,
    MathCalculation,
    AudioListening,
    Reading,
    Comprehension,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Baseline,
        Task::MathProblems,
        Task::StroopTest,
        Task::LogicProblems,
        Task::NeutralState,
        Task::MathCalculation,
        Task::AudioListening,
        Task::Reading,
        Task::Comprehension,
    ];

    /// Short code used in manifests and feature tables.
    pub fn code(self) -> &'static str {
        match self {
            Task::Baseline => "BL",
            Task::MathProblems => "MP",
            Task::StroopTest => "ST",
            Task::LogicProblems => "LP",
            Task::NeutralState => "NS",
            Task::MathCalculation => "MC",
            Task::AudioListening => "AL",
            Task::Reading => "R",
            Task::Comprehension => "C",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Task::ALL
            .into_iter()
            .find(|task| {
                task.code().eq_ignore_ascii_case(t) || format!("{task:?}").eq_ignore_ascii_case(t)
            })
            .ok_or_else(|| Error::UnknownTask {
                task: t.to_owned(),
                row: None,
            })
    }
}

/// Binary cognitive-load class. HighCL is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    LowCl,
    HighCl,
}

impl ClassLabel {
    /// SVM encoding: HighCL = +1, LowCL = -1.
    pub fn sign(self) -> f64 {
        match self {
            ClassLabel::HighCl => 1.0,
            ClassLabel::LowCl => -1.0,
        }
    }

    /// Class index used by the tree: LowCL = 0, HighCL = 1.
    pub fn index(self) -> usize {
        match self {
            ClassLabel::LowCl => 0,
            ClassLabel::HighCl => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            ClassLabel::LowCl
        } else {
            ClassLabel::HighCl
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            ClassLabel::HighCl => "HighCL",
            ClassLabel::LowCl => "LowCL",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "highcl" | "high" => Ok(ClassLabel::HighCl),
            "lowcl" | "low" => Ok(ClassLabel::LowCl),
            other => Err(Error::Config(format!("unknown class label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub recording: Recording,
    pub task: Task,
    pub class_label: Option<ClassLabel>,
    pub trial_index: usize,
}

impl Trial {
    /// Builds a trial; baseline trials never carry a class label.
    pub fn new(
        recording: Recording,
        task: Task,
        class_label: Option<ClassLabel>,
        trial_index: usize,
    ) -> Self {
        let class_label = if task == Task::Baseline {
            None
        } else {
            class_label
        };
        Self {
            recording,
            task,
            class_label,
            trial_index,
        }
    }

    pub fn subject_id(&self) -> &SubjectId {
        self.recording.subject_id()
    }

    pub fn with_recording(&self, recording: Recording) -> Self {
        Self {
            recording,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectSession {
    subject_id: SubjectId,
    baselines: Vec<Trial>,
    task_trials: Vec<Trial>,
}

impl SubjectSession {
    pub fn new(subject_id: SubjectId, baselines: Vec<Trial>, task_trials: Vec<Trial>) -> Result<Self> {
        if baselines.is_empty() {
            return Err(Error::EmptyInput);
        }
        for t in baselines.iter().chain(&task_trials) {
            if t.subject_id() != &subject_id {
                return Err(Error::MixedSubjects {
                    first: subject_id.to_string(),
                    other: t.subject_id().to_string(),
                });
            }
        }
        if let Some(t) = baselines.iter().find(|t| t.task != Task::Baseline) {
            return Err(Error::UnknownTask {
                task: format!("{} listed as baseline", t.task),
                row: None,
            });
        }
        Ok(Self {
            subject_id,
            baselines,
            task_trials,
        })
    }

    /// Splits a flat trial list into baselines and task trials.
    pub fn from_trials(subject_id: SubjectId, trials: Vec<Trial>) -> Result<Self> {
        let (baselines, task_trials) = trials.into_iter().partition(|t| t.task == Task::Baseline);
        Self::new(subject_id, baselines, task_trials)
    }

    pub fn subject_id(&self) -> &SubjectId {
        &self.subject_id
    }

    pub fn baselines(&self) -> &[Trial] {
        &self.baselines
    }

    pub fn task_trials(&self) -> &[Trial] {
        &self.task_trials
    }

    /// All trials (baselines included) in acquisition order, i.e. by trial index.
    pub fn trials_in_order(&self) -> Vec<Trial> {
        let mut all: Vec<Trial> = self
            .baselines
            .iter()
            .chain(&self.task_trials)
            .cloned()
            .collect();
        all.sort_by_key(|t| t.trial_index);
        all
    }

    /// Rebuilds the session with every recording mapped through `f`.
    pub fn map_recordings<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&Recording) -> Result<Recording>,
    {
        let mut map = |ts: &[Trial]| -> Result<Vec<Trial>> {
            ts.iter()
                .map(|t| Ok(t.with_recording(f(&t.recording)?)))
                .collect()
        };
        let baselines = map(&self.baselines)?;
        let task_trials = map(&self.task_trials)?;
        Ok(Self {
            subject_id: self.subject_id.clone(),
            baselines,
            task_trials,
        })
    }
}

/// Half-open sample range `[start, end)` of one trial inside a concatenated recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentMarker {
    pub trial_index: usize,
    pub task: Task,
    pub class_label: Option<ClassLabel>,
    pub start: usize,
    pub end: usize,
}

impl SegmentMarker {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

pub fn concatenate_trials(trials: &[Trial]) -> Result<(Recording, Vec<SegmentMarker>)> {
    let first = trials.first().ok_or(Error::EmptyInput)?;
    let subject = first.subject_id();
    let rate = first.recording.sample_rate();
    let total: usize = trials.iter().map(|t| t.recording.len()).sum();
    let mut samples = Vec::with_capacity(total);
    let mut markers = Vec::with_capacity(trials.len());
    for t in trials {
        if t.subject_id() != subject {
            return Err(Error::MixedSubjects {
                first: subject.to_string(),
                other: t.subject_id().to_string(),
            });
        }
        if t.recording.sample_rate() != rate {
            return Err(Error::MixedSampleRates {
                first: rate,
                other: t.recording.sample_rate(),
            });
        }
        let start = samples.len();
        samples.extend_from_slice(t.recording.samples());
        markers.push(SegmentMarker {
            trial_index: t.trial_index,
            task: t.task,
            class_label: t.class_label,
            start,
            end: samples.len(),
        });
    }
    let recording = Recording::new(
        samples,
        first.recording.spec(),
        subject.clone(),
        first.recording.channel_label(),
    )?;
    Ok((recording, markers))
}

pub fn split_by_markers(recording: &Recording, markers: &[SegmentMarker]) -> Result<Vec<Trial>> {
    let len = recording.len();
    let mut expected = 0;
    let mut out = Vec::with_capacity(markers.len());
    for m in markers {
        if m.end > len || m.start >= m.end {
            return Err(Error::MarkerOutOfBounds {
                start: m.start,
                end: m.end,
                len,
            });
        }
        if m.start != expected {
            return Err(Error::MarkerOverlap {
                start: m.start,
                expected,
            });
        }
        expected = m.end;
        let rec = recording.with_samples(recording.samples()[m.start..m.end].to_vec())?;
        out.push(Trial::new(rec, m.task, m.class_label, m.trial_index));
    }
    if expected != len {
        return Err(Error::MarkerOutOfBounds {
            start: expected,
            end: len,
            len,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trial(subject: &str, rate: f64, samples: Vec<f64>, index: usize) -> Trial {
        let rec = Recording::new(
            samples,
            SamplingSpec::discrete(rate).unwrap(),
            SubjectId::from(subject),
            "ppg",
        )
        .unwrap();
        Trial::new(rec, Task::MathCalculation, Some(ClassLabel::HighCl), index)
    }

    #[test]
    fn concatenates_two_trials() {
        let ts = [
            trial("s1", 128.0, vec![1.0, 2.0, 3.0], 0),
            trial("s1", 128.0, vec![4.0, 5.0], 1),
        ];
        let (rec, markers) = concatenate_trials(&ts).unwrap();
        assert_eq!(rec.samples(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let spans: Vec<_> = markers.iter().map(|m| (m.trial_index, m.start, m.end)).collect();
        assert_eq!(spans, vec![(0, 0, 3), (1, 3, 5)]);
    }

    #[test]
    fn single_trial_is_identity() {
        let ts = [trial("s1", 128.0, vec![7.0, 8.0], 4)];
        let (rec, markers) = concatenate_trials(&ts).unwrap();
        assert_eq!(rec, ts[0].recording);
        assert_eq!(markers.len(), 1);
        assert_eq!((markers[0].start, markers[0].end), (0, 2));
    }

    #[test]
    fn rejects_mixed_inputs() {
        let ts = [
            trial("s1", 128.0, vec![1.0], 0),
            trial("s1", 256.0, vec![1.0], 1),
        ];
        assert!(matches!(
            concatenate_trials(&ts),
            Err(Error::MixedSampleRates { .. })
        ));
        let ts = [trial("s1", 128.0, vec![1.0], 0), trial("s2", 128.0, vec![1.0], 1)];
        assert!(matches!(concatenate_trials(&ts), Err(Error::MixedSubjects { .. })));
        assert!(matches!(concatenate_trials(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn split_checks_bounds() {
        let ts = [
            trial("s1", 128.0, vec![1.0, 2.0, 3.0], 0),
            trial("s1", 128.0, vec![4.0, 5.0], 1),
        ];
        let (rec, markers) = concatenate_trials(&ts).unwrap();
        let back = split_by_markers(&rec, &markers).unwrap();
        assert_eq!(back[0].recording.len(), 3);
        assert_eq!(back[1].recording.len(), 2);

        let mut bad = markers[0];
        bad.end = 6;
        assert!(matches!(
            split_by_markers(&rec, &[bad]),
            Err(Error::MarkerOutOfBounds { .. })
        ));
        let mut overlap = markers.clone();
        overlap[1].start = 2;
        assert!(matches!(
            split_by_markers(&rec, &overlap),
            Err(Error::MarkerOverlap { .. })
        ));
    }

    #[test]
    fn baseline_trials_drop_labels() {
        let rec = trial("s1", 128.0, vec![1.0], 0).recording;
        let t = Trial::new(rec, Task::Baseline, Some(ClassLabel::LowCl), 0);
        assert_eq!(t.class_label, None);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let err = Recording::new(
            vec![0.0, f64::NAN],
            SamplingSpec::discrete(128.0).unwrap(),
            "s".into(),
            "ppg",
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteSample { index: 1 }));
    }

    #[test]
    fn task_codes_parse() {
        for t in Task::ALL {
            assert_eq!(t.code().parse::<Task>().unwrap(), t);
        }
        assert_eq!("MathCalculation".parse::<Task>().unwrap(), Task::MathCalculation);
        assert!("Juggling".parse::<Task>().is_err());
    }

    proptest! {
        #[test]
        fn concat_split_round_trip(lens in proptest::collection::vec(1usize..40, 3), seed in any::<u64>()) {
            let mut state = seed;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let ts: Vec<Trial> = lens
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let mut t = trial("s", 64.0, (0..n).map(|_| next()).collect(), i);
                    if i == 1 {
                        t.task = Task::AudioListening;
                        t.class_label = Some(ClassLabel::LowCl);
                    }
                    t
                })
                .collect();
            let (rec, markers) = concatenate_trials(&ts).unwrap();
            let back = split_by_markers(&rec, &markers).unwrap();
            prop_assert_eq!(back, ts);
        }
    }
}
