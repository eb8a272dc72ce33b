//! Class labels per task and trial halving.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{ClassLabel, SubjectSession, Task, Trial};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Clas,
    Clawdas,
}

impl fmt::Display for SchemeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeName::Clas => "clas",
            SchemeName::Clawdas => "clawdas",
        })
    }
}

impl FromStr for SchemeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clas" => Ok(SchemeName::Clas),
            "clawdas" => Ok(SchemeName::Clawdas),
            other => Err(Error::Config(format!("unknown labeling scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelingScheme {
    pub labels: BTreeMap<Task, ClassLabel>,
    /// Tasks whose trials are cut into two instances.
    pub halving: BTreeSet<Task>,
    /// Tasks that are recognised but produce no instance.
    pub unlabeled: BTreeSet<Task>,
}

impl LabelingScheme {
    /// Math, Stroop and logic problems are HighCL and halved; neutral state is LowCL.
    pub fn clas() -> Self {
        let high = [Task::MathProblems, Task::StroopTest, Task::LogicProblems];
        let mut labels: BTreeMap<Task, ClassLabel> =
            high.iter().map(|&t| (t, ClassLabel::HighCl)).collect();
        labels.insert(Task::NeutralState, ClassLabel::LowCl);
        Self {
            labels,
            halving: high.into_iter().collect(),
            unlabeled: BTreeSet::new(),
        }
    }

    /// Math calculation is HighCL, audio listening LowCL; reading and
    /// comprehension are ignored.
    pub fn clawdas() -> Self {
        Self {
            labels: [
                (Task::MathCalculation, ClassLabel::HighCl),
                (Task::AudioListening, ClassLabel::LowCl),
            ]
            .into_iter()
            .collect(),
            halving: BTreeSet::new(),
            unlabeled: [Task::Reading, Task::Comprehension].into_iter().collect(),
        }
    }

    pub fn named(name: SchemeName) -> Self {
        match name {
            SchemeName::Clas => Self::clas(),
            SchemeName::Clawdas => Self::clawdas(),
        }
    }

    /// Label for a task; `Ok(None)` for baselines and ignored tasks.
    pub fn label_for(&self, task: Task) -> Result<Option<ClassLabel>> {
        if let Some(&l) = self.labels.get(&task) {
            Ok(Some(l))
        } else if task == Task::Baseline || self.unlabeled.contains(&task) {
            Ok(None)
        } else {
            Err(Error::UnknownTask {
                task: task.code().to_owned(),
                row: None,
            })
        }
    }
}

/// Splits into `[0, L/2)` and `[L/2, L)`; an odd sample goes to the second half.
pub fn halve_trial(trial: &Trial) -> Result<(Trial, Trial)> {
    let x = trial.recording.samples();
    if x.len() < 2 {
        return Err(Error::TooShort {
            len: x.len(),
            min: 2,
        });
    }
    let mid = x.len() / 2;
    let first = trial.with_recording(trial.recording.with_samples(x[..mid].to_vec())?);
    let second = trial.with_recording(trial.recording.with_samples(x[mid..].to_vec())?);
    Ok((first, second))
}

/// Labeled trials in session order, then trial order, with halving applied.
pub fn build_instances(sessions: &[SubjectSession], scheme: &LabelingScheme) -> Result<Vec<Trial>> {
    let mut out = Vec::new();
    for session in sessions {
        out.extend(label_session(session, scheme)?);
    }
    Ok(out)
}

pub fn label_session(session: &SubjectSession, scheme: &LabelingScheme) -> Result<Vec<Trial>> {
    let mut out = Vec::new();
    for trial in session.task_trials() {
        let Some(label) = scheme.label_for(trial.task)? else {
            continue;
        };
        let mut labeled = trial.clone();
        labeled.class_label = Some(label);
        if scheme.halving.contains(&trial.task) {
            let (a, b) = halve_trial(&labeled)?;
            out.push(a);
            out.push(b);
        } else {
            out.push(labeled);
        }
    }
    Ok(out)
}
