//! Leave-one-subject-out evaluation with a joined confusion matrix.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierKind, ClassifierSettings, TrainedModel};
use crate::error::{Error, Result};
use crate::signal::{ClassLabel, SubjectId, Task};

/// One row of the experiment: a feature vector owned by a subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub subject_id: SubjectId,
    pub task: Task,
    pub label: Option<ClassLabel>,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub held_out: SubjectId,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

/// One fold per subject, ordered by subject id. Indices keep input order.
pub fn build_loso_plan(instances: &[Instance]) -> Result<FoldPlan> {
    if let Some(index) = instances.iter().position(|i| i.label.is_none()) {
        return Err(Error::UnlabeledInstance { index });
    }
    let mut by_subject: BTreeMap<&SubjectId, Vec<usize>> = BTreeMap::new();
    for (k, inst) in instances.iter().enumerate() {
        by_subject.entry(&inst.subject_id).or_default().push(k);
    }
    if by_subject.len() < 2 {
        return Err(Error::SingleSubject);
    }
    let folds = by_subject
        .into_iter()
        .map(|(subject, test)| Fold {
            held_out: subject.clone(),
            train: (0..instances.len())
                .filter(|&k| instances[k].subject_id != *subject)
                .collect(),
            test,
        })
        .collect();
    Ok(FoldPlan { folds })
}

/// Binary confusion counts with HighCL as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, actual: ClassLabel, predicted: ClassLabel) {
        match (actual, predicted) {
            (ClassLabel::HighCl, ClassLabel::HighCl) => self.tp += 1,
            (ClassLabel::LowCl, ClassLabel::HighCl) => self.fp += 1,
            (ClassLabel::HighCl, ClassLabel::LowCl) => self.fn_ += 1,
            (ClassLabel::LowCl, ClassLabel::LowCl) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }
}

impl Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_high: f64,
    pub f1_low: f64,
    /// Set when the F1 denominator was zero and 0 was reported.
    pub f1_high_degenerate: bool,
    pub f1_low_degenerate: bool,
}

fn f1(hit: usize, misses: usize) -> (f64, bool) {
    let denom = 2 * hit + misses;
    if denom == 0 {
        (0.0, true)
    } else {
        (2.0 * hit as f64 / denom as f64, false)
    }
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let (f1_high, f1_high_degenerate) = f1(cm.tp, cm.fp + cm.fn_);
    let (f1_low, f1_low_degenerate) = f1(cm.tn, cm.fp + cm.fn_);
    Ok(Metrics {
        accuracy: cm.correct() as f64 / total as f64,
        f1_high,
        f1_low,
        f1_high_degenerate,
        f1_low_degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub held_out: SubjectId,
    pub n_train: usize,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classifier: ClassifierKind,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub folds: Vec<FoldResult>,
}

fn run_fold(
    instances: &[Instance],
    fold: &Fold,
    kind: ClassifierKind,
    settings: &ClassifierSettings,
    standardize: bool,
) -> Result<FoldResult> {
    let x: Vec<Vec<f64>> = fold.train.iter().map(|&k| instances[k].features.clone()).collect();
    let y: Vec<ClassLabel> = fold
        .train
        .iter()
        .map(|&k| instances[k].label.expect("plan checks labels"))
        .collect();
    let model = TrainedModel::fit(kind, settings, &x, &y, standardize)?;
    let mut confusion = ConfusionMatrix::default();
    for &k in &fold.test {
        let actual = instances[k].label.expect("plan checks labels");
        confusion.record(actual, model.predict(&instances[k].features)?);
    }
    Ok(FoldResult {
        held_out: fold.held_out.clone(),
        n_train: fold.train.len(),
        confusion,
    })
}

/// Trains one model per fold (folds run in parallel), predicts the held-out
/// subject, and sums the per-fold matrices.
pub fn run_loso(
    instances: &[Instance],
    kind: ClassifierKind,
    settings: &ClassifierSettings,
    standardize: bool,
) -> Result<EvaluationReport> {
    let plan = build_loso_plan(instances)?;
    let folds: Vec<FoldResult> = plan
        .folds
        .par_iter()
        .map(|f| run_fold(instances, f, kind, settings, standardize))
        .collect::<Result<_>>()?;
    let confusion = folds
        .iter()
        .fold(ConfusionMatrix::default(), |acc, f| acc + f.confusion);
    let metrics = metrics_from_confusion(&confusion)?;
    Ok(EvaluationReport {
        classifier: kind,
        confusion,
        metrics,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inst(subject: usize, label: ClassLabel, features: Vec<f64>) -> Instance {
        Instance {
            subject_id: SubjectId::new(format!("S{subject:02}")),
            task: match label {
                ClassLabel::HighCl => Task::MathCalculation,
                ClassLabel::LowCl => Task::AudioListening,
            },
            label: Some(label),
            features,
        }
    }

    fn cohort(subjects: usize, per_class: usize, gap: f64, seed: u64) -> Vec<Instance> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for s in 0..subjects {
            for k in 0..2 * per_class {
                let label = if k % 2 == 0 { ClassLabel::HighCl } else { ClassLabel::LowCl };
                let shift = if label == ClassLabel::HighCl { gap } else { 0.0 };
                let f = (0..3).map(|_| rng.random::<f64>() + shift).collect();
                out.push(inst(s, label, f));
            }
        }
        out
    }

    #[test]
    fn plan_shapes() {
        let data = cohort(3, 2, 0.0, 1);
        let plan = build_loso_plan(&data).unwrap();
        assert_eq!(plan.folds.len(), 3);
        for f in &plan.folds {
            assert_eq!(f.test.len(), 4);
            assert_eq!(f.train.len(), 8);
            assert!(f.train.iter().all(|&k| data[k].subject_id != f.held_out));
            assert!(f.test.iter().all(|&k| data[k].subject_id == f.held_out));
        }
        assert_eq!(build_loso_plan(&cohort(2, 1, 0.0, 1)).unwrap().folds.len(), 2);

        let data = cohort(16, 6, 0.0, 2);
        assert_eq!(data.len(), 192);
        let plan = build_loso_plan(&data).unwrap();
        assert_eq!(plan.folds.len(), 16);
        let mut seen: Vec<usize> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..192).collect::<Vec<_>>());
    }

    #[test]
    fn plan_errors() {
        assert!(matches!(build_loso_plan(&cohort(1, 3, 0.0, 1)), Err(Error::SingleSubject)));
        let mut data = cohort(2, 1, 0.0, 1);
        data[3].label = None;
        assert!(matches!(
            build_loso_plan(&data),
            Err(Error::UnlabeledInstance { index: 3 })
        ));
    }

    #[test]
    fn metric_examples() {
        let cm = ConfusionMatrix { tp: 80, fp: 10, fn_: 20, tn: 90 };
        let m = metrics_from_confusion(&cm).unwrap();
        assert!((m.accuracy - 0.85).abs() < 1e-12);
        assert!((m.f1_high - 160.0 / 190.0).abs() < 1e-12);
        assert!((m.f1_high - 0.8421).abs() < 1e-4);
        assert!((m.f1_low - 0.8571).abs() < 1e-4);

        let m = metrics_from_confusion(&ConfusionMatrix { tp: 7, fp: 0, fn_: 0, tn: 5 }).unwrap();
        assert_eq!((m.accuracy, m.f1_high, m.f1_low), (1.0, 1.0, 1.0));

        let m = metrics_from_confusion(&ConfusionMatrix { tp: 0, fp: 0, fn_: 10, tn: 10 }).unwrap();
        assert_eq!(m.f1_high, 0.0);
        assert!(!m.f1_high_degenerate);
        let m = metrics_from_confusion(&ConfusionMatrix { tp: 0, fp: 0, fn_: 0, tn: 10 }).unwrap();
        assert!(m.f1_high_degenerate && !m.f1_low_degenerate);

        assert!(matches!(
            metrics_from_confusion(&ConfusionMatrix::default()),
            Err(Error::EmptyMatrix)
        ));
    }

    #[test]
    fn separable_cohort_scores_perfectly() {
        let data = cohort(6, 4, 5.0, 3);
        for kind in ClassifierKind::ALL {
            let r = run_loso(&data, kind, &ClassifierSettings::default(), true).unwrap();
            assert_eq!(r.confusion.total(), data.len());
            assert_eq!(r.metrics.accuracy, 1.0, "{kind}");
            assert_eq!((r.metrics.f1_high, r.metrics.f1_low), (1.0, 1.0));
        }
    }

    #[test]
    fn shuffled_labels_near_chance() {
        let mut data = cohort(20, 6, 3.0, 4);
        let mut labels: Vec<_> = data.iter().map(|i| i.label).collect();
        labels.shuffle(&mut ChaCha8Rng::seed_from_u64(99));
        for (i, l) in data.iter_mut().zip(labels) {
            i.label = l;
        }
        for kind in ClassifierKind::ALL {
            let r = run_loso(&data, kind, &ClassifierSettings::default(), true).unwrap();
            assert_eq!(r.confusion.total(), 240);
            assert!((0.35..=0.65).contains(&r.metrics.accuracy), "{kind}: {}", r.metrics.accuracy);
        }
    }

    #[test]
    fn subject_order_does_not_change_joined_matrix() {
        let data = cohort(5, 3, 0.4, 5);
        let base = run_loso(&data, ClassifierKind::SvmLinear, &ClassifierSettings::default(), true)
            .unwrap();
        // reverse the subject blocks while keeping within-subject order
        let mut permuted = Vec::new();
        for s in (0..5).rev() {
            permuted.extend(data.iter().filter(|i| i.subject_id.as_str() == format!("S{s:02}")).cloned());
        }
        let other =
            run_loso(&permuted, ClassifierKind::SvmLinear, &ClassifierSettings::default(), true)
                .unwrap();
        assert_eq!(base.confusion, other.confusion);
        assert_eq!(base.folds, other.folds);
    }
}
