//! CSV formats for recordings, manifests, features and reports.
//!
//! Floats are written with Rust's shortest round-trip formatting so that a
//! write followed by a read reproduces every value exactly. Summary metrics are
//! the exception and use six decimals.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::Strategy;
use crate::error::{Error, Result};
use crate::evaluate::{EvaluationReport, Instance};
use crate::features::FEATURE_NAMES;
use crate::normalize::BaselineProfile;
use crate::signal::{ClassLabel, Recording, SamplingSpec, SubjectId, SubjectSession, Task, Trial};
use crate::synth::TrialTruth;

pub const RECORDING_HEADER: [&str; 2] = ["sample_index", "ppg"];
pub const MANIFEST_HEADER: [&str; 5] = ["subject_id", "task", "trial_index", "sample_rate", "path"];
pub const SUMMARY_HEADER: [&str; 5] = ["strategy", "classifier", "accuracy", "f1_high", "f1_low"];

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|_| Error::MissingFile {
        path: path.to_path_buf(),
    })?;
    Ok(csv::ReaderBuilder::new().has_headers(false).from_reader(file))
}

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Reads all records, checking the header. Yields (line number, record).
fn read_table(path: &Path, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = reader(path)?;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if !seen_header {
            let got: Vec<&str> = rec.iter().map(str::trim).collect();
            if got != header {
                return Err(malformed(path, line, format!("expected header '{}'", header.join(","))));
            }
            seen_header = true;
            continue;
        }
        if rec.len() != header.len() {
            return Err(malformed(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec));
    }
    if !seen_header {
        return Err(malformed(path, 1, "empty file"));
    }
    Ok(rows)
}

fn parse_f64(path: &Path, line: u64, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| malformed(path, line, format!("{what} '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue {
            path: path.to_path_buf(),
            line,
        });
    }
    Ok(v)
}

fn parse_usize(path: &Path, line: u64, field: &str, what: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| malformed(path, line, format!("{what} '{field}' is not a non-negative integer")))
}

/// Samples of a `sample_index,ppg` file. Indices must strictly increase.
pub fn read_recording_csv(path: &Path) -> Result<Vec<f64>> {
    let rows = read_table(path, &RECORDING_HEADER)?;
    let mut out = Vec::with_capacity(rows.len());
    let mut last: Option<usize> = None;
    for (line, rec) in rows {
        let idx = parse_usize(path, line, &rec[0], "sample_index")?;
        if last.is_some_and(|l| idx <= l) {
            return Err(malformed(path, line, "sample_index must strictly increase"));
        }
        last = Some(idx);
        out.push(parse_f64(path, line, &rec[1], "ppg")?);
    }
    if out.is_empty() {
        return Err(malformed(path, 2, "no samples"));
    }
    Ok(out)
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(fs::File::create(path)?)
}

pub fn write_recording_csv(path: &Path, samples: &[f64]) -> Result<()> {
    let mut out = std::io::BufWriter::new(create(path)?);
    writeln!(out, "{}", RECORDING_HEADER.join(","))?;
    for (i, v) in samples.iter().enumerate() {
        writeln!(out, "{i},{v}")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub subject_id: SubjectId,
    pub task: Task,
    pub trial_index: usize,
    pub sample_rate: f64,
    /// As written in the manifest, relative to its directory unless absolute.
    pub path: PathBuf,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let rows = read_table(path, &MANIFEST_HEADER)?;
    rows.into_iter()
        .enumerate()
        .map(|(k, (line, rec))| {
            let task = rec[1].parse::<Task>().map_err(|_| Error::UnknownTask {
                task: rec[1].trim().to_owned(),
                row: Some(k + 1),
            })?;
            let subject = rec[0].trim();
            if subject.is_empty() {
                return Err(malformed(path, line, "empty subject_id"));
            }
            Ok(ManifestRow {
                subject_id: SubjectId::new(subject),
                task,
                trial_index: parse_usize(path, line, &rec[2], "trial_index")?,
                sample_rate: parse_f64(path, line, &rec[3], "sample_rate")?,
                path: PathBuf::from(rec[4].trim()),
            })
        })
        .collect()
}

/// Loads every recording in a manifest and groups trials by subject (sorted by id).
pub fn ingest(manifest: &Path) -> Result<Vec<SubjectSession>> {
    let rows = read_manifest(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut by_subject: BTreeMap<SubjectId, Vec<Trial>> = BTreeMap::new();
    for row in rows {
        let file = base.join(&row.path);
        let samples = read_recording_csv(&file)?;
        let spec = SamplingSpec::discrete(row.sample_rate)?;
        let rec = Recording::new(samples, spec, row.subject_id.clone(), "ppg")?;
        by_subject
            .entry(row.subject_id)
            .or_default()
            .push(Trial::new(rec, row.task, None, row.trial_index));
    }
    by_subject
        .into_iter()
        .map(|(id, trials)| SubjectSession::from_trials(id, trials))
        .collect()
}

/// Writes one CSV per trial under `dir/recordings` and a manifest at `dir/manifest.csv`.
pub fn write_sessions(dir: &Path, sessions: &[SubjectSession]) -> Result<PathBuf> {
    let manifest = dir.join("manifest.csv");
    let mut out = std::io::BufWriter::new(create(&manifest)?);
    writeln!(out, "{}", MANIFEST_HEADER.join(","))?;
    for session in sessions {
        for trial in session.trials_in_order() {
            let rel = PathBuf::from("recordings").join(format!(
                "{}_{:03}_{}.csv",
                session.subject_id(),
                trial.trial_index,
                trial.task.code()
            ));
            write_recording_csv(&dir.join(&rel), trial.recording.samples())?;
            writeln!(
                out,
                "{},{},{},{},{}",
                session.subject_id(),
                trial.task.code(),
                trial.trial_index,
                trial.recording.sample_rate(),
                rel.to_string_lossy().replace('\\', "/")
            )?;
        }
    }
    out.flush()?;
    Ok(manifest)
}

pub fn write_ground_truth(path: &Path, truth: &[TrialTruth]) -> Result<()> {
    let mut out = std::io::BufWriter::new(create(path)?);
    writeln!(out, "subject_id,task,trial_index,bpm,amplitude_gain,crests")?;
    for t in truth {
        let crests: Vec<String> = t.crests.iter().map(usize::to_string).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            t.subject_id,
            t.task.code(),
            t.trial_index,
            t.bpm,
            t.amplitude_gain,
            crests.join(" ")
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_profiles(path: &Path, profiles: &[BaselineProfile]) -> Result<()> {
    let mut out = std::io::BufWriter::new(create(path)?);
    writeln!(out, "subject_id,f_b,f_nb,f_snc,n_baselines")?;
    for p in profiles {
        writeln!(out, "{},{},{},{},{}", p.subject_id, p.f_b, p.f_nb, p.f_snc, p.n_baselines_used)?;
    }
    out.flush()?;
    Ok(())
}

fn features_header() -> Vec<&'static str> {
    let mut h = vec!["subject_id", "task", "label"];
    h.extend(FEATURE_NAMES);
    h
}

pub fn write_features(path: &Path, instances: &[Instance]) -> Result<()> {
    let mut out = std::io::BufWriter::new(create(path)?);
    writeln!(out, "{}", features_header().join(","))?;
    for inst in instances {
        let label = inst.label.map_or("", ClassLabel::code);
        write!(out, "{},{},{}", inst.subject_id, inst.task.code(), label)?;
        for v in &inst.features {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<Vec<Instance>> {
    let header = features_header();
    let rows = read_table(path, &header)?;
    rows.into_iter()
        .enumerate()
        .map(|(k, (line, rec))| {
            let task = rec[1].parse::<Task>().map_err(|_| Error::UnknownTask {
                task: rec[1].trim().to_owned(),
                row: Some(k + 1),
            })?;
            let label = match rec[2].trim() {
                "" => None,
                s => Some(s.parse::<ClassLabel>().map_err(|_| malformed(path, line, format!("bad label '{s}'")))?),
            };
            let features = (3..header.len())
                .map(|j| parse_f64(path, line, &rec[j], header[j]))
                .collect::<Result<_>>()?;
            Ok(Instance {
                subject_id: SubjectId::new(rec[0].trim()),
                task,
                label,
                features,
            })
        })
        .collect()
}

/// One evaluated (strategy, classifier) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub report: EvaluationReport,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(create(path)?);
    writeln!(out, "{}", SUMMARY_HEADER.join(","))?;
    for r in rows {
        let m = &r.report.metrics;
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            r.strategy, r.report.classifier, m.accuracy, m.f1_high, m.f1_low
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_folds(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = std::io::BufWriter::new(create(path)?);
    writeln!(out, "strategy,classifier,held_out,n_train,n_test,tp,fp,fn,tn")?;
    for r in rows {
        for f in &r.report.folds {
            let c = &f.confusion;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.strategy,
                r.report.classifier,
                f.held_out,
                f.n_train,
                c.total(),
                c.tp,
                c.fp,
                c.fn_,
                c.tn
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A parsed summary row, as read back by the report renderer.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub strategy: String,
    pub classifier: String,
    pub accuracy: f64,
    pub f1_high: f64,
    pub f1_low: f64,
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRecord>> {
    read_table(path, &SUMMARY_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            Ok(SummaryRecord {
                strategy: rec[0].trim().to_owned(),
                classifier: rec[1].trim().to_owned(),
                accuracy: parse_f64(path, line, &rec[2], "accuracy")?,
                f1_high: parse_f64(path, line, &rec[3], "f1_high")?,
                f1_low: parse_f64(path, line, &rec[4], "f1_low")?,
            })
        })
        .collect()
}

/// Fixed-width table with strategies as row groups.
pub fn render_summary_table(rows: &[SummaryRecord]) -> String {
    let head = ["strategy", "classifier", "accuracy", "f1_high", "f1_low"];
    let cells: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.strategy.clone(),
                r.classifier.clone(),
                format!("{:.4}", r.accuracy),
                format!("{:.4}", r.f1_high),
                format!("{:.4}", r.f1_low),
            ]
        })
        .collect();
    let mut width: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |fields: &[&str]| {
        let parts: Vec<String> = fields
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(k, (f, &w))| if k < 2 { format!("{f:<w$}") } else { format!("{f:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_owned()
    };
    let mut out = String::new();
    out.push_str(&line(&head));
    out.push('\n');
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for row in &cells {
        let refs: Vec<&str> = row.iter().map(String::as_str).collect();
        out.push_str(&line(&refs));
        out.push('\n');
    }
    out
}

/// Long format for plotting: one row per (strategy, classifier, metric).
pub fn render_long_csv(rows: &[SummaryRecord]) -> String {
    let mut out = String::from("strategy,classifier,metric,value\n");
    for r in rows {
        for (name, v) in [("accuracy", r.accuracy), ("f1_high", r.f1_high), ("f1_low", r.f1_low)] {
            out.push_str(&format!("{},{},{name},{v:.6}\n", r.strategy, r.classifier));
        }
    }
    out
}
