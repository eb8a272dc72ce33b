//! TOML pipeline configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{CartParams, ClassifierKind, ClassifierSettings};
use crate::dataset::{LabelingScheme, SchemeName};
use crate::error::{Error, Result};
use crate::features::PeakConfig;
use crate::normalize::NormalizationConfig;
use crate::signal::Task;
use crate::synth::SynthConfig;
use crate::wavelet::{ThresholdRule, WaveletFamily, WaveletSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Strategy {
    AmpN,
    SubjFeatN,
    PersFreqN,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::AmpN, Strategy::SubjFeatN, Strategy::PersFreqN];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::AmpN => "AmpN",
            Strategy::SubjFeatN => "SubjFeatN",
            Strategy::PersFreqN => "PersFreqN",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletSettings {
    pub family: WaveletFamily,
    pub fk_order: usize,
    pub levels: usize,
    pub threshold: ThresholdRule,
}

impl Default for WaveletSettings {
    fn default() -> Self {
        Self {
            family: WaveletFamily::FejerKorovkin,
            fk_order: 8,
            levels: 4,
            threshold: ThresholdRule::UniversalSigmaScaled,
        }
    }
}

impl WaveletSettings {
    pub fn spec(&self) -> Result<WaveletSpec> {
        WaveletSpec::new(self.family, self.fk_order, self.levels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
    pub gaussian_kernel_scale: f64,
    pub cubic_kernel_offset: f64,
    pub cart_max_splits: usize,
    pub cart_min_leaf: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let s = ClassifierSettings::default();
        Self {
            svm_c: s.svm_c,
            svm_tol: s.svm_tol,
            svm_max_iter: s.svm_max_iter,
            gaussian_kernel_scale: s.gaussian_scale,
            cubic_kernel_offset: s.poly_offset,
            cart_max_splits: s.cart.max_splits,
            cart_min_leaf: s.cart.min_leaf,
        }
    }
}

impl ClassifierConfig {
    pub fn settings(&self) -> ClassifierSettings {
        ClassifierSettings {
            svm_c: self.svm_c,
            svm_tol: self.svm_tol,
            svm_max_iter: self.svm_max_iter,
            gaussian_scale: self.gaussian_kernel_scale,
            poly_offset: self.cubic_kernel_offset,
            cart: CartParams {
                max_splits: self.cart_max_splits,
                min_leaf: self.cart_min_leaf,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub scheme: SchemeName,
    /// Task codes Z-scored as their own concatenation, apart from the rest of
    /// the subject's trials. Empty means one concatenation per subject.
    pub separate_zscore_tasks: Vec<String>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeName::Clawdas,
            separate_zscore_tasks: Vec::new(),
        }
    }
}

impl DatasetConfig {
    pub fn scheme(&self) -> LabelingScheme {
        LabelingScheme::named(self.scheme)
    }

    pub fn separate_tasks(&self) -> Result<Vec<Task>> {
        self.separate_zscore_tasks
            .iter()
            .map(|s| s.parse::<Task>().map_err(|_| Error::Config(format!("unknown task '{s}'"))))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Input manifest; when absent a synthetic cohort is generated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
}

/// Every section and field is optional in TOML; omitted ones take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide. Results do not depend on it.
    pub threads: usize,
    pub strategies: Vec<Strategy>,
    pub classifiers: Vec<ClassifierKind>,
    pub standardize_per_fold: bool,
    pub wavelet: WaveletSettings,
    pub normalization: NormalizationConfig,
    pub peaks: PeakConfig,
    pub classifier: ClassifierConfig,
    pub dataset: DatasetConfig,
    pub synth: SynthConfig,
    pub paths: PathsConfig,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 20240601,
            threads: 0,
            strategies: Strategy::ALL.to_vec(),
            classifiers: ClassifierKind::ALL.to_vec(),
            standardize_per_fold: true,
            wavelet: WaveletSettings::default(),
            normalization: NormalizationConfig::default(),
            peaks: PeakConfig::default(),
            classifier: ClassifierConfig::default(),
            dataset: DatasetConfig::default(),
            synth: SynthConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Relative paths inside the file resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile {
            path: path.to_path_buf(),
        })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(m) = &cfg.paths.manifest {
            cfg.paths.manifest = Some(base.join(m));
        }
        cfg.paths.output_dir = base.join(&cfg.paths.output_dir);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.strategies.is_empty() || self.classifiers.is_empty() {
            return Err(Error::Config("strategies and classifiers must be non-empty".into()));
        }
        self.wavelet.spec()?;
        self.normalization.validate()?;
        if !(self.peaks.min_separation_seconds >= 0.0)
            || !(0.0..=1.0).contains(&self.peaks.min_prominence_fraction)
        {
            return Err(Error::Config("peak settings out of range".into()));
        }
        let c = &self.classifier;
        if !(c.svm_c > 0.0 && c.svm_tol > 0.0 && c.gaussian_kernel_scale > 0.0) {
            return Err(Error::Config("svm_c, svm_tol and gaussian_kernel_scale must be positive".into()));
        }
        self.dataset.separate_tasks()?;
        if self.paths.manifest.is_none() {
            self.synth.validate()?;
        }
        Ok(())
    }
}
