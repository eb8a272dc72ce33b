//! Binary classifiers: kernel SVMs (linear, cubic, Gaussian) and a CART tree.

mod cart;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cart::{best_split, gini, train_cart, CartModel, CartParams, Node, SplitCandidate};
pub use svm::{solve_svm, train_svm, KernelKind, KernelSpec, SvmModel, SvmParams, SvmSolution};

use crate::error::{Error, Result};
use crate::features::StandardizationParams;
use crate::signal::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    SvmLinear,
    SvmCubic,
    SvmGaussian,
    Cart,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::SvmLinear,
        ClassifierKind::SvmCubic,
        ClassifierKind::SvmGaussian,
        ClassifierKind::Cart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::SvmLinear => "svm_linear",
            ClassifierKind::SvmCubic => "svm_cubic",
            ClassifierKind::SvmGaussian => "svm_gaussian",
            ClassifierKind::Cart => "cart",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown classifier '{s}'")))
    }
}

/// Settings shared by all classifier kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSettings {
    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_iter: usize,
    pub gaussian_scale: f64,
    pub poly_offset: f64,
    pub cart: CartParams,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        let svm = SvmParams::default();
        let kernel = KernelSpec::default();
        Self {
            svm_c: svm.c,
            svm_tol: svm.tol,
            svm_max_iter: svm.max_iter,
            gaussian_scale: kernel.gaussian_scale,
            poly_offset: kernel.poly_offset,
            cart: CartParams::default(),
        }
    }
}

impl ClassifierSettings {
    pub fn svm_params(&self, kind: KernelKind) -> SvmParams {
        SvmParams {
            kernel: KernelSpec {
                kind,
                gaussian_scale: self.gaussian_scale,
                poly_offset: self.poly_offset,
            },
            c: self.svm_c,
            tol: self.svm_tol,
            max_iter: self.svm_max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "snake_case")]
pub enum Classifier {
    Svm(SvmModel),
    Cart(CartModel),
}

/// A fitted classifier together with the standardization it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub standardization: StandardizationParams,
    pub classifier: Classifier,
}

impl TrainedModel {
    pub fn fit(
        kind: ClassifierKind,
        settings: &ClassifierSettings,
        x: &[Vec<f64>],
        y: &[ClassLabel],
        standardize: bool,
    ) -> Result<Self> {
        let dim = x.first().map_or(0, Vec::len);
        let standardization = if standardize {
            StandardizationParams::fit(x)?
        } else {
            StandardizationParams::identity(dim)
        };
        let xs: Vec<Vec<f64>> = x
            .iter()
            .map(|r| standardization.apply(r))
            .collect::<Result<_>>()?;
        let classifier = match kind {
            ClassifierKind::Cart => {
                let yi: Vec<usize> = y.iter().map(|l| l.index()).collect();
                Classifier::Cart(train_cart(&xs, &yi, &settings.cart)?)
            }
            svm_kind => {
                let kernel = match svm_kind {
                    ClassifierKind::SvmLinear => KernelKind::Linear,
                    ClassifierKind::SvmCubic => KernelKind::PolynomialCubic,
                    _ => KernelKind::Gaussian,
                };
                let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
                Classifier::Svm(train_svm(&xs, &ys, &settings.svm_params(kernel))?)
            }
        };
        Ok(Self {
            standardization,
            classifier,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let z = self.standardization.apply(x)?;
        Ok(match &self.classifier {
            Classifier::Svm(m) => {
                if m.predict(&z)?.0 > 0.0 {
                    ClassLabel::HighCl
                } else {
                    ClassLabel::LowCl
                }
            }
            Classifier::Cart(m) => ClassLabel::from_index(m.predict(&z)?),
        })
    }

    /// Pretty-printed JSON for inspection; not a stable interchange format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}
