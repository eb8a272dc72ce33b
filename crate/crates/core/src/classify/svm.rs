//! Soft-margin binary SVM trained by SMO on the dual problem.
//!
//! The working pair is the maximal violating pair of the first-order KKT
//! conditions (Keerthi et al.), with ties going to the lowest index. The
//! solver stops when the violation gap drops below `tol`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    PolynomialCubic,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// `s` in `exp(-|x - z|^2 / s^2)`.
    pub gaussian_scale: f64,
    /// `c` in `(x.z + c)^3`.
    pub poly_offset: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            ..Self::default()
        }
    }

    pub fn cubic(poly_offset: f64) -> Self {
        Self {
            kind: KernelKind::PolynomialCubic,
            poly_offset,
            ..Self::default()
        }
    }

    pub fn gaussian(scale: f64) -> Self {
        Self {
            kind: KernelKind::Gaussian,
            gaussian_scale: scale,
            ..Self::default()
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::PolynomialCubic => (dot(x, z) + self.poly_offset).powi(3),
            KernelKind::Gaussian => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (self.gaussian_scale * self.gaussian_scale)).exp()
            }
        }
    }
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            kind: KernelKind::Linear,
            gaussian_scale: 3.3,
            poly_offset: 1.0,
        }
    }
}

fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    /// Box constraint.
    pub c: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::default(),
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// Label (+1/-1) and raw decision value. A raw value of exactly zero maps to +1.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        let raw = self.decision_value(x)?;
        Ok((if raw >= 0.0 { 1.0 } else { -1.0 }, raw))
    }
}

/// Full dual solution, kept for diagnostics and tests.
#[derive(Debug, Clone)]
pub struct SvmSolution {
    pub model: SvmModel,
    pub alpha: Vec<f64>,
}

pub fn train_svm(x: &[Vec<f64>], y: &[f64], params: &SvmParams) -> Result<SvmModel> {
    solve_svm(x, y, params).map(|s| s.model)
}

pub fn solve_svm(x: &[Vec<f64>], y: &[f64], params: &SvmParams) -> Result<SvmSolution> {
    let n = x.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    let dim = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: r.len(),
        });
    }
    if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
        return Err(Error::SingleClassInput);
    }
    let c = params.c;
    let kernel = params.kernel;

    // Q_ij = y_i y_j K(x_i, x_j)
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = y[i] * y[j] * kernel.eval(&x[i], &x[j]);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }

    let mut alpha = vec![0.0; n];
    // gradient of 0.5 a'Qa - e'a
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        let mut i_sel = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > m_up {
                m_up = v;
                i_sel = Some(t);
            }
            if in_low(alpha[t], y[t]) && v < m_low {
                m_low = v;
                j_sel = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        if m_up - m_low < params.tol {
            break;
        }
        if iterations >= params.max_iter {
            return Err(Error::NoConvergence { iterations });
        }
        iterations += 1;

        // Move along direction y_i e_i - y_j e_j.
        let eta = (q[i * n + i] + q[j * n + j] - 2.0 * y[i] * y[j] * q[i * n + j]).max(1e-12);
        let mut step = (m_up - m_low) / eta;
        // keep both variables inside the box
        step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });

        let di = y[i] * step;
        let dj = -y[j] * step;
        alpha[i] = (alpha[i] + di).clamp(0.0, c);
        alpha[j] = (alpha[j] + dj).clamp(0.0, c);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q[t * n + i] * di + q[t * n + j] * dj;
        }
    }

    let bias = {
        let free: Vec<f64> = (0..n)
            .filter(|&t| alpha[t] > 0.0 && alpha[t] < c)
            .map(|t| -y[t] * grad[t])
            .collect();
        if free.is_empty() {
            let mut ub = f64::INFINITY;
            let mut lb = f64::NEG_INFINITY;
            for t in 0..n {
                let v = -y[t] * grad[t];
                if in_up(alpha[t], y[t]) {
                    lb = lb.max(v);
                }
                if in_low(alpha[t], y[t]) {
                    ub = ub.min(v);
                }
            }
            match (lb.is_finite(), ub.is_finite()) {
                (true, true) => 0.5 * (lb + ub),
                (true, false) => lb,
                (false, true) => ub,
                (false, false) => 0.0,
            }
        } else {
            free.iter().sum::<f64>() / free.len() as f64
        }
    };

    let (support_vectors, dual_coef) = (0..n)
        .filter(|&t| alpha[t] > 0.0)
        .map(|t| (x[t].clone(), alpha[t] * y[t]))
        .unzip();
    Ok(SvmSolution {
        model: SvmModel {
            kernel,
            c,
            support_vectors,
            dual_coef,
            bias,
            iterations,
        },
        alpha,
    })
}
