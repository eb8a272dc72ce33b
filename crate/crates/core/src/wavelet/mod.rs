//! Stationary (undecimated) wavelet denoising.
//!
//! The transform is the à trous algorithm: at level `j` the base quadrature
//! mirror filters are dilated by inserting `2^(j-1) - 1` zeros between taps and
//! applied without decimation, with circular indexing. Signals are first
//! replicate-padded to a multiple of `2^levels`; the pad is removed after
//! reconstruction.

mod fk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Domain, Recording};

pub use fk::{FK14, FK18, FK22, FK4, FK6, FK8};

pub const SUPPORTED_FK_ORDERS: [usize; 6] = [4, 6, 8, 14, 18, 22];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveletFamily {
    FejerKorovkin,
    Haar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    family: WaveletFamily,
    fk_order: usize,
    levels: usize,
    dec_lo: Vec<f64>,
    dec_hi: Vec<f64>,
}

impl WaveletSpec {
    pub fn new(family: WaveletFamily, fk_order: usize, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::Config("wavelet levels must be positive".into()));
        }
        let dec_lo: Vec<f64> = match family {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::FejerKorovkin => match fk_order {
                4 => FK4.to_vec(),
                6 => FK6.to_vec(),
                8 => FK8.to_vec(),
                14 => FK14.to_vec(),
                18 => FK18.to_vec(),
                22 => FK22.to_vec(),
                other => return Err(Error::UnsupportedWaveletOrder(other)),
            },
        };
        let n = dec_lo.len();
        let dec_hi = (0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * dec_lo[n - 1 - k]
            })
            .collect();
        Ok(Self {
            family,
            fk_order: if family == WaveletFamily::Haar { 2 } else { fk_order },
            levels,
            dec_lo,
            dec_hi,
        })
    }

    pub fn fejer_korovkin(order: usize, levels: usize) -> Result<Self> {
        Self::new(WaveletFamily::FejerKorovkin, order, levels)
    }

    pub fn haar(levels: usize) -> Result<Self> {
        Self::new(WaveletFamily::Haar, 2, levels)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn fk_order(&self) -> usize {
        self.fk_order
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn dec_lo(&self) -> &[f64] {
        &self.dec_lo
    }

    pub fn dec_hi(&self) -> &[f64] {
        &self.dec_hi
    }

    /// Synthesis lowpass: the time reverse of the analysis lowpass.
    pub fn rec_lo(&self) -> Vec<f64> {
        self.dec_lo.iter().rev().copied().collect()
    }

    pub fn rec_hi(&self) -> Vec<f64> {
        self.dec_hi.iter().rev().copied().collect()
    }

    /// Length every transformed signal must be a multiple of.
    pub fn divisor(&self) -> usize {
        1 << self.levels
    }
}

impl Default for WaveletSpec {
    fn default() -> Self {
        Self::fejer_korovkin(8, 4).expect("FK8 is supported")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwtDecomposition {
    pub approximation: Vec<f64>,
    /// `details[j]` holds the level `j + 1` detail band.
    pub details: Vec<Vec<f64>>,
    pub padded_length: usize,
    pub original_length: usize,
    family: WaveletFamily,
    fk_order: usize,
    levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `T = sqrt(2 ln N)` with no noise-scale factor.
    UniversalLiteral,
    /// `T = sigma * sqrt(2 ln N)`, `sigma = median(|d|) / 0.6745` per band.
    UniversalSigmaScaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    pub rule: ThresholdRule,
    pub thresholds: Vec<f64>,
}

impl ThresholdSpec {
    /// One threshold per detail band of `decomp`.
    pub fn for_decomposition(rule: ThresholdRule, decomp: &SwtDecomposition) -> Self {
        let thresholds = decomp
            .details
            .iter()
            .map(|band| {
                let base = universal_threshold(band.len());
                match rule {
                    ThresholdRule::UniversalLiteral => base,
                    ThresholdRule::UniversalSigmaScaled => mad_sigma(band) * base,
                }
            })
            .collect();
        Self { rule, thresholds }
    }
}

/// `sqrt(2 ln n)`.
pub fn universal_threshold(n: usize) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

/// Robust noise scale of a detail band, `median(|d|) / 0.6745`.
pub fn mad_sigma(band: &[f64]) -> f64 {
    if band.is_empty() {
        return 0.0;
    }
    let mut abs: Vec<f64> = band.iter().map(|d| d.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let median = if n % 2 == 1 {
        abs[n / 2]
    } else {
        0.5 * (abs[n / 2 - 1] + abs[n / 2])
    };
    median / 0.6745
}

pub fn replicate_pad(samples: &[f64], divisor: usize) -> Result<(Vec<f64>, usize)> {
    let last = *samples.last().ok_or(Error::EmptyInput)?;
    if divisor == 0 {
        return Err(Error::Config("pad divisor must be positive".into()));
    }
    let target = samples.len().div_ceil(divisor) * divisor;
    let mut out = Vec::with_capacity(target);
    out.extend_from_slice(samples);
    out.resize(target, last);
    Ok((out, target - samples.len()))
}

fn analysis_step(input: &[f64], filter: &[f64], stride: usize) -> Vec<f64> {
    let n = input.len();
    (0..n)
        .map(|i| {
            filter
                .iter()
                .enumerate()
                .map(|(k, &c)| c * input[(i + stride * k) % n])
                .sum()
        })
        .collect()
}

pub fn swt(samples: &[f64], spec: &WaveletSpec) -> Result<SwtDecomposition> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n % spec.divisor() != 0 {
        return Err(Error::LengthNotDivisible {
            len: n,
            divisor: spec.divisor(),
        });
    }
    let mut approx = samples.to_vec();
    let mut details = Vec::with_capacity(spec.levels);
    for level in 0..spec.levels {
        let stride = 1 << level;
        details.push(analysis_step(&approx, &spec.dec_hi, stride));
        approx = analysis_step(&approx, &spec.dec_lo, stride);
    }
    Ok(SwtDecomposition {
        approximation: approx,
        details,
        padded_length: n,
        original_length: n,
        family: spec.family,
        fk_order: spec.fk_order,
        levels: spec.levels,
    })
}

pub fn soft_threshold_value(d: f64, t: f64) -> f64 {
    let mag = d.abs() - t;
    if mag > 0.0 {
        d.signum() * mag
    } else {
        0.0
    }
}

pub fn soft_threshold(decomp: &SwtDecomposition, thresholds: &ThresholdSpec) -> Result<SwtDecomposition> {
    if thresholds.thresholds.len() != decomp.details.len() {
        return Err(Error::BandCountMismatch {
            expected: decomp.details.len(),
            found: thresholds.thresholds.len(),
        });
    }
    let details = decomp
        .details
        .iter()
        .zip(&thresholds.thresholds)
        .map(|(band, &t)| band.iter().map(|&d| soft_threshold_value(d, t)).collect())
        .collect();
    Ok(SwtDecomposition {
        details,
        ..decomp.clone()
    })
}

pub fn inverse_swt(decomp: &SwtDecomposition, spec: &WaveletSpec) -> Result<Vec<f64>> {
    if decomp.family != spec.family
        || decomp.fk_order != spec.fk_order
        || decomp.levels != spec.levels
        || decomp.details.len() != spec.levels
    {
        return Err(Error::SpecMismatch);
    }
    let n = decomp.padded_length;
    if decomp.approximation.len() != n || decomp.details.iter().any(|d| d.len() != n) {
        return Err(Error::SpecMismatch);
    }
    let taps = spec.dec_lo.len();
    let mut approx = decomp.approximation.clone();
    for level in (0..spec.levels).rev() {
        let stride = 1 << level;
        let detail = &decomp.details[level];
        approx = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for k in 0..taps {
                    let j = (i + n - (stride * k) % n) % n;
                    acc += spec.dec_lo[k] * approx[j] + spec.dec_hi[k] * detail[j];
                }
                0.5 * acc
            })
            .collect();
    }
    Ok(approx)
}

/// Replicate pad, transform, soft-threshold the detail bands, reconstruct and
/// strip the pad. The sampling spec is unchanged.
pub fn denoise(recording: &Recording, spec: &WaveletSpec, rule: ThresholdRule) -> Result<Recording> {
    if recording.domain() != Domain::DiscreteTime {
        return Err(Error::WrongDomain {
            expected: Domain::DiscreteTime.name(),
        });
    }
    let clean = denoise_samples(recording.samples(), spec, rule)?;
    recording.with_samples(clean)
}

pub fn denoise_samples(samples: &[f64], spec: &WaveletSpec, rule: ThresholdRule) -> Result<Vec<f64>> {
    let (padded, _) = replicate_pad(samples, spec.divisor())?;
    let mut decomp = swt(&padded, spec)?;
    decomp.original_length = samples.len();
    let thresholds = ThresholdSpec::for_decomposition(rule, &decomp);
    let shrunk = soft_threshold(&decomp, &thresholds)?;
    let mut out = inverse_swt(&shrunk, spec)?;
    out.truncate(decomp.original_length);
    Ok(out)
}
