//! Arbitrary-ratio resampling onto the subject-normalized time axis.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    WindowedSinc,
}

/// Half-width of the sinc kernel in cutoff-scaled input samples.
const SINC_HALF_WIDTH: f64 = 24.0;
const KAISER_BETA: f64 = 8.6;
/// Intervals in the tabulated half window; lookups interpolate linearly.
const WINDOW_TABLE_SIZE: usize = 8192;

/// Kaiser window sampled on `u = k / WINDOW_TABLE_SIZE`, `k = 0..=WINDOW_TABLE_SIZE`.
fn kaiser_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let norm = bessel_i0(KAISER_BETA);
        (0..=WINDOW_TABLE_SIZE)
            .map(|k| {
                let u = k as f64 / WINDOW_TABLE_SIZE as f64;
                bessel_i0(KAISER_BETA * (1.0 - u * u).max(0.0).sqrt()) / norm
            })
            .collect()
    })
}

fn kaiser_window(u: f64) -> f64 {
    let table = kaiser_table();
    let pos = u.abs() * WINDOW_TABLE_SIZE as f64;
    let k = pos.floor() as usize;
    if k >= WINDOW_TABLE_SIZE {
        return table[WINDOW_TABLE_SIZE];
    }
    let frac = pos - k as f64;
    table[k] + frac * (table[k + 1] - table[k])
}

/// Output length for a ratio `ratio` (output samples per input sample).
pub fn output_length(input_len: usize, ratio: f64) -> usize {
    (input_len as f64 * ratio).round() as usize
}

/// Resamples `input` so that output sample `k` sits at input position
/// `k / ratio`. Positions past the last input sample take the last sample's
/// value. A ratio of exactly 1 returns the input unchanged.
pub fn resample(input: &[f64], ratio: f64, method: Interpolation) -> Vec<f64> {
    if ratio == 1.0 {
        return input.to_vec();
    }
    let n_out = output_length(input.len(), ratio);
    let Some(&last) = input.last() else {
        return Vec::new();
    };
    let last_pos = (input.len() - 1) as f64;
    match method {
        Interpolation::Linear => (0..n_out)
            .map(|k| {
                let x = k as f64 / ratio;
                if x >= last_pos {
                    return last;
                }
                let i = x.floor() as usize;
                let frac = x - i as f64;
                input[i] + frac * (input[i + 1] - input[i])
            })
            .collect(),
        Interpolation::WindowedSinc => {
            let kernel = SincKernel::new(ratio);
            (0..n_out)
                .map(|k| {
                    let x = k as f64 / ratio;
                    if x >= last_pos {
                        last
                    } else {
                        kernel.eval(input, x)
                    }
                })
                .collect()
        }
    }
}

/// Kaiser-windowed sinc low-pass at the lower of the two Nyquist rates.
struct SincKernel {
    cutoff: f64,
    half_width: f64,
}

impl SincKernel {
    fn new(ratio: f64) -> Self {
        let cutoff = ratio.min(1.0);
        Self {
            cutoff,
            half_width: SINC_HALF_WIDTH / cutoff,
        }
    }

    fn weight(&self, t: f64) -> f64 {
        let u = t / self.half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let window = kaiser_window(u);
        let arg = std::f64::consts::PI * self.cutoff * t;
        let sinc = if arg == 0.0 { 1.0 } else { arg.sin() / arg };
        self.cutoff * sinc * window
    }

    /// Edge samples are extended by replication; weights are renormalized to
    /// unit DC gain.
    fn eval(&self, input: &[f64], x: f64) -> f64 {
        let n = input.len() as isize;
        let lo = (x - self.half_width).ceil() as isize;
        let hi = (x + self.half_width).floor() as isize;
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for j in lo..=hi {
            let w = self.weight(x - j as f64);
            let v = input[j.clamp(0, n - 1) as usize];
            acc += w * v;
            wsum += w;
        }
        acc / wsum
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
