//! Real-time tracking of a time-varying phase.
//!
//! The quadrature stream is cut into consecutive, non-overlapping windows of
//! `window_m` samples. Each window yields a closed-form MAP estimate,
//! reported relative to the preset `center_phase` at the window midpoint.
//! The resulting estimate stream (rate `fs / window_m`) can then be bandpass
//! filtered and analysed spectrally.
//!
//! A window averages the phase over `window_m / fs` seconds, so a tone at
//! frequency `f` comes out scaled by the boxcar response
//! [`window_response`]; [`ToneFit::corrected_amplitude`] undoes it.

pub mod filter;
pub mod signal;
pub mod spectrum;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::optimal_phase;
use crate::error::{Error, Result};
use crate::estimator::map_estimate;
use crate::model::QuadratureVariances;

pub use filter::{butterworth_bandpass, SosFilter};
pub use signal::{synthesize_demo_signal, DemoSignal, NoiseProfile};
pub use spectrum::{welch, Spectrum, SpectrumWindow, WelchConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Quadrature sample rate in Hz.
    pub fs: f64,
    pub window_m: usize,
    pub center_phase: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    /// Butterworth prototype order; the bandpass has `2 * filter_order` poles.
    pub filter_order: usize,
    pub welch: WelchConfig,
}

impl TrackerConfig {
    /// 1 MS/s input, 100-sample windows, 2-4 kHz band, centred on the
    /// optimal phase of `vars`.
    pub fn for_state(vars: &QuadratureVariances) -> Result<Self> {
        Ok(Self {
            fs: 1e6,
            window_m: 100,
            center_phase: optimal_phase(vars)?,
            band_lo: 2000.0,
            band_hi: 4000.0,
            filter_order: 4,
            welch: WelchConfig::default(),
        })
    }

    /// Rate of the estimate stream, `fs / window_m`.
    pub fn estimate_rate(&self) -> f64 {
        self.fs / self.window_m as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::invalid(
                "fs",
                format!("must be > 0, got {}", self.fs),
            ));
        }
        if self.window_m == 0 {
            return Err(Error::invalid("window_m", "must be >= 1"));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.center_phase) {
            return Err(Error::invalid(
                "center_phase",
                format!("must lie in [0, pi/2], got {}", self.center_phase),
            ));
        }
        check_band(self.band_lo, self.band_hi, self.estimate_rate())?;
        if self.filter_order == 0 {
            return Err(Error::invalid("filter_order", "must be >= 1"));
        }
        Ok(())
    }
}

fn check_band(lo: f64, hi: f64, rate: f64) -> Result<()> {
    if lo > 0.0 && lo < hi && hi < 0.5 * rate {
        Ok(())
    } else {
        Err(Error::invalid(
            "band",
            format!("need 0 < lo < hi < {} Hz, got [{lo}, {hi}]", 0.5 * rate),
        ))
    }
}

/// Phase deviations from the preset measurement phase, uniformly sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimeSeries {
    pub t: Vec<f64>,
    pub delta_phi: Vec<f64>,
    /// Sample spacing in seconds.
    pub dt: f64,
}

impl PhaseTimeSeries {
    pub fn len(&self) -> usize {
        self.delta_phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_phi.is_empty()
    }

    pub fn rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn mean(&self) -> f64 {
        self.delta_phi.iter().sum::<f64>() / self.len() as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.delta_phi.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.len() as f64
    }
}

pub fn track(
    input: &[f64],
    vars: &QuadratureVariances,
    cfg: &TrackerConfig,
) -> Result<PhaseTimeSeries> {
    cfg.validate()?;
    let w = cfg.window_m;
    if input.len() < w {
        return Err(Error::invalid(
            "input",
            format!("{} samples is shorter than one window of {w}", input.len()),
        ));
    }
    let delta_phi = input
        .par_chunks_exact(w)
        .map(|window| {
            let s: f64 = window.iter().map(|x| x * x).sum();
            map_estimate(vars, s, w).map(|phi| phi - cfg.center_phase)
        })
        .collect::<Result<Vec<_>>>()?;
    let dt = w as f64 / cfg.fs;
    let mid = 0.5 * (w - 1) as f64 / cfg.fs;
    let t = (0..delta_phi.len()).map(|k| k as f64 * dt + mid).collect();
    Ok(PhaseTimeSeries { t, delta_phi, dt })
}

/// Zero-phase Butterworth bandpass (prototype order 4) of the estimate stream.
pub fn bandpass(series: &PhaseTimeSeries, band_lo: f64, band_hi: f64) -> Result<PhaseTimeSeries> {
    bandpass_with_order(series, band_lo, band_hi, 4)
}

pub fn bandpass_with_order(
    series: &PhaseTimeSeries,
    band_lo: f64,
    band_hi: f64,
    order: usize,
) -> Result<PhaseTimeSeries> {
    check_band(band_lo, band_hi, series.rate())?;
    let filter = butterworth_bandpass(order, band_lo, band_hi, series.rate())?;
    Ok(PhaseTimeSeries {
        t: series.t.clone(),
        delta_phi: filter.filtfilt(&series.delta_phi),
        dt: series.dt,
    })
}

/// Welch PSD (Hann, 1024-sample segments, 50% overlap) in rad^2/Hz.
pub fn spectrum(series: &PhaseTimeSeries) -> Result<Spectrum> {
    welch(&series.delta_phi, series.rate(), &WelchConfig::default())
}

/// Magnitude response of averaging `window_m` consecutive samples at rate
/// `fs`, evaluated at `freq`.
pub fn window_response(freq: f64, window_m: usize, fs: f64) -> f64 {
    let half = PI * freq / fs;
    if half.sin() == 0.0 {
        return 1.0;
    }
    ((window_m as f64 * half).sin() / (window_m as f64 * half.sin())).abs()
}

/// Least-squares fit of `a sin(2 pi f t) + b cos(2 pi f t) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToneFit {
    pub freq: f64,
    /// Coefficient `a` of the sine term (in phase with the injected tone).
    pub in_phase: f64,
    pub quadrature: f64,
    pub offset: f64,
}

impl ToneFit {
    pub fn amplitude(&self) -> f64 {
        self.in_phase.hypot(self.quadrature)
    }

    /// Amplitude divided by the boxcar response of the estimation window.
    pub fn corrected_amplitude(&self, window_m: usize, fs: f64) -> f64 {
        self.amplitude() / window_response(self.freq, window_m, fs)
    }
}

pub fn fit_tone(series: &PhaseTimeSeries, freq: f64) -> Result<ToneFit> {
    if series.len() < 3 {
        return Err(Error::invalid(
            "series",
            "need at least 3 points for a tone fit",
        ));
    }
    // normal equations for the basis (sin, cos, 1)
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (&t, &y) in series.t.iter().zip(&series.delta_phi) {
        let (s, c) = (TAU * freq * t).sin_cos();
        let row = [s, c, 1.0];
        for i in 0..3 {
            aty[i] += row[i] * y;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let [a, b, c] = solve3(ata, aty).ok_or(Error::NonFinite("tone fit"))?;
    Ok(ToneFit {
        freq,
        in_phase: a,
        quadrature: b,
        offset: c,
    })
}

#[allow(clippy::needless_range_loop)]
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        v.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            v[row] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - tail) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
