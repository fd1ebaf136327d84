//! Synthetic phase signals: an injected tone on top of low-frequency drift.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::NormalStream;

use super::TrackerConfig;

/// Random stream for drift phases, disjoint from the sampler's streams.
const DRIFT_STREAM: u64 = 1 << 62;

/// Low-frequency phase noise with a `1/f` spectrum below `corner_hz`.
///
/// Realised as a sum of sinusoids on the grid `k * corner_hz / components`,
/// each with random phase and power `~ 1/f`, scaled to the requested RMS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub rms: f64,
    pub corner_hz: f64,
    pub components: usize,
    pub seed: u64,
}

impl NoiseProfile {
    pub fn new(rms: f64, corner_hz: f64, seed: u64) -> Self {
        Self {
            rms,
            corner_hz,
            components: 64,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Component {
    amp: f64,
    freq: f64,
    phase: f64,
}

/// `phi(t) = center + amp sin(2 pi f t) + drift(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoSignal {
    pub center_phase: f64,
    pub tone_freq: f64,
    pub tone_amp: f64,
    drift: Vec<Component>,
}

impl DemoSignal {
    pub fn phase_at(&self, t: f64) -> f64 {
        let drift: f64 = self
            .drift
            .iter()
            .map(|c| c.amp * (TAU * c.freq * t + c.phase).sin())
            .sum();
        self.center_phase + self.tone_amp * (TAU * self.tone_freq * t).sin() + drift
    }

    /// RMS of the drift component alone.
    pub fn drift_rms(&self) -> f64 {
        (self.drift.iter().map(|c| 0.5 * c.amp * c.amp).sum::<f64>()).sqrt()
    }
}

pub fn synthesize_demo_signal(
    cfg: &TrackerConfig,
    tone_freq: f64,
    tone_amp: f64,
    noise: Option<&NoiseProfile>,
) -> Result<DemoSignal> {
    let nyquist = 0.5 * cfg.estimate_rate();
    if !(tone_freq.is_finite() && tone_freq > 0.0 && tone_freq < nyquist) {
        return Err(Error::invalid(
            "tone_freq",
            format!("must lie in (0, {nyquist}) Hz for the estimate rate, got {tone_freq}"),
        ));
    }
    if !(tone_amp.is_finite() && tone_amp >= 0.0) {
        return Err(Error::invalid("tone_amp", "must be finite and >= 0"));
    }

    let drift = match noise {
        None => Vec::new(),
        Some(p) if p.rms == 0.0 => Vec::new(),
        Some(p) => {
            if !(p.rms.is_finite() && p.rms > 0.0) {
                return Err(Error::invalid("noise rms", "must be finite and >= 0"));
            }
            if !(p.corner_hz > 0.0 && p.corner_hz < nyquist) {
                return Err(Error::invalid(
                    "noise corner",
                    format!("must lie in (0, {nyquist}) Hz, got {}", p.corner_hz),
                ));
            }
            if p.components == 0 {
                return Err(Error::invalid("noise components", "must be >= 1"));
            }
            let df = p.corner_hz / p.components as f64;
            let mut rng = NormalStream::new(p.seed, DRIFT_STREAM);
            let mut comps: Vec<Component> = (1..=p.components)
                .map(|k| {
                    let freq = k as f64 * df;
                    Component {
                        amp: (2.0 * df / freq).sqrt(),
                        freq,
                        phase: TAU * rng.uniform(),
                    }
                })
                .collect();
            let raw_rms = (comps.iter().map(|c| 0.5 * c.amp * c.amp).sum::<f64>()).sqrt();
            for c in &mut comps {
                c.amp *= p.rms / raw_rms;
            }
            comps
        }
    };

    Ok(DemoSignal {
        center_phase: cfg.center_phase,
        tone_freq,
        tone_amp,
        drift,
    })
}
