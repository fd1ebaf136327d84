//! Seeded synthetic homodyne records.
//!
//! Every record draws from its own ChaCha8 stream selected by `(seed, stream)`,
//! so batches can be produced concurrently and reproduced bit for bit.
//! Normal deviates come from the Box-Muller transform applied to 53-bit
//! uniforms; a quadrature sample is `sqrt(V(phi)) * z`.

use std::f64::consts::TAU;
use std::io::{BufRead, Write};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::QuadratureVariances;

/// Standard normal generator: Box-Muller over a ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - u lies in (0, 1], keeping the log finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }
}

/// Optional deviations from the ideal measurement model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerOptions {
    /// RMS of Gaussian jitter added to the phase of every sample, emulating
    /// residual lock noise. Zero disables it.
    pub phase_jitter_rms: f64,
}

impl SamplerOptions {
    fn validate(&self) -> Result<()> {
        if self.phase_jitter_rms.is_finite() && self.phase_jitter_rms >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(
                "phase_jitter_rms",
                "must be finite and >= 0",
            ))
        }
    }
}

/// `M` homodyne outcomes with their generation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureBatch {
    pub samples: Vec<f64>,
    pub phi_true: f64,
    pub vars: QuadratureVariances,
    pub seed: u64,
    pub stream: u64,
}

impl QuadratureBatch {
    pub fn m(&self) -> usize {
        self.samples.len()
    }

    /// Sum of squared outcomes; the likelihood depends on the data only
    /// through this and `m`.
    pub fn sum_of_squares(&self) -> f64 {
        sufficient_statistic(&self.samples)
    }

    pub fn metadata(&self) -> BatchMetadata {
        BatchMetadata {
            m: self.m(),
            phi_true: self.phi_true,
            v_minus: self.vars.v_minus(),
            v_plus: self.vars.v_plus(),
            seed: self.seed,
        }
    }
}

/// JSON sidecar accompanying an exported batch CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetadata {
    pub m: usize,
    pub phi_true: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    pub seed: u64,
}

pub fn sufficient_statistic(samples: &[f64]) -> f64 {
    samples.iter().map(|x| x * x).sum()
}

pub fn sample_batch(
    vars: &QuadratureVariances,
    phi_true: f64,
    m: usize,
    seed: u64,
) -> Result<QuadratureBatch> {
    sample_batch_stream(vars, phi_true, m, seed, 0, &SamplerOptions::default())
}

/// Draws `m` outcomes from stream `stream` of `seed`.
pub fn sample_batch_stream(
    vars: &QuadratureVariances,
    phi_true: f64,
    m: usize,
    seed: u64,
    stream: u64,
    opts: &SamplerOptions,
) -> Result<QuadratureBatch> {
    if m == 0 {
        return Err(Error::invalid(
            "m",
            "batch must contain at least one sample",
        ));
    }
    if !phi_true.is_finite() {
        return Err(Error::invalid("phi_true", "must be finite"));
    }
    opts.validate()?;

    let mut normals = NormalStream::new(seed, stream);
    let samples = if opts.phase_jitter_rms > 0.0 {
        let mut jitter = NormalStream::new(seed, stream ^ JITTER_STREAM);
        (0..m)
            .map(|_| {
                let phi = phi_true + opts.phase_jitter_rms * jitter.next_normal();
                vars.at(phi).sqrt() * normals.next_normal()
            })
            .collect()
    } else {
        let scale = vars.at(phi_true).sqrt();
        (0..m).map(|_| scale * normals.next_normal()).collect()
    };

    Ok(QuadratureBatch {
        samples,
        phi_true,
        vars: *vars,
        seed,
        stream,
    })
}

/// Jitter draws use a stream disjoint from the sample streams.
const JITTER_STREAM: u64 = 1 << 63;

/// Homodyne record of a time-dependent phase, sampled uniformly at `fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTimeSeries {
    pub fs: f64,
    pub samples: Vec<f64>,
}

impl QuadratureTimeSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        index as f64 / self.fs
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &x)| (self.time_at(i), x))
    }
}

/// Samples `floor(fs * duration)` outcomes, the i-th at `t = i / fs` with
/// variance `V(phase_fn(t))`.
pub fn sample_timeseries<F>(
    vars: &QuadratureVariances,
    phase_fn: F,
    fs: f64,
    duration: f64,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<QuadratureTimeSeries>
where
    F: Fn(f64) -> f64,
{
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("fs", format!("must be > 0, got {fs}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(
            "duration",
            format!("must be > 0, got {duration}"),
        ));
    }
    opts.validate()?;
    // tolerate representation error in products like 1e6 * 0.1
    let count = (fs * duration * (1.0 + 1e-12)).floor() as usize;
    if count == 0 {
        return Err(Error::invalid(
            "duration",
            "fs * duration < 1 yields no samples",
        ));
    }

    let mut normals = NormalStream::new(seed, 0);
    let mut jitter = NormalStream::new(seed, JITTER_STREAM);
    let samples = (0..count)
        .map(|i| {
            let mut phi = phase_fn(i as f64 / fs);
            if opts.phase_jitter_rms > 0.0 {
                phi += opts.phase_jitter_rms * jitter.next_normal();
            }
            vars.at(phi).sqrt() * normals.next_normal()
        })
        .collect();
    Ok(QuadratureTimeSeries { fs, samples })
}

/// Writes `index,x` rows. Floats use the shortest round-trip representation.
pub fn write_batch_csv<W: Write>(samples: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "index,x")?;
    for (i, x) in samples.iter().enumerate() {
        writeln!(out, "{i},{x}")?;
    }
    Ok(())
}

/// Reads the `x` column of an `index,x` CSV; `#` lines are skipped.
pub fn read_batch_csv<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut samples = Vec::new();
    let mut seen_header = false;
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::invalid("batch csv", e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != "index,x" {
                return Err(Error::invalid(
                    "batch csv",
                    format!("unexpected header `{line}`"),
                ));
            }
            seen_header = true;
            continue;
        }
        let x = line
            .split(',')
            .nth(1)
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                Error::invalid(
                    "batch csv",
                    format!("line {}: bad row `{line}`", lineno + 1),
                )
            })?;
        samples.push(x);
    }
    if samples.is_empty() {
        return Err(Error::invalid("batch csv", "no samples"));
    }
    Ok(samples)
}

/// Rebuilds a batch from CSV samples and its sidecar.
pub fn batch_from_parts(samples: Vec<f64>, meta: &BatchMetadata) -> Result<QuadratureBatch> {
    if samples.len() != meta.m {
        return Err(Error::invalid(
            "m",
            format!(
                "sidecar says {} samples, csv holds {}",
                meta.m,
                samples.len()
            ),
        ));
    }
    Ok(QuadratureBatch {
        samples,
        phi_true: meta.phi_true,
        vars: QuadratureVariances::new(meta.v_minus, meta.v_plus)?,
        seed: meta.seed,
        stream: 0,
    })
}
