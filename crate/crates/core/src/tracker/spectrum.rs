//! Welch power spectral density estimates.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest series accepted by [`welch`].
pub const MIN_SPECTRUM_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpectrumWindow {
    #[default]
    Hann,
    Rectangular,
}

impl SpectrumWindow {
    fn coefficients(&self, len: usize) -> Vec<f64> {
        match self {
            // periodic Hann
            SpectrumWindow::Hann => (0..len)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
                .collect(),
            SpectrumWindow::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    pub segment_len: usize,
    /// Samples shared by consecutive segments.
    pub overlap: usize,
    pub window: SpectrumWindow,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_len: 1024,
            overlap: 512,
            window: SpectrumWindow::Hann,
        }
    }
}

/// One-sided PSD in units of signal^2 per Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freq: Vec<f64>,
    pub psd: Vec<f64>,
    /// Bin spacing in Hz.
    pub resolution: f64,
    pub segments: usize,
}

impl Spectrum {
    /// Integrated PSD over all bins; equals the (mean-removed) signal power.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution
    }

    /// Integrated PSD over bins with `lo <= f <= hi`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.bins_where(|f| f >= lo && f <= hi)
            .map(|(_, p)| p)
            .sum::<f64>()
            * self.resolution
    }

    /// Highest bin in `[lo, hi]` as `(frequency, psd)`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.bins_where(|f| f >= lo && f <= hi)
            .fold(None, |best: Option<(f64, f64)>, (f, p)| match best {
                Some((_, bp)) if bp >= p => best,
                _ => Some((f, p)),
            })
    }

    /// Highest bin above DC.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.peak_in(self.resolution * 0.5, f64::INFINITY)
    }

    /// Median PSD over `[lo, hi]`.
    pub fn median_in(&self, lo: f64, hi: f64) -> Option<f64> {
        let mut v: Vec<f64> = self
            .bins_where(|f| f >= lo && f <= hi)
            .map(|(_, p)| p)
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.total_cmp(b));
        Some(v[v.len() / 2])
    }

    /// Mean PSD over bins outside `[lo, hi]`, excluding DC.
    pub fn mean_outside(&self, lo: f64, hi: f64) -> Option<f64> {
        let out: Vec<f64> = self
            .bins_where(|f| f > 0.0 && (f < lo || f > hi))
            .map(|(_, p)| p)
            .collect();
        (!out.is_empty()).then(|| out.iter().sum::<f64>() / out.len() as f64)
    }

    /// `10 log10(peak in-band PSD / mean out-of-band PSD)`: how far the
    /// in-band signal stands above everything left outside the band.
    pub fn out_of_band_suppression_db(&self, lo: f64, hi: f64) -> Option<f64> {
        let (_, peak) = self.peak_in(lo, hi)?;
        let out = self.mean_outside(lo, hi)?;
        Some(10.0 * (peak / out).log10())
    }

    fn bins_where<'a>(
        &'a self,
        keep: impl Fn(f64) -> bool + 'a,
    ) -> impl Iterator<Item = (f64, f64)> + 'a {
        self.freq
            .iter()
            .zip(&self.psd)
            .filter(move |(f, _)| keep(**f))
            .map(|(f, p)| (*f, *p))
    }
}

/// Averaged modified periodogram. Each segment has its mean removed before
/// windowing. A series shorter than `segment_len` is analysed as a single
/// segment of its full length.
pub fn welch(data: &[f64], fs: f64, cfg: &WelchConfig) -> Result<Spectrum> {
    if data.len() < MIN_SPECTRUM_LEN {
        return Err(Error::invalid(
            "series",
            format!(
                "need at least {MIN_SPECTRUM_LEN} samples, got {}",
                data.len()
            ),
        ));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("fs", format!("must be > 0, got {fs}")));
    }
    if cfg.segment_len < MIN_SPECTRUM_LEN || cfg.overlap >= cfg.segment_len {
        return Err(Error::invalid(
            "welch",
            format!(
                "need segment_len >= {MIN_SPECTRUM_LEN} and overlap < segment_len, got {}/{}",
                cfg.segment_len, cfg.overlap
            ),
        ));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("spectrum input"));
    }

    let (len, step) = if data.len() < cfg.segment_len {
        (data.len(), data.len())
    } else {
        (cfg.segment_len, cfg.segment_len - cfg.overlap)
    };
    let window = cfg.window.coefficients(len);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);

    let bins = len / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut segments = 0;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut start = 0;
    while start + len <= data.len() {
        let seg = &data[start..start + len];
        let mean = seg.iter().sum::<f64>() / len as f64;
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (fs * window_power * segments as f64);
    let psd = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (len % 2 == 0 && k == len / 2) {
                1.0
            } else {
                2.0
            };
            a * scale * one_sided
        })
        .collect();
    let resolution = fs / len as f64;
    let freq = (0..bins).map(|k| k as f64 * resolution).collect();
    Ok(Spectrum {
        freq,
        psd,
        resolution,
        segments,
    })
}
