//! Butterworth bandpass as a cascade of biquads.
//!
//! Design follows the analog route: prototype lowpass poles, lowpass to
//! bandpass substitution around prewarped band edges, then the bilinear
//! transform. Every section gets one zero at `z = 1` and one at `z = -1`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Second-order section, normalised so that `a[0] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2])
            / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// Transposed direct-form II state for a unit constant input in steady state.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        [self.b[1] - self.a[1] * g + z2, z2]
    }

    fn run(&self, x: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + state[0];
            state[0] = b1 * input - a1 * y + state[1];
            state[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
    pub fs: f64,
}

/// Butterworth bandpass with a prototype of order `order`, giving `order`
/// biquads (filter order `2 * order`).
pub fn butterworth_bandpass(order: usize, lo: f64, hi: f64, fs: f64) -> Result<SosFilter> {
    if order == 0 {
        return Err(Error::invalid("order", "must be >= 1"));
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid("fs", format!("must be > 0, got {fs}")));
    }
    if !(lo > 0.0 && lo < hi && hi < 0.5 * fs) {
        return Err(Error::invalid(
            "band",
            format!("need 0 < lo < hi < fs/2 = {}, got [{lo}, {hi}]", 0.5 * fs),
        ));
    }

    let two_fs = 2.0 * fs;
    let wl = two_fs * (PI * lo / fs).tan();
    let wh = two_fs * (PI * hi / fs).tan();
    let bw = wh - wl;
    let w0_sq = wl * wh;

    let mut poles = Vec::with_capacity(2 * order);
    for k in 1..=order {
        let theta = PI * (2 * k + order - 1) as f64 / (2 * order) as f64;
        let proto = Complex64::from_polar(1.0, theta);
        let half = proto * (0.5 * bw);
        let disc = (half * half - w0_sq).sqrt();
        for s in [half + disc, half - disc] {
            poles.push((two_fs + s) / (two_fs - s));
        }
    }

    let mut sections = Vec::with_capacity(order);
    let mut real_poles = Vec::new();
    for z in &poles {
        if z.im > 1e-12 * z.norm() {
            sections.push(section_from_poles(*z, z.conj()));
        } else if z.im.abs() <= 1e-12 * z.norm() {
            real_poles.push(Complex64::new(z.re, 0.0));
        }
    }
    for pair in real_poles.chunks(2) {
        if let [p, q] = pair {
            sections.push(section_from_poles(*p, *q));
        }
    }
    if sections.len() != order {
        return Err(Error::NonFinite("bandpass design"));
    }

    let mut filter = SosFilter { sections, fs };
    let center = fs / PI * (w0_sq.sqrt() / two_fs).atan();
    let gain = filter.magnitude(center);
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::NonFinite("bandpass gain"));
    }
    for c in filter.sections[0].b.iter_mut() {
        *c /= gain;
    }
    Ok(filter)
}

fn section_from_poles(p: Complex64, q: Complex64) -> Biquad {
    Biquad {
        b: [1.0, 0.0, -1.0],
        a: [1.0, -(p + q).re, (p * q).re],
    }
}

impl SosFilter {
    pub fn response(&self, freq: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / self.fs);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq: f64) -> f64 {
        self.response(freq).norm()
    }

    /// Causal filtering from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.run(&mut y, [0.0; 2]);
        }
        y
    }

    fn filter_from_steady_state(&self, y: &mut [f64]) {
        let Some(&x0) = y.first() else { return };
        let mut level = x0;
        for s in &self.sections {
            let [z1, z2] = s.step_state();
            s.run(y, [z1 * level, z2 * level]);
            level *= s.dc_gain();
        }
    }

    /// Zero-phase forward-backward filtering with odd-reflection padding and
    /// steady-state initial conditions. The magnitude response is squared.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.filter_from_steady_state(&mut ext);
        ext.reverse();
        self.filter_from_steady_state(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}
