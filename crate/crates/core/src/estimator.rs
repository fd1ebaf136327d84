//! Bayesian phase inference from homodyne samples.
//!
//! The likelihood of `M` zero-mean Gaussian outcomes depends on the data
//! only through `S = sum x_i^2`:
//!
//! ```text
//! ln P({x}|phi) = -(M/2) ln(2 pi V(phi)) - S / (2 V(phi))
//! ```
//!
//! The posterior is held on a uniform phase grid and normalised with the
//! trapezoidal rule in log space. The MAP estimate also has a closed form:
//! the likelihood peaks where `V(phi) = S/M`, and `V` is monotone on
//! `[0, pi/2]`, so out-of-range values clamp to the nearest edge.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Debug;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::fisher_at_phase;
use crate::error::{Error, Result};
use crate::model::QuadratureVariances;
use crate::sampler::{sample_batch_stream, QuadratureBatch, SamplerOptions};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Uniform grid of `k` phases spanning `[lo, hi]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    lo: f64,
    hi: f64,
    k: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: FRAC_PI_2,
            k: 10_000,
        }
    }
}

impl PhaseGrid {
    pub fn new(lo: f64, hi: f64, k: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(
                "grid",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        if k < 2 {
            return Err(Error::invalid(
                "grid",
                format!("need at least 2 points, got {k}"),
            ));
        }
        Ok(Self { lo, hi, k })
    }

    /// Default `[0, pi/2]` range with `k` points.
    pub fn with_points(k: usize) -> Result<Self> {
        Self::new(0.0, FRAC_PI_2, k)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.k - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.k {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.k).map(|i| self.point(i))
    }

    fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.k {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

pub trait PhasePrior: Debug + Send + Sync {
    fn log_density(&self, phi: f64) -> f64;
}

/// Flat prior on `[lo, hi]`; `2/pi` on the default quarter period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformPrior {
    pub lo: f64,
    pub hi: f64,
}

impl Default for UniformPrior {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: FRAC_PI_2,
        }
    }
}

impl PhasePrior for UniformPrior {
    fn log_density(&self, phi: f64) -> f64 {
        if phi >= self.lo && phi <= self.hi {
            -(self.hi - self.lo).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Single-sample log-likelihood pieces evaluated once per grid point.
#[derive(Debug)]
struct LikelihoodTable {
    half_log_two_pi_v: Vec<f64>,
    inv_two_v: Vec<f64>,
}

impl LikelihoodTable {
    fn new(vars: &QuadratureVariances, grid: &PhaseGrid) -> Self {
        let (half_log_two_pi_v, inv_two_v) = grid
            .points()
            .map(|phi| {
                // exactly flat for degenerate variances
                let v = if vars.is_degenerate() {
                    vars.v_minus()
                } else {
                    vars.at(phi)
                };
                (0.5 * (LN_2PI + v.ln()), 0.5 / v)
            })
            .unzip();
        Self {
            half_log_two_pi_v,
            inv_two_v,
        }
    }

    fn log_likelihood(&self, i: usize, s: f64, m: f64) -> f64 {
        -m * self.half_log_two_pi_v[i] - s * self.inv_two_v[i]
    }
}

/// `-(m/2) ln(2 pi V(phi)) - S / (2 V(phi))`.
pub fn log_likelihood(vars: &QuadratureVariances, phi: f64, s: f64, m: usize) -> f64 {
    let v = vars.at(phi);
    -0.5 * m as f64 * (LN_2PI + v.ln()) - s / (2.0 * v)
}

/// How the posterior width is summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WidthKind {
    #[default]
    StdDev,
    /// Full width at half maximum, linearly interpolated between grid points.
    Fwhm,
}

/// Discretised posterior over the phase.
#[derive(Debug, Clone)]
pub struct PhasePosterior {
    grid: PhaseGrid,
    vars: QuadratureVariances,
    log_prior: Arc<Vec<f64>>,
    table: Arc<LikelihoodTable>,
    log_density: Vec<f64>,
    map_index: usize,
    mean: f64,
    credible_width: f64,
    m_used: usize,
    sum_sq: f64,
}

impl PhasePosterior {
    /// Posterior before any data: the normalised prior.
    pub fn from_prior(
        vars: &QuadratureVariances,
        grid: &PhaseGrid,
        prior: &dyn PhasePrior,
    ) -> Result<Self> {
        let log_prior: Vec<f64> = grid.points().map(|phi| prior.log_density(phi)).collect();
        if log_prior.iter().all(|l| *l == f64::NEG_INFINITY) {
            return Err(Error::invalid("prior", "no support on the grid"));
        }
        let mut post = Self {
            grid: *grid,
            vars: *vars,
            log_density: log_prior.clone(),
            log_prior: Arc::new(log_prior),
            table: Arc::new(LikelihoodTable::new(vars, grid)),
            map_index: 0,
            mean: 0.0,
            credible_width: 0.0,
            m_used: 0,
            sum_sq: 0.0,
        };
        post.normalize()?;
        Ok(post)
    }

    fn from_statistic(
        vars: &QuadratureVariances,
        s: f64,
        m: usize,
        grid: &PhaseGrid,
        prior: &dyn PhasePrior,
    ) -> Result<Self> {
        check_statistic(s, m)?;
        let mut post = Self::from_prior(vars, grid, prior)?;
        post.add_log_likelihood(s, m);
        post.normalize()?;
        Ok(post)
    }

    /// Rebuilds the unnormalised log posterior with `(s, m)` added to the
    /// data absorbed so far.
    fn add_log_likelihood(&mut self, s: f64, m: usize) {
        self.sum_sq += s;
        self.m_used += m;
        let (total_s, total_m) = (self.sum_sq, self.m_used as f64);
        for (i, (l, p)) in self
            .log_density
            .iter_mut()
            .zip(self.log_prior.iter())
            .enumerate()
        {
            *l = p + self.table.log_likelihood(i, total_s, total_m);
        }
    }

    fn normalize(&mut self) -> Result<()> {
        let peak = self
            .log_density
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::NonFinite("posterior"));
        }
        let mass: f64 = self
            .log_density
            .iter()
            .enumerate()
            .map(|(i, l)| self.grid.trapezoid_weight(i) * (l - peak).exp())
            .sum();
        let log_z = peak + mass.ln();
        let mut map_index = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, l) in self.log_density.iter_mut().enumerate() {
            *l -= log_z;
            if *l > best {
                best = *l;
                map_index = i;
            }
        }
        self.map_index = map_index;

        let mut mean = 0.0;
        for (i, l) in self.log_density.iter().enumerate() {
            mean += self.grid.trapezoid_weight(i) * self.grid.point(i) * l.exp();
        }
        let mut var = 0.0;
        for (i, l) in self.log_density.iter().enumerate() {
            let d = self.grid.point(i) - mean;
            var += self.grid.trapezoid_weight(i) * d * d * l.exp();
        }
        self.mean = mean;
        self.credible_width = var.max(0.0).sqrt();
        Ok(())
    }

    /// Absorbs one outcome in place.
    pub fn absorb(&mut self, x: f64) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::NonFinite("quadrature sample"));
        }
        let s = x * x;
        for (i, l) in self.log_density.iter_mut().enumerate() {
            *l += self.table.log_likelihood(i, s, 1.0);
        }
        self.sum_sq += s;
        self.m_used += 1;
        self.normalize()
    }

    /// Returns a new snapshot with `x` absorbed.
    pub fn update(&self, x: f64) -> Result<Self> {
        let mut next = self.clone();
        next.absorb(x)?;
        Ok(next)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn vars(&self) -> &QuadratureVariances {
        &self.vars
    }

    pub fn log_density(&self) -> &[f64] {
        &self.log_density
    }

    pub fn density(&self) -> Vec<f64> {
        self.log_density.iter().map(|l| l.exp()).collect()
    }

    /// Lowest-index grid point attaining the maximum density.
    pub fn map_phase(&self) -> f64 {
        self.grid.point(self.map_index)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Posterior standard deviation.
    pub fn credible_width(&self) -> f64 {
        self.credible_width
    }

    pub fn m_used(&self) -> usize {
        self.m_used
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.sum_sq
    }

    /// Trapezoidal integral of the density; 1 up to rounding.
    pub fn total_mass(&self) -> f64 {
        self.log_density
            .iter()
            .enumerate()
            .map(|(i, l)| self.grid.trapezoid_weight(i) * l.exp())
            .sum()
    }

    pub fn width(&self, kind: WidthKind) -> f64 {
        match kind {
            WidthKind::StdDev => self.credible_width,
            WidthKind::Fwhm => self.fwhm(),
        }
    }

    fn fwhm(&self) -> f64 {
        let half = self.log_density[self.map_index] - std::f64::consts::LN_2;
        let d = &self.log_density;
        let cross = |inside: usize, outside: usize| -> f64 {
            let (a, b) = (d[inside], d[outside]);
            let frac = if a == b { 0.0 } else { (a - half) / (a - b) };
            let (pa, pb) = (self.grid.point(inside), self.grid.point(outside));
            pa + frac * (pb - pa)
        };
        let mut left = self.map_index;
        while left > 0 && d[left - 1] >= half {
            left -= 1;
        }
        let mut right = self.map_index;
        while right + 1 < d.len() && d[right + 1] >= half {
            right += 1;
        }
        let lo = if left == 0 {
            self.grid.lo
        } else {
            cross(left, left - 1)
        };
        let hi = if right + 1 == d.len() {
            self.grid.hi
        } else {
            cross(right, right + 1)
        };
        hi - lo
    }

    /// Laplace width `1/sqrt(-l''(phi_map))` of the log-likelihood at the
    /// grid MAP. `None` when the curvature is not negative there (flat or
    /// boundary-clamped posteriors).
    pub fn laplace_width(&self) -> Option<f64> {
        let phi = self.map_phase();
        let v = self.vars.at(phi);
        let d1 = self.vars.derivative_at(phi);
        let d2 = self.vars.second_derivative_at(phi);
        let m = self.m_used as f64;
        let s = self.sum_sq;
        let curvature = d2 * (-m / (2.0 * v) + s / (2.0 * v * v))
            + d1 * d1 * (m / (2.0 * v * v) - s / (v * v * v));
        (curvature < 0.0).then(|| 1.0 / (-curvature).sqrt())
    }
}

fn check_statistic(s: f64, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("m", "need at least one sample"));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::invalid(
            "S",
            format!("must be finite and >= 0, got {s}"),
        ));
    }
    Ok(())
}

/// Posterior from the sufficient statistic with the flat prior over the grid.
pub fn posterior(
    vars: &QuadratureVariances,
    s: f64,
    m: usize,
    grid: &PhaseGrid,
) -> Result<PhasePosterior> {
    let prior = UniformPrior {
        lo: grid.lo(),
        hi: grid.hi(),
    };
    PhasePosterior::from_statistic(vars, s, m, grid, &prior)
}

pub fn posterior_with_prior(
    vars: &QuadratureVariances,
    s: f64,
    m: usize,
    grid: &PhaseGrid,
    prior: &dyn PhasePrior,
) -> Result<PhasePosterior> {
    PhasePosterior::from_statistic(vars, s, m, grid, prior)
}

pub fn posterior_from_batch(batch: &QuadratureBatch, grid: &PhaseGrid) -> Result<PhasePosterior> {
    posterior(&batch.vars, batch.sum_of_squares(), batch.m(), grid)
}

/// Closed-form MAP phase and whether it was clamped to an edge of `[0, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapEstimate {
    pub phase: f64,
    pub clamped: bool,
}

pub fn map_estimate(vars: &QuadratureVariances, s: f64, m: usize) -> Result<f64> {
    map_estimate_detail(vars, s, m).map(|e| e.phase)
}

pub fn map_estimate_detail(vars: &QuadratureVariances, s: f64, m: usize) -> Result<MapEstimate> {
    check_statistic(s, m)?;
    if vars.is_degenerate() {
        return Err(Error::DegenerateVariances);
    }
    let (a, b) = (vars.v_minus(), vars.v_plus());
    let mean_sq = s / m as f64;
    Ok(if mean_sq <= a {
        MapEstimate {
            phase: 0.0,
            clamped: true,
        }
    } else if mean_sq >= b {
        MapEstimate {
            phase: FRAC_PI_2,
            clamped: true,
        }
    } else {
        let c = ((b + a - 2.0 * mean_sq) / (b - a)).clamp(-1.0, 1.0);
        MapEstimate {
            phase: 0.5 * c.acos(),
            clamped: false,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    /// Samples per trial.
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// When set, each trial also builds a grid posterior to report its width.
    pub width_grid: Option<PhaseGrid>,
    pub sampler: SamplerOptions,
    pub parallel: bool,
}

impl MonteCarloConfig {
    pub fn new(m: usize, trials: usize, seed: u64) -> Self {
        Self {
            m,
            trials,
            seed,
            width_grid: None,
            sampler: SamplerOptions::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub phi_true: f64,
    pub m: usize,
    pub trials: usize,
    /// Mean of the MAP estimates.
    pub mean: f64,
    /// Unbiased variance of the MAP estimates; absent for a single trial.
    pub variance: Option<f64>,
    /// Mean posterior standard deviation, when a width grid was configured.
    pub mean_width: Option<f64>,
    /// Fraction of trials whose estimate hit an edge of `[0, pi/2]`.
    pub clamped_fraction: f64,
    /// `1 / (m F(phi_true))`; absent where the Fisher information vanishes.
    pub crb: Option<f64>,
    /// False for degenerate variances, where estimates carry no information.
    pub informative: bool,
}

struct Trial {
    estimate: f64,
    clamped: bool,
    width: Option<f64>,
}

/// Repeats the seeded experiment `trials` times. Trial `i` uses sampler stream
/// `i`, so results do not depend on scheduling and the same `seed` gives
/// common random numbers across different `phi_true`.
pub fn monte_carlo(
    vars: &QuadratureVariances,
    phi_true: f64,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloSummary> {
    if cfg.trials == 0 {
        return Err(Error::invalid("trials", "need at least one trial"));
    }
    if cfg.m == 0 {
        return Err(Error::invalid("m", "need at least one sample per trial"));
    }

    let run = |i: usize| -> Result<Trial> {
        let batch = sample_batch_stream(vars, phi_true, cfg.m, cfg.seed, i as u64, &cfg.sampler)?;
        let s = batch.sum_of_squares();
        let est = if vars.is_degenerate() {
            // flat posterior: report the prior mean
            MapEstimate {
                phase: 0.25 * PI,
                clamped: false,
            }
        } else {
            map_estimate_detail(vars, s, cfg.m)?
        };
        let width = match &cfg.width_grid {
            Some(grid) => Some(posterior(vars, s, cfg.m, grid)?.credible_width()),
            None => None,
        };
        Ok(Trial {
            estimate: est.phase,
            clamped: est.clamped,
            width,
        })
    };

    let trials: Vec<Trial> = if cfg.parallel {
        (0..cfg.trials)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?
    } else {
        (0..cfg.trials).map(run).collect::<Result<_>>()?
    };

    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t.estimate).sum::<f64>() / n;
    let variance = (trials.len() >= 2).then(|| {
        trials
            .iter()
            .map(|t| (t.estimate - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0)
    });
    let mean_width = cfg
        .width_grid
        .as_ref()
        .map(|_| trials.iter().filter_map(|t| t.width).sum::<f64>() / n);
    let clamped_fraction = trials.iter().filter(|t| t.clamped).count() as f64 / n;
    let fisher = fisher_at_phase(vars, phi_true);
    let crb = (fisher > 0.0).then(|| 1.0 / (cfg.m as f64 * fisher));

    if !mean.is_finite() || variance.is_some_and(|v| !v.is_finite()) {
        return Err(Error::NonFinite("monte carlo summary"));
    }

    Ok(MonteCarloSummary {
        phi_true,
        m: cfg.m,
        trials: cfg.trials,
        mean,
        variance,
        mean_width,
        clamped_fraction,
        crb,
        informative: !vars.is_degenerate(),
    })
}

/// `(mean, variance)` of the MAP estimates over `trials >= 2` seeded trials.
pub fn estimate_variance_monte_carlo(
    vars: &QuadratureVariances,
    phi_true: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::invalid(
            "trials",
            "need at least two trials for a variance",
        ));
    }
    let summary = monte_carlo(vars, phi_true, &MonteCarloConfig::new(m, trials, seed))?;
    Ok((summary.mean, summary.variance.unwrap_or_default()))
}
