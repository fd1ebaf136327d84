//! Probe state description and the map from physical parameters to the
//! homodyne statistics.
//!
//! Loss is a single lumped beam splitter of power transmission `eta` placed
//! before detection; excess noise `xi` is added to both quadratures. With
//! vacuum variance 1 the detected variances are
//!
//! ```text
//! v_minus = eta * exp(-2r) + (1 - eta) + xi
//! v_plus  = eta * exp(+2r) + (1 - eta) + xi
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack on the uncertainty product check. Admits pure-state
/// variances quoted to six significant digits.
const UNCERTAINTY_SLACK: f64 = 1e-5;

/// Physical parameters of a (possibly lossy) squeezed vacuum probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateModel {
    r: f64,
    eta: f64,
    xi: f64,
}

impl StateModel {
    pub fn new(r: f64, eta: f64) -> Result<Self> {
        Self::with_excess_noise(r, eta, 0.0)
    }

    /// Lossless, noiseless squeezed vacuum.
    pub fn pure(r: f64) -> Result<Self> {
        Self::new(r, 1.0)
    }

    pub fn with_excess_noise(r: f64, eta: f64, xi: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid(
                "r",
                format!("must be finite and >= 0, got {r}"),
            ));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(
                "eta",
                format!("must lie in (0, 1], got {eta}"),
            ));
        }
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(Error::invalid(
                "xi",
                format!("must be finite and >= 0, got {xi}"),
            ));
        }
        Ok(Self { r, eta, xi })
    }

    /// State with `r = asinh(sqrt(n_target / eta))` and no excess noise, so
    /// that [`mean_photon_number`](Self::mean_photon_number) returns `n_target`.
    pub fn for_target_photons(n_target: f64, eta: f64) -> Result<Self> {
        if !(n_target.is_finite() && n_target >= 0.0) {
            return Err(Error::invalid(
                "n_target",
                format!("must be finite and >= 0, got {n_target}"),
            ));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(
                "eta",
                format!("must lie in (0, 1], got {eta}"),
            ));
        }
        Self::new((n_target / eta).sqrt().asinh(), eta)
    }

    /// Squeezing parameter reproducing a measured squeezing level (in dB below
    /// vacuum) after a loss channel of transmission `eta`.
    ///
    /// Fails when the requested level is not reachable through that channel,
    /// i.e. when `10^(-db/10) <= 1 - eta`.
    pub fn from_measured_squeezing_db(db: f64, eta: f64) -> Result<Self> {
        if !(db.is_finite() && db >= 0.0) {
            return Err(Error::invalid(
                "db",
                format!("must be finite and >= 0, got {db}"),
            ));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::invalid(
                "eta",
                format!("must lie in (0, 1], got {eta}"),
            ));
        }
        let v_minus = 10f64.powf(-db / 10.0);
        let inner = (v_minus - (1.0 - eta)) / eta;
        if inner <= 0.0 {
            return Err(Error::invalid(
                "db",
                format!("{db} dB is unreachable with transmission {eta}"),
            ));
        }
        Self::new(-0.5 * inner.ln(), eta)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn variances(&self) -> QuadratureVariances {
        let noise = (1.0 - self.eta) + self.xi;
        let squeeze = (-2.0 * self.r).exp();
        QuadratureVariances {
            v_minus: self.eta * squeeze + noise,
            v_plus: self.eta / squeeze + noise,
        }
    }

    /// Mean photon number reaching the detector: `eta * sinh^2(r) + xi / 2`.
    pub fn mean_photon_number(&self) -> f64 {
        let s = self.r.sinh();
        self.eta * s * s + 0.5 * self.xi
    }
}

/// Squeezed and anti-squeezed quadrature variances in vacuum units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureVariances {
    v_minus: f64,
    v_plus: f64,
}

impl QuadratureVariances {
    pub fn new(v_minus: f64, v_plus: f64) -> Result<Self> {
        if !(v_minus.is_finite() && v_minus > 0.0) {
            return Err(Error::invalid(
                "v_minus",
                format!("must be finite and > 0, got {v_minus}"),
            ));
        }
        if !(v_plus.is_finite() && v_plus >= v_minus) {
            return Err(Error::invalid(
                "v_plus",
                format!("must be finite and >= v_minus ({v_minus}), got {v_plus}"),
            ));
        }
        if v_minus * v_plus < 1.0 - UNCERTAINTY_SLACK {
            return Err(Error::invalid(
                "v_minus * v_plus",
                format!("violates the uncertainty bound: {} < 1", v_minus * v_plus),
            ));
        }
        Ok(Self { v_minus, v_plus })
    }

    pub fn vacuum() -> Self {
        Self {
            v_minus: 1.0,
            v_plus: 1.0,
        }
    }

    pub fn v_minus(&self) -> f64 {
        self.v_minus
    }

    pub fn v_plus(&self) -> f64 {
        self.v_plus
    }

    pub fn is_degenerate(&self) -> bool {
        self.v_minus == self.v_plus
    }

    /// `V(phi) = v_minus cos^2(phi) + v_plus sin^2(phi)`, pi-periodic.
    pub fn at(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        self.v_minus * c * c + self.v_plus * s * s
    }

    /// `dV/dphi = (v_plus - v_minus) sin(2 phi)`.
    pub fn derivative_at(&self, phi: f64) -> f64 {
        (self.v_plus - self.v_minus) * (2.0 * phi).sin()
    }

    pub fn second_derivative_at(&self, phi: f64) -> f64 {
        2.0 * (self.v_plus - self.v_minus) * (2.0 * phi).cos()
    }

    /// `(squeezing, anti-squeezing)` in dB relative to vacuum.
    pub fn squeezing_db(&self) -> (f64, f64) {
        (-10.0 * self.v_minus.log10(), 10.0 * self.v_plus.log10())
    }

    /// `v_minus * v_plus`; equals 1 for pure states.
    pub fn uncertainty_product(&self) -> f64 {
        self.v_minus * self.v_plus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn variance_examples() {
        let v = StateModel::pure(0.0).unwrap().variances();
        assert_eq!((v.v_minus(), v.v_plus()), (1.0, 1.0));

        let v = StateModel::pure(1.0).unwrap().variances();
        assert!(close(v.v_minus(), 0.135335, 1e-6));
        assert!(close(v.v_plus(), 7.389056, 1e-6));

        let v = StateModel::new(1.0, 0.89).unwrap().variances();
        assert!(close(v.v_minus(), 0.230448, 1e-6));
        assert!(close(v.v_plus(), 6.686260, 1e-6));
    }

    #[test]
    fn excess_noise_adds_to_both_quadratures() {
        let base = StateModel::new(0.7, 0.9).unwrap().variances();
        let noisy = StateModel::with_excess_noise(0.7, 0.9, 0.05)
            .unwrap()
            .variances();
        assert!(close(noisy.v_minus() - base.v_minus(), 0.05, 1e-15));
        assert!(close(noisy.v_plus() - base.v_plus(), 0.05, 1e-15));
    }

    #[test]
    fn quadrature_variance_examples() {
        let v = QuadratureVariances::new(0.25, 4.0).unwrap();
        assert_eq!(v.at(0.0), 0.25);
        assert!(close(v.at(FRAC_PI_4), 2.125, 1e-12));
        assert!(close(v.at(FRAC_PI_2), 4.0, 1e-12));
        assert!(close(
            v.at(FRAC_PI_8 + std::f64::consts::PI),
            v.at(FRAC_PI_8),
            1e-12
        ));

        let v = QuadratureVariances::new(0.135335, 7.389056).unwrap();
        assert!(close(v.at(FRAC_PI_8), 1.197618, 1e-6));
    }

    #[test]
    fn photon_number_examples() {
        assert_eq!(StateModel::pure(0.0).unwrap().mean_photon_number(), 0.0);
        assert!(close(
            StateModel::pure(1.0).unwrap().mean_photon_number(),
            1.381098,
            1e-6
        ));
        assert!(close(
            StateModel::new(1.0, 0.89).unwrap().mean_photon_number(),
            1.229177,
            1e-6
        ));
    }

    #[test]
    fn squeezing_db_examples() {
        assert_eq!(QuadratureVariances::vacuum().squeezing_db(), (0.0, 0.0));
        let (sq, _) = QuadratureVariances::new(0.125893, 8.0)
            .unwrap()
            .squeezing_db();
        assert!(close(sq, 9.0, 1e-4));
        let (sq, asq) = QuadratureVariances::new(0.5, 2.0).unwrap().squeezing_db();
        assert!(close(sq, 3.0103, 1e-4) && close(asq, 3.0103, 1e-4));
    }

    #[test]
    fn target_photon_examples() {
        assert_eq!(StateModel::for_target_photons(0.0, 0.3).unwrap().r(), 0.0);
        assert!(close(
            StateModel::for_target_photons(1.381098, 1.0).unwrap().r(),
            1.0,
            1e-6
        ));
        assert!(close(
            StateModel::for_target_photons(1.229177, 0.89).unwrap().r(),
            1.0,
            1e-6
        ));
        assert!(StateModel::for_target_photons(-1e-3, 1.0).is_err());
    }

    #[test]
    fn measured_squeezing_inversion() {
        let s = StateModel::from_measured_squeezing_db(9.0, 0.89).unwrap();
        let (sq, _) = s.variances().squeezing_db();
        assert!(close(sq, 9.0, 1e-10));
        // 9 dB after 11% loss needs roughly 17.5 dB at the source.
        assert!(close(s.r(), 2.0128, 1e-3), "r = {}", s.r());
        // 1 - eta = 0.5 caps squeezing at 3.01 dB.
        assert!(StateModel::from_measured_squeezing_db(4.0, 0.5).is_err());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(StateModel::new(-0.1, 1.0).is_err());
        assert!(StateModel::new(0.1, 0.0).is_err());
        assert!(StateModel::new(0.1, 1.01).is_err());
        assert!(StateModel::with_excess_noise(0.1, 1.0, -0.1).is_err());
        assert!(QuadratureVariances::new(0.0, 1.0).is_err());
        assert!(QuadratureVariances::new(2.0, 1.0).is_err());
        assert!(QuadratureVariances::new(0.5, 1.5).is_err());
        // thermal states are allowed to sit above vacuum in both quadratures
        assert!(QuadratureVariances::new(1.2, 1.5).is_ok());
    }

    #[test]
    fn variance_monotone_on_quarter_period() {
        for &(a, b) in &[(0.1, 10.0), (0.9, 1.2), (1.0, 1.0), (1.2, 7.0)] {
            let v = QuadratureVariances::new(a, b).unwrap();
            let n = 10_000;
            let mut prev = v.at(0.0);
            for i in 1..=n {
                let cur = v.at(FRAC_PI_2 * i as f64 / n as f64);
                assert!(cur >= prev - 1e-15);
                prev = cur;
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn photon_round_trip(r in 0.0f64..3.0, eta in prop::sample::select(vec![1.0, 0.89, 0.5])) {
                let s = StateModel::new(r, eta).unwrap();
                let back = StateModel::for_target_photons(s.mean_photon_number(), eta).unwrap();
                prop_assert!((back.r() - r).abs() < 1e-10);
            }

            #[test]
            fn pure_states_have_unit_product(r in 0.0f64..3.0) {
                let v = StateModel::pure(r).unwrap().variances();
                prop_assert!((v.uncertainty_product() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn loss_degrades_squeezing(r in 0.0f64..3.0, e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
                let (hi, lo) = if e1 >= e2 { (e1, e2) } else { (e2, e1) };
                let a = StateModel::new(r, hi).unwrap().variances();
                let b = StateModel::new(r, lo).unwrap().variances();
                prop_assert!(b.v_minus() >= a.v_minus() - 1e-15);
                prop_assert!(b.v_plus() <= a.v_plus() + 1e-12);
            }
        }
    }
}
