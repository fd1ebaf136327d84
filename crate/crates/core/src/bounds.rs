//! Fisher information of homodyne detection on a zero-mean Gaussian probe,
//! the optimal operating phase, and the comparison sensitivity limits.
//!
//! All sensitivities are per single quadrature sample. For `M` independent
//! samples divide the variance (not the standard deviation) by `M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{QuadratureVariances, StateModel};

/// Fisher information of one homodyne sample at phase `phi`:
/// `V'(phi)^2 / (2 V(phi)^2)`.
pub fn fisher_at_phase(vars: &QuadratureVariances, phi: f64) -> f64 {
    let v = vars.at(phi);
    let dv = vars.derivative_at(phi);
    dv * dv / (2.0 * v * v)
}

/// Phase in `[0, pi/4]` maximising [`fisher_at_phase`] over `[0, pi/2]`:
/// `acos((v_plus - v_minus) / (v_plus + v_minus)) / 2`.
pub fn optimal_phase(vars: &QuadratureVariances) -> Result<f64> {
    if vars.is_degenerate() {
        return Err(Error::DegenerateVariances);
    }
    let (a, b) = (vars.v_minus(), vars.v_plus());
    Ok(0.5 * ((b - a) / (b + a)).acos())
}

/// Maximum single-sample Fisher information, `(v_plus - v_minus)^2 / (2 v_plus v_minus)`.
/// Zero for degenerate variances.
pub fn max_fisher(vars: &QuadratureVariances) -> f64 {
    let (a, b) = (vars.v_minus(), vars.v_plus());
    let d = b - a;
    d * d / (2.0 * a * b)
}

/// Maximum Fisher information per detected photon.
pub fn fisher_per_photon(state: &StateModel) -> f64 {
    max_fisher(&state.variances()) / state.mean_photon_number()
}

fn check_photons(n: f64) -> Result<()> {
    if n.is_finite() && n > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "n",
            format!("must be finite and > 0, got {n}"),
        ))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "eta",
            format!("must lie in (0, 1], got {eta}"),
        ))
    }
}

/// Pure squeezed vacuum: `1 / sqrt(8 (n^2 + n))`.
pub fn sensitivity_squeezed_ideal(n: f64) -> Result<f64> {
    check_photons(n)?;
    Ok(1.0 / (8.0 * (n * n + n)).sqrt())
}

/// Shot-noise limit `1 / sqrt(n)`.
pub fn sensitivity_snl(n: f64) -> Result<f64> {
    check_photons(n)?;
    Ok(1.0 / n.sqrt())
}

/// Ideal NOON state with `N = 2n` photons: `1 / (2n)`.
pub fn sensitivity_noon_ideal(n: f64) -> Result<f64> {
    check_photons(n)?;
    Ok(1.0 / (2.0 * n))
}

/// Lossy NOON bound using the default [`NoonSurvival`] model.
pub fn sensitivity_noon_lossy(n: f64, eta: f64) -> Result<f64> {
    check_photons(n)?;
    check_eta(eta)?;
    Ok(1.0 / NoonSurvival.fisher(n, eta).sqrt())
}

/// Coherent displacement plus squeezing, read out on the mean: `sqrt(v_minus / n)`.
pub fn sensitivity_displaced_squeezed(v_minus: f64, n: f64) -> Result<f64> {
    if !(v_minus.is_finite() && v_minus > 0.0) {
        return Err(Error::invalid(
            "v_minus",
            format!("must be > 0, got {v_minus}"),
        ));
    }
    check_photons(n)?;
    Ok((v_minus / n).sqrt())
}

/// Fisher information of a NOON probe under loss.
///
/// The lossy NOON curve depends on how loss is accounted for, so it is kept
/// swappable.
pub trait NoonLossModel: Sync {
    fn name(&self) -> &'static str;

    /// Fisher information for `N = 2n` photons through transmission `eta`.
    fn fisher(&self, n: f64, eta: f64) -> f64;
}

/// The fringe survives only when all `N = 2n` photons are transmitted:
/// `F = N^2 eta^N`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoonSurvival;

impl NoonLossModel for NoonSurvival {
    fn name(&self) -> &'static str {
        "survival"
    }

    fn fisher(&self, n: f64, eta: f64) -> f64 {
        let big_n = 2.0 * n;
        big_n * big_n * eta.powf(big_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeKind {
    SqueezedIdeal,
    SqueezedLossy,
    Snl,
    NoonIdeal,
    NoonLossy,
    DisplacedSqueezed,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::SqueezedIdeal,
        SchemeKind::SqueezedLossy,
        SchemeKind::Snl,
        SchemeKind::NoonIdeal,
        SchemeKind::NoonLossy,
        SchemeKind::DisplacedSqueezed,
    ];

    /// Column stem used in CSV output.
    pub fn column(&self) -> &'static str {
        match self {
            SchemeKind::SqueezedIdeal => "sqz_ideal",
            SchemeKind::SqueezedLossy => "sqz_lossy",
            SchemeKind::Snl => "snl",
            SchemeKind::NoonIdeal => "noon_ideal",
            SchemeKind::NoonLossy => "noon_lossy",
            SchemeKind::DisplacedSqueezed => "disp_sqz",
        }
    }
}

/// Sensitivity and Fisher information of one scheme at one photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub sigma: f64,
    pub fisher: f64,
}

impl Bound {
    fn from_fisher(fisher: f64) -> Self {
        Self {
            sigma: 1.0 / fisher.sqrt(),
            fisher,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: f64,
    /// Indexed in [`SchemeKind::ALL`] order.
    pub bounds: [Bound; 6],
}

impl BoundRow {
    pub fn get(&self, scheme: SchemeKind) -> Bound {
        self.bounds[scheme as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub eta: f64,
    pub noon_loss_model: String,
    pub rows: Vec<BoundRow>,
}

impl BoundTable {
    pub fn photon_grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn column(&self, scheme: SchemeKind) -> Vec<Bound> {
        self.rows.iter().map(|r| r.get(scheme)).collect()
    }
}

pub fn build_bound_table(photon_grid: &[f64], eta: f64) -> Result<BoundTable> {
    build_bound_table_with(photon_grid, eta, &NoonSurvival)
}

/// Fills every scheme column for each grid point.
///
/// The lossy squeezed column uses the state with `eta` transmission whose
/// detected photon number is `n`. The displaced-squeezed column takes
/// `v_minus` from that same state.
pub fn build_bound_table_with(
    photon_grid: &[f64],
    eta: f64,
    noon_loss: &dyn NoonLossModel,
) -> Result<BoundTable> {
    check_eta(eta)?;
    for &n in photon_grid {
        check_photons(n)?;
    }
    if photon_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("photon_grid", "must be strictly increasing"));
    }

    let rows = photon_grid
        .par_iter()
        .map(|&n| -> Result<BoundRow> {
            let lossy = StateModel::for_target_photons(n, eta)?.variances();
            let fishers = [
                8.0 * (n * n + n),
                max_fisher(&lossy),
                n,
                4.0 * n * n,
                noon_loss.fisher(n, eta),
                n / lossy.v_minus(),
            ];
            let bounds = fishers.map(Bound::from_fisher);
            if bounds
                .iter()
                .any(|b| !(b.sigma.is_finite() && b.fisher.is_finite()))
            {
                return Err(Error::NonFinite("bound table"));
            }
            Ok(BoundRow { n, bounds })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BoundTable {
        eta,
        noon_loss_model: noon_loss.name().to_string(),
        rows,
    })
}

/// Photon number where the lossy squeezed Fisher information drops below the
/// ideal NOON value `4 n^2`, located by bisection on `[1e-3, 1e4]`.
///
/// Returns `None` when no crossing exists in that range (e.g. `eta = 1`).
pub fn squeezed_noon_crossover(eta: f64) -> Result<Option<f64>> {
    check_eta(eta)?;
    let gap = |n: f64| -> Result<f64> {
        let vars = StateModel::for_target_photons(n, eta)?.variances();
        Ok(max_fisher(&vars) - 4.0 * n * n)
    };
    let (mut lo, mut hi) = (1e-3, 1e4);
    if gap(lo)? <= 0.0 || gap(hi)? > 0.0 {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn pure(r: f64) -> QuadratureVariances {
        StateModel::pure(r).unwrap().variances()
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_at_phase(&pure(1.0), 0.0), 0.0);
        let vac = QuadratureVariances::vacuum();
        assert_eq!(fisher_at_phase(&vac, 0.3), 0.0);
        let f = fisher_at_phase(&pure(1.0), 0.134518);
        assert!(rel(f, 26.3082) < 1e-5, "{f}");
    }

    #[test]
    fn optimal_phase_examples() {
        assert!((optimal_phase(&pure(1e-9)).unwrap() - FRAC_PI_4).abs() < 1e-8);
        let phi = optimal_phase(&pure(1.0)).unwrap();
        assert!((phi - 0.5 * 2f64.tanh().acos()).abs() < 1e-14);
        assert!((phi - 0.134518).abs() < 1e-6);
        let lossy = QuadratureVariances::new(0.230448, 6.686260).unwrap();
        assert!((optimal_phase(&lossy).unwrap() - 0.183560).abs() < 1e-6);
        assert_eq!(
            optimal_phase(&QuadratureVariances::vacuum()),
            Err(Error::DegenerateVariances)
        );
    }

    #[test]
    fn max_fisher_examples() {
        assert_eq!(max_fisher(&QuadratureVariances::vacuum()), 0.0);
        let f = max_fisher(&pure(1.0));
        assert!(rel(f, 2.0 * 2f64.sinh().powi(2)) < 1e-13);
        assert!(rel(f, 26.30823) < 1e-6);
        let n = 1f64.sinh().powi(2);
        assert!(rel(f, 8.0 * (n * n + n)) < 1e-12);

        let s = StateModel::new(1.85, 0.89).unwrap();
        let f = max_fisher(&s.variances());
        assert!(rel(f, 135.77) < 1e-4, "{f}");
        assert!((fisher_per_photon(&s) - 15.861).abs() < 1e-3);
    }

    #[test]
    fn max_fisher_is_fisher_at_optimum() {
        for (r, eta) in [(0.3, 1.0), (1.0, 0.89), (2.2, 0.5)] {
            let v = StateModel::new(r, eta).unwrap().variances();
            let phi = optimal_phase(&v).unwrap();
            assert!(rel(fisher_at_phase(&v, phi), max_fisher(&v)) < 1e-12);
        }
    }

    #[test]
    fn sensitivity_examples() {
        assert!((sensitivity_squeezed_ideal(1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((sensitivity_squeezed_ideal(1.381098).unwrap() - 0.194964).abs() < 1e-6);
        let tiny = 1e-10;
        assert!(
            rel(
                sensitivity_squeezed_ideal(tiny).unwrap(),
                1.0 / (8.0 * tiny).sqrt()
            ) < 1e-9
        );

        assert_eq!(sensitivity_snl(1.0).unwrap(), 1.0);
        assert_eq!(sensitivity_snl(4.0).unwrap(), 0.5);
        assert!((sensitivity_snl(40.0).unwrap() - 0.158114).abs() < 1e-6);

        assert_eq!(sensitivity_noon_ideal(0.5).unwrap(), 1.0);
        assert_eq!(sensitivity_noon_ideal(2.0).unwrap(), 0.25);
        assert!((sensitivity_noon_ideal(3.45).unwrap() - 0.144928).abs() < 1e-6);

        assert!((sensitivity_noon_lossy(2.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((sensitivity_noon_lossy(2.0, 0.89).unwrap() - 0.315617).abs() < 1e-6);
        assert!((sensitivity_noon_lossy(10.0, 0.89).unwrap() - 0.160350).abs() < 1e-6);

        assert_eq!(sensitivity_displaced_squeezed(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(sensitivity_displaced_squeezed(0.25, 1.0).unwrap(), 0.5);
        assert!((sensitivity_displaced_squeezed(0.125893, 4.0).unwrap() - 0.177407).abs() < 1e-6);
    }

    #[test]
    fn sensitivities_reject_bad_input() {
        assert!(sensitivity_squeezed_ideal(0.0).is_err());
        assert!(sensitivity_snl(-1.0).is_err());
        assert!(sensitivity_noon_ideal(f64::NAN).is_err());
        assert!(sensitivity_noon_lossy(1.0, 0.0).is_err());
        assert!(sensitivity_noon_lossy(1.0, 1.5).is_err());
        assert!(sensitivity_displaced_squeezed(0.0, 1.0).is_err());
        assert!(sensitivity_displaced_squeezed(1.0, 0.0).is_err());
    }

    #[test]
    fn table_examples() {
        let t = build_bound_table(&[1.0], 1.0).unwrap();
        let row = &t.rows[0];
        assert!((row.get(SchemeKind::SqueezedIdeal).sigma - 0.25).abs() < 1e-15);
        assert!((row.get(SchemeKind::NoonIdeal).sigma - 0.5).abs() < 1e-15);
        assert!((row.get(SchemeKind::Snl).sigma - 1.0).abs() < 1e-15);
        // lossless: lossy column collapses onto the ideal one
        assert!(rel(row.get(SchemeKind::SqueezedLossy).sigma, 0.25) < 1e-12);

        let t = build_bound_table(&[2.0], 1.0).unwrap();
        assert!((t.rows[0].get(SchemeKind::NoonIdeal).sigma - 0.25).abs() < 1e-15);

        assert!(build_bound_table(&[], 0.89).unwrap().rows.is_empty());
    }

    #[test]
    fn table_rejects_bad_grids() {
        assert!(build_bound_table(&[1.0, 1.0], 1.0).is_err());
        assert!(build_bound_table(&[2.0, 1.0], 1.0).is_err());
        assert!(build_bound_table(&[0.0, 1.0], 1.0).is_err());
        assert!(build_bound_table(&[1.0], 0.0).is_err());
    }

    #[test]
    fn table_matches_scalar_sensitivities() {
        let grid: Vec<f64> = (1..=40).map(|i| 0.25 * i as f64).collect();
        let t = build_bound_table(&grid, 0.89).unwrap();
        for row in &t.rows {
            let n = row.n;
            let lossy = StateModel::for_target_photons(n, 0.89).unwrap().variances();
            let expect = [
                sensitivity_squeezed_ideal(n).unwrap(),
                1.0 / max_fisher(&lossy).sqrt(),
                sensitivity_snl(n).unwrap(),
                sensitivity_noon_ideal(n).unwrap(),
                sensitivity_noon_lossy(n, 0.89).unwrap(),
                sensitivity_displaced_squeezed(lossy.v_minus(), n).unwrap(),
            ];
            for (b, e) in row.bounds.iter().zip(expect) {
                assert!(rel(b.sigma, e) < 1e-12);
                assert!((b.sigma * b.fisher.sqrt() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn custom_noon_loss_model_is_used() {
        struct Linear;
        impl NoonLossModel for Linear {
            fn name(&self) -> &'static str {
                "linear"
            }
            fn fisher(&self, n: f64, eta: f64) -> f64 {
                4.0 * n * n * eta
            }
        }
        let t = build_bound_table_with(&[2.0], 0.25, &Linear).unwrap();
        assert_eq!(t.noon_loss_model, "linear");
        assert!((t.rows[0].get(SchemeKind::NoonLossy).sigma - 0.5).abs() < 1e-15);
    }

    #[test]
    fn crossover_brackets() {
        let n = squeezed_noon_crossover(0.89).unwrap().unwrap();
        assert!((n - 3.4465).abs() < 1e-3, "{n}");
        assert_eq!(squeezed_noon_crossover(1.0).unwrap(), None);
    }
}
