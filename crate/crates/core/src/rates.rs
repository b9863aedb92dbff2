//! Learning and exploration rate schedules.
//!
//! The default schedule is
//!
//!   ζ_k^N = 1/(1 + k/N),        η_k^N = 1/(1 + log²(k/N + 1)),
//!   ζ_t   = 1/(1 + t),          η_t   = 1/(1 + log²(t + 1)),
//!
//! so the discrete rates at step k = ⌊Nt⌋ converge to the continuous ones.
//! ζ is not integrable (∫ζ = ∞) while ∫ζ², ∫ζη converge and ζ_t/η_t^n → 0
//! for every power n; [`check_rate_properties`] verifies these numerically
//! for arbitrary schedules.
//!
//! Note η_0 = 1 exactly: the first exploration step is uniform. The mixture
//! is still a valid distribution, and η < 1 for all t > 0.

use crate::error::{Error, Result};
use crate::numeric;
use serde::{Deserialize, Serialize};

/// Default learning rate ζ_k^N = 1/(1 + k/N).
///
/// Panics if `n` is zero.
pub fn zeta_discrete(k: u64, n: u32) -> f64 {
    assert!(n >= 1, "N must be >= 1");
    1.0 / (1.0 + k as f64 / n as f64)
}

/// Default exploration rate η_k^N = 1/(1 + log²(k/N + 1)).
///
/// Panics if `n` is zero.
pub fn eta_discrete(k: u64, n: u32) -> f64 {
    assert!(n >= 1, "N must be >= 1");
    let l = (k as f64 / n as f64 + 1.0).ln();
    1.0 / (1.0 + l * l)
}

/// Continuous-time ζ_t = 1/(1 + t).
///
/// Panics on negative `t`.
pub fn zeta_cont(t: f64) -> f64 {
    assert!(t >= 0.0, "t must be nonnegative");
    1.0 / (1.0 + t)
}

/// Continuous-time η_t = 1/(1 + log²(t + 1)).
///
/// Panics on negative `t`.
pub fn eta_cont(t: f64) -> f64 {
    assert!(t >= 0.0, "t must be nonnegative");
    let l = (t + 1.0).ln();
    1.0 / (1.0 + l * l)
}

/// A learning/exploration rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RateSchedule {
    /// The default decaying schedule above.
    Paper,
    /// Fixed rates, for frozen-schedule diagnostics. ζ = 0 is allowed here
    /// (it pins the actor); both values must lie in [0,1].
    Constant { zeta: f64, eta: f64 },
    /// User-supplied samples `(t, ζ_t, η_t)`, piecewise-linear in t with
    /// last-value extension; discrete accessors evaluate at t = k/N.
    Tables { points: Vec<(f64, f64, f64)> },
}

impl Default for RateSchedule {
    fn default() -> Self {
        RateSchedule::Paper
    }
}

impl RateSchedule {
    /// Checks the representation invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            RateSchedule::Paper => Ok(()),
            RateSchedule::Constant { zeta, eta } => {
                if !(0.0..=1.0).contains(zeta) || !(0.0..=1.0).contains(eta) {
                    return Err(Error::invalid_argument(format!(
                        "constant rates must lie in [0,1]: zeta={zeta}, eta={eta}"
                    )));
                }
                Ok(())
            }
            RateSchedule::Tables { points } => {
                if points.len() < 2 {
                    return Err(Error::invalid_argument(
                        "rate table needs at least two samples",
                    ));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::invalid_argument("rate table times must increase"));
                    }
                    if w[1].1 > w[0].1 || w[1].2 > w[0].2 {
                        return Err(Error::invalid_argument("rates must be nonincreasing"));
                    }
                }
                if points
                    .iter()
                    .any(|&(t, z, e)| t < 0.0 || !(0.0..=1.0).contains(&z) || !(0.0..=1.0).contains(&e))
                {
                    return Err(Error::invalid_argument("rate table values out of range"));
                }
                Ok(())
            }
        }
    }

    pub fn zeta(&self, t: f64) -> f64 {
        match self {
            RateSchedule::Paper => zeta_cont(t),
            RateSchedule::Constant { zeta, .. } => *zeta,
            RateSchedule::Tables { points } => interp(points, t, 1),
        }
    }

    pub fn eta(&self, t: f64) -> f64 {
        match self {
            RateSchedule::Paper => eta_cont(t),
            RateSchedule::Constant { eta, .. } => *eta,
            RateSchedule::Tables { points } => interp(points, t, 2),
        }
    }

    pub fn zeta_discrete(&self, k: u64, n: u32) -> f64 {
        match self {
            RateSchedule::Paper => zeta_discrete(k, n),
            _ => self.zeta(k as f64 / n as f64),
        }
    }

    pub fn eta_discrete(&self, k: u64, n: u32) -> f64 {
        match self {
            RateSchedule::Paper => eta_discrete(k, n),
            _ => self.eta(k as f64 / n as f64),
        }
    }
}

fn interp(points: &[(f64, f64, f64)], t: f64, field: usize) -> f64 {
    let get = |p: &(f64, f64, f64)| if field == 1 { p.1 } else { p.2 };
    if t <= points[0].0 {
        return get(&points[0]);
    }
    for w in points.windows(2) {
        if t <= w[1].0 {
            let frac = (t - w[0].0) / (w[1].0 - w[0].0);
            return get(&w[0]) + frac * (get(&w[1]) - get(&w[0]));
        }
    }
    get(points.last().unwrap())
}

/// One verified schedule property.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub detail: String,
}

/// Outcome of [`check_rate_properties`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyReport {
    pub properties: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.properties.iter().all(|p| p.pass)
    }
}

/// Tolerances for [`check_rate_properties`]. Defaults are calibrated for
/// horizons ≳ 1e5 (the ∫ζη tail of the default schedule decays only like
/// 1/log T, hence its looser tolerance).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatePropertyOptions {
    /// ∫ζ over [T/2, T] must exceed this (no plateau).
    pub plateau_min: f64,
    /// ∫ζ² over [T/2, T] must fall below this (Cauchy tail).
    pub zeta_sq_tail_max: f64,
    /// ∫ζη over [T/2, T] must fall below this (Cauchy tail).
    pub zeta_eta_tail_max: f64,
    /// ζ/η^n at the horizon must be below its value at the tail-window start
    /// divided by this factor.
    pub ratio_decay_factor: f64,
    /// Quadrature tolerance.
    pub quad_tol: f64,
}

impl Default for RatePropertyOptions {
    fn default() -> Self {
        RatePropertyOptions {
            plateau_min: 1e-3,
            zeta_sq_tail_max: 1e-4,
            zeta_eta_tail_max: 1e-2,
            ratio_decay_factor: 2.0,
            quad_tol: 1e-9,
        }
    }
}

/// Numerically verifies on [0, horizon]:
/// 1. ∫ζ keeps growing (no visible plateau over [T/2, T]);
/// 2. ∫ζ² has a Cauchy tail;
/// 3. ∫ζη has a Cauchy tail;
/// 4. ζ_t/η_t^n decreases toward 0 on the tail for each requested power n.
///
/// Never errors; the report carries pass/fail plus the measured values.
pub fn check_rate_properties(
    schedule: &RateSchedule,
    horizon: f64,
    powers: &[u32],
) -> PropertyReport {
    check_rate_properties_with(schedule, horizon, powers, &RatePropertyOptions::default())
}

/// [`check_rate_properties`] with explicit tolerances.
pub fn check_rate_properties_with(
    schedule: &RateSchedule,
    horizon: f64,
    powers: &[u32],
    opts: &RatePropertyOptions,
) -> PropertyReport {
    assert!(horizon >= 10.0, "horizon must be >= 10");
    let mut properties = Vec::new();
    let half = horizon / 2.0;

    let zeta = |t: f64| schedule.zeta(t);
    let zeta_sq = |t: f64| schedule.zeta(t).powi(2);
    let zeta_eta = |t: f64| schedule.zeta(t) * schedule.eta(t);

    let full = numeric::integrate(&zeta, 0.0, horizon, opts.quad_tol);
    let tail_growth = numeric::integrate(&zeta, half, horizon, opts.quad_tol);
    properties.push(PropertyCheck {
        name: "zeta-integral-grows".into(),
        pass: tail_growth > opts.plateau_min,
        measured: full,
        detail: format!(
            "integral to T = {full:.6}, growth over [T/2,T] = {tail_growth:.3e} (min {:.1e})",
            opts.plateau_min
        ),
    });

    let sq_tail = numeric::integrate(&zeta_sq, half, horizon, opts.quad_tol);
    properties.push(PropertyCheck {
        name: "zeta-squared-tail".into(),
        pass: sq_tail < opts.zeta_sq_tail_max,
        measured: sq_tail,
        detail: format!(
            "increment of integral of zeta^2 over [T/2,T] = {sq_tail:.3e} (max {:.1e})",
            opts.zeta_sq_tail_max
        ),
    });

    let ze_tail = numeric::integrate(&zeta_eta, half, horizon, opts.quad_tol);
    properties.push(PropertyCheck {
        name: "zeta-eta-tail".into(),
        pass: ze_tail < opts.zeta_eta_tail_max,
        measured: ze_tail,
        detail: format!(
            "increment of integral of zeta*eta over [T/2,T] = {ze_tail:.3e} (max {:.1e})",
            opts.zeta_eta_tail_max
        ),
    });

    // Tail window starts at horizon^(2/3): past the bump of ζ/η^n for the
    // default schedule at horizons ≥ 1e5 and powers ≤ 4.
    let window_start = horizon.powf(2.0 / 3.0).max(10.0);
    for &n in powers {
        let ratio = |t: f64| schedule.zeta(t) / schedule.eta(t).powi(n as i32);
        let samples = numeric::log_spaced(window_start, horizon, 12);
        let values: Vec<f64> = samples.iter().map(|&t| ratio(t)).collect();
        let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let first = values[0];
        let last = *values.last().unwrap();
        let decayed = last <= first / opts.ratio_decay_factor;
        properties.push(PropertyCheck {
            name: format!("zeta-over-eta-pow-{n}"),
            pass: monotone && decayed,
            measured: last,
            detail: format!(
                "zeta/eta^{n} on [{window_start:.1}, {horizon:.0}]: start {first:.3e}, \
                 end {last:.3e}, monotone={monotone}"
            ),
        });
    }

    PropertyReport { properties }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        assert_eq!(zeta_discrete(0, 100), 1.0);
        assert_eq!(eta_discrete(0, 100), 1.0);
        assert_eq!(zeta_discrete(100, 100), 0.5);
        // log²(e) = 1 at t = e−1.
        let t = std::f64::consts::E - 1.0;
        assert!((eta_cont(t) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn discrete_approaches_continuous() {
        let t = 1.7;
        for &n in &[10u32, 100, 1000, 10000] {
            let k = (n as f64 * t).floor() as u64;
            let dz = (zeta_discrete(k, n) - zeta_cont(t)).abs();
            let de = (eta_discrete(k, n) - eta_cont(t)).abs();
            assert!(dz <= 1.0 / n as f64 && de <= 1.0 / n as f64);
        }
    }

    #[test]
    fn schedules_nonincreasing() {
        for &n in &[1u32, 7, 100] {
            for k in 0..200u64 {
                assert!(zeta_discrete(k + 1, n) <= zeta_discrete(k, n));
                assert!(eta_discrete(k + 1, n) <= eta_discrete(k, n));
            }
        }
    }

    #[test]
    #[should_panic]
    fn negative_time_panics() {
        zeta_cont(-0.5);
    }

    #[test]
    fn closed_form_integral_of_zeta() {
        // ∫_0^100 ζ dt = log(101) = 4.61512...
        let val = numeric::integrate(&|t| zeta_cont(t), 0.0, 100.0, 1e-10);
        assert!((val - 4.61512051684126).abs() < 1e-6, "got {val}");
    }

    #[test]
    fn default_schedule_passes_all_properties() {
        let report = check_rate_properties(&RateSchedule::Paper, 1e6, &[1, 2, 4]);
        for p in &report.properties {
            assert!(p.pass, "{}: {}", p.name, p.detail);
        }
        assert_eq!(report.properties.len(), 6);
    }

    #[test]
    fn constant_schedule_fails_square_tail() {
        let schedule = RateSchedule::Constant {
            zeta: 1.0,
            eta: 0.5,
        };
        let report = check_rate_properties(&schedule, 1e6, &[1]);
        let sq = report
            .properties
            .iter()
            .find(|p| p.name == "zeta-squared-tail")
            .unwrap();
        assert!(!sq.pass);
        assert!(!report.all_pass());
    }

    #[test]
    fn constant_schedule_validation() {
        assert!(RateSchedule::Constant { zeta: 0.0, eta: 0.3 }.validate().is_ok());
        assert!(RateSchedule::Constant { zeta: 1.5, eta: 0.3 }.validate().is_err());
    }

    #[test]
    fn table_schedule_interpolates() {
        let s = RateSchedule::Tables {
            points: vec![(0.0, 1.0, 1.0), (10.0, 0.5, 0.2)],
        };
        s.validate().unwrap();
        assert_eq!(s.zeta(0.0), 1.0);
        assert!((s.zeta(5.0) - 0.75).abs() < 1e-15);
        assert_eq!(s.zeta(20.0), 0.5);
        assert!((s.eta(5.0) - 0.6).abs() < 1e-15);
        assert_eq!(s.eta_discrete(200, 10), 0.2);
    }

    #[test]
    fn table_schedule_rejects_increasing_rates() {
        let s = RateSchedule::Tables {
            points: vec![(0.0, 0.5, 0.5), (1.0, 0.9, 0.5)],
        };
        assert!(s.validate().is_err());
    }
}
