//! Closed-form coverage and arrival-time model for mobile sensing swarms.
//!
//! Robots with disk-shaped sensing of radius `s_r`, placed uniformly at
//! density `ρ` and moving at speed `v_r` under a coverage-maximizing random
//! mobility model, detect a stationary target as a Poisson process of
//! intensity `λ = 2 ρ s_r v_r`. The n-th distinct arrival then follows an
//! Erlang(n, λ) law. These formulas are used both to size a swarm before a
//! mission and to validate the simulator's empirical statistics.
//!
//! Note on symbols: the Boolean-model spatial intensity (per unit area) and
//! the temporal arrival intensity (per second) are different quantities.
//! This module keeps them apart as `density` (ρ) and `lambda` (λ).

use crate::config::Strategy;
use crate::error::{Error, Result};

use std::f64::consts::PI;

/// Workers that must assemble at a target for the cleanup to count.
pub const DEFAULT_QUORUM: u32 = 10;

/// Parameters of the Poisson Boolean sensing model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Robot density, robots per square meter.
    pub density: f64,
    /// Disk sensing radius, meters.
    pub sensing_radius: f64,
    /// Robot speed, meters per second.
    pub speed: f64,
    /// Temporal arrival intensity `2 ρ s_r v_r`, per second.
    pub intensity: f64,
}

impl ModelParams {
    pub fn new(density: f64, sensing_radius: f64, speed: f64) -> Result<Self> {
        let intensity = arrival_intensity(density, sensing_radius, speed)?;
        Ok(Self {
            density,
            sensing_radius,
            speed,
            intensity,
        })
    }
}

/// Erlang arrival law for the n-th distinct robot reaching a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalLaw {
    pub n: u32,
    pub lambda: f64,
}

impl ArrivalLaw {
    pub fn new(n: u32, lambda: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain(format!("arrival count must be >= 1, got {n}")));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("intensity must be positive, got {lambda}")));
        }
        Ok(Self { n, lambda })
    }

    pub fn pdf(&self, t: f64) -> f64 {
        erlang_pdf(self.n, self.lambda, t).expect("validated on construction")
    }

    pub fn mean(&self) -> f64 {
        self.n as f64 / self.lambda
    }
}

fn check_finite(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite, got {v}")));
    }
    Ok(v)
}

fn check_nonneg(name: &str, v: f64) -> Result<f64> {
    check_finite(name, v)?;
    if v < 0.0 {
        return Err(Error::Domain(format!("{name} must be nonnegative, got {v}")));
    }
    Ok(v)
}

fn check_positive(name: &str, v: f64) -> Result<f64> {
    check_finite(name, v)?;
    if v <= 0.0 {
        return Err(Error::Domain(format!("{name} must be positive, got {v}")));
    }
    Ok(v)
}

/// Intensity of the target-detection Poisson process, `λ = 2 ρ s_r v_r`.
pub fn arrival_intensity(density: f64, sensing_radius: f64, speed: f64) -> Result<f64> {
    check_nonneg("density", density)?;
    check_positive("sensing_radius", sensing_radius)?;
    check_nonneg("speed", speed)?;
    Ok(2.0 * density * sensing_radius * speed)
}

/// Fraction of the plane covered by the union of sensing disks,
/// `f_a = 1 − e^(−ρ π s_r²)`.
pub fn covered_fraction(density: f64, sensing_radius: f64) -> Result<f64> {
    check_nonneg("density", density)?;
    check_positive("sensing_radius", sensing_radius)?;
    Ok(1.0 - (-density * PI * sensing_radius * sensing_radius).exp())
}

/// Expected fraction of area covered over an interval of length `dt`,
/// with the per-robot swept area taken as the straight-line swept disk
/// `π s_r² + 2 s_r v_r Δt`.
pub fn interval_covered_fraction(
    density: f64,
    sensing_radius: f64,
    speed: f64,
    dt: f64,
) -> Result<f64> {
    check_nonneg("density", density)?;
    check_positive("sensing_radius", sensing_radius)?;
    check_nonneg("speed", speed)?;
    check_nonneg("dt", dt)?;
    let swept = PI * sensing_radius * sensing_radius + 2.0 * sensing_radius * speed * dt;
    Ok(1.0 - (-density * swept).exp())
}

/// Probability that a stationary target is still undetected after `t`
/// seconds, `P(X > t) = e^(−λ t)`.
pub fn detection_survival(lambda: f64, t: f64) -> Result<f64> {
    check_nonneg("lambda", lambda)?;
    check_nonneg("t", t)?;
    Ok((-lambda * t).exp())
}

/// Mean and variance of the first-arrival time, `(1/λ, 1/λ²)`.
pub fn arrival_moments(lambda: f64) -> Result<(f64, f64)> {
    check_positive("lambda", lambda)?;
    let mean = 1.0 / lambda;
    Ok((mean, mean * mean))
}

/// Erlang(n, λ) density `λⁿ tⁿ⁻¹ e^(−λt) / (n−1)!`, zero for `t ≤ 0`.
pub fn erlang_pdf(n: u32, lambda: f64, t: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain(format!("arrival count must be >= 1, got {n}")));
    }
    check_positive("lambda", lambda)?;
    check_finite("t", t)?;
    if t <= 0.0 {
        return Ok(0.0);
    }
    // Log-space keeps large n / large t inside f64 range.
    let nf = n as f64;
    let ln_factorial: f64 = (2..n).map(|k| (k as f64).ln()).sum();
    let ln_pdf = nf * lambda.ln() + (nf - 1.0) * t.ln() - lambda * t - ln_factorial;
    Ok(ln_pdf.exp())
}

/// Expected arrival time of the n-th distinct robot, `E[T_n] = n/λ`.
pub fn expected_nth_arrival(n: u32, lambda: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain(format!("arrival count must be >= 1, got {n}")));
    }
    check_positive("lambda", lambda)?;
    Ok(n as f64 / lambda)
}

/// Model-predicted mission completion time in seconds.
///
/// Egalitarian missions are predicted by the Erlang mean for the quorum of
/// `DEFAULT_QUORUM` workers. Strategies that deliver workers behind a guide
/// take the guide-swarm first-detection mean plus a worst-case out-and-back
/// delivery leg along the arena diagonal.
pub fn predict_mission_time(
    strategy: Strategy,
    arena_side: f64,
    n_workers: u32,
    n_guides: u32,
    sensing_radius: f64,
    speed: f64,
) -> Result<f64> {
    check_positive("arena_side", arena_side)?;
    check_positive("speed", speed)?;
    let area = arena_side * arena_side;
    let delivery = 2.0 * arena_side * std::f64::consts::SQRT_2 / speed;
    match strategy {
        Strategy::Egalitarian => {
            if n_guides != 0 {
                return Err(Error::Domain(
                    "egalitarian swarms have no guide robots".into(),
                ));
            }
            if n_workers == 0 {
                return Err(Error::Domain("no explorers: egalitarian needs workers".into()));
            }
            let lambda = arrival_intensity(n_workers as f64 / area, sensing_radius, speed)?;
            expected_nth_arrival(DEFAULT_QUORUM, lambda)
        }
        Strategy::Hierarchical => {
            if n_guides == 0 {
                return Err(Error::Domain("no explorers: hierarchical needs guides".into()));
            }
            let lambda = arrival_intensity(n_guides as f64 / area, sensing_radius, speed)?;
            Ok(1.0 / lambda + delivery)
        }
        Strategy::Heterogeneous => {
            let explorers = n_workers + n_guides;
            if explorers == 0 {
                return Err(Error::Domain("no explorers in heterogeneous swarm".into()));
            }
            let lambda = arrival_intensity(explorers as f64 / area, sensing_radius, speed)?;
            Ok(1.0 / lambda + delivery)
        }
        Strategy::Ballistic => Err(Error::Domain(
            "ballistic mode is a validation harness, not a mission strategy".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REL: f64 = 1e-9;

    fn assert_rel(actual: f64, expected: f64) {
        if expected == 0.0 {
            assert!(actual.abs() < 1e-12, "expected 0, got {actual}");
        } else {
            let rel = ((actual - expected) / expected).abs();
            assert!(rel < REL, "expected {expected}, got {actual} (rel {rel:.3e})");
        }
    }

    #[test]
    fn intensity_matches_hand_values() {
        assert_rel(arrival_intensity(0.0, 5.0, 0.5).unwrap(), 0.0);
        assert_rel(arrival_intensity(0.2, 5.0, 0.5).unwrap(), 1.0);
        assert_rel(arrival_intensity(16.0 / 900.0, 5.0, 0.5).unwrap(), 80.0 / 900.0);
    }

    #[test]
    fn intensity_rejects_bad_inputs() {
        assert!(arrival_intensity(-0.1, 5.0, 0.5).is_err());
        assert!(arrival_intensity(0.1, 0.0, 0.5).is_err());
        assert!(arrival_intensity(f64::NAN, 5.0, 0.5).is_err());
        assert!(arrival_intensity(0.1, 5.0, f64::INFINITY).is_err());
    }

    #[test]
    fn covered_fraction_matches_hand_values() {
        assert_rel(covered_fraction(0.0, 5.0).unwrap(), 0.0);
        // Density solving 1 − e^(−x) = 1/2.
        let half_density = std::f64::consts::LN_2 / (PI * 25.0);
        assert_rel(covered_fraction(half_density, 5.0).unwrap(), 0.5);
        let expected = 1.0 - (-(16.0 / 900.0) * PI * 25.0).exp();
        assert_rel(covered_fraction(16.0 / 900.0, 5.0).unwrap(), expected);
        assert!((expected - 0.7525).abs() < 1e-3);
    }

    #[test]
    fn interval_fraction_degenerates_and_composes() {
        let (rho, sr, vr) = (16.0 / 900.0, 5.0, 0.5);
        assert_rel(
            interval_covered_fraction(rho, sr, vr, 0.0).unwrap(),
            covered_fraction(rho, sr).unwrap(),
        );
        assert_rel(interval_covered_fraction(0.0, sr, vr, 100.0).unwrap(), 0.0);
        let expected = 1.0 - (-rho * (25.0 * PI + 50.0)).exp();
        assert_rel(interval_covered_fraction(rho, sr, vr, 10.0).unwrap(), expected);
        assert!(interval_covered_fraction(rho, sr, vr, -1.0).is_err());
    }

    #[test]
    fn survival_matches_hand_values() {
        assert_rel(detection_survival(3.7, 0.0).unwrap(), 1.0);
        assert_rel(detection_survival(1.0, std::f64::consts::LN_2).unwrap(), 0.5);
        // λ for 16 workers in a 30 m arena; t chosen so λt = 1.
        assert_rel(
            detection_survival(80.0 / 900.0, 11.25).unwrap(),
            (-1.0f64).exp(),
        );
        assert!(detection_survival(1.0, -0.1).is_err());
    }

    #[test]
    fn moments_match_hand_values() {
        assert_eq!(arrival_moments(1.0).unwrap(), (1.0, 1.0));
        let (mean, var) = arrival_moments(80.0 / 900.0).unwrap();
        assert_rel(mean, 11.25);
        assert_rel(var, 126.5625);
        let (mean, var) = arrival_moments(2.0).unwrap();
        assert_rel(mean, 0.5);
        assert_rel(var, 0.25);
        assert!(arrival_moments(0.0).is_err());
        assert!(arrival_moments(-1.0).is_err());
    }

    #[test]
    fn erlang_reduces_to_exponential() {
        for &lambda in &[0.01, 0.3, 1.0, 4.0] {
            for &t in &[0.1, 1.0, 7.5] {
                assert_rel(
                    erlang_pdf(1, lambda, t).unwrap(),
                    lambda * (-lambda * t).exp(),
                );
            }
        }
        assert_rel(erlang_pdf(2, 1.0, 1.0).unwrap(), (-1.0f64).exp());
        assert_eq!(erlang_pdf(3, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(erlang_pdf(3, 1.0, -2.0).unwrap(), 0.0);
        assert!(erlang_pdf(0, 1.0, 1.0).is_err());
    }

    /// Composite-Simpson quadrature, independent of the pdf implementation.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
        let n = intervals + intervals % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn erlang_integrates_to_one() {
        for n in 1..=10u32 {
            for &lambda in &[0.01, 0.1, 1.0] {
                let horizon = (n as f64 + 40.0 * (n as f64).sqrt()) / lambda;
                // Start just above zero: the pdf is 0 at t <= 0 by
                // convention, which would bias the left Simpson endpoint.
                let integral = simpson(
                    |t| erlang_pdf(n, lambda, t).unwrap(),
                    1e-12,
                    horizon,
                    200_000,
                );
                assert!(
                    (integral - 1.0).abs() < 1e-6,
                    "n={n} lambda={lambda}: integral {integral}"
                );
            }
        }
    }

    #[test]
    fn nth_arrival_matches_hand_values() {
        assert_rel(expected_nth_arrival(1, 0.37).unwrap(), 1.0 / 0.37);
        assert_rel(expected_nth_arrival(10, 80.0 / 900.0).unwrap(), 112.5);
        assert_rel(expected_nth_arrival(10, 1.0).unwrap(), 10.0);
        assert!(expected_nth_arrival(10, 0.0).is_err());
        assert!(expected_nth_arrival(0, 1.0).is_err());
    }

    #[test]
    fn mission_time_prediction() {
        use crate::config::Strategy as Control;
        assert_rel(
            predict_mission_time(Control::Egalitarian, 30.0, 16, 0, 5.0, 0.5).unwrap(),
            112.5,
        );
        let lambda_g = 2.0 * (2.0 / 900.0) * 5.0 * 0.5;
        assert_rel(
            predict_mission_time(Control::Hierarchical, 30.0, 10, 2, 5.0, 0.5).unwrap(),
            1.0 / lambda_g + 2.0 * 30.0 * std::f64::consts::SQRT_2 / 0.5,
        );
        assert!(predict_mission_time(Control::Egalitarian, 30.0, 0, 0, 5.0, 0.5).is_err());
        assert!(predict_mission_time(Control::Egalitarian, 30.0, 16, 2, 5.0, 0.5).is_err());
        assert!(predict_mission_time(Control::Hierarchical, 30.0, 10, 0, 5.0, 0.5).is_err());
    }

    #[test]
    fn arrival_law_construction() {
        let law = ArrivalLaw::new(10, 0.08).unwrap();
        assert_rel(law.mean(), 125.0);
        assert_rel(law.pdf(1.0), erlang_pdf(10, 0.08, 1.0).unwrap());
        assert!(ArrivalLaw::new(0, 1.0).is_err());
        assert!(ArrivalLaw::new(3, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn covered_fraction_is_monotone(
            rho in 0.0f64..0.5,
            sr in 0.1f64..20.0,
            d_rho in 0.0f64..0.5,
            d_sr in 0.0f64..10.0,
        ) {
            let base = covered_fraction(rho, sr).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            prop_assert!(covered_fraction(rho + d_rho, sr).unwrap() >= base);
            prop_assert!(covered_fraction(rho, sr + d_sr).unwrap() >= base);
        }

        #[test]
        fn interval_fraction_is_monotone_in_dt(
            rho in 0.0f64..0.5,
            dt in 0.0f64..500.0,
            extra in 0.0f64..500.0,
        ) {
            let a = interval_covered_fraction(rho, 5.0, 0.5, dt).unwrap();
            let b = interval_covered_fraction(rho, 5.0, 0.5, dt + extra).unwrap();
            prop_assert!(b >= a);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
