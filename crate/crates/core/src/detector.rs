//! Two-state detector driven by the entry probability.
//!
//! The detector starts in `χ0 = (1, 0)` and evolves under
//! `i dχ/dt = A(t) σ_x χ`, so `χ(t) = χ0 cos B(t) − i χ1 sin B(t)` with
//! `B(t) = ∫_{t0}^{t} A`. Requiring `P_reg = sin² B = k P_D` fixes
//! `B = arcsin √(k P_D)` and `A = dB/dt`.

use serde::{Deserialize, Serialize};

use crate::probability::EntryProbabilityCurve;
use crate::quadrature::differentiate_sampled;
use crate::{Complex64, Error, Result};

/// Amplitudes on `χ0` (no detection) and `χ1` (detection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorState {
    pub a0: Complex64,
    pub a1: Complex64,
}

impl DetectorState {
    pub fn ground() -> Self {
        Self {
            a0: Complex64::new(1.0, 0.0),
            a1: Complex64::new(0.0, 0.0),
        }
    }

    /// `(cos b, −i sin b)`.
    pub fn after_rotation(b: f64) -> Self {
        Self {
            a0: Complex64::new(b.cos(), 0.0),
            a1: Complex64::new(0.0, -b.sin()),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    /// Probability of finding the detector in `χ1`.
    pub fn p_detected(&self) -> f64 {
        self.a1.norm_sqr()
    }

    /// Euclidean distance between the amplitude vectors.
    pub fn distance(&self, other: &Self) -> f64 {
        ((self.a0 - other.a0).norm_sqr() + (self.a1 - other.a1).norm_sqr()).sqrt()
    }
}

/// Sampled rotation angle `B` and coupling `A` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSchedule {
    pub k: f64,
    pub times: Vec<f64>,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    /// The `P_D` samples the schedule was built from.
    pub p_d: Vec<f64>,
}

/// `B = arcsin √(k P_D)` and `A = dB/dt` on the curve's grid.
pub fn coupling_schedule(curve: &EntryProbabilityCurve, k: f64) -> Result<CouplingSchedule> {
    check_k(k)?;
    let b: Vec<f64> = curve.p_d.iter().map(|p| (k * p.clamp(0.0, 1.0)).sqrt().asin()).collect();
    let a = differentiate_sampled(&b, curve.dt())?;
    Ok(CouplingSchedule {
        k,
        times: curve.times.clone(),
        b,
        a,
        p_d: curve.p_d.clone(),
    })
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::contract(format!("coupling fraction k must lie in (0, 1), got {k}")));
    }
    Ok(())
}

impl CouplingSchedule {
    /// Schedule from given rotation angles on a uniform grid; `p_d` is
    /// recovered as `sin² B / k`.
    pub fn from_angles(k: f64, times: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        check_k(k)?;
        if times.len() != b.len() || times.len() < 3 {
            return Err(Error::contract("schedule needs at least 3 samples and one angle per time"));
        }
        let dt = times[1] - times[0];
        let a = differentiate_sampled(&b, dt)?;
        let p_d = b.iter().map(|b| b.sin().powi(2) / k).collect();
        Ok(Self { k, times, b, a, p_d })
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let n = self.times.len();
        let t0 = self.times[0];
        let end = self.times[n - 1];
        let slack = 1e-12 * (1.0 + end.abs());
        if t < t0 - slack {
            return Err(Error::contract(format!("time {t} precedes the schedule start {t0}")));
        }
        if t > end + slack || !t.is_finite() {
            return Err(Error::contract(format!("time {t} lies past the schedule end {end}")));
        }
        if n == 1 {
            return Ok((0, 0.0));
        }
        let i = self.times.partition_point(|s| *s <= t).clamp(1, n - 1);
        let f = ((t - self.times[i - 1]) / (self.times[i] - self.times[i - 1])).clamp(0.0, 1.0);
        Ok((i - 1, f))
    }

    fn lerp(values: &[f64], (i, f): (usize, f64)) -> f64 {
        if f == 0.0 {
            values[i]
        } else {
            values[i] * (1.0 - f) + values[i + 1] * f
        }
    }

    /// `B(t)`, linear between samples.
    pub fn b_at(&self, t: f64) -> Result<f64> {
        Ok(Self::lerp(&self.b, self.locate(t)?))
    }

    /// `A(t)`, linear between samples.
    pub fn a_at(&self, t: f64) -> Result<f64> {
        Ok(Self::lerp(&self.a, self.locate(t)?))
    }

    /// `sin² B` at every sample.
    pub fn p_reg(&self) -> Vec<f64> {
        self.b.iter().map(|b| b.sin().powi(2)).collect()
    }

    /// `d P_D / dt`, the rate at which probability enters the detector.
    pub fn entry_rate(&self) -> Result<Vec<f64>> {
        let dt = if self.times.len() > 1 { self.times[1] - self.times[0] } else { 0.0 };
        differentiate_sampled(&self.p_d, dt)
    }
}

/// `χ(t) = (cos B(t), −i sin B(t))`.
pub fn evolve_closed_form(sched: &CouplingSchedule, t: f64) -> Result<DetectorState> {
    Ok(DetectorState::after_rotation(sched.b_at(t)?))
}

/// Registration probability `sin² B(t)`.
pub fn prob_registration(sched: &CouplingSchedule, t: f64) -> Result<f64> {
    Ok(sched.b_at(t)?.sin().powi(2))
}

/// Local error target of one integration step.
const ODE_LOCAL_TOLERANCE: f64 = 1e-9;
const MAX_HALVINGS: u32 = 40;

fn derivative(a: f64, s: &DetectorState) -> DetectorState {
    // dχ/dt = −i A σ_x χ
    let mi = Complex64::new(0.0, -a);
    DetectorState {
        a0: mi * s.a1,
        a1: mi * s.a0,
    }
}

fn axpy(s: &DetectorState, h: f64, d: &DetectorState) -> DetectorState {
    DetectorState {
        a0: s.a0 + d.a0 * h,
        a1: s.a1 + d.a1 * h,
    }
}

fn rk4_step(s: &DetectorState, t: f64, h: f64, a: &impl Fn(f64) -> f64) -> DetectorState {
    let k1 = derivative(a(t), s);
    let k2 = derivative(a(t + 0.5 * h), &axpy(s, 0.5 * h, &k1));
    let k3 = derivative(a(t + 0.5 * h), &axpy(s, 0.5 * h, &k2));
    let k4 = derivative(a(t + h), &axpy(s, h, &k3));
    DetectorState {
        a0: s.a0 + (k1.a0 + (k2.a0 + k3.a0) * 2.0 + k4.a0) * (h / 6.0),
        a1: s.a1 + (k1.a1 + (k2.a1 + k3.a1) * 2.0 + k4.a1) * (h / 6.0),
    }
}

/// One grid interval, substepped by step doubling until each step meets the
/// local tolerance.
fn advance(s: DetectorState, t0: f64, t1: f64, a: &impl Fn(f64) -> f64) -> Result<DetectorState> {
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(s);
    }
    let mut state = s;
    let mut t = t0;
    let mut h = span;
    let mut halvings = 0;
    while t < t1 {
        let step = h.min(t1 - t);
        let whole = rk4_step(&state, t, step, a);
        let half = rk4_step(&state, t, 0.5 * step, a);
        let twice = rk4_step(&half, t + 0.5 * step, 0.5 * step, a);
        if whole.distance(&twice) <= ODE_LOCAL_TOLERANCE {
            // local extrapolation of the fourth-order pair
            state = DetectorState {
                a0: twice.a0 + (twice.a0 - whole.a0) / 15.0,
                a1: twice.a1 + (twice.a1 - whole.a1) / 15.0,
            };
            t += step;
            if t1 - t < 1e-15 * span {
                break;
            }
        } else {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::Integration {
                    what: "detector state evolution (step size underflow)".into(),
                    estimate: whole.distance(&twice),
                    tolerance: ODE_LOCAL_TOLERANCE,
                });
            }
            h = 0.5 * step;
        }
    }
    Ok(state)
}

/// Numerical solution of `i dχ/dt = A σ_x χ` from `χ0` up to `t`, with `A`
/// linear between schedule samples. Serves as an independent check of
/// [`evolve_closed_form`].
pub fn evolve_ode(sched: &CouplingSchedule, t: f64) -> Result<DetectorState> {
    let (idx, _) = sched.locate(t)?;
    let a = |s: f64| sched.a_at(s).unwrap_or(0.0);
    let mut state = DetectorState::ground();
    for i in 0..idx {
        state = advance(state, sched.times[i], sched.times[i + 1], &a)?;
    }
    let start = sched.times[idx];
    state = advance(state, start, t.max(start), &a)?;
    Ok(state)
}

/// [`evolve_ode`] at every sample of the schedule, in one pass.
pub fn evolve_ode_grid(sched: &CouplingSchedule) -> Result<Vec<DetectorState>> {
    let n = sched.times.len();
    let mut out = Vec::with_capacity(n);
    let mut state = DetectorState::ground();
    out.push(state);
    for i in 1..n {
        let (t0, t1) = (sched.times[i - 1], sched.times[i]);
        let (a0, a1) = (sched.a[i - 1], sched.a[i]);
        let a = |s: f64| a0 + (a1 - a0) * (s - t0) / (t1 - t0);
        state = advance(state, t0, t1, &a)?;
        out.push(state);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn k_outside_unit_interval_is_rejected() {
        for k in [0.0, 1.0, -0.1, 1.5] {
            assert!(CouplingSchedule::from_angles(k, grid(3, 1.0), vec![0.0; 3]).is_err());
        }
    }

    #[test]
    fn closed_form_states() {
        let times = grid(4, 1.0);
        let s = CouplingSchedule::from_angles(0.999, times, vec![0.0, PI / 6.0, PI / 4.0, PI / 2.0]).unwrap();
        let c = evolve_closed_form(&s, 0.0).unwrap();
        assert_eq!(c, DetectorState::ground());
        let c = evolve_closed_form(&s, 1.0).unwrap();
        assert_relative_eq!(c.a0.re, 3f64.sqrt() / 2.0, epsilon = 1e-15);
        assert_relative_eq!(c.a1.im, -0.5, epsilon = 1e-15);
        assert_relative_eq!(prob_registration(&s, 2.0).unwrap(), 0.5, epsilon = 1e-15);
        let c = evolve_closed_form(&s, 3.0).unwrap();
        assert!(c.a0.norm() < 1e-15);
        assert_relative_eq!(c.a1.im, -1.0, epsilon = 1e-15);
        assert!(evolve_closed_form(&s, -0.5).is_err());
    }

    #[test]
    fn zero_coupling_keeps_ground_state() {
        let s = CouplingSchedule::from_angles(0.5, grid(50, 0.1), vec![0.0; 50]).unwrap();
        assert_eq!(evolve_ode(&s, 4.9).unwrap(), DetectorState::ground());
    }

    #[test]
    fn constant_coupling_is_a_rabi_rotation() {
        let a = 0.7;
        let times = grid(101, 0.05);
        let b = times.iter().map(|t| a * t).collect();
        let s = CouplingSchedule::from_angles(0.5, times, b).unwrap();
        for t in [0.0, 0.33, 2.5, 5.0] {
            let state = evolve_ode(&s, t).unwrap();
            let exact = DetectorState::after_rotation(a * t);
            assert!(state.distance(&exact) < 1e-9, "t = {t}");
            assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_pass_matches_pointwise_evolution() {
        let times = grid(200, 0.01);
        let b: Vec<f64> = times.iter().map(|t| 0.3 * (1.0 - (-t * t).exp())).collect();
        let s = CouplingSchedule::from_angles(0.5, times.clone(), b).unwrap();
        let all = evolve_ode_grid(&s).unwrap();
        for i in [0, 17, 199] {
            assert!(all[i].distance(&evolve_ode(&s, times[i]).unwrap()) < 1e-13);
        }
    }
}
