//! Detector-entry probabilities.
//!
//! `P_D(⟨t0, t⟩) = P(E1) · P(E2/E1)`, where `E1` is the event that the
//! momentum direction points through the detector and `E2` that the particle
//! occupied the detector volume during `[t0, t]`:
//!
//! ```text
//! P(E1)    = ∫_{Ω_D} dΩ ∫₀^∞ p² |C(p n)|² dp
//! P(E2/E1) = ∫_{t0}^{t} O(t′) dt′ / ∫_{t0}^{∞} O(t′) dt′,   O(t) = ∫_{V_D} |Ψ_D(x, t)|² d³x
//! ```
//!
//! The point-detector reduction replaces `O` by `|Ψ⁽ⁿᴰ⁾(x_D, t)|²`.

use serde::{Deserialize, Serialize};

use crate::geometry::{DetectorGeometry, EmissionEvent};
use crate::quadrature::{tabulate_time_semiinfinite, GridSpec, QuadratureSpec, SemiInfiniteResult, TimeTable};
use crate::wavepacket::{MomentumAmplitude, PacketField};
use crate::{Error, Result, Vec3};

/// Allowed deviation of `‖C‖²` from one for inputs that must be normalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// `P(E1)`, `P(E2/E1)` and `P_D` on a uniform time grid starting at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryProbabilityCurve {
    pub times: Vec<f64>,
    pub p_e1: f64,
    pub p_e2_given_e1: Vec<f64>,
    pub p_d: Vec<f64>,
    /// `∫_{t0}^{∞} O(t) dt`.
    pub denominator: SemiInfiniteResult,
    /// Error bound on each `P(E2/E1)` sample from the time quadrature.
    pub ratio_error: f64,
    pub point_detector: bool,
    /// `Ω_D`, when a detector volume or reference solid angle was given.
    pub solid_angle: Option<f64>,
}

impl EntryProbabilityCurve {
    /// Grid spacing, or zero for a single sample.
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn final_p_d(&self) -> f64 {
        *self.p_d.last().unwrap()
    }
}

/// Occupation integral `∫_{t0}^{∞} O(t) dt` and its sampled integrand.
#[derive(Debug, Clone)]
pub struct Occupation {
    pub result: SemiInfiniteResult,
    pub table: TimeTable,
    /// Classical flight time used to size the integration windows.
    pub flight_time: f64,
}

impl Occupation {
    /// `∫_{t0}^{t} O / ∫_{t0}^{∞} O`, kept inside `[0, 1]`.
    pub fn ratio(&self, t: f64) -> f64 {
        if self.result.value <= 0.0 {
            return 0.0;
        }
        (self.table.cumulative(t) / self.result.value).clamp(0.0, 1.0)
    }

    fn ratio_error(&self) -> f64 {
        if self.result.value > 0.0 {
            2.0 * self.result.error / self.result.value
        } else {
            f64::INFINITY
        }
    }

    fn require_converged(&self, what: &str) -> Result<()> {
        if self.result.converged {
            Ok(())
        } else {
            Err(Error::NonConverged {
                what: what.into(),
                value: self.result.value,
                estimate: self.result.error,
                t_max: self.result.t_max,
            })
        }
    }
}

fn check_normalized(amp: &MomentumAmplitude) -> Result<()> {
    let n2 = amp.norm2();
    if (n2 - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::contract(format!("amplitude must be normalized, norm² = {n2}")));
    }
    Ok(())
}

/// `P(E1)`: the amplitude mass whose momentum direction lies in the detector cone.
pub fn prob_e1(amp: &MomentumAmplitude, det: &DetectorGeometry, _src: &EmissionEvent, _quad: &QuadratureSpec) -> Result<f64> {
    check_normalized(amp)?;
    let mass = amp.scale().norm_sqr() * amp.radial_norm2() * amp.cone_angular_mass(&det.axis(), det.cone_half_angle());
    Ok(mass.clamp(0.0, 1.0))
}

/// `∫_{t0}^{∞} ∫_{V_D} |Ψ_D|²` with the sampled occupation kept for partial integrals.
pub fn detector_occupation(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
) -> Result<Occupation> {
    let field = PacketField::detector(amp, det, src, quad)?;
    let flight_time = amp.flight_time(src.mass, det.distance());
    occupation_of(&field, src, quad, flight_time)
}

/// `∫_{t0}^{∞} |Ψ⁽ⁿᴰ⁾(x_D, t)|² dt` with the sampled density kept.
pub fn point_occupation(amp: &MomentumAmplitude, x_d: &Vec3, src: &EmissionEvent, quad: &QuadratureSpec) -> Result<Occupation> {
    let field = PacketField::point(amp, x_d, src, quad)?;
    let flight_time = amp.flight_time(src.mass, (x_d - src.x0).norm());
    occupation_of(&field, src, quad, flight_time)
}

fn occupation_of(field: &PacketField, src: &EmissionEvent, quad: &QuadratureSpec, flight_time: f64) -> Result<Occupation> {
    let settings = quad.time_settings(flight_time);
    let (result, table) = tabulate_time_semiinfinite(|t| field.occupation(t), src.t0, &settings)?;
    Ok(Occupation {
        result,
        table,
        flight_time,
    })
}

/// `P(E2/E1)` at time `t`.
pub fn prob_e2_given_e1(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_time(t, src)?;
    let occ = detector_occupation(amp, det, src, quad)?;
    occ.require_converged("detector occupation normalizer")?;
    Ok(occ.ratio(t))
}

/// `P_D(⟨t0, t⟩) = P(E1) · P(E2/E1)`.
pub fn prob_pd(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let p1 = prob_e1(amp, det, src, quad)?;
    Ok(p1 * prob_e2_given_e1(amp, det, src, t, quad)?)
}

fn check_time(t: f64, src: &EmissionEvent) -> Result<()> {
    if t < src.t0 || !t.is_finite() {
        return Err(Error::contract(format!("time {t} precedes emission at {}", src.t0)));
    }
    Ok(())
}

/// Entry curve of a volume detector; the denominator is integrated once and
/// must converge.
pub fn build_entry_curve(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<EntryProbabilityCurve> {
    let (curve, occ) = entry_curve_parts(amp, det, src, quad, grid)?;
    occ.require_converged("detector occupation normalizer")?;
    Ok(curve)
}

/// As [`build_entry_curve`], but returns the curve even when the
/// denominator did not converge; `denominator.converged` records the outcome.
pub fn build_entry_curve_unchecked(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<EntryProbabilityCurve> {
    entry_curve_parts(amp, det, src, quad, grid).map(|(c, _)| c)
}

fn entry_curve_parts(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<(EntryProbabilityCurve, Occupation)> {
    let p_e1 = prob_e1(amp, det, src, quad)?;
    let occ = detector_occupation(amp, det, src, quad)?;
    let curve = assemble(&occ, src, quad, grid, p_e1, false, Some(det.solid_angle()))?;
    Ok((curve, occ))
}

/// Point-detector curve at `x_D`.
///
/// There is no volume, so `P(E1)` is not derived from the geometry: with
/// `reference_solid_angle = None` it is one and the curve is the pure
/// conditional `P(E2/E1)`; otherwise it is `P(E1)` for the cone of that solid
/// angle around `n_D`.
pub fn point_detector_curve(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
    reference_solid_angle: Option<f64>,
) -> Result<EntryProbabilityCurve> {
    let (curve, occ) = point_curve_parts(amp, x_d, src, quad, grid, reference_solid_angle)?;
    occ.require_converged("point density normalizer")?;
    Ok(curve)
}

/// As [`point_detector_curve`] without the convergence requirement.
pub fn point_detector_curve_unchecked(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
    reference_solid_angle: Option<f64>,
) -> Result<EntryProbabilityCurve> {
    point_curve_parts(amp, x_d, src, quad, grid, reference_solid_angle).map(|(c, _)| c)
}

fn point_curve_parts(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
    reference_solid_angle: Option<f64>,
) -> Result<(EntryProbabilityCurve, Occupation)> {
    let axis = (x_d - src.x0)
        .try_normalize(0.0)
        .ok_or_else(|| Error::Geometry("point detector coincides with the source".into()))?;
    let p_e1 = match reference_solid_angle {
        None => 1.0,
        Some(omega) => {
            if !(omega > 0.0 && omega <= 4.0 * std::f64::consts::PI) {
                return Err(Error::contract(format!("reference solid angle must lie in (0, 4π], got {omega}")));
            }
            check_normalized(amp)?;
            let half_angle = 2.0 * (omega / (4.0 * std::f64::consts::PI)).sqrt().min(1.0).asin();
            (amp.scale().norm_sqr() * amp.radial_norm2() * amp.cone_angular_mass(&axis, half_angle)).clamp(0.0, 1.0)
        }
    };
    let occ = point_occupation(amp, x_d, src, quad)?;
    let curve = assemble(&occ, src, quad, grid, p_e1, true, reference_solid_angle)?;
    Ok((curve, occ))
}

fn assemble(
    occ: &Occupation,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
    p_e1: f64,
    point_detector: bool,
    solid_angle: Option<f64>,
) -> Result<EntryProbabilityCurve> {
    let times = grid.times(src.t0, quad.dt / 20.0, occ.result.t_max)?;
    let p_e2_given_e1: Vec<f64> = times.iter().map(|&t| occ.ratio(t)).collect();
    let p_d = p_e2_given_e1.iter().map(|r| p_e1 * r).collect();
    Ok(EntryProbabilityCurve {
        times,
        p_e1,
        p_e2_given_e1,
        p_d,
        denominator: occ.result,
        ratio_error: occ.ratio_error(),
        point_detector,
        solid_angle,
    })
}
