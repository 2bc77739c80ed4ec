//! Arrival-time statistics of a point detector.
//!
//! The density of the time at which the particle enters a point detector at
//! `x_D` is `π(t) ∝ |Ψ⁽ⁿᴰ⁾(x_D, t)|²`, normalized to unit mass over
//! `[t0, ∞)`. Its first moment is the mean arrival time `⟨t − t0⟩`.

use serde::{Deserialize, Serialize};

use crate::geometry::EmissionEvent;
use crate::probability::{point_occupation, Occupation};
use crate::quadrature::{GridSpec, QuadratureSpec, SemiInfiniteResult};
use crate::wavepacket::{MomentumAmplitude, PacketField};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalTimeStats {
    /// `⟨t − t0⟩`.
    pub mean_t: f64,
    pub mean_error: f64,
    /// `⟨(t − t0 − mean_t)²⟩`.
    pub variance: f64,
    pub times: Vec<f64>,
    pub density: Vec<f64>,
    /// `∫_{t0}^{∞} |Ψ⁽ⁿᴰ⁾(x_D, t)|² dt`.
    pub normalizer: SemiInfiniteResult,
    /// `m L / p0`, when the amplitude has a central momentum.
    pub classical_t: Option<f64>,
}

/// Trapezoid weights of a uniform grid.
fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Normalized density `π(t_i)` on the grid, with the normalizer.
pub fn arrival_density(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<(Vec<f64>, Vec<f64>, SemiInfiniteResult)> {
    let occ = point_occupation(amp, x_d, src, quad)?;
    require(&occ)?;
    let (times, density) = sample_density(amp, x_d, src, quad, grid, &occ)?;
    Ok((times, density, occ.result))
}

fn require(occ: &Occupation) -> Result<()> {
    if occ.result.converged {
        Ok(())
    } else {
        Err(Error::NonConverged {
            what: "arrival density normalizer".into(),
            value: occ.result.value,
            estimate: occ.result.error,
            t_max: occ.result.t_max,
        })
    }
}

fn sample_density(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
    occ: &Occupation,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let field = PacketField::point(amp, x_d, src, quad)?;
    let times = grid.times(src.t0, quad.dt / 20.0, occ.result.t_max)?;
    let norm = occ.result.value;
    if !(norm > 0.0) {
        return Err(Error::Normalization(format!("arrival density normalizer is {norm}")));
    }
    let density = times
        .iter()
        .map(|&t| field.occupation(t).map(|v| v / norm))
        .collect::<Result<Vec<_>>>()?;
    Ok((times, density))
}

/// `⟨t − t0⟩` and the sampled density.
///
/// Both moments are integrated on the nodes of the normalizer.
pub fn mean_arrival_time(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<ArrivalTimeStats> {
    let occ = point_occupation(amp, x_d, src, quad)?;
    require(&occ)?;
    stats_from(amp, x_d, src, quad, grid, &occ)
}

/// As [`mean_arrival_time`], also when the normalizer did not converge.
pub fn mean_arrival_time_unchecked(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
) -> Result<ArrivalTimeStats> {
    let occ = point_occupation(amp, x_d, src, quad)?;
    stats_from(amp, x_d, src, quad, grid, &occ)
}

fn stats_from(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
    grid: &GridSpec,
    occ: &Occupation,
) -> Result<ArrivalTimeStats> {
    let (times, density) = sample_density(amp, x_d, src, quad, grid, occ)?;
    let norm = occ.result.value;
    let t0 = src.t0;
    let (first, first_err) = occ.table.moment(|t| t - t0);
    let mean_t = first / norm;
    let (second, _) = occ.table.moment(|t| (t - t0 - mean_t).powi(2));
    let mean_error = first_err / norm + mean_t * occ.result.error / norm;
    let classical_t = amp
        .central_momentum()
        .map(|p0| src.mass * (x_d - src.x0).norm() / p0);
    Ok(ArrivalTimeStats {
        mean_t,
        mean_error,
        variance: second / norm,
        times,
        density,
        normalizer: occ.result,
        classical_t,
    })
}

/// First moment `∫ (t − t0) π / ∫ π` of a sampled density, by the trapezoid rule.
pub fn sampled_mean(t0: f64, times: &[f64], density: &[f64]) -> Result<f64> {
    if times.len() != density.len() || times.is_empty() {
        return Err(Error::contract("density needs one value per sample time"));
    }
    if times.len() == 1 {
        return Ok(times[0] - t0);
    }
    let mass = trapezoid(times, density);
    if !(mass > 0.0) {
        return Err(Error::Normalization(format!("sampled density has mass {mass}")));
    }
    let weighted: Vec<f64> = times.iter().zip(density).map(|(t, d)| (t - t0) * d).collect();
    Ok(trapezoid(times, &weighted) / mass)
}

/// `∫ π dt` by the trapezoid rule.
pub fn sampled_mass(times: &[f64], density: &[f64]) -> f64 {
    trapezoid(times, density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delta_density_has_its_sample_as_mean() {
        let times: Vec<f64> = (0..11).map(|i| 1.0 + 0.5 * i as f64).collect();
        let mut density = vec![0.0; 11];
        density[6] = 2.0;
        assert_relative_eq!(sampled_mean(1.0, &times, &density).unwrap(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn density_has_unit_mass() {
        let src = EmissionEvent::at_origin();
        let amp = MomentumAmplitude::isotropic_gaussian(5.0, 0.5).unwrap();
        let (times, density, norm) = arrival_density(
            &amp,
            &Vec3::new(0.0, 0.0, 20.0),
            &src,
            &QuadratureSpec::default(),
            &GridSpec::default(),
        )
        .unwrap();
        assert!(norm.converged);
        assert!(density.iter().all(|d| *d >= 0.0));
        assert_relative_eq!(sampled_mass(&times, &density), 1.0, epsilon = 1e-6);
    }
}
