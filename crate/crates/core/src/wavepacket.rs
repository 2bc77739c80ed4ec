//! Momentum-space amplitudes of the emitted packet and the position-space
//! components built from them.
//!
//! An amplitude is stored in separable form `C(p n) = c · R(p) · g(n)`. The
//! angular component along `n` is
//!
//! ```text
//! Ψ⁽ⁿ⁾(x, t) = (2π)^{-3/2} ∫₀^∞ p² C(p n) exp(−i p²(t − t0)/2m + i p n·(x − x0)) dp
//! ```
//!
//! and the detector-restricted wavefunction `Ψ_D` is its integral over the
//! cone of directions that reach the detector.

use std::f64::consts::PI;
use std::sync::OnceLock;

use log::warn;

use crate::geometry::{check_unit, DetectorGeometry, EmissionEvent};
use crate::quadrature::{cone_directions, volume_nodes, GaussLegendre, QuadratureSpec};
use crate::{Complex64, Error, Result, Vec3};

/// Gaussian radial lobes are cut at `p0 ± TRUNCATION_SIGMAS · σ_p`.
pub const TRUNCATION_SIGMAS: f64 = 8.0;

/// Largest `points × momentum nodes` table a [`PacketField`] may hold.
const FIELD_BUDGET: usize = 1 << 24;

fn inv_two_pi_three_halves() -> f64 {
    (2.0 * PI).powf(-1.5)
}

/// Piecewise-linear complex samples, zero outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    grid: Vec<f64>,
    values: Vec<Complex64>,
}

impl Table {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::contract(format!(
                "table needs at least two samples and matching lengths (grid {}, values {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::contract("table grid must be finite and strictly increasing"));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::contract("table values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.grid.len();
        if x < self.grid[0] || x > self.grid[n - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let i = self.grid.partition_point(|g| *g <= x).clamp(1, n - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let f = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - f) + self.values[i] * f
    }
}

/// One Gaussian term `weight · exp(−(p − p0)²/4σ²)`, so `|·|²` has spread `σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLobe {
    pub p0: f64,
    pub sigma: f64,
    pub weight: Complex64,
}

impl GaussianLobe {
    pub fn new(p0: f64, sigma: f64) -> Self {
        Self {
            p0,
            sigma,
            weight: Complex64::new(1.0, 0.0),
        }
    }

    pub fn weighted(p0: f64, sigma: f64, weight: Complex64) -> Self {
        Self { p0, sigma, weight }
    }

    fn support(&self) -> (f64, f64) {
        (
            (self.p0 - TRUNCATION_SIGMAS * self.sigma).max(0.0),
            self.p0 + TRUNCATION_SIGMAS * self.sigma,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// Sum of Gaussian lobes; a single lobe is the plain Gaussian packet.
    Lobes(Vec<GaussianLobe>),
    /// Samples over `p`.
    Tabulated(Table),
}

/// Axially symmetric angular weight `g(cos α)`, `α` measured from `axis`.
#[derive(Debug, Clone, PartialEq)]
pub enum AngularProfile {
    Isotropic,
    /// `g = exp(−α²/4σ²)`.
    Gaussian { axis: Vec3, sigma: f64 },
    /// Samples over `cos α ∈ [−1, 1]`.
    Tabulated { axis: Vec3, table: Table },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeKind {
    IsotropicGaussian,
    Separable,
    Tabulated,
}

/// `C(p n) = scale · R(p) · g(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitude {
    radial: RadialProfile,
    angular: AngularProfile,
    scale: Complex64,
}

impl MomentumAmplitude {
    /// Isotropic Gaussian packet, normalized.
    pub fn isotropic_gaussian(p0: f64, sigma_p: f64) -> Result<Self> {
        Self::separable(RadialProfile::Lobes(vec![GaussianLobe::new(p0, sigma_p)]), AngularProfile::Isotropic)?
            .normalize()
    }

    /// Arbitrary radial and angular profiles; not normalized.
    pub fn separable(radial: RadialProfile, angular: AngularProfile) -> Result<Self> {
        match &radial {
            RadialProfile::Lobes(lobes) => {
                if lobes.is_empty() {
                    return Err(Error::contract("radial profile needs at least one lobe"));
                }
                for l in lobes {
                    if !(l.p0 > 0.0 && l.p0.is_finite()) {
                        return Err(Error::contract(format!("central momentum must be positive, got {}", l.p0)));
                    }
                    if !(l.sigma > 0.0 && l.sigma.is_finite()) {
                        return Err(Error::contract(format!("momentum spread must be positive, got {}", l.sigma)));
                    }
                    if l.p0 - TRUNCATION_SIGMAS * l.sigma < 0.0 {
                        warn!(
                            "lobe p0 = {} with sigma_p = {} reaches p < 0; the packet is cut at p = 0",
                            l.p0, l.sigma
                        );
                    }
                }
            }
            RadialProfile::Tabulated(t) => {
                if t.grid[0] < 0.0 {
                    return Err(Error::contract("radial table must start at p >= 0"));
                }
            }
        }
        let angular = match angular {
            AngularProfile::Isotropic => AngularProfile::Isotropic,
            AngularProfile::Gaussian { axis, sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::contract(format!("angular spread must be positive, got {sigma}")));
                }
                AngularProfile::Gaussian {
                    axis: unit_axis(axis)?,
                    sigma,
                }
            }
            AngularProfile::Tabulated { axis, table } => {
                if table.grid[0] < -1.0 || *table.grid.last().unwrap() > 1.0 {
                    return Err(Error::contract("angular table grid must lie within cos α ∈ [-1, 1]"));
                }
                AngularProfile::Tabulated {
                    axis: unit_axis(axis)?,
                    table,
                }
            }
        };
        Ok(Self {
            radial,
            angular,
            scale: Complex64::new(1.0, 0.0),
        })
    }

    pub fn kind(&self) -> AmplitudeKind {
        match (&self.radial, &self.angular) {
            (RadialProfile::Lobes(l), AngularProfile::Isotropic) if l.len() == 1 => AmplitudeKind::IsotropicGaussian,
            (RadialProfile::Tabulated(_), AngularProfile::Isotropic | AngularProfile::Tabulated { .. }) => {
                AmplitudeKind::Tabulated
            }
            _ => AmplitudeKind::Separable,
        }
    }

    pub fn radial(&self) -> &RadialProfile {
        &self.radial
    }

    pub fn angular(&self) -> &AngularProfile {
        &self.angular
    }

    pub fn scale(&self) -> Complex64 {
        self.scale
    }

    /// Copy multiplied by a complex constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            scale: self.scale * c,
            ..self.clone()
        }
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self.angular, AngularProfile::Isotropic)
    }

    pub fn radial_value(&self, p: f64) -> Complex64 {
        match &self.radial {
            RadialProfile::Lobes(lobes) => lobes
                .iter()
                .filter(|l| {
                    let (a, b) = l.support();
                    p >= a && p <= b
                })
                .map(|l| l.weight * (-(p - l.p0).powi(2) / (4.0 * l.sigma * l.sigma)).exp())
                .sum(),
            RadialProfile::Tabulated(t) => t.eval(p),
        }
    }

    pub fn angular_value(&self, n: &Vec3) -> Complex64 {
        match &self.angular {
            AngularProfile::Isotropic => Complex64::new(1.0, 0.0),
            AngularProfile::Gaussian { axis, sigma } => {
                let alpha = n.dot(axis).clamp(-1.0, 1.0).acos();
                Complex64::new((-alpha * alpha / (4.0 * sigma * sigma)).exp(), 0.0)
            }
            AngularProfile::Tabulated { axis, table } => table.eval(n.dot(axis).clamp(-1.0, 1.0)),
        }
    }

    /// `C(p n)`.
    pub fn value(&self, p: f64, n: &Vec3) -> Complex64 {
        self.scale * self.radial_value(p) * self.angular_value(n)
    }

    /// Disjoint momentum intervals outside which `R(p)` vanishes, with
    /// breakpoints at table nodes.
    pub fn radial_segments(&self) -> Vec<(f64, f64)> {
        match &self.radial {
            RadialProfile::Lobes(lobes) => {
                let mut spans: Vec<(f64, f64)> = lobes.iter().map(GaussianLobe::support).collect();
                spans.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut merged: Vec<(f64, f64)> = Vec::new();
                for (a, b) in spans {
                    match merged.last_mut() {
                        Some(last) if a <= last.1 => last.1 = last.1.max(b),
                        _ => merged.push((a, b)),
                    }
                }
                // Lobe edges inside a merged span are kinks of the truncated sum.
                let mut out = Vec::new();
                for (a, b) in merged {
                    let mut cuts: Vec<f64> = lobes
                        .iter()
                        .flat_map(|l| {
                            let (la, lb) = l.support();
                            [la, lb]
                        })
                        .filter(|c| *c > a && *c < b)
                        .collect();
                    cuts.sort_by(f64::total_cmp);
                    cuts.dedup();
                    let mut lo = a;
                    for c in cuts {
                        out.push((lo, c));
                        lo = c;
                    }
                    out.push((lo, b));
                }
                out
            }
            RadialProfile::Tabulated(t) => t.grid.windows(2).map(|w| (w[0], w[1])).collect(),
        }
    }

    /// Smallest and largest momentum in the support.
    pub fn radial_bounds(&self) -> (f64, f64) {
        let segs = self.radial_segments();
        (segs[0].0, segs[segs.len() - 1].1)
    }

    fn radial_integral<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let rule = GaussLegendre::new(24);
        self.radial_segments()
            .iter()
            .map(|&(a, b)| {
                let panels = match self.radial {
                    RadialProfile::Lobes(_) => 8,
                    RadialProfile::Tabulated(_) => 1,
                };
                rule.integrate_composite(a, b, panels, &f)
            })
            .sum()
    }

    /// `∫ p² |R(p)|² dp`.
    pub fn radial_norm2(&self) -> f64 {
        self.radial_integral(|p| p * p * self.radial_value(p).norm_sqr())
    }

    /// `∫ p² |R(p)| dp`, the scale against which radial quadrature errors are judged.
    pub fn radial_l1(&self) -> f64 {
        self.radial_integral(|p| p * p * self.radial_value(p).norm())
    }

    /// `∫ dΩ |g(n)|²` over the full sphere.
    pub fn angular_norm2(&self) -> f64 {
        self.cone_angular_mass(&Vec3::z(), PI)
    }

    /// `∫ dΩ |g(n)|²` over the cone of directions within `half_angle` of `axis`.
    pub fn cone_angular_mass(&self, axis: &Vec3, half_angle: f64) -> f64 {
        let omega = 4.0 * PI * (0.5 * half_angle).sin().powi(2);
        let (profile_axis, theta_breaks) = match &self.angular {
            AngularProfile::Isotropic => return omega,
            AngularProfile::Gaussian { axis, sigma } => (*axis, vec![(12.0 * sigma).min(PI)]),
            AngularProfile::Tabulated { axis, table } => {
                (*axis, table.grid.iter().map(|u| u.clamp(-1.0, 1.0).acos()).collect())
            }
        };
        let full = half_angle >= PI;
        let aligned = axis.dot(&profile_axis) > 1.0 - 1e-14;
        if full || aligned {
            // Axially symmetric about the cone axis: one-dimensional in θ.
            let mut cuts: Vec<f64> = theta_breaks.into_iter().filter(|t| *t > 0.0 && *t < half_angle).collect();
            cuts.push(0.0);
            cuts.push(half_angle);
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let rule = GaussLegendre::new(32);
            let g = |theta: f64| {
                let n = profile_axis * theta.cos() + perpendicular(&profile_axis) * theta.sin();
                theta.sin() * self.angular_value(&n).norm_sqr()
            };
            return 2.0
                * PI
                * cuts
                    .windows(2)
                    .map(|w| rule.integrate_composite(w[0], w[1], 8, g))
                    .sum::<f64>();
        }
        let rule = GaussLegendre::new(32);
        let az = 512;
        let dphi = 2.0 * PI / az as f64;
        let (e1, e2) = crate::geometry::orthonormal_frame(axis);
        rule.integrate_composite(0.0, half_angle, 16, |theta| {
            let (s, c) = theta.sin_cos();
            let ring: f64 = (0..az)
                .map(|j| {
                    let phi = (j as f64 + 0.5) * dphi;
                    let n = axis * c + (e1 * phi.cos() + e2 * phi.sin()) * s;
                    self.angular_value(&n).norm_sqr()
                })
                .sum();
            s * ring * dphi
        })
    }

    /// `∫ dΩ ∫ p² dp |C(p n)|²`.
    pub fn norm2(&self) -> f64 {
        self.scale.norm_sqr() * self.radial_norm2() * self.angular_norm2()
    }

    /// Central momentum of a single-lobe Gaussian radial profile.
    pub fn central_momentum(&self) -> Option<f64> {
        match &self.radial {
            RadialProfile::Lobes(l) if l.len() == 1 => Some(l[0].p0),
            _ => None,
        }
    }

    /// `p0` when exposed, otherwise the mean radial momentum.
    pub fn typical_momentum(&self) -> f64 {
        self.central_momentum().unwrap_or_else(|| {
            self.radial_integral(|p| p.powi(3) * self.radial_value(p).norm_sqr()) / self.radial_norm2()
        })
    }

    /// Classical flight time `m L / p` for the typical momentum.
    pub fn flight_time(&self, mass: f64, distance: f64) -> f64 {
        mass * distance / self.typical_momentum()
    }

    /// Copy scaled to unit norm. Idempotent: an amplitude already normalized
    /// to rounding is returned unchanged.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm2();
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(Error::Normalization(format!("amplitude norm is {n2}, cannot normalize")));
        }
        if (n2 - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(self.clone());
        }
        Ok(self.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm2() - 1.0).abs() <= tol
    }
}

fn unit_axis(axis: Vec3) -> Result<Vec3> {
    axis.try_normalize(0.0)
        .ok_or_else(|| Error::contract("angular profile axis must be nonzero"))
}

fn perpendicular(axis: &Vec3) -> Vec3 {
    crate::geometry::orthonormal_frame(axis).0
}

/// Where and when to evaluate `Ψ⁽ⁿ⁾`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularComponentRequest {
    pub direction: Vec3,
    pub x: Vec3,
    pub t: f64,
}

/// Number of panels on `[a, b]` that keeps at least `nodes_per_period` nodes
/// per oscillation of `exp(i(p s − p² τ/2m))` for every `s ∈ [s_lo, s_hi]`.
fn panels_for(a: f64, b: f64, s_lo: f64, s_hi: f64, tau: f64, mass: f64, quad: &QuadratureSpec) -> usize {
    let rate = [s_lo - a * tau / mass, s_lo - b * tau / mass, s_hi - a * tau / mass, s_hi - b * tau / mass]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    let periods = rate * (b - a) / (2.0 * PI);
    let needed = (periods * quad.nodes_per_period / quad.radial_nodes as f64).ceil() as usize;
    needed.max(quad.radial_panels)
}

fn truncate(segments: &[(f64, f64)], p_max: Option<f64>) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let Some(cut) = p_max else {
        return (segments.to_vec(), Vec::new());
    };
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for &(a, b) in segments {
        if b <= cut {
            kept.push((a, b));
        } else if a >= cut {
            dropped.push((a, b));
        } else {
            kept.push((a, cut));
            dropped.push((cut, b));
        }
    }
    (kept, dropped)
}

/// `Ψ⁽ⁿ⁾(x, t)` together with its error estimate.
///
/// The radial integral is evaluated with `P` and `2P` panels per support
/// segment; the difference plus the amplitude mass cut away by `p_max` is the
/// error estimate, judged against `tolerance · (2π)^{-3/2} ∫ p² |C(p n)| dp`.
pub fn eval_angular_component_with_error(
    amp: &MomentumAmplitude,
    req: &AngularComponentRequest,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
) -> Result<(Complex64, f64)> {
    quad.checked()?;
    check_unit(&req.direction)?;
    let tau = req.t - src.t0;
    if tau < 0.0 {
        return Err(Error::contract(format!("evaluation time {} precedes emission at {}", req.t, src.t0)));
    }
    let s = req.direction.dot(&(req.x - src.x0));
    let angular = amp.scale * amp.angular_value(&req.direction);
    let norm = inv_two_pi_three_halves();
    let l1 = angular.norm() * amp.radial_l1() * norm;

    let (kept, dropped) = truncate(&amp.radial_segments(), quad.p_max);
    let rule = GaussLegendre::new(32);
    let lost: f64 = dropped
        .iter()
        .map(|&(a, b)| rule.integrate_composite(a, b, 4, |p| p * p * amp.radial_value(p).norm()))
        .sum::<f64>()
        * angular.norm()
        * norm;

    let nodes = GaussLegendre::new(quad.radial_nodes);
    let integrand = |p: f64| {
        let phase = p * s - 0.5 * p * p * tau / src.mass;
        amp.radial_value(p) * Complex64::cis(phase) * (p * p)
    };
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut fine = Complex64::new(0.0, 0.0);
    for &(a, b) in &kept {
        let panels = panels_for(a, b, s, s, tau, src.mass, quad);
        coarse += composite_complex(&nodes, a, b, panels, integrand);
        fine += composite_complex(&nodes, a, b, 2 * panels, integrand);
    }
    let value = fine * angular * norm;
    let error = (fine - coarse).norm() * angular.norm() * norm + lost;
    let allowed = quad.tolerance * l1;
    if error > allowed {
        return Err(Error::Integration {
            what: "angular component".into(),
            estimate: error,
            tolerance: allowed,
        });
    }
    Ok((value, error))
}

/// `Ψ⁽ⁿ⁾(x, t)`, see [`eval_angular_component_with_error`].
pub fn eval_angular_component(
    amp: &MomentumAmplitude,
    req: &AngularComponentRequest,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    eval_angular_component_with_error(amp, req, src, quad).map(|(v, _)| v)
}

fn composite_complex<F: Fn(f64) -> Complex64>(rule: &GaussLegendre, a: f64, b: f64, panels: usize, f: F) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..panels {
        let lo = a + h * i as f64;
        for (p, w) in rule.mapped(lo, lo + h) {
            acc += f(p) * w;
        }
    }
    acc
}

/// `Ψ_D(x, t) = ∫_{Ω_D} dΩ(n) Ψ⁽ⁿ⁾(x, t)` on the cone's polar–azimuth grid.
pub fn eval_detector_wavefunction(
    amp: &MomentumAmplitude,
    x: &Vec3,
    t: f64,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    quad: &QuadratureSpec,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, w) in cone_directions(&det.axis(), det.cone_half_angle(), quad.polar_nodes, quad.azimuth_nodes) {
        let req = AngularComponentRequest { direction: n, x: *x, t };
        acc += eval_angular_component(amp, &req, src, quad)? * w;
    }
    Ok(acc)
}

struct Level {
    kinetic: Vec<f64>,
    coeff: Vec<Complex64>,
}

/// Cached evaluator of a superposition of angular components at a fixed set
/// of points, for many times.
///
/// Each point `x_i` carries the sum `Σ_n w_n Ψ⁽ⁿ⁾(x_i, t)` over a fixed
/// direction rule. Everything that does not depend on `t` is folded into one
/// coefficient per (point, momentum node), so a time step costs one complex
/// multiply-add per table entry. Momentum grids are refined in doublings as
/// `t − t0` grows and the radial phase oscillates faster; each refinement
/// level is built once on first use.
pub struct PacketField {
    amp: MomentumAmplitude,
    src: EmissionEvent,
    quad: QuadratureSpec,
    points: Vec<Vec3>,
    weights: Vec<f64>,
    directions: Vec<(Vec3, f64)>,
    segments: Vec<(f64, f64)>,
    s_lo: f64,
    s_hi: f64,
    rule: GaussLegendre,
    levels: Vec<OnceLock<Level>>,
}

impl PacketField {
    /// `Ψ_D` on the detector volume grid, for occupation integrals.
    pub fn detector(
        amp: &MomentumAmplitude,
        det: &DetectorGeometry,
        src: &EmissionEvent,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        let nodes = volume_nodes(det, quad);
        let directions = cone_directions(&det.axis(), det.cone_half_angle(), quad.polar_nodes, quad.azimuth_nodes);
        Self::new(amp, src, quad, nodes, directions)
    }

    /// `Ψ⁽ⁿᴰ⁾(x_D, t)` with `n_D` pointing from the source to `x_D`.
    pub fn point(amp: &MomentumAmplitude, x_d: &Vec3, src: &EmissionEvent, quad: &QuadratureSpec) -> Result<Self> {
        let d = x_d - src.x0;
        let n = d
            .try_normalize(0.0)
            .ok_or_else(|| Error::geometry("point detector coincides with the source"))?;
        Self::new(amp, src, quad, vec![(*x_d, 1.0)], vec![(n, 1.0)])
    }

    fn new(
        amp: &MomentumAmplitude,
        src: &EmissionEvent,
        quad: &QuadratureSpec,
        nodes: Vec<(Vec3, f64)>,
        directions: Vec<(Vec3, f64)>,
    ) -> Result<Self> {
        quad.checked()?;
        let (segments, _) = truncate(&amp.radial_segments(), quad.p_max);
        if segments.is_empty() {
            return Err(Error::contract("momentum cut p_max removes the whole amplitude support"));
        }
        let mut s_lo = f64::INFINITY;
        let mut s_hi = f64::NEG_INFINITY;
        for (x, _) in &nodes {
            for (n, _) in &directions {
                let s = n.dot(&(x - src.x0));
                s_lo = s_lo.min(s);
                s_hi = s_hi.max(s);
            }
        }
        let (points, weights) = nodes.into_iter().unzip();
        Ok(Self {
            amp: amp.clone(),
            src: *src,
            quad: quad.clone(),
            points,
            weights,
            directions,
            segments,
            s_lo,
            s_hi,
            rule: GaussLegendre::new(quad.radial_nodes),
            levels: (0..32).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    fn level_for(&self, tau: f64) -> Result<usize> {
        let mut level = 0;
        for &(a, b) in &self.segments {
            let needed = panels_for(a, b, self.s_lo, self.s_hi, tau, self.src.mass, &self.quad);
            let mut l = 0;
            while self.quad.radial_panels << l < needed {
                l += 1;
            }
            level = level.max(l);
        }
        if level >= self.levels.len() {
            return Err(Error::Resource(format!("radial refinement level {level} at t - t0 = {tau}")));
        }
        let per_point = self.segments.len() * (self.quad.radial_panels << level) * self.rule.len();
        if per_point * self.points.len() > FIELD_BUDGET {
            return Err(Error::Resource(format!(
                "{} points x {per_point} momentum nodes exceeds the field budget at t - t0 = {tau}",
                self.points.len()
            )));
        }
        Ok(level)
    }

    fn build_level(&self, level: usize) -> Level {
        let panels = self.quad.radial_panels << level;
        let mut momenta = Vec::new();
        let mut pw = Vec::new();
        for &(a, b) in &self.segments {
            let h = (b - a) / panels as f64;
            for i in 0..panels {
                let lo = a + h * i as f64;
                for (p, w) in self.rule.mapped(lo, lo + h) {
                    momenta.push(p);
                    pw.push(w);
                }
            }
        }
        let norm = inv_two_pi_three_halves();
        let radial: Vec<Complex64> = momenta
            .iter()
            .zip(&pw)
            .map(|(&p, &w)| self.amp.scale * self.amp.radial_value(p) * (w * p * p * norm))
            .collect();
        let angular: Vec<Complex64> = self
            .directions
            .iter()
            .map(|(n, w)| self.amp.angular_value(n) * *w)
            .collect();
        let np = momenta.len();
        let mut coeff = vec![Complex64::new(0.0, 0.0); np * self.points.len()];
        for (i, x) in self.points.iter().enumerate() {
            let r = x - self.src.x0;
            let row = &mut coeff[i * np..(i + 1) * np];
            for ((n, _), g) in self.directions.iter().zip(&angular) {
                if g.norm_sqr() == 0.0 {
                    continue;
                }
                let s = n.dot(&r);
                for (j, &p) in momenta.iter().enumerate() {
                    row[j] += *g * Complex64::cis(p * s);
                }
            }
            for (c, rad) in row.iter_mut().zip(&radial) {
                *c *= *rad;
            }
        }
        let kinetic = momenta.iter().map(|p| 0.5 * p * p / self.src.mass).collect();
        Level { kinetic, coeff }
    }

    fn phases(&self, t: f64) -> Result<(&Level, Vec<Complex64>)> {
        let tau = t - self.src.t0;
        if tau < 0.0 {
            return Err(Error::contract(format!("evaluation time {t} precedes emission at {}", self.src.t0)));
        }
        let level = self.level_for(tau)?;
        let data = self.levels[level].get_or_init(|| self.build_level(level));
        let phases = data.kinetic.iter().map(|e| Complex64::cis(-e * tau)).collect();
        Ok((data, phases))
    }

    /// Field values at every point.
    pub fn values(&self, t: f64) -> Result<Vec<Complex64>> {
        let (data, phases) = self.phases(t)?;
        let np = phases.len();
        Ok(data
            .coeff
            .chunks_exact(np)
            .map(|row| row.iter().zip(&phases).map(|(c, e)| c * e).sum())
            .collect())
    }

    /// `Σ_i w_i |ψ(x_i, t)|²`: the detector occupation `∫_{V_D} |Ψ_D|² d³x`
    /// for a volume field, or `|Ψ⁽ⁿᴰ⁾(x_D, t)|²` for a point field.
    pub fn occupation(&self, t: f64) -> Result<f64> {
        let (data, phases) = self.phases(t)?;
        let np = phases.len();
        Ok(data
            .coeff
            .chunks_exact(np)
            .zip(&self.weights)
            .map(|(row, w)| {
                let psi: Complex64 = row.iter().zip(&phases).map(|(c, e)| c * e).sum();
                w * psi.norm_sqr()
            })
            .sum())
    }
}
