//! Brute-force reference values.
//!
//! Everything here uses plain trapezoid, midpoint and Simpson sums on uniform
//! grids and shares no quadrature code with the main path. Error bars come
//! from repeating the computation at half resolution. These routines are
//! slow and meant for minting fixtures and cross-checks.
//!
//! Two identities avoid time integration where possible. Writing
//! `Ψ(t) = ∫ dp u(p) e^{−i p² τ/2m}` and changing variables to `E = p²/2m`,
//! Parseval's theorem gives
//!
//! ```text
//! ∫ |Ψ|² dτ     = 2π ∫ (m/p) |u|² dp
//! ∫ τ |Ψ|² dτ   = 2π ∫ φ* (−i dφ/dp) dp,   φ = (m/p) u
//! ```
//!
//! over the whole real line. The `τ < 0` part is negligible for outgoing
//! packets observed far from the source, which is the setting of every
//! fixture.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{orthonormal_frame, DetectorGeometry, DetectorShape, EmissionEvent};
use crate::wavepacket::MomentumAmplitude;
use crate::{Complex64, Error, Result, Vec3};

/// Smallest node count accepted for radial trapezoid sums of a single component.
pub const MIN_COMPONENT_NODES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub value: f64,
    /// Imaginary part, for complex quantities.
    #[serde(default)]
    pub imag: f64,
    /// Evaluation time, for time-dependent quantities.
    #[serde(default)]
    pub at: Option<f64>,
    pub resolution: BTreeMap<String, f64>,
    pub error: f64,
}

impl OracleReport {
    fn new(quantity: &str, value: f64, error: f64, resolution: &[(&str, f64)]) -> Self {
        Self {
            quantity: quantity.into(),
            value,
            imag: 0.0,
            at: None,
            resolution: resolution.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            error,
        }
    }

    fn at(mut self, t: f64) -> Self {
        self.at = Some(t);
        self
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.value, self.imag)
    }
}

fn prefactor() -> f64 {
    (2.0 * PI).powf(-1.5)
}

/// Uniform trapezoid nodes on `[a, b]`.
fn trapezoid_nodes(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 * h } else { h };
            (a + h * k as f64, w)
        })
        .collect()
}

fn component_sum(amp: &MomentumAmplitude, n: &Vec3, s: f64, tau: f64, mass: f64, nodes: usize) -> Complex64 {
    let (a, b) = amp.radial_bounds();
    trapezoid_nodes(a, b, nodes)
        .into_iter()
        .map(|(p, w)| amp.value(p, n) * Complex64::cis(p * s - 0.5 * p * p * tau / mass) * (w * p * p))
        .sum::<Complex64>()
        * prefactor()
}

/// `Ψ⁽ⁿ⁾(x, t)` by the trapezoid rule on `nodes` radial intervals; the error
/// is the change from `nodes / 2`.
pub fn oracle_angular_component(
    amp: &MomentumAmplitude,
    n: &Vec3,
    x: &Vec3,
    t: f64,
    src: &EmissionEvent,
    nodes: usize,
) -> Result<OracleReport> {
    if nodes < MIN_COMPONENT_NODES {
        return Err(Error::contract(format!(
            "oracle needs at least {MIN_COMPONENT_NODES} radial nodes, got {nodes}"
        )));
    }
    let n = n.normalize();
    let tau = t - src.t0;
    let s = n.dot(&(x - src.x0));
    let fine = component_sum(amp, &n, s, tau, src.mass, nodes);
    let coarse = component_sum(amp, &n, s, tau, src.mass, nodes / 2);
    let mut r = OracleReport::new("angular_component", fine.re, (fine - coarse).norm(), &[("radial_nodes", nodes as f64)]);
    r.imag = fine.im;
    Ok(r.at(t))
}

/// Classical flight time `m L / p0`.
pub fn oracle_classical_flight(amp: &MomentumAmplitude, distance: f64, mass: f64) -> Result<f64> {
    let p0 = amp
        .central_momentum()
        .ok_or_else(|| Error::Unsupported("classical flight time needs an amplitude with a central momentum".into()))?;
    Ok(mass * distance / p0)
}

fn radial_mass(amp: &MomentumAmplitude, nodes: usize) -> f64 {
    let (a, b) = amp.radial_bounds();
    trapezoid_nodes(a, b, nodes)
        .into_iter()
        .map(|(p, w)| w * p * p * amp.radial_value(p).norm_sqr())
        .sum()
}

fn cone_mass(amp: &MomentumAmplitude, axis: &Vec3, half_angle: f64, n_u: usize, n_phi: usize) -> f64 {
    midpoint_cone(axis, half_angle, n_u, n_phi)
        .into_iter()
        .map(|(n, w)| w * amp.angular_value(&n).norm_sqr())
        .sum()
}

/// `P(E1)` by a midpoint rule in `(cos θ, φ)` over the detector cone.
pub fn oracle_prob_e1(amp: &MomentumAmplitude, det: &DetectorGeometry, n_u: usize, n_phi: usize, radial_nodes: usize) -> OracleReport {
    let axis = det.axis();
    let theta = det.cone_half_angle();
    let scale = amp.scale().norm_sqr();
    let fine = scale * radial_mass(amp, radial_nodes) * cone_mass(amp, &axis, theta, n_u, n_phi);
    let coarse = scale * radial_mass(amp, radial_nodes / 2) * cone_mass(amp, &axis, theta, n_u / 2, n_phi / 2);
    OracleReport::new(
        "p_e1",
        fine,
        (fine - coarse).abs(),
        &[("polar_cells", n_u as f64), ("azimuth_cells", n_phi as f64), ("radial_nodes", radial_nodes as f64)],
    )
}

/// Midpoint cells of equal `(cos θ, φ)` extent over a cone; weights are exact cell areas.
fn midpoint_cone(axis: &Vec3, half_angle: f64, n_u: usize, n_phi: usize) -> Vec<(Vec3, f64)> {
    let (e1, e2) = orthonormal_frame(axis);
    let u_lo = half_angle.cos();
    let du = (1.0 - u_lo) / n_u as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_u * n_phi);
    for i in 0..n_u {
        let u = u_lo + du * (i as f64 + 0.5);
        let s = (1.0 - u * u).max(0.0).sqrt();
        for j in 0..n_phi {
            let phi = dphi * (j as f64 + 0.5);
            out.push((axis * u + (e1 * phi.cos() + e2 * phi.sin()) * s, du * dphi));
        }
    }
    out
}

/// Midpoint cells over the detector volume; weights are exact cell volumes.
fn midpoint_volume(det: &DetectorGeometry, n_r: usize, n_u: usize, n_phi: usize) -> Vec<(Vec3, f64)> {
    let axis = det.axis();
    let (e1, e2) = orthonormal_frame(&axis);
    let (origin, r_lo, r_hi, u_lo) = match *det.shape() {
        DetectorShape::Sphere { center, radius } => (center, 0.0, radius, -1.0),
        DetectorShape::CapSector {
            half_angle, r_in, r_out, ..
        } => (det.source(), r_in, r_out, half_angle.cos()),
    };
    let dr = (r_hi - r_lo) / n_r as f64;
    let du = (1.0 - u_lo) / n_u as f64;
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(n_r * n_u * n_phi);
    for i in 0..n_r {
        let ra = r_lo + dr * i as f64;
        let rb = ra + dr;
        let shell = (rb.powi(3) - ra.powi(3)) / 3.0;
        let rho = 0.5 * (ra + rb);
        for j in 0..n_u {
            let u = u_lo + du * (j as f64 + 0.5);
            let s = (1.0 - u * u).max(0.0).sqrt();
            for l in 0..n_phi {
                let phi = dphi * (l as f64 + 0.5);
                let dir = axis * u + (e1 * phi.cos() + e2 * phi.sin()) * s;
                out.push((origin + dir * rho, shell * du * dphi));
            }
        }
    }
    out
}

/// Grid sizes of the brute-force detector integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResolution {
    /// Radial, polar and azimuthal midpoint cells of the volume.
    pub volume: [usize; 3],
    /// Polar and azimuthal midpoint cells of the direction cone.
    pub cone: [usize; 2],
    /// Radial trapezoid intervals.
    pub momentum: usize,
    /// Simpson step of time scans.
    pub time_step: f64,
}

impl OracleResolution {
    fn halved(&self) -> Self {
        Self {
            volume: self.volume.map(|n| (n / 2).max(1)),
            cone: self.cone.map(|n| (n / 2).max(1)),
            ..*self
        }
    }

    fn describe(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("volume_radial_cells", self.volume[0] as f64),
            ("volume_polar_cells", self.volume[1] as f64),
            ("volume_azimuth_cells", self.volume[2] as f64),
            ("cone_polar_cells", self.cone[0] as f64),
            ("cone_azimuth_cells", self.cone[1] as f64),
            ("radial_nodes", self.momentum as f64),
            ("time_step", self.time_step),
        ]
    }
}

/// Brute-force detector field: for each volume cell, the pairs
/// `(n·(x − x0), w_n g(n))` over the cone.
struct DetectorSums {
    cells: Vec<(f64, Vec<(f64, Complex64)>)>,
    momenta: Vec<f64>,
    radial: Vec<Complex64>,
    p_lo: f64,
    h: f64,
    mass: f64,
}

impl DetectorSums {
    fn new(amp: &MomentumAmplitude, det: &DetectorGeometry, src: &EmissionEvent, res: &OracleResolution) -> Self {
        let dirs = midpoint_cone(&det.axis(), det.cone_half_angle(), res.cone[0], res.cone[1]);
        let cells = midpoint_volume(det, res.volume[0], res.volume[1], res.volume[2])
            .into_iter()
            .map(|(x, w)| {
                let r = x - src.x0;
                let pairs = dirs.iter().map(|(n, wn)| (n.dot(&r), amp.angular_value(n) * *wn)).collect();
                (w, pairs)
            })
            .collect();
        let (a, b) = amp.radial_bounds();
        let nodes = trapezoid_nodes(a, b, res.momentum);
        let momenta: Vec<f64> = nodes.iter().map(|(p, _)| *p).collect();
        let radial = nodes
            .iter()
            .map(|&(p, w)| amp.scale() * amp.radial_value(p) * (w * p * p * prefactor()))
            .collect();
        Self {
            cells,
            momenta,
            radial,
            p_lo: a,
            h: (b - a) / res.momentum as f64,
            mass: src.mass,
        }
    }

    /// `Σ_k c_k e^{i p_k s}` by a phase recurrence, re-anchored periodically.
    fn fourier(&self, coeffs: &[Complex64], s: f64) -> Complex64 {
        let step = Complex64::cis(self.h * s);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut z = Complex64::cis(self.p_lo * s);
        for (k, c) in coeffs.iter().enumerate() {
            if k % 256 == 0 {
                z = Complex64::cis(self.momenta[k] * s);
            }
            acc += c * z;
            z *= step;
        }
        acc
    }

    /// `∫_{V_D} |Ψ_D(x, t0 + τ)|² d³x`.
    fn occupation(&self, tau: f64) -> f64 {
        let coeffs: Vec<Complex64> = self
            .momenta
            .iter()
            .zip(&self.radial)
            .map(|(p, r)| r * Complex64::cis(-0.5 * p * p * tau / self.mass))
            .collect();
        self.cells
            .iter()
            .map(|(w, pairs)| {
                let psi: Complex64 = pairs.iter().map(|(s, g)| g * self.fourier(&coeffs, *s)).sum();
                w * psi.norm_sqr()
            })
            .sum()
    }

    /// `∫_{-∞}^{∞} dτ ∫_{V_D} |Ψ_D|²` via Parseval.
    fn parseval(&self) -> f64 {
        let mut total = 0.0;
        for (k, &p) in self.momenta.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            // (m/p)|u|² with the trapezoid weight applied once
            let radial = self.radial[k];
            let w = self.trapezoid_weight(k);
            if w == 0.0 || radial.norm_sqr() == 0.0 {
                continue;
            }
            let unweighted = radial / w;
            let mut density = 0.0;
            for (cw, pairs) in &self.cells {
                let u: Complex64 = pairs.iter().map(|(s, g)| g * Complex64::cis(p * s)).sum::<Complex64>() * unweighted;
                density += cw * u.norm_sqr();
            }
            total += w * self.mass / p * density;
        }
        2.0 * PI * total
    }

    fn trapezoid_weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.momenta.len() {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

/// Backward-time part of a density `f(τ)` that decays as `τ → −∞`.
struct Backward {
    mass: f64,
    mass_error: f64,
    first: f64,
    first_error: f64,
}

/// `∫_{-∞}^{0} f` and `∫_{-∞}^{0} τ f` over windows `[−w0, 0]`, `[−2w0, −w0]`,
/// `[−4w0, −2w0]`, … with 64 Simpson intervals each. The scan stops once a
/// window adds less than `floor`, with that window's size as the tail bound,
/// or before a window reaches past `−tau_max`, with the tail extrapolated
/// geometrically from the last two windows.
fn backward_part<F: FnMut(f64) -> f64>(mut f: F, w0: f64, floor: f64, tau_max: f64) -> Backward {
    const INTERVALS: usize = 64;
    let mut out = Backward {
        mass: 0.0,
        mass_error: 0.0,
        first: 0.0,
        first_error: 0.0,
    };
    let (mut lo, mut hi) = (-w0, 0.0);
    let mut windows: Vec<(f64, f64)> = Vec::new();
    while -lo <= tau_max {
        let h = (hi - lo) / INTERVALS as f64;
        let samples: Vec<(f64, f64)> = (0..=INTERVALS)
            .map(|k| {
                let t = lo + h * k as f64;
                (t, f(t))
            })
            .collect();
        let simpson = |g: &dyn Fn(f64, f64) -> f64, stride: usize| -> f64 {
            let m = INTERVALS / stride;
            let mut acc = g(samples[0].0, samples[0].1) + g(samples[INTERVALS].0, samples[INTERVALS].1);
            for j in 1..m {
                let (t, v) = samples[j * stride];
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * g(t, v);
            }
            acc * h * stride as f64 / 3.0
        };
        let mass = simpson(&|_, v| v, 1);
        let first = simpson(&|t, v| t * v, 1);
        out.mass += mass;
        out.first += first;
        out.mass_error += (mass - simpson(&|_, v| v, 2)).abs() / 15.0;
        out.first_error += (first - simpson(&|t, v| t * v, 2)).abs() / 15.0;
        if mass.abs() < floor {
            out.mass_error += mass.abs();
            out.first_error += first.abs();
            return out;
        }
        windows.push((mass, first));
        hi = lo;
        lo *= 2.0;
    }
    let tail = |last: f64, before: f64| -> f64 {
        let r = (last / before).abs();
        if r < 1.0 {
            last.abs() * r / (1.0 - r)
        } else {
            f64::INFINITY
        }
    };
    match windows.as_slice() {
        [.., (m0, f0), (m1, f1)] => {
            out.mass_error += tail(*m1, *m0);
            out.first_error += tail(*f1, *f0);
        }
        _ => {
            out.mass_error = f64::INFINITY;
            out.first_error = f64::INFINITY;
        }
    }
    out
}

/// Largest `|τ|` at which `nodes` trapezoid intervals on the radial support
/// keep eight nodes per period of `e^{-i p² τ / 2m}`.
fn resolved_tau(amp: &MomentumAmplitude, mass: f64, nodes: usize) -> f64 {
    let (a, b) = amp.radial_bounds();
    nodes as f64 * 4.0 * PI * mass / (8.0 * (b * b - a * a))
}

/// First backward window: an eighth of the flight time at the typical momentum.
fn backward_window(amp: &MomentumAmplitude, distance: f64, mass: f64) -> f64 {
    0.125 * mass * distance / amp.typical_momentum()
}

/// Relative size below which a backward window ends the scan.
const BACKWARD_FLOOR: f64 = 1e-17;

/// Composite Simpson integrals `∫_{t0}^{t} f` for each target time, sharing
/// one uniform grid of spacing `step` (each `t − t0` must be a multiple of
/// `2·step`). The error is the change against the rule with twice the step.
fn simpson_scan<F: FnMut(f64) -> f64>(mut f: F, t0: f64, targets: &[f64], step: f64) -> Result<Vec<(f64, f64)>> {
    let mut counts = Vec::with_capacity(targets.len());
    for &t in targets {
        let n = ((t - t0) / step).round();
        if n < 0.0 || (n * step - (t - t0)).abs() > 1e-9 * (1.0 + t.abs()) || (n as usize) % 4 != 0 {
            return Err(Error::contract(format!(
                "scan target {t} is not a multiple of 4·{step} after t0 = {t0}"
            )));
        }
        counts.push(n as usize);
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let samples: Vec<f64> = (0..=max).map(|k| f(t0 + step * k as f64)).collect();
    let simpson = |n: usize, stride: usize| -> f64 {
        let h = step * stride as f64;
        let m = n / stride;
        let mut acc = samples[0] + samples[n];
        for j in 1..m {
            let c = if j % 2 == 1 { 4.0 } else { 2.0 };
            acc += c * samples[j * stride];
        }
        acc * h / 3.0
    };
    Ok(counts
        .into_iter()
        .map(|n| {
            if n == 0 {
                return (0.0, 0.0);
            }
            let fine = simpson(n, 1);
            let coarse = simpson(n, 2);
            (fine, (fine - coarse).abs() / 15.0)
        })
        .collect())
}

/// `∫_{t0}^{∞} ∫_{V_D} |Ψ_D|²` and `P(E2/E1)` at each target time.
///
/// The denominator uses Parseval's identity, the numerators a Simpson scan of
/// the brute-force occupation. Reported errors combine the time-rule error
/// and the change at half the spatial and angular resolution.
pub fn oracle_entry_ratio(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    targets: &[f64],
    res: &OracleResolution,
) -> Result<Vec<OracleReport>> {
    let w0 = backward_window(amp, det.distance(), src.mass);
    let run = |res: &OracleResolution| -> Result<(f64, f64, Vec<(f64, f64)>)> {
        let sums = DetectorSums::new(amp, det, src, res);
        let full = sums.parseval();
        let back = backward_part(
            |tau| sums.occupation(tau),
            w0,
            BACKWARD_FLOOR * full,
            resolved_tau(amp, src.mass, res.momentum),
        );
        let nums = simpson_scan(|t| sums.occupation(t - src.t0), src.t0, targets, res.time_step)?;
        Ok((full - back.mass, back.mass_error, nums))
    };
    let (den, back_err, nums) = run(res)?;
    let (den_c, _, nums_c) = run(&res.halved())?;
    let resolution = res.describe();
    let mut out = vec![OracleReport::new("denominator", den, (den - den_c).abs() + back_err, &resolution)];
    for (i, &t) in targets.iter().enumerate() {
        let ratio = nums[i].0 / den;
        let ratio_c = nums_c[i].0 / den_c;
        let err = (ratio - ratio_c).abs() + nums[i].1 / den;
        out.push(OracleReport::new("p_e2_given_e1", ratio, err, &resolution).at(t));
    }
    Ok(out)
}

/// `∫_{t0}^{∞} |Ψ⁽ⁿᴰ⁾(x_D, t)|² dt`: Parseval's identity over all times, less
/// the part before emission from a backward scan.
pub fn oracle_point_normalizer(amp: &MomentumAmplitude, x_d: &Vec3, src: &EmissionEvent, nodes: usize) -> OracleReport {
    let (full, back) = point_totals(amp, x_d, src, nodes);
    let value = full.value - back.mass;
    OracleReport::new(
        "normalizer",
        value,
        full.error + back.mass_error,
        &[("radial_nodes", nodes as f64)],
    )
}

/// Parseval total over all times and the backward part at a point detector.
fn point_totals(amp: &MomentumAmplitude, x_d: &Vec3, src: &EmissionEvent, nodes: usize) -> (OracleReport, Backward) {
    let full = point_parseval(amp, x_d, src, nodes);
    let d = x_d - src.x0;
    let (l, n) = (d.norm(), d.normalize());
    let back = backward_part(
        |tau| component_sum(amp, &n, l, tau, src.mass, nodes).norm_sqr(),
        backward_window(amp, l, src.mass),
        BACKWARD_FLOOR * full.value,
        resolved_tau(amp, src.mass, nodes),
    );
    (full, back)
}

/// `∫_{-∞}^{∞} |Ψ⁽ⁿᴰ⁾(x_D, t)|² dt` via Parseval; independent of the distance.
fn point_parseval(amp: &MomentumAmplitude, x_d: &Vec3, src: &EmissionEvent, nodes: usize) -> OracleReport {
    let n = (x_d - src.x0).normalize();
    let f = |nodes: usize| -> f64 {
        let (a, b) = amp.radial_bounds();
        let total: f64 = trapezoid_nodes(a, b, nodes)
            .into_iter()
            .filter(|(p, _)| *p > 0.0)
            .map(|(p, w)| {
                let u = amp.value(p, &n) * (p * p * prefactor());
                w * src.mass / p * u.norm_sqr()
            })
            .sum();
        2.0 * PI * total
    };
    let fine = f(nodes);
    OracleReport::new("parseval_total", fine, (fine - f(nodes / 2)).abs(), &[("radial_nodes", nodes as f64)])
}

/// Mean arrival time at a point detector. The mean over all times comes from
/// the energy-domain identity `⟨τ⟩ = m ∫ [L |q|² + Im(q* q′)] dp / ∫ p |q|² dp`
/// with `q = p C(p n_D)`; the part before emission is removed with a backward scan.
pub fn oracle_mean_arrival(amp: &MomentumAmplitude, x_d: &Vec3, src: &EmissionEvent, nodes: usize) -> OracleReport {
    let whole = mean_over_all_times(amp, x_d, src, nodes);
    let (full, back) = point_totals(amp, x_d, src, nodes);
    let norm = full.value - back.mass;
    let value = (whole.value * full.value - back.first) / norm;
    let error = (whole.error * full.value
        + (whole.value.abs() + value.abs()) * full.error
        + back.first_error
        + value.abs() * back.mass_error)
        / norm;
    OracleReport::new("mean_arrival", value, error, &[("radial_nodes", nodes as f64)])
}

/// `⟨τ⟩` over all times from the energy-domain identity.
fn mean_over_all_times(amp: &MomentumAmplitude, x_d: &Vec3, src: &EmissionEvent, nodes: usize) -> OracleReport {
    let d = x_d - src.x0;
    let l = d.norm();
    let n = d / l;
    let f = |nodes: usize| -> f64 {
        let (a, b) = amp.radial_bounds();
        let h = (b - a) / nodes as f64;
        let q = |p: f64| amp.value(p, &n) * p;
        let mut num = 0.0;
        let mut den = 0.0;
        for (p, w) in trapezoid_nodes(a, b, nodes) {
            let qp = q(p);
            let dq = (q(p + 0.5 * h) - q(p - 0.5 * h)) / h;
            num += w * (l * qp.norm_sqr() + (qp.conj() * dq).im);
            den += w * p * qp.norm_sqr();
        }
        src.mass * num / den
    };
    let fine = f(nodes);
    OracleReport::new("mean_all_times", fine, (fine - f(nodes / 2)).abs(), &[("radial_nodes", nodes as f64)])
}

/// `P(E2/E1)` for a point detector at each target time, by a Simpson scan of
/// `|Ψ⁽ⁿᴰ⁾(x_D, t)|²` over the Parseval normalizer.
pub fn oracle_point_ratio(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    targets: &[f64],
    nodes: usize,
    step: f64,
) -> Result<Vec<OracleReport>> {
    let n = (x_d - src.x0).normalize();
    let s = (x_d - src.x0).norm();
    let norm = oracle_point_normalizer(amp, x_d, src, nodes);
    let density = |t: f64| component_sum(amp, &n, s, t - src.t0, src.mass, nodes).norm_sqr();
    let nums = simpson_scan(density, src.t0, targets, step)?;
    Ok(targets
        .iter()
        .zip(nums)
        .map(|(&t, (num, err))| {
            let ratio = num / norm.value;
            let e = err / norm.value + ratio * norm.error / norm.value;
            OracleReport::new("p_e2_given_e1", ratio, e, &[("radial_nodes", nodes as f64), ("time_step", step)]).at(t)
        })
        .collect())
}

/// Location of the largest `|Ψ⁽ⁿᴰ⁾(x_D, t)|²` on the scan `t_lo, t_lo + step, …, t_hi`.
/// The error is one scan step.
pub fn oracle_density_peak(
    amp: &MomentumAmplitude,
    x_d: &Vec3,
    src: &EmissionEvent,
    t_lo: f64,
    t_hi: f64,
    step: f64,
    nodes: usize,
) -> OracleReport {
    let n = (x_d - src.x0).normalize();
    let s = (x_d - src.x0).norm();
    let count = ((t_hi - t_lo) / step).round() as usize;
    let (best, _) = (0..=count)
        .map(|k| {
            let t = t_lo + step * k as f64;
            (t, component_sum(amp, &n, s, t - src.t0, src.mass, nodes).norm_sqr())
        })
        .fold((t_lo, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let mut r = OracleReport::new(
        "density_peak",
        best,
        step,
        &[("radial_nodes", nodes as f64), ("scan_lo", t_lo), ("scan_hi", t_hi), ("scan_step", step)],
    );
    r.at = Some(0.5 * (t_lo + t_hi));
    r
}

/// Brute-force occupation `∫_{V_D} |Ψ_D(x, t)|² d³x` at a single time.
pub fn oracle_occupation(
    amp: &MomentumAmplitude,
    det: &DetectorGeometry,
    src: &EmissionEvent,
    t: f64,
    res: &OracleResolution,
) -> OracleReport {
    let fine = DetectorSums::new(amp, det, src, res).occupation(t - src.t0);
    let coarse = DetectorSums::new(amp, det, src, &res.halved()).occupation(t - src.t0);
    OracleReport::new("occupation", fine, (fine - coarse).abs(), &res.describe()).at(t)
}
