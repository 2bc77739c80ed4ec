//! Numerical integration engine shared by the wave-packet, probability and
//! arrival modules.
//!
//! Everything here is built from fixed-order Gauss–Legendre panels. Error
//! estimates come from comparing a panel rule with the rule of half its order
//! (time integrals) or with half the panel width (radial integrals, see
//! [`crate::wavepacket`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{orthonormal_frame, DetectorGeometry, DetectorShape};
use crate::{Error, Result, Vec3};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    barycentric: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let barycentric = (0..n)
            .map(|j| {
                let prod: f64 = (0..n)
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        Self {
            nodes,
            weights,
            barycentric,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule with `panels` equal panels on `[a, b]`.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + h * i as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Value at `x ∈ [-1, 1]` of the polynomial interpolating `values` at the nodes.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((xj, lj), vj) in self.nodes.iter().zip(&self.barycentric).zip(values) {
            let d = x - xj;
            if d == 0.0 {
                return *vj;
            }
            let c = lj / d;
            num += c * vj;
            den += c;
        }
        num / den
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let nf = n as f64;
    let d = if n == 0 { 0.0 } else { nf * (x * p1 - p0) / (x * x - 1.0) };
    (p, d)
}

/// Discretization parameters for every integral in the pipeline.
///
/// Optional fields fall back to values derived from the scenario, see
/// [`TimeSettings::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss–Legendre order of each radial (momentum) panel.
    pub radial_nodes: usize,
    /// Minimum number of radial panels per support segment.
    pub radial_panels: usize,
    /// Lower bound on quadrature nodes per oscillation period of the radial integrand.
    pub nodes_per_period: f64,
    /// Optional hard cut on the radial momentum range.
    pub p_max: Option<f64>,
    /// Gauss–Legendre nodes in cos θ across the detector cone.
    pub polar_nodes: usize,
    /// Trapezoid nodes in azimuth across the detector cone.
    pub azimuth_nodes: usize,
    pub volume_radial_nodes: usize,
    pub volume_polar_nodes: usize,
    pub volume_azimuth_nodes: usize,
    /// Gauss–Legendre order of each time panel (even).
    pub time_nodes: usize,
    /// Width of a time panel.
    pub dt: f64,
    /// First window of the semi-infinite time integral; defaults to the classical flight time.
    pub initial_window: Option<f64>,
    /// Relative contribution below which a window counts as tail.
    pub eps_tail: f64,
    /// Largest integration time after `t0`; defaults to 50 classical flight times.
    pub t_cap: Option<f64>,
    /// Target relative tolerance.
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_nodes: 16,
            radial_panels: 4,
            nodes_per_period: 8.0,
            p_max: None,
            polar_nodes: 4,
            azimuth_nodes: 8,
            volume_radial_nodes: 6,
            volume_polar_nodes: 6,
            volume_azimuth_nodes: 6,
            time_nodes: 8,
            dt: 0.1,
            initial_window: None,
            eps_tail: 1e-6,
            t_cap: None,
            tolerance: 1e-6,
        }
    }
}

impl QuadratureSpec {
    /// Checks the invariants, naming the first offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let counts = [
            ("radial_panels", self.radial_panels),
            ("polar_nodes", self.polar_nodes),
            ("azimuth_nodes", self.azimuth_nodes),
            ("volume_radial_nodes", self.volume_radial_nodes),
            ("volume_polar_nodes", self.volume_polar_nodes),
            ("volume_azimuth_nodes", self.volume_azimuth_nodes),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err((name, "must be at least 1".into()));
            }
        }
        if self.radial_nodes < 4 {
            return Err(("radial_nodes", format!("must be at least 4, got {}", self.radial_nodes)));
        }
        if self.time_nodes < 4 || self.time_nodes % 2 != 0 {
            return Err(("time_nodes", format!("must be even and at least 4, got {}", self.time_nodes)));
        }
        let positive = [
            ("nodes_per_period", self.nodes_per_period),
            ("dt", self.dt),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err((name, format!("must be positive, got {v}")));
            }
        }
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            return Err(("eps_tail", format!("must lie in (0, 1), got {}", self.eps_tail)));
        }
        for (name, v) in [
            ("initial_window", self.initial_window),
            ("t_cap", self.t_cap),
            ("p_max", self.p_max),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err((name, format!("must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn checked(&self) -> Result<&Self> {
        self.validate()
            .map_err(|(field, msg)| Error::contract(format!("quadrature.{field} {msg}")))?;
        Ok(self)
    }

    /// Time-integration settings, using `flight_time` for unset defaults.
    pub fn time_settings(&self, flight_time: f64) -> TimeSettings {
        TimeSettings::resolve(self, flight_time)
    }
}

/// Fully resolved parameters of a semi-infinite time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSettings {
    pub dt: f64,
    pub nodes: usize,
    pub initial_window: f64,
    pub eps_tail: f64,
    pub t_cap: f64,
    pub tolerance: f64,
}

impl TimeSettings {
    pub fn resolve(spec: &QuadratureSpec, flight_time: f64) -> Self {
        Self {
            dt: spec.dt,
            nodes: spec.time_nodes,
            initial_window: spec.initial_window.unwrap_or(flight_time),
            eps_tail: spec.eps_tail,
            t_cap: spec.t_cap.unwrap_or(50.0 * flight_time),
            tolerance: spec.tolerance,
        }
    }
}

/// Outcome of an integral over `[t0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiInfiniteResult {
    pub value: f64,
    pub error: f64,
    /// End of the last integrated window, as an absolute time.
    pub t_max: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct TimePanel {
    a: f64,
    b: f64,
    hi: Vec<f64>,
    lo: Vec<f64>,
    integral: f64,
    nonnegative: bool,
}

/// Integrand samples of a completed semi-infinite time integral.
///
/// Keeps every panel so that partial integrals `∫_{t0}^{t}` and moments reuse
/// the nodes of the normalizer.
#[derive(Debug, Clone)]
pub struct TimeTable {
    t0: f64,
    hi: GaussLegendre,
    lo: GaussLegendre,
    panels: Vec<TimePanel>,
    prefix: Vec<f64>,
}

impl TimeTable {
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Last tabulated time.
    pub fn end(&self) -> f64 {
        self.panels.last().map_or(self.t0, |p| p.b)
    }

    pub fn total(&self) -> f64 {
        self.prefix.last().copied().unwrap_or(0.0)
    }

    /// `∫_{t0}^{t} f`, interpolating inside the panel containing `t`.
    ///
    /// For panels with nonnegative samples the partial value is kept inside
    /// `[0, panel integral]`. Times past the table end return the total.
    pub fn cumulative(&self, t: f64) -> f64 {
        if t <= self.t0 || self.panels.is_empty() {
            return 0.0;
        }
        if t >= self.end() {
            return self.total();
        }
        let idx = self.panels.partition_point(|p| p.b <= t);
        let panel = &self.panels[idx];
        let before = self.prefix[idx];
        if t <= panel.a {
            return before;
        }
        let mut partial = 0.0;
        let scale = 2.0 / (panel.b - panel.a);
        for (y, w) in self.hi.mapped(panel.a, t) {
            let x = (y - panel.a) * scale - 1.0;
            partial += w * self.hi.interpolate(&panel.hi, x);
        }
        if panel.nonnegative {
            partial = partial.clamp(0.0, panel.integral);
        }
        before + partial
    }

    /// `∫ g(t) f(t) dt` over the table with a high/low-order error estimate.
    pub fn moment<G: Fn(f64) -> f64>(&self, g: G) -> (f64, f64) {
        let mut value = 0.0;
        let mut error = 0.0;
        for p in &self.panels {
            let hi: f64 = self
                .hi
                .mapped(p.a, p.b)
                .zip(&p.hi)
                .map(|((t, w), f)| w * g(t) * f)
                .sum();
            let lo: f64 = self
                .lo
                .mapped(p.a, p.b)
                .zip(&p.lo)
                .map(|((t, w), f)| w * g(t) * f)
                .sum();
            value += hi;
            error += (hi - lo).abs();
        }
        (value, error)
    }

    /// Panel boundaries and node count, mainly for diagnostics.
    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }
}

/// `∫_{t0}^{∞} f(t) dt` for a nonnegative, eventually decaying `f`.
///
/// The integration range grows by doubling, starting from
/// `[t0, t0 + initial_window]`. Each window is covered with panels of width
/// `dt`. The integral is declared converged once two consecutive windows each
/// add less than `eps_tail` of the running total and the accumulated error
/// estimate is within tolerance. Reaching `t0 + t_cap` first gives
/// `converged = false`.
pub fn integrate_time_semiinfinite<F>(f: F, t0: f64, settings: &TimeSettings) -> Result<SemiInfiniteResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    tabulate_time_semiinfinite(f, t0, settings).map(|(r, _)| r)
}

/// As [`integrate_time_semiinfinite`], also returning the sampled integrand.
pub fn tabulate_time_semiinfinite<F>(
    mut f: F,
    t0: f64,
    settings: &TimeSettings,
) -> Result<(SemiInfiniteResult, TimeTable)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let TimeSettings {
        dt,
        nodes,
        initial_window,
        eps_tail,
        t_cap,
        tolerance,
    } = *settings;
    if !(dt > 0.0) || !(initial_window > 0.0) || !(t_cap > 0.0) || nodes < 2 || nodes % 2 != 0 {
        return Err(Error::contract(format!("invalid time-integration settings {settings:?}")));
    }
    let hi = GaussLegendre::new(nodes);
    let lo = GaussLegendre::new(nodes / 2);
    let first = (initial_window / dt).ceil().max(1.0) * dt;
    let cap = t_cap.max(dt);

    let mut panels: Vec<TimePanel> = Vec::new();
    let mut prefix = vec![0.0];
    let mut accumulated = 0.0;
    let mut quad_error = 0.0;
    let mut quiet = 0;
    let mut extent = 0.0;
    let mut last_contribution;
    let mut tail_ok = false;

    loop {
        let start = extent;
        let mut end = if panels.is_empty() { first } else { 2.0 * extent };
        let hit_cap = end >= cap;
        if hit_cap {
            end = cap;
        }
        let count = ((end - start) / dt - 1e-9).ceil().max(1.0) as usize;
        let width = (end - start) / count as f64;
        let mut contribution = 0.0;
        for i in 0..count {
            let a = t0 + start + width * i as f64;
            let b = if i + 1 == count { t0 + end } else { a + width };
            let mut hi_vals = Vec::with_capacity(hi.len());
            let mut sum_hi = 0.0;
            for (t, w) in hi.mapped(a, b) {
                let v = f(t)?;
                sum_hi += w * v;
                hi_vals.push(v);
            }
            let mut lo_vals = Vec::with_capacity(lo.len());
            let mut sum_lo = 0.0;
            for (t, w) in lo.mapped(a, b) {
                let v = f(t)?;
                sum_lo += w * v;
                lo_vals.push(v);
            }
            let nonnegative = hi_vals.iter().all(|v| *v >= 0.0);
            contribution += sum_hi;
            quad_error += (sum_hi - sum_lo).abs();
            prefix.push(prefix.last().unwrap() + sum_hi);
            panels.push(TimePanel {
                a,
                b,
                hi: hi_vals,
                lo: lo_vals,
                integral: sum_hi,
                nonnegative,
            });
        }
        accumulated += contribution;
        extent = end;
        last_contribution = contribution;
        if accumulated > 0.0 && contribution.abs() <= eps_tail * accumulated.abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= 2 {
            tail_ok = true;
            break;
        }
        if hit_cap {
            break;
        }
    }

    let error = quad_error + last_contribution.abs();
    let converged = tail_ok && error <= tolerance * accumulated.abs();
    let result = SemiInfiniteResult {
        value: accumulated,
        error,
        t_max: t0 + extent,
        converged,
    };
    let table = TimeTable {
        t0,
        hi,
        lo,
        panels,
        prefix,
    };
    Ok((result, table))
}

/// `∫_a^b f` with panels of width at most `dt` and a high/low-order error estimate.
pub fn integrate_interval<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, settings: &TimeSettings) -> (f64, f64) {
    let hi = GaussLegendre::new(settings.nodes);
    let lo = GaussLegendre::new(settings.nodes / 2);
    let count = ((b - a).abs() / settings.dt).ceil().max(1.0) as usize;
    let h = (b - a) / count as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for i in 0..count {
        let pa = a + h * i as f64;
        let pb = pa + h;
        let vh = hi.integrate(pa, pb, &mut f);
        let vl = lo.integrate(pa, pb, &mut f);
        value += vh;
        error += (vh - vl).abs();
    }
    (value, error)
}

/// Quadrature over the cone of directions within `half_angle` of `axis`.
///
/// Gauss–Legendre in `cos θ` times a trapezoid rule in azimuth; weights sum
/// to the cone's solid angle. With a single polar node the rule collapses to
/// one node on the axis carrying the whole solid angle.
pub fn cone_directions(axis: &Vec3, half_angle: f64, polar: usize, azimuth: usize) -> Vec<(Vec3, f64)> {
    let omega = 4.0 * PI * (0.5 * half_angle).sin().powi(2);
    if polar <= 1 {
        return vec![(*axis, omega)];
    }
    let (e1, e2) = orthonormal_frame(axis);
    let rule = GaussLegendre::new(polar);
    let u_lo = half_angle.cos();
    let dphi = 2.0 * PI / azimuth as f64;
    let mut out = Vec::with_capacity(polar * azimuth);
    for (u, wu) in rule.mapped(u_lo, 1.0) {
        let s = (1.0 - u * u).max(0.0).sqrt();
        for j in 0..azimuth {
            let phi = (j as f64 + 0.5) * dphi;
            let n = axis * u + (e1 * phi.cos() + e2 * phi.sin()) * s;
            out.push((n.normalize(), wu * dphi));
        }
    }
    out
}

/// Product-grid nodes covering the detector volume, in detector-local
/// spherical coordinates (around the center for a ball, around the source for
/// a cap sector).
pub fn volume_nodes(det: &DetectorGeometry, spec: &QuadratureSpec) -> Vec<(Vec3, f64)> {
    let radial = GaussLegendre::new(spec.volume_radial_nodes);
    let polar = GaussLegendre::new(spec.volume_polar_nodes);
    let naz = spec.volume_azimuth_nodes;
    let dphi = 2.0 * PI / naz as f64;
    let axis = det.axis();
    let (e1, e2) = orthonormal_frame(&axis);
    let (origin, r_lo, r_hi, u_lo) = match *det.shape() {
        DetectorShape::Sphere { center, radius } => (center, 0.0, radius, -1.0),
        DetectorShape::CapSector {
            half_angle,
            r_in,
            r_out,
            ..
        } => (det.source(), r_in, r_out, half_angle.cos()),
    };
    let mut out = Vec::with_capacity(radial.len() * polar.len() * naz);
    for (rho, wr) in radial.mapped(r_lo, r_hi) {
        for (u, wu) in polar.mapped(u_lo, 1.0) {
            let s = (1.0 - u * u).max(0.0).sqrt();
            for j in 0..naz {
                let phi = (j as f64 + 0.5) * dphi;
                let dir = axis * u + (e1 * phi.cos() + e2 * phi.sin()) * s;
                out.push((origin + dir * rho, wr * rho * rho * wu * dphi));
            }
        }
    }
    out
}

/// `∫_{V_D} g(x) d³x` on the product grid of [`volume_nodes`].
pub fn integrate_volume<G: FnMut(&Vec3) -> f64>(mut g: G, det: &DetectorGeometry, spec: &QuadratureSpec) -> f64 {
    volume_nodes(det, spec).iter().map(|(x, w)| w * g(x)).sum()
}

/// Derivative of samples on a uniform grid with spacing `dt`.
///
/// Central differences inside, second-order one-sided differences at the ends.
pub fn differentiate_sampled(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::contract(format!("differentiation needs at least 3 samples, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::contract(format!("grid spacing must be positive, got {dt}")));
    }
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dt);
    }
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    Ok(out)
}

/// Output sampling grid, uniform from `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Sample spacing; defaults to `quadrature.dt / 20`.
    pub dt: Option<f64>,
    /// Number of samples; overrides `t_end`.
    pub samples: Option<usize>,
    /// Last time to cover, absolute; defaults to the normalizer's `t_max`.
    pub t_end: Option<f64>,
}

impl GridSpec {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(("dt", format!("must be positive, got {dt}")));
            }
        }
        if self.samples == Some(0) {
            return Err(("samples", "must be at least 1".into()));
        }
        if let Some(t) = self.t_end {
            if !t.is_finite() {
                return Err(("t_end", "must be finite".into()));
            }
        }
        Ok(())
    }

    /// Sample times `t0 + i·dt`, covering `[t0, t_end]` or the requested count.
    pub fn times(&self, t0: f64, default_dt: f64, default_end: f64) -> Result<Vec<f64>> {
        self.validate()
            .map_err(|(field, msg)| Error::contract(format!("grid.{field} {msg}")))?;
        let dt = self.dt.unwrap_or(default_dt);
        let n = match self.samples {
            Some(n) => n,
            None => {
                let end = self.t_end.unwrap_or(default_end);
                if end < t0 {
                    return Err(Error::contract(format!("grid end {end} precedes t0 = {t0}")));
                }
                ((end - t0) / dt - 1e-9).ceil().max(0.0) as usize + 1
            }
        };
        Ok((0..n).map(|i| t0 + dt * i as f64).collect())
    }
}
