//! Source and detector placement.
//!
//! Two detector shapes are supported, both with closed-form solid angle and
//! volume: a ball of radius `R` anywhere in space, and a spherical shell
//! sector whose apex sits at the source. For both, the set of emission
//! directions that reach the detector is a circular cone around the detector
//! axis `n_D`, which keeps the angular integrals exact.

use std::f64::consts::PI;

use crate::{Error, Result, Vec3};

/// Tolerance on `|n| = 1` for direction arguments.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A particle emitted at `t0` from a point source at `x0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionEvent {
    pub x0: Vec3,
    pub t0: f64,
    pub mass: f64,
}

impl EmissionEvent {
    pub fn new(x0: Vec3, t0: f64, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::contract(format!("mass must be positive, got {mass}")));
        }
        if !t0.is_finite() || x0.iter().any(|c| !c.is_finite()) {
            return Err(Error::contract("emission event has non-finite coordinates"));
        }
        Ok(Self { x0, t0, mass })
    }

    /// Source at the origin, emitting at `t = 0`, unit mass.
    pub fn at_origin() -> Self {
        Self {
            x0: Vec3::zeros(),
            t0: 0.0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorShape {
    /// Solid ball.
    Sphere { center: Vec3, radius: f64 },
    /// Shell sector `{x0 + ρ u : r_in ≤ ρ ≤ r_out, ∠(u, axis) ≤ half_angle}`
    /// with its apex on the source.
    CapSector {
        axis: Vec3,
        half_angle: f64,
        r_in: f64,
        r_out: f64,
    },
}

/// A detector shape together with the quantities derived from its position
/// relative to the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGeometry {
    shape: DetectorShape,
    source: Vec3,
    center: Vec3,
    axis: Vec3,
    distance: f64,
    cone_half_angle: f64,
    solid_angle: f64,
    volume: f64,
}

impl DetectorGeometry {
    pub fn new(shape: DetectorShape, src: &EmissionEvent) -> Result<Self> {
        let solid_angle = solid_angle(&shape, src)?;
        let (center, axis, distance, cone_half_angle, volume) = match shape {
            DetectorShape::Sphere { center, radius } => {
                let d = center - src.x0;
                let l = d.norm();
                (center, d / l, l, (radius / l).asin(), 4.0 / 3.0 * PI * radius.powi(3))
            }
            DetectorShape::CapSector {
                axis,
                half_angle,
                r_in,
                r_out,
            } => {
                let axis = axis.normalize();
                let mid = 0.5 * (r_in + r_out);
                let volume = solid_angle * (r_out.powi(3) - r_in.powi(3)) / 3.0;
                (src.x0 + axis * mid, axis, mid, half_angle, volume)
            }
        };
        Ok(Self {
            shape,
            source: src.x0,
            center,
            axis,
            distance,
            cone_half_angle,
            solid_angle,
            volume,
        })
    }

    /// Ball of radius `radius` at distance `distance` from the source along `direction`.
    pub fn sphere_along(
        src: &EmissionEvent,
        direction: Vec3,
        distance: f64,
        radius: f64,
    ) -> Result<Self> {
        let n = direction
            .try_normalize(0.0)
            .ok_or_else(|| Error::geometry("detector direction is the zero vector"))?;
        Self::new(
            DetectorShape::Sphere {
                center: src.x0 + n * distance,
                radius,
            },
            src,
        )
    }

    pub fn shape(&self) -> &DetectorShape {
        &self.shape
    }

    /// Detector center `x_D`.
    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// Unit vector `n_D` from the source towards the detector.
    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// Source-to-center distance `L`.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Half-angle of the cone of directions that reach the detector.
    pub fn cone_half_angle(&self) -> f64 {
        self.cone_half_angle
    }

    /// `Ω_D` in steradians.
    pub fn solid_angle(&self) -> f64 {
        self.solid_angle
    }

    /// `V_D`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn source(&self) -> Vec3 {
        self.source
    }

    /// Whether `x` lies in the closed detector volume.
    pub fn contains(&self, x: &Vec3) -> bool {
        match self.shape {
            DetectorShape::Sphere { center, radius } => (x - center).norm() <= radius,
            DetectorShape::CapSector {
                half_angle,
                r_in,
                r_out,
                ..
            } => {
                let d = x - self.source;
                let rho = d.norm();
                rho >= r_in && rho <= r_out && d.dot(&self.axis) >= rho * half_angle.cos()
            }
        }
    }
}

/// Solid angle the detector subtends at the source.
///
/// For a ball this is the spherical-cap formula `2π(1 − √(1 − (R/L)²))`,
/// evaluated as `2π x / (1 + √(1 − x))` with `x = (R/L)²` to avoid
/// cancellation for distant detectors.
pub fn solid_angle(shape: &DetectorShape, src: &EmissionEvent) -> Result<f64> {
    match *shape {
        DetectorShape::Sphere { center, radius } => {
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::geometry(format!("sphere radius must be positive, got {radius}")));
            }
            let l = (center - src.x0).norm();
            if l <= radius {
                return Err(Error::geometry(format!(
                    "source lies inside the detector (L = {l}, R = {radius})"
                )));
            }
            let x = (radius / l).powi(2);
            Ok(2.0 * PI * x / (1.0 + (1.0 - x).sqrt()))
        }
        DetectorShape::CapSector {
            axis,
            half_angle,
            r_in,
            r_out,
        } => {
            if axis.norm() == 0.0 || axis.iter().any(|c| !c.is_finite()) {
                return Err(Error::geometry("cap-sector axis must be a nonzero vector"));
            }
            if !(half_angle > 0.0 && half_angle <= PI) {
                return Err(Error::geometry(format!(
                    "cap half-angle must lie in (0, π], got {half_angle}"
                )));
            }
            if !(r_in > 0.0) {
                return Err(Error::geometry(format!(
                    "source lies inside the detector (inner radius {r_in} must be positive)"
                )));
            }
            if !(r_out > r_in && r_out.is_finite()) {
                return Err(Error::geometry(format!(
                    "cap-sector outer radius {r_out} must exceed inner radius {r_in}"
                )));
            }
            // 2π(1 − cos θ) = 4π sin²(θ/2)
            Ok(4.0 * PI * (0.5 * half_angle).sin().powi(2))
        }
    }
}

/// Whether the half-line `{x0 + s n : s > 0}` meets the detector.
pub fn ray_hits_detector(src: &EmissionEvent, n: &Vec3, det: &DetectorGeometry) -> Result<bool> {
    check_unit(n)?;
    Ok(match *det.shape() {
        DetectorShape::Sphere { center, radius } => {
            let d = center - src.x0;
            let along = n.dot(&d);
            along > 0.0 && d.norm_squared() - along * along <= radius * radius
        }
        DetectorShape::CapSector { half_angle, .. } => n.dot(&det.axis()) >= half_angle.cos(),
    })
}

pub(crate) fn check_unit(n: &Vec3) -> Result<()> {
    let norm = n.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE || !norm.is_finite() {
        return Err(Error::contract(format!("direction must be a unit vector, |n| = {norm}")));
    }
    Ok(())
}

/// Two unit vectors completing `axis` to a right-handed orthonormal frame.
pub fn orthonormal_frame(axis: &Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    (e1, e2)
}
