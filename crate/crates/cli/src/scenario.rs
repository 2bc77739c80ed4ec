//! Scenario files.
//!
//! A scenario is a TOML document with one block per pipeline stage. Only the
//! amplitude and detector blocks are required; everything else has defaults.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toa_core::geometry::{DetectorGeometry, DetectorShape, EmissionEvent};
use toa_core::quadrature::{GridSpec, QuadratureSpec};
use toa_core::wavepacket::{AngularProfile, GaussianLobe, MomentumAmplitude, RadialProfile, Table};
use toa_core::{Complex64, Vec3};

use crate::error::CliError;

/// Comment written at the top of every emitted scenario.
pub const UNITS_HEADER: &str = "\
# Units: hbar = 1, kinetic energy p^2 / 2m. Momenta, lengths and times are in
# mutually reciprocal natural units; angles are in radians.
";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub emission: EmissionBlock,
    pub amplitude: AmplitudeBlock,
    pub detector: DetectorBlock,
    #[serde(default)]
    pub coupling: CouplingBlock,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionBlock {
    pub x0: [f64; 3],
    pub t0: f64,
    pub mass: f64,
}

impl Default for EmissionBlock {
    fn default() -> Self {
        Self {
            x0: [0.0; 3],
            t0: 0.0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeBlock {
    IsotropicGaussian {
        p0: f64,
        sigma_p: f64,
    },
    Separable {
        lobes: Vec<LobeBlock>,
        #[serde(default)]
        angular: AngularBlock,
    },
    /// Radial samples from a file, `p re [im]` per line.
    Tabulated {
        radial_file: String,
        #[serde(default)]
        angular: AngularBlock,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LobeBlock {
    pub p0: f64,
    pub sigma_p: f64,
    /// Complex weight as `[re, im]`.
    #[serde(default = "unit_weight")]
    pub weight: [f64; 2],
}

fn unit_weight() -> [f64; 2] {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularBlock {
    #[default]
    Isotropic,
    Gaussian {
        axis: [f64; 3],
        sigma: f64,
    },
    /// Samples over `cos α` from a file, `cos_alpha re [im]` per line.
    Tabulated {
        axis: [f64; 3],
        file: String,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorBlock {
    pub sphere: Option<SphereBlock>,
    pub cap_sector: Option<CapSectorBlock>,
    pub point: Option<PointBlock>,
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereBlock {
    pub distance: f64,
    #[serde(default = "z_axis")]
    pub direction: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapSectorBlock {
    #[serde(default = "z_axis")]
    pub axis: [f64; 3],
    pub half_angle: f64,
    pub r_in: f64,
    pub r_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointBlock {
    pub distance: f64,
    #[serde(default = "z_axis")]
    pub direction: [f64; 3],
    /// Solid angle used for `P(E1)`; without it the curve is the pure conditional.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_solid_angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingBlock {
    pub k: f64,
}

impl Default for CouplingBlock {
    fn default() -> Self {
        Self { k: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Output directory, relative to the working directory.
    pub dir: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: "toa-out".into() }
    }
}

/// A failed check, naming the offending field by its dotted path.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError {
        field: field.into(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), ValidationError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn finite3(field: &str, v: &[f64; 3]) -> Result<(), ValidationError> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn nonzero3(field: &str, v: &[f64; 3]) -> Result<(), ValidationError> {
    finite3(field, v)?;
    if v.iter().all(|c| *c == 0.0) {
        Err(invalid(field, "must be a nonzero vector"))
    } else {
        Ok(())
    }
}

/// The kind of detector a scenario places.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorModel {
    Volume(DetectorGeometry),
    Point { x_d: Vec3, reference_solid_angle: Option<f64> },
}

impl DetectorModel {
    pub fn kind(&self) -> &'static str {
        match self {
            DetectorModel::Volume(g) => match g.shape() {
                DetectorShape::Sphere { .. } => "sphere",
                DetectorShape::CapSector { .. } => "cap_sector",
            },
            DetectorModel::Point { .. } => "point",
        }
    }
}

/// Core objects built from a validated scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub src: EmissionEvent,
    pub amplitude: MomentumAmplitude,
    pub detector: DetectorModel,
    pub k: f64,
    pub quadrature: QuadratureSpec,
    pub grid: GridSpec,
}

impl Model {
    /// Source-to-detector distance.
    pub fn distance(&self) -> f64 {
        match &self.detector {
            DetectorModel::Volume(g) => g.distance(),
            DetectorModel::Point { x_d, .. } => (x_d - self.src.x0).norm(),
        }
    }
}

impl Scenario {
    /// Parses and validates a scenario file.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let s: Self = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim_end().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        let body = toml::to_string(self).expect("scenario serializes to TOML");
        format!("{UNITS_HEADER}\n{body}")
    }

    /// Reads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let s = Self::from_toml(&text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let e = &self.emission;
        finite3("emission.x0", &e.x0)?;
        if !e.t0.is_finite() {
            return Err(invalid("emission.t0", "must be finite"));
        }
        positive("emission.mass", e.mass)?;

        match &self.amplitude {
            AmplitudeBlock::IsotropicGaussian { p0, sigma_p } => {
                positive("amplitude.p0", *p0)?;
                positive("amplitude.sigma_p", *sigma_p)?;
            }
            AmplitudeBlock::Separable { lobes, angular } => {
                if lobes.is_empty() {
                    return Err(invalid("amplitude.lobes", "needs at least one lobe"));
                }
                for (i, l) in lobes.iter().enumerate() {
                    positive(&format!("amplitude.lobes[{i}].p0"), l.p0)?;
                    positive(&format!("amplitude.lobes[{i}].sigma_p"), l.sigma_p)?;
                    if !l.weight.iter().all(|w| w.is_finite()) {
                        return Err(invalid(format!("amplitude.lobes[{i}].weight"), "must be finite"));
                    }
                }
                validate_angular(angular)?;
            }
            AmplitudeBlock::Tabulated { radial_file, angular } => {
                if radial_file.trim().is_empty() {
                    return Err(invalid("amplitude.radial_file", "must name a file"));
                }
                validate_angular(angular)?;
            }
        }

        let d = &self.detector;
        let given: Vec<&str> = [
            ("sphere", d.sphere.is_some()),
            ("cap_sector", d.cap_sector.is_some()),
            ("point", d.point.is_some()),
        ]
        .iter()
        .filter(|(_, present)| *present)
        .map(|(name, _)| *name)
        .collect();
        if given.len() != 1 {
            let found = if given.is_empty() {
                "none".to_string()
            } else {
                given.join(" and ")
            };
            return Err(invalid(
                "detector",
                format!("exactly one of sphere, cap_sector or point must be given (found {found})"),
            ));
        }
        if let Some(s) = &d.sphere {
            positive("detector.sphere.radius", s.radius)?;
            positive("detector.sphere.distance", s.distance)?;
            nonzero3("detector.sphere.direction", &s.direction)?;
            if s.distance <= s.radius {
                return Err(invalid(
                    "detector.sphere.distance",
                    format!("source lies inside the detector (distance {} <= radius {})", s.distance, s.radius),
                ));
            }
        }
        if let Some(c) = &d.cap_sector {
            nonzero3("detector.cap_sector.axis", &c.axis)?;
            if !(c.half_angle > 0.0 && c.half_angle <= PI) {
                return Err(invalid("detector.cap_sector.half_angle", format!("must lie in (0, pi], got {}", c.half_angle)));
            }
            positive("detector.cap_sector.r_in", c.r_in)?;
            if !(c.r_out > c.r_in && c.r_out.is_finite()) {
                return Err(invalid("detector.cap_sector.r_out", format!("must exceed r_in = {}", c.r_in)));
            }
        }
        if let Some(p) = &d.point {
            positive("detector.point.distance", p.distance)?;
            nonzero3("detector.point.direction", &p.direction)?;
            if let Some(o) = p.reference_solid_angle {
                if !(o > 0.0 && o <= 4.0 * PI) {
                    return Err(invalid("detector.point.reference_solid_angle", format!("must lie in (0, 4 pi], got {o}")));
                }
            }
        }

        let k = self.coupling.k;
        if !(k > 0.0 && k < 1.0) {
            return Err(invalid("coupling.k", format!("must lie in (0, 1), got {k}")));
        }
        self.quadrature
            .validate()
            .map_err(|(f, m)| invalid(format!("quadrature.{f}"), m))?;
        self.grid.validate().map_err(|(f, m)| invalid(format!("grid.{f}"), m))?;
        if let Some(n) = self.grid.samples {
            if n < 3 {
                return Err(invalid("grid.samples", "the coupling derivative needs at least 3 samples"));
            }
        }
        if self.output.dir.trim().is_empty() {
            return Err(invalid("output.dir", "must not be empty"));
        }
        Ok(())
    }

    /// Core objects; relative table paths are resolved against `base_dir`.
    pub fn build(&self, base_dir: &Path) -> Result<Model, CliError> {
        self.validate()?;
        let e = &self.emission;
        let src = EmissionEvent::new(Vec3::from(e.x0), e.t0, e.mass).map_err(|err| CliError::field("emission", err))?;

        let amplitude = match &self.amplitude {
            AmplitudeBlock::IsotropicGaussian { p0, sigma_p } => MomentumAmplitude::isotropic_gaussian(*p0, *sigma_p),
            AmplitudeBlock::Separable { lobes, angular } => {
                let lobes = lobes
                    .iter()
                    .map(|l| GaussianLobe::weighted(l.p0, l.sigma_p, Complex64::new(l.weight[0], l.weight[1])))
                    .collect();
                let angular = angular_profile(angular, base_dir)?;
                MomentumAmplitude::separable(RadialProfile::Lobes(lobes), angular).and_then(|a| a.normalize())
            }
            AmplitudeBlock::Tabulated { radial_file, angular } => {
                let table = read_table(&resolve(base_dir, radial_file), "amplitude.radial_file")?;
                let angular = angular_profile(angular, base_dir)?;
                MomentumAmplitude::separable(RadialProfile::Tabulated(table), angular).and_then(|a| a.normalize())
            }
        }
        .map_err(|err| CliError::field("amplitude", err))?;

        let d = &self.detector;
        let detector = if let Some(s) = &d.sphere {
            DetectorModel::Volume(
                DetectorGeometry::sphere_along(&src, Vec3::from(s.direction), s.distance, s.radius)
                    .map_err(|err| CliError::field("detector.sphere", err))?,
            )
        } else if let Some(c) = &d.cap_sector {
            let shape = DetectorShape::CapSector {
                axis: Vec3::from(c.axis),
                half_angle: c.half_angle,
                r_in: c.r_in,
                r_out: c.r_out,
            };
            DetectorModel::Volume(DetectorGeometry::new(shape, &src).map_err(|err| CliError::field("detector.cap_sector", err))?)
        } else {
            let p = d.point.as_ref().expect("validated detector block");
            let dir = Vec3::from(p.direction).normalize();
            DetectorModel::Point {
                x_d: src.x0 + dir * p.distance,
                reference_solid_angle: p.reference_solid_angle,
            }
        };

        Ok(Model {
            src,
            amplitude,
            detector,
            k: self.coupling.k,
            quadrature: self.quadrature.clone(),
            grid: self.grid,
        })
    }
}

fn validate_angular(a: &AngularBlock) -> Result<(), ValidationError> {
    match a {
        AngularBlock::Isotropic => Ok(()),
        AngularBlock::Gaussian { axis, sigma } => {
            nonzero3("amplitude.angular.axis", axis)?;
            positive("amplitude.angular.sigma", *sigma)
        }
        AngularBlock::Tabulated { axis, file } => {
            nonzero3("amplitude.angular.axis", axis)?;
            if file.trim().is_empty() {
                return Err(invalid("amplitude.angular.file", "must name a file"));
            }
            Ok(())
        }
    }
}

fn angular_profile(a: &AngularBlock, base_dir: &Path) -> Result<AngularProfile, CliError> {
    Ok(match a {
        AngularBlock::Isotropic => AngularProfile::Isotropic,
        AngularBlock::Gaussian { axis, sigma } => AngularProfile::Gaussian {
            axis: Vec3::from(*axis),
            sigma: *sigma,
        },
        AngularBlock::Tabulated { axis, file } => AngularProfile::Tabulated {
            axis: Vec3::from(*axis),
            table: read_table(&resolve(base_dir, file), "amplitude.angular.file")?,
        },
    })
}

fn resolve(base_dir: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Parses `grid re [im]` lines separated by whitespace or commas; `#` starts a comment.
pub fn parse_table(text: &str) -> Result<Table, String> {
    let mut grid = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let (g, v) = match nums.as_slice() {
            [g, re] => (*g, Complex64::new(*re, 0.0)),
            [g, re, im] => (*g, Complex64::new(*re, *im)),
            _ => return Err(format!("line {}: expected 2 or 3 numbers, got {}", lineno + 1, nums.len())),
        };
        grid.push(g);
        values.push(v);
    }
    Table::new(grid, values).map_err(|e| e.to_string())
}

fn read_table(path: &Path, field: &str) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_table(&text).map_err(|m| CliError::Validation(invalid(field, format!("{}: {m}", path.display()))))
}
