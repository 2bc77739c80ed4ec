use std::path::Path;

use toa_cli::scenario::DetectorModel;
use toa_cli::{Model, Scenario};
use toa_core::arrival::mean_arrival_time_unchecked;
use toa_core::oracle::OracleReport;
use toa_core::probability::{detector_occupation, point_occupation, prob_e1, Occupation};
use toa_core::quadrature::GridSpec;
use toa_core::wavepacket::{eval_angular_component_with_error, AngularComponentRequest, PacketField};
use toa_core::{Complex64, Vec3};

/// Relative rounding allowance added to every comparison: `N ε` for plain
/// summation over the oracles' 1e5-node sums.
pub const ROUNDING: f64 = 1e-11;

/// Spacing of the main-path scan for density peaks.
pub const PEAK_STEP: f64 = 0.001;

#[derive(Debug, Clone)]
pub struct Comparison {
    pub quantity: String,
    pub at: Option<f64>,
    pub main: Complex64,
    pub oracle: Complex64,
    pub main_error: f64,
    pub oracle_error: f64,
}

impl Comparison {
    pub fn deviation(&self) -> f64 {
        (self.main - self.oracle).norm()
    }

    pub fn allowed(&self) -> f64 {
        self.main_error + self.oracle_error + ROUNDING * self.oracle.norm().max(self.main.norm())
    }

    pub fn passes(&self) -> bool {
        self.deviation() <= self.allowed()
    }
}

pub fn build(scenario: &str, base_dir: &Path) -> Model {
    Scenario::from_toml(scenario)
        .expect("scenario parses")
        .build(base_dir)
        .expect("scenario builds")
}

fn target(model: &Model) -> (Vec3, Vec3) {
    match &model.detector {
        DetectorModel::Volume(g) => (g.center(), g.axis()),
        DetectorModel::Point { x_d, .. } => (*x_d, (x_d - model.src.x0).normalize()),
    }
}

/// Main-path counterparts of each oracle report.
pub fn compare(model: &Model, reports: &[OracleReport]) -> Vec<Comparison> {
    let amp = &model.amplitude;
    let src = &model.src;
    let quad = &model.quadrature;
    let (x_d, n_d) = target(model);
    let mut occupation: Option<Occupation> = None;
    let mut occ = || -> Occupation {
        occupation
            .get_or_insert_with(|| match &model.detector {
                DetectorModel::Volume(det) => detector_occupation(amp, det, src, quad).expect("occupation"),
                DetectorModel::Point { x_d, .. } => point_occupation(amp, x_d, src, quad).expect("occupation"),
            })
            .clone()
    };
    let real = |v: f64| Complex64::new(v, 0.0);
    reports
        .iter()
        .map(|r| {
            let (main, main_error) = match r.quantity.as_str() {
                "angular_component" => {
                    let req = AngularComponentRequest {
                        direction: n_d,
                        x: x_d,
                        t: r.at.expect("evaluation time"),
                    };
                    eval_angular_component_with_error(amp, &req, src, quad).expect("component")
                }
                "p_e1" => {
                    let DetectorModel::Volume(det) = &model.detector else { panic!("p_e1 on a point detector") };
                    (real(prob_e1(amp, det, src, quad).expect("p_e1")), 0.0)
                }
                "denominator" | "normalizer" => {
                    let o = occ();
                    (real(o.result.value), o.result.error)
                }
                "p_e2_given_e1" => {
                    let o = occ();
                    let err = 2.0 * o.result.error / o.result.value;
                    (real(o.ratio(r.at.expect("target time"))), err)
                }
                "mean_arrival" => {
                    let stats = mean_arrival_time_unchecked(amp, &x_d, src, quad, &GridSpec {
                        samples: Some(1),
                        ..Default::default()
                    })
                    .expect("mean arrival");
                    (real(stats.mean_t), stats.mean_error)
                }
                "density_peak" => {
                    let lo = r.resolution["scan_lo"];
                    let hi = r.resolution["scan_hi"];
                    let field = PacketField::point(amp, &x_d, src, quad).expect("point field");
                    let count = ((hi - lo) / PEAK_STEP).round() as usize;
                    let (best, _) = (0..=count)
                        .map(|k| {
                            let t = lo + PEAK_STEP * k as f64;
                            (t, field.occupation(t).expect("density"))
                        })
                        .fold((lo, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                    (real(best), PEAK_STEP)
                }
                "classical_flight" => {
                    let p0 = amp.central_momentum().expect("central momentum");
                    (real(src.mass * model.distance() / p0), 0.0)
                }
                other => panic!("no main-path counterpart for {other}"),
            };
            Comparison {
                quantity: r.quantity.clone(),
                at: r.at,
                main,
                oracle: r.complex(),
                main_error,
                oracle_error: r.error,
            }
        })
        .collect()
}
