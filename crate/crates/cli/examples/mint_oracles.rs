//! Regenerates `tests/fixtures/*.json` from the brute-force oracles.
//!
//! ```text
//! cargo run --release -p toa-cli --example mint_oracles [name ...]
//! ```
//!
//! Slow by design; takes a few minutes for the full set.

#[path = "../tests/common/fixture.rs"]
mod fixture;

use std::f64::consts::PI;
use std::time::Instant;

use fixture::{fixtures_dir, Fixture};
use toa_cli::scenario::DetectorModel;
use toa_cli::Scenario;
use toa_core::oracle::{
    oracle_angular_component, oracle_classical_flight, oracle_density_peak, oracle_entry_ratio, oracle_mean_arrival,
    oracle_point_normalizer, oracle_point_ratio, oracle_prob_e1, OracleReport, OracleResolution,
};
use toa_core::wavepacket::MomentumAmplitude;

const COMPONENT_NODES: usize = 200_000;

enum Request {
    Component(f64),
    ProbE1,
    Ratio(&'static [f64]),
    PointRatio(&'static [f64]),
    MeanArrival,
    Peak(f64, f64),
    Flight,
}

struct Spec {
    name: &'static str,
    description: &'static str,
    scenario: String,
    requests: Vec<Request>,
}

fn iso(p0: f64, sigma: f64) -> String {
    format!("[amplitude]\nkind = \"isotropic_gaussian\"\np0 = {p0:?}\nsigma_p = {sigma:?}\n")
}

fn sphere(distance: f64, radius: f64, direction: [f64; 3]) -> String {
    format!("[detector.sphere]\ndistance = {distance:?}\nradius = {radius:?}\ndirection = {direction:?}\n")
}

fn point(distance: f64) -> String {
    format!("[detector.point]\ndistance = {distance:?}\n")
}

fn specs() -> Vec<Spec> {
    use Request::*;
    let z = [0.0, 0.0, 1.0];
    vec![
        Spec {
            name: "isotropic_sphere",
            description: "isotropic gaussian p0 = 5, sigma_p = 0.5; ball R = 0.5 at L = 20",
            scenario: iso(5.0, 0.5) + &sphere(20.0, 0.5, z),
            requests: vec![Component(4.0), ProbE1, Ratio(&[3.6, 4.0, 4.4]), Flight],
        },
        Spec {
            name: "isotropic_cap_sector",
            description: "isotropic gaussian p0 = 5, sigma_p = 0.5; cap sector 0.05 rad, 19.5 < r < 20.5",
            scenario: iso(5.0, 0.5)
                + "[detector.cap_sector]\naxis = [0.0, 1.0, 0.0]\nhalf_angle = 0.05\nr_in = 19.5\nr_out = 20.5\n",
            requests: vec![Component(3.0), ProbE1, Ratio(&[3.6, 4.0, 4.4])],
        },
        Spec {
            name: "separable_concentrated_cap",
            description: "gaussian radial p0 = 5, sigma_p = 0.5 with angular spread 0.015 rad on the axis; cap sector 0.05 rad",
            scenario: "[amplitude]\nkind = \"separable\"\n[[amplitude.lobes]]\np0 = 5.0\nsigma_p = 0.5\n\
                       [amplitude.angular]\nkind = \"gaussian\"\naxis = [0.0, 0.0, 1.0]\nsigma = 0.015\n"
                .to_string()
                + "[detector.cap_sector]\nhalf_angle = 0.05\nr_in = 19.5\nr_out = 20.5\n",
            requests: vec![Component(4.0), ProbE1, Ratio(&[3.6, 4.0, 4.4])],
        },
        Spec {
            name: "separable_tilted_sphere",
            description: "angular spread 0.03 rad about an axis 0.02 rad off the detector axis; ball R = 0.5 at L = 20",
            scenario: format!(
                "[amplitude]\nkind = \"separable\"\n[[amplitude.lobes]]\np0 = 5.0\nsigma_p = 0.5\n\
                 [amplitude.angular]\nkind = \"gaussian\"\naxis = [{:?}, 0.0, {:?}]\nsigma = 0.03\n",
                0.02f64.sin(),
                0.02f64.cos()
            ) + &sphere(20.0, 0.5, z),
            requests: vec![Component(4.0), ProbE1, Ratio(&[3.6, 4.0, 4.4])],
        },
        Spec {
            name: "bimodal_point",
            description: "two radial lobes at p0 = 3 and 6 (sigma_p = 0.1); point detector at L = 100",
            scenario: "[amplitude]\nkind = \"separable\"\n\
                       [[amplitude.lobes]]\np0 = 3.0\nsigma_p = 0.1\n\
                       [[amplitude.lobes]]\np0 = 6.0\nsigma_p = 0.1\n"
                .to_string()
                + &point(100.0),
            requests: vec![
                Component(20.0),
                PointRatio(&[16.0, 24.0, 32.0, 40.0]),
                MeanArrival,
                Peak(12.0, 22.0),
                Peak(28.0, 40.0),
            ],
        },
        Spec {
            name: "bimodal_sphere",
            description: "two radial lobes at p0 = 3 and 6 (sigma_p = 0.2); ball R = 0.5 at L = 20",
            scenario: "[amplitude]\nkind = \"separable\"\n\
                       [[amplitude.lobes]]\np0 = 3.0\nsigma_p = 0.2\n\
                       [[amplitude.lobes]]\np0 = 6.0\nsigma_p = 0.2\nweight = [0.5, 0.5]\n"
                .to_string()
                + &sphere(20.0, 0.5, z),
            requests: vec![Component(5.0), ProbE1, Ratio(&[4.0, 6.0, 8.0])],
        },
        Spec {
            name: "tabulated_point",
            description: "tabulated complex radial bump on 4 < p < 6; point detector at L = 50",
            scenario: "[amplitude]\nkind = \"tabulated\"\nradial_file = \"tables/radial_bump.txt\"\n".to_string()
                + &point(50.0),
            requests: vec![Component(10.0), PointRatio(&[9.6, 10.0, 10.4]), MeanArrival],
        },
        Spec {
            name: "narrow_point_l100",
            description: "narrow isotropic gaussian p0 = 5, sigma_p = 0.05; point detector at L = 100",
            scenario: iso(5.0, 0.05) + &point(100.0),
            requests: vec![Component(20.0), PointRatio(&[19.2, 20.0, 20.8]), MeanArrival, Peak(18.0, 22.0), Flight],
        },
        Spec {
            name: "narrow_point_l50",
            description: "narrow isotropic gaussian p0 = 5, sigma_p = 0.05; point detector at L = 50",
            scenario: iso(5.0, 0.05) + &point(50.0),
            requests: vec![MeanArrival, Flight],
        },
        Spec {
            name: "narrow_point_l200",
            description: "narrow isotropic gaussian p0 = 5, sigma_p = 0.05; point detector at L = 200",
            scenario: iso(5.0, 0.05) + &point(200.0),
            requests: vec![MeanArrival, Flight],
        },
        Spec {
            name: "heavy_point",
            description: "mass 2, isotropic gaussian p0 = 5, sigma_p = 0.1; point detector at L = 50",
            scenario: "[emission]\nmass = 2.0\n".to_string() + &iso(5.0, 0.1) + &point(50.0),
            requests: vec![Component(20.0), MeanArrival, Flight],
        },
        Spec {
            name: "tabulated_angular_sphere",
            description: "gaussian radial p0 = 5, sigma_p = 0.5 with a tabulated angular weight; ball R = 0.5 at L = 20",
            scenario: "[amplitude]\nkind = \"separable\"\n[[amplitude.lobes]]\np0 = 5.0\nsigma_p = 0.5\n\
                       [amplitude.angular]\nkind = \"tabulated\"\naxis = [0.0, 0.0, 1.0]\nfile = \"tables/angular_ramp.txt\"\n"
                .to_string()
                + &sphere(20.0, 0.5, z),
            requests: vec![Component(4.0), ProbE1, Ratio(&[3.6, 4.0, 4.4])],
        },
        Spec {
            name: "displaced_source",
            description: "isotropic gaussian p0 = 4, sigma_p = 0.4 emitted at x0 = (1, 2, 3), t0 = 1.5; ball R = 0.4 at L = 15",
            scenario: "[emission]\nx0 = [1.0, 2.0, 3.0]\nt0 = 1.5\n".to_string()
                + &iso(4.0, 0.4)
                + &sphere(15.0, 0.4, [1.0, 1.0, 0.0]),
            requests: vec![Component(5.25), ProbE1, Ratio(&[4.86, 5.26, 5.66]), Flight],
        },
    ]
}

fn write_tables() {
    let dir = fixtures_dir().join("tables");
    std::fs::create_dir_all(&dir).unwrap();
    let mut radial = String::from("# p, re, im: (1 - u^2)^3 e^{0.3 i u}, u = p - 5\n");
    for i in 0..=2000 {
        let p = 4.0 + 0.001 * i as f64;
        let u = p - 5.0;
        let a = (1.0 - u * u).max(0.0).powi(3);
        radial.push_str(&format!("{p:.3}, {:.17e}, {:.17e}\n", a * (0.3 * u).cos(), a * (0.3 * u).sin()));
    }
    std::fs::write(dir.join("radial_bump.txt"), radial).unwrap();
    let mut angular = String::from("# cos(alpha) weight\n");
    for i in 0..=40 {
        let c = -1.0 + 0.05 * i as f64;
        angular.push_str(&format!("{c:.2} {:.17e}\n", 0.25 + 0.75 * c * c));
    }
    std::fs::write(dir.join("angular_ramp.txt"), angular).unwrap();
}

/// Radial trapezoid intervals for time scans up to `tau_max`.
fn momentum_nodes(amp: &MomentumAmplitude, s_max: f64, tau_max: f64, mass: f64) -> usize {
    let (a, b) = amp.radial_bounds();
    let rate = [s_max - a * tau_max / mass, s_max - b * tau_max / mass, s_max]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    let periods = rate * (b - a) / (2.0 * PI);
    ((32.0 * periods) as usize).max(2048).next_power_of_two()
}

fn mint(spec: &Spec) -> Fixture {
    let dir = fixtures_dir();
    let scenario = Scenario::from_toml(&spec.scenario).expect("fixture scenario parses");
    let model = scenario.build(&dir).expect("fixture scenario builds");
    let amp = &model.amplitude;
    let src = model.src;
    let (x_d, n_d) = match &model.detector {
        DetectorModel::Volume(g) => (g.center(), g.axis()),
        DetectorModel::Point { x_d, .. } => (*x_d, (x_d - src.x0).normalize()),
    };
    let distance = model.distance();
    let mut reports: Vec<OracleReport> = Vec::new();
    for req in &spec.requests {
        match req {
            Request::Component(t) => {
                reports.push(oracle_angular_component(amp, &n_d, &x_d, *t, &src, COMPONENT_NODES).unwrap());
            }
            Request::ProbE1 => {
                let DetectorModel::Volume(det) = &model.detector else { panic!("P(E1) needs a volume") };
                reports.push(oracle_prob_e1(amp, det, 2000, 256, COMPONENT_NODES));
            }
            Request::Ratio(targets) => {
                let DetectorModel::Volume(det) = &model.detector else { panic!("ratio needs a volume") };
                let tau_max = targets.iter().fold(0.0f64, |m, t| m.max(t - src.t0));
                let res = OracleResolution {
                    volume: [8, 8, 8],
                    cone: [4, 8],
                    momentum: momentum_nodes(amp, distance + 2.0, tau_max, src.mass),
                    time_step: 0.01,
                };
                reports.extend(oracle_entry_ratio(amp, det, &src, targets, &res).unwrap());
            }
            Request::PointRatio(targets) => {
                reports.push(oracle_point_normalizer(amp, &x_d, &src, COMPONENT_NODES));
                reports.extend(oracle_point_ratio(amp, &x_d, &src, targets, COMPONENT_NODES / 2, 0.01).unwrap());
            }
            Request::MeanArrival => {
                reports.push(oracle_mean_arrival(amp, &x_d, &src, COMPONENT_NODES));
                if !reports.iter().any(|r| r.quantity == "normalizer") {
                    reports.push(oracle_point_normalizer(amp, &x_d, &src, COMPONENT_NODES));
                }
            }
            Request::Peak(lo, hi) => {
                reports.push(oracle_density_peak(amp, &x_d, &src, src.t0 + lo, src.t0 + hi, 0.005, COMPONENT_NODES / 2));
            }
            Request::Flight => {
                let t = oracle_classical_flight(amp, distance, src.mass).unwrap();
                let mut r = OracleReport {
                    quantity: "classical_flight".into(),
                    value: t,
                    imag: 0.0,
                    at: None,
                    resolution: Default::default(),
                    error: 0.0,
                };
                r.resolution.insert("exact".into(), 1.0);
                reports.push(r);
            }
        }
    }
    Fixture {
        name: spec.name.into(),
        description: spec.description.into(),
        scenario: spec.scenario.clone(),
        reports,
    }
}

fn main() {
    let only: Vec<String> = std::env::args().skip(1).collect();
    write_tables();
    for spec in specs() {
        if !only.is_empty() && !only.iter().any(|n| n == spec.name) {
            continue;
        }
        let start = Instant::now();
        let f = mint(&spec);
        let path = fixtures_dir().join(format!("{}.json", spec.name));
        std::fs::write(&path, serde_json::to_string_pretty(&f).unwrap() + "\n").unwrap();
        println!("{:<28} {:>3} reports in {:.1?}", spec.name, f.reports.len(), start.elapsed());
        for r in &f.reports {
            println!("    {:<18} at {:<8} {:>24.16e} {:+.3e}i  ± {:.2e}", r.quantity, r.at.map(|t| t.to_string()).unwrap_or_default(), r.value, r.imag, r.error);
        }
    }
}
