//! Scenario execution: entry curve, coupling schedule, detector evolution
//! and, for point detectors, arrival statistics.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toa_core::arrival::{mean_arrival_time_unchecked, sampled_mass, sampled_mean, ArrivalTimeStats};
use toa_core::detector::{coupling_schedule, evolve_ode_grid, CouplingSchedule, DetectorState};
use toa_core::probability::{build_entry_curve_unchecked, point_detector_curve_unchecked, EntryProbabilityCurve};
use toa_core::quadrature::SemiInfiniteResult;

use crate::error::CliError;
use crate::output::{self, SCHEMA_VERSION};
use crate::scenario::{DetectorModel, Model, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consistency {
    /// `max |sin² B_ode − k P_D|` over the grid.
    pub max_closure_residual: f64,
    /// Largest distance between the integrated and the closed-form state.
    pub max_state_distance: f64,
    /// `max ||a0|² + |a1|² − 1|` of the integrated state.
    pub max_unitarity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSummary {
    pub mean_t: f64,
    pub mean_error: f64,
    pub variance: f64,
    /// Mean recomputed from the emitted density samples.
    pub sampled_mean_t: f64,
    /// Trapezoid mass of the emitted density samples.
    pub density_mass: f64,
    pub normalizer: SemiInfiniteResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub detector: String,
    pub distance: f64,
    pub solid_angle: Option<f64>,
    pub volume: Option<f64>,
    pub k: f64,
    pub samples: usize,
    pub t_final: f64,
    pub p_e1: f64,
    pub p_e2_given_e1_final: f64,
    pub p_d_final: f64,
    pub p_reg_final: f64,
    pub denominator: SemiInfiniteResult,
    pub ratio_error: f64,
    pub max_entry_rate: f64,
    pub classical_t: Option<f64>,
    pub arrival: Option<ArrivalSummary>,
    pub consistency: Consistency,
    /// Whether every semi-infinite integral met its tail criterion and tolerance.
    pub converged: bool,
}

/// In-memory results of one run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: Summary,
    pub curve: EntryProbabilityCurve,
    pub schedule: CouplingSchedule,
    pub states: Vec<DetectorState>,
    pub arrival: Option<ArrivalTimeStats>,
    pub entry_rate: Vec<f64>,
}

impl RunArtifacts {
    pub fn entry_csv(&self) -> String {
        let c = &self.curve;
        output::csv(&["t", "P_E2_given_E1", "P_D"], &[&c.times, &c.p_e2_given_e1, &c.p_d])
    }

    pub fn schedule_csv(&self) -> String {
        let s = &self.schedule;
        output::csv(
            &["t", "A", "B", "P_reg", "dP_D_dt"],
            &[&s.times, &s.a, &s.b, &s.p_reg(), &self.entry_rate],
        )
    }

    pub fn arrival_csv(&self) -> Option<String> {
        self.arrival
            .as_ref()
            .map(|a| output::csv(&["t", "density"], &[&a.times, &a.density]))
    }

    pub fn summary_json(&self) -> String {
        output::json(&self.summary)
    }

    /// Files written by [`write_to`](Self::write_to), as `(name, contents)`.
    pub fn files(&self) -> Vec<(&'static str, String)> {
        let mut files = vec![
            ("entry.csv", self.entry_csv()),
            ("schedule.csv", self.schedule_csv()),
        ];
        if let Some(a) = self.arrival_csv() {
            files.push(("arrival.csv", a));
        }
        files.push(("summary.json", self.summary_json()));
        files
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, body) in self.files() {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

/// Runs a scenario; table paths resolve against `base_dir`.
///
/// Non-converged integrals do not fail the run; they are flagged in the
/// summary.
pub fn run_scenario(scenario: &Scenario, base_dir: &Path) -> Result<RunArtifacts, CliError> {
    let model = scenario.build(base_dir)?;
    run_model(&model)
}

pub fn run_model(model: &Model) -> Result<RunArtifacts, CliError> {
    let amp = &model.amplitude;
    let (curve, arrival) = match &model.detector {
        DetectorModel::Volume(det) => (
            build_entry_curve_unchecked(amp, det, &model.src, &model.quadrature, &model.grid)?,
            None,
        ),
        DetectorModel::Point {
            x_d,
            reference_solid_angle,
        } => {
            let curve = point_detector_curve_unchecked(
                amp,
                x_d,
                &model.src,
                &model.quadrature,
                &model.grid,
                *reference_solid_angle,
            )?;
            let stats = mean_arrival_time_unchecked(amp, x_d, &model.src, &model.quadrature, &model.grid)?;
            (curve, Some(stats))
        }
    };
    let schedule = coupling_schedule(&curve, model.k)?;
    let states = evolve_ode_grid(&schedule)?;
    let entry_rate = schedule.entry_rate()?;

    let mut consistency = Consistency {
        max_closure_residual: 0.0,
        max_state_distance: 0.0,
        max_unitarity_residual: 0.0,
    };
    for ((state, b), p_d) in states.iter().zip(&schedule.b).zip(&schedule.p_d) {
        let closed = DetectorState::after_rotation(*b);
        consistency.max_closure_residual = consistency
            .max_closure_residual
            .max((state.p_detected() - model.k * p_d).abs());
        consistency.max_state_distance = consistency.max_state_distance.max(state.distance(&closed));
        consistency.max_unitarity_residual = consistency.max_unitarity_residual.max((state.norm_sqr() - 1.0).abs());
    }

    let arrival_summary = match &arrival {
        Some(a) => Some(ArrivalSummary {
            mean_t: a.mean_t,
            mean_error: a.mean_error,
            variance: a.variance,
            sampled_mean_t: sampled_mean(model.src.t0, &a.times, &a.density)?,
            density_mass: sampled_mass(&a.times, &a.density),
            normalizer: a.normalizer,
        }),
        None => None,
    };
    let converged = curve.denominator.converged && arrival.as_ref().map_or(true, |a| a.normalizer.converged);
    let (solid_angle, volume) = match &model.detector {
        DetectorModel::Volume(g) => (Some(g.solid_angle()), Some(g.volume())),
        DetectorModel::Point {
            reference_solid_angle, ..
        } => (*reference_solid_angle, None),
    };
    let last = curve.times.len() - 1;
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        detector: model.detector.kind().into(),
        distance: model.distance(),
        solid_angle,
        volume,
        k: model.k,
        samples: curve.times.len(),
        t_final: curve.times[last],
        p_e1: curve.p_e1,
        p_e2_given_e1_final: curve.p_e2_given_e1[last],
        p_d_final: curve.p_d[last],
        p_reg_final: schedule.b[last].sin().powi(2),
        denominator: curve.denominator,
        ratio_error: curve.ratio_error,
        max_entry_rate: entry_rate.iter().fold(0.0, |m, r| m.max(*r)),
        classical_t: amp
            .central_momentum()
            .map(|p0| model.src.mass * model.distance() / p0),
        arrival: arrival_summary,
        consistency,
        converged,
    };
    Ok(RunArtifacts {
        summary,
        curve,
        schedule,
        states,
        arrival,
        entry_rate,
    })
}
