//! Parameter sweeps over a scenario template.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{self, SCHEMA_VERSION};
use crate::pipeline::{run_scenario, Summary};
use crate::scenario::{Scenario, ValidationError};

/// A sweep file: a dotted parameter path, its values and the scenario to vary,
/// given inline as `[scenario]` or by `template = "file.toml"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
    pub template: Scenario,
    /// Directory against which table paths in the template resolve.
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub schema_version: u32,
    pub parameter: String,
    pub rows: Vec<SweepRow>,
}

fn sweep_invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation(ValidationError {
        field: field.into(),
        message: message.into(),
    })
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_toml(&text, &base)
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let file: SweepFile = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim_end().to_string()))?;
        let template = match (&file.template, &file.scenario) {
            (Some(_), Some(_)) => return Err(sweep_invalid("template", "give either template or [scenario], not both")),
            (None, None) => return Err(sweep_invalid("template", "a template file or an inline [scenario] is required")),
            (Some(t), None) => {
                let p = base_dir.join(t);
                let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
                Scenario::from_toml(&text)?
            }
            (None, Some(table)) => table
                .clone()
                .try_into::<Scenario>()
                .map_err(|e| CliError::Parse(format!("scenario: {}", e.to_string().trim_end())))?,
        };
        let spec = Self {
            parameter: file.parameter,
            values: file.values,
            template,
            base_dir: base_dir.to_path_buf(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(sweep_invalid("values", "needs at least one value"));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(sweep_invalid("values", format!("must be finite, got {v}")));
        }
        self.template.validate()?;
        self.scenario_for(self.values[0]).map(|_| ())
    }

    /// The template with the swept parameter set to `value`.
    pub fn scenario_for(&self, value: f64) -> Result<Scenario, CliError> {
        with_parameter(&self.template, &self.parameter, value)
    }
}

/// Sets the dotted `path` in `scenario` to `value`. The parent table must
/// exist; the leaf may be an unset optional field.
pub fn with_parameter(scenario: &Scenario, path: &str, value: f64) -> Result<Scenario, CliError> {
    let mut root = toml::Table::try_from(scenario).expect("scenario converts to a TOML table");
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(sweep_invalid("parameter", format!("malformed path {path:?}")));
    }
    let (leaf, parents) = keys.split_last().expect("nonempty path");
    let mut table = &mut root;
    for key in parents {
        table = match table.get_mut(*key) {
            Some(toml::Value::Table(t)) => t,
            _ => return Err(sweep_invalid("parameter", format!("{path:?} does not resolve: no table {key:?}"))),
        };
    }
    let new = match table.get(*leaf) {
        Some(toml::Value::Integer(_)) => {
            if value.fract() != 0.0 {
                return Err(sweep_invalid("parameter", format!("{path} takes integers, got {value}")));
            }
            toml::Value::Integer(value as i64)
        }
        Some(toml::Value::Float(_)) | None => toml::Value::Float(value),
        Some(_) => return Err(sweep_invalid("parameter", format!("{path:?} is not a number"))),
    };
    table.insert(leaf.to_string(), new);
    let s: Scenario = toml::Value::Table(root)
        .try_into()
        .map_err(|e| sweep_invalid("parameter", format!("{path:?} does not resolve: {}", e.to_string().trim_end())))?;
    s.validate()?;
    Ok(s)
}

/// One summary row per value, sorted by value. `jobs > 1` runs rows in parallel.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepTable, CliError> {
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    let row = |&value: &f64| -> SweepRow {
        match spec
            .scenario_for(value)
            .and_then(|s| run_scenario(&s, &spec.base_dir))
        {
            Ok(run) => SweepRow {
                value,
                summary: Some(run.summary),
                error: None,
            },
            Err(e) => SweepRow {
                value,
                summary: None,
                error: Some(e.to_string()),
            },
        }
    };
    let rows = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| sweep_invalid("jobs", e.to_string()))?;
        pool.install(|| values.par_iter().map(row).collect())
    } else {
        values.iter().map(row).collect()
    };
    Ok(SweepTable {
        schema_version: SCHEMA_VERSION,
        parameter: spec.parameter.clone(),
        rows,
    })
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,status,p_e1,p_d_final,p_reg_final,mean_t,classical_t,converged\n");
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(output::float).unwrap_or_default();
            match &r.summary {
                Some(s) => out.push_str(&format!(
                    "{},ok,{},{},{},{},{},{}\n",
                    output::float(r.value),
                    output::float(s.p_e1),
                    output::float(s.p_d_final),
                    output::float(s.p_reg_final),
                    opt(s.arrival.as_ref().map(|a| a.mean_t)),
                    opt(s.classical_t),
                    s.converged
                )),
                None => out.push_str(&format!("{},error,,,,,,\n", output::float(r.value))),
            }
        }
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, body) in [("sweep.csv", self.to_csv()), ("sweep.json", output::json(self))] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEMPLATE: &str = r#"
parameter = "detector.point.distance"
values = [200.0, 50.0]

[scenario.amplitude]
kind = "isotropic_gaussian"
p0 = 5.0
sigma_p = 0.05

[scenario.detector.point]
distance = 100.0
"#;

    #[test]
    fn parameter_paths_resolve() {
        let spec = SweepSpec::from_toml(TEMPLATE, Path::new(".")).unwrap();
        let s = spec.scenario_for(50.0).unwrap();
        assert_eq!(s.detector.point.unwrap().distance, 50.0);
        let s = with_parameter(&spec.template, "quadrature.t_cap", 77.0).unwrap();
        assert_eq!(s.quadrature.t_cap, Some(77.0));
        let s = with_parameter(&spec.template, "quadrature.radial_nodes", 20.0).unwrap();
        assert_eq!(s.quadrature.radial_nodes, 20);
    }

    #[test]
    fn unresolvable_paths_are_rejected() {
        let spec = SweepSpec::from_toml(TEMPLATE, Path::new(".")).unwrap();
        assert!(with_parameter(&spec.template, "detector.sphere.radius", 1.0).is_err());
        assert!(with_parameter(&spec.template, "coupling.kappa", 0.3).is_err());
        assert!(with_parameter(&spec.template, "coupling.k", 1.3).is_err());
    }
}
