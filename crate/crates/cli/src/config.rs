//! Run configuration: defaults, then an optional JSON config file, then
//! command-line flags. The merged value is embedded in every report.

use std::collections::BTreeMap;
use std::path::Path;

use icclab::cone::{OmegaSchedule, DEFAULT_B_GRID};
use icclab::SearchBudget;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub t_end: f64,
    /// Cone labels: `PIC`, `PIC1`, `PIC2`, `UPIC` (uniform PIC at `theta`).
    pub cones: Vec<String>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_end: 0.05,
            cones: vec!["PIC".into(), "PIC1".into(), "PIC2".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub count: usize,
    pub dims: Vec<usize>,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            count: 100,
            dims: vec![5, 6, 7],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelsConfig {
    pub points: usize,
    pub dims: Vec<usize>,
}

impl Default for ModelsConfig {
    fn default() -> Self {
        Self {
            points: 100,
            dims: vec![5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub seed: u64,
    pub theta: f64,
    pub b_grid: Vec<f64>,
    pub omega_schedule: OmegaSchedule,
    pub budget: SearchBudget,
    /// `weak`, `interior`, `flow` (integrator tolerance) and `identity`
    /// (soliton residual limit).
    pub tolerances: BTreeMap<String, f64>,
    pub flow: FlowConfig,
    pub lemma: LemmaConfig,
    pub models: ModelsConfig,
    pub input: Option<String>,
    pub output: Option<String>,
}

pub fn default_tolerances() -> BTreeMap<String, f64> {
    let budget = SearchBudget::default();
    BTreeMap::from([
        ("weak".to_string(), budget.tol_weak),
        ("interior".to_string(), budget.tol_interior),
        ("flow".to_string(), 1e-10),
        ("identity".to_string(), 1e-12),
    ])
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 5,
            seed: 0,
            theta: 0.01,
            b_grid: DEFAULT_B_GRID.to_vec(),
            omega_schedule: OmegaSchedule::default(),
            budget: SearchBudget::default(),
            tolerances: default_tolerances(),
            flow: FlowConfig::default(),
            lemma: LemmaConfig::default(),
            models: ModelsConfig::default(),
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    /// Fills missing tolerance keys, copies the seed and the membership
    /// tolerances into the budget, and validates ranges.
    pub fn finish(mut self) -> Result<Self, CliError> {
        for (k, v) in default_tolerances() {
            self.tolerances.entry(k).or_insert(v);
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(CliError::Input(format!("tolerance {k} must be positive, got {v}")));
        }
        self.budget.seed = self.seed;
        self.budget.tol_weak = self.tolerances["weak"];
        self.budget.tol_interior = self.tolerances["interior"];
        if self.budget.restarts == 0 || self.budget.iterations == 0 {
            return Err(CliError::Input("budget restarts and iterations must be positive".into()));
        }
        if !(self.theta > 0.0) {
            return Err(CliError::Input(format!("theta must be positive, got {}", self.theta)));
        }
        if self.dim < 4 {
            return Err(CliError::Input(format!("dim must be at least 4, got {}", self.dim)));
        }
        Ok(self)
    }
}

/// `reciprocal:S`, `constant:V`, `power:S:E`, or a bare number for a
/// constant schedule.
pub fn parse_omega(spec: &str) -> Result<OmegaSchedule, CliError> {
    let bad = || CliError::Input(format!("bad omega schedule '{spec}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["reciprocal"] => Ok(OmegaSchedule::Reciprocal { scale: 1.0 }),
        [v] => Ok(OmegaSchedule::Constant { value: num(v)? }),
        ["reciprocal", s] => Ok(OmegaSchedule::Reciprocal { scale: num(s)? }),
        ["constant", v] => Ok(OmegaSchedule::Constant { value: num(v)? }),
        ["power", s, e] => Ok(OmegaSchedule::Power {
            scale: num(s)?,
            exponent: num(e)?,
        }),
        _ => Err(bad()),
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Input(format!("bad {what} entry '{s}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_specs() {
        assert_eq!(parse_omega("reciprocal").unwrap(), OmegaSchedule::Reciprocal { scale: 1.0 });
        assert_eq!(parse_omega("3").unwrap(), OmegaSchedule::Constant { value: 3.0 });
        assert_eq!(
            parse_omega("power:2:0.5").unwrap(),
            OmegaSchedule::Power { scale: 2.0, exponent: 0.5 }
        );
        assert!(parse_omega("cubic:1").is_err());
    }

    #[test]
    fn finish_syncs_budget() {
        let mut cfg = RunConfig { seed: 9, ..Default::default() };
        cfg.tolerances.remove("flow");
        cfg.tolerances.insert("weak".into(), 1e-7);
        let cfg = cfg.finish().unwrap();
        assert_eq!(cfg.budget.seed, 9);
        assert_eq!(cfg.budget.tol_weak, 1e-7);
        assert_eq!(cfg.tolerance("flow"), 1e-10);
    }

    #[test]
    fn partial_config_file() {
        let cfg: RunConfig = serde_json::from_str(r#"{"theta": 0.02, "budget": {"restarts": 4}}"#).unwrap();
        assert_eq!(cfg.theta, 0.02);
        assert_eq!(cfg.budget.restarts, 4);
        assert_eq!(cfg.budget.iterations, SearchBudget::default().iterations);
        assert!(serde_json::from_str::<RunConfig>(r#"{"thetta": 1}"#).is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<f64>("0.2, 0.1", "b").unwrap(), vec![0.2, 0.1]);
        assert!(parse_list::<usize>("5,x", "dim").is_err());
    }
}
