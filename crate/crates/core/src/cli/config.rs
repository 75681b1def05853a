use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fixtures;
use crate::oracle::{GridSpec, OracleConfig};
use crate::problem::{ConvexProgram, DifferentiableFunction, GroupMap, QuadraticFunction};
use crate::solver::SolverConfig;
use crate::terrain::SimConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level experiment description, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub mode: SolveMode,
    /// Specification used by `mode = "fixed_slack"`.
    #[serde(default)]
    pub fixed_slack: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub navigate: NavigateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            problem: ProblemSpec::default(),
            mode: SolveMode::default(),
            fixed_slack: None,
            seed: 0,
            solver: SolverConfig::default(),
            verify: VerifyConfig::default(),
            sim: SimConfig::default(),
            navigate: NavigateConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// One of [`fixtures::NAMES`].
    Fixture(String),
    Inline(InlineProgram),
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec::Fixture("qp1d".into())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    #[default]
    Counterfactual,
    FixedSlack,
}

/// `½ xᵀPx + qᵀx + r`; `p` may be omitted for affine functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineQuadratic {
    #[serde(default)]
    pub p: Option<Vec<Vec<f64>>>,
    pub q: Vec<f64>,
    #[serde(default)]
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProgram {
    pub objective: InlineQuadratic,
    pub constraints: Vec<InlineQuadratic>,
    /// Slack column of each constraint; identity when absent.
    #[serde(default)]
    pub groups: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub grid: GridSpec,
    /// Certification tolerance on the worst compromise violation.
    pub tolerance: f64,
    pub fd_step: f64,
    /// Bound on the sensitivity errors.
    pub sensitivity_tolerance: f64,
    pub oracle: OracleConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::Box {
                lo: 0.0,
                hi: 3.0,
                step: 0.05,
            },
            tolerance: 1e-6,
            fd_step: 1e-3,
            sensitivity_tolerance: 1e-2,
            oracle: OracleConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavigateConfig {
    /// Baseline LQR weights `Q_t = q·I`, `R_t = r·I`.
    pub baseline_q: f64,
    pub baseline_r: f64,
    /// Extra LQR run with `Q_t = tuned_q·I` when the baseline is selected.
    pub tuned_q: Option<f64>,
}

impl Default for NavigateConfig {
    fn default() -> Self {
        Self {
            baseline_q: 1.0,
            baseline_r: 1.0,
            tuned_q: Some(3.3),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "field `schema_version`: expected {SCHEMA_VERSION}, got {}",
                cfg.schema_version
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn build_program(&self) -> Result<ConvexProgram, String> {
        match &self.problem {
            ProblemSpec::Fixture(name) => fixtures::by_name(name, self.seed).ok_or_else(|| {
                format!(
                    "field `problem.fixture`: unknown fixture {name:?} (known: {})",
                    fixtures::NAMES.join(", ")
                )
            }),
            ProblemSpec::Inline(inline) => inline.build(),
        }
    }
}

impl InlineQuadratic {
    fn build(&self, field: &str) -> Result<QuadraticFunction, String> {
        let n = self.q.len();
        let p = match &self.p {
            None => DMatrix::zeros(n, n),
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(format!("field `{field}.p`: expected a {n}×{n} matrix"));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
        };
        QuadraticFunction::new(p, DVector::from_row_slice(&self.q), self.r)
            .map_err(|e| format!("field `{field}`: {e}"))
    }
}

impl InlineProgram {
    fn build(&self) -> Result<ConvexProgram, String> {
        let objective = Arc::new(self.objective.build("problem.inline.objective")?);
        let constraints = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.build(&format!("problem.inline.constraints[{i}]"))
                    .map(|f| Arc::new(f) as Arc<dyn DifferentiableFunction>)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let groups = match &self.groups {
            None => GroupMap::identity(constraints.len()),
            Some(g) => {
                let m = g.iter().max().map_or(0, |m| m + 1);
                GroupMap::new(g.clone(), m).map_err(|e| format!("field `problem.inline.groups`: {e}"))?
            }
        };
        ConvexProgram::new(objective, constraints, groups).map_err(|e| format!("field `problem.inline`: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"schema_version": 1}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn parse_error_names_line() {
        let err = ExperimentConfig::from_json("{\n  \"schema_version\": 1,\n  \"bogus\": 2\n}").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn wrong_schema_version() {
        let err = ExperimentConfig::from_json(r#"{"schema_version": 7}"#).unwrap_err();
        assert!(err.contains("schema_version"));
    }

    #[test]
    fn unknown_fixture_is_reported() {
        let cfg = ExperimentConfig::from_json(r#"{"schema_version": 1, "problem": {"fixture": "nope"}}"#)
            .unwrap();
        assert!(cfg.build_program().unwrap_err().contains("problem.fixture"));
    }

    #[test]
    fn inline_program_round_trip() {
        let text = r#"{
            "schema_version": 1,
            "problem": {"inline": {
                "objective": {"p": [[2.0]], "q": [-4.0], "r": 4.0},
                "constraints": [{"q": [1.0]}]
            }}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let prog = cfg.build_program().unwrap();
        let reference = fixtures::qp1d();
        let x = DVector::from_element(1, 0.3);
        assert_eq!(prog.objective().value(&x), reference.objective().value(&x));
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn inline_program_rejects_bad_matrix() {
        let text = r#"{"schema_version": 1, "problem": {"inline": {
            "objective": {"p": [[2.0, 0.0]], "q": [-4.0]}, "constraints": []}}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(cfg.build_program().unwrap_err().contains("objective.p"));
    }
}
