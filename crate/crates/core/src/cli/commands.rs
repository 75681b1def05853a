use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error as ThisError;

use super::config::{ExperimentConfig, SolveMode, SCHEMA_VERSION};
use super::table::Table;
use crate::control::{solve_lqr, LqrWeights};
use crate::oracle::{sensitivity_check, verify_compromise, CompromiseCertificate, SensitivityReport};
use crate::problem::{ConvexProgram, KktResidual, SpecCost, SquaredNorm};
use crate::solver::{solve_counterfactual, solve_fixed_slack, SolveReport};
use crate::terrain::{discretize, run_simulation, AgentState, Controller, Trajectory, NUM_INPUTS, NUM_STATES};
use crate::Error;

/// Failure classes with their process exit codes.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("simulation failed at step {step}: {message}")]
    Simulation { step: usize, message: String },
    #[error("cannot write outputs: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Simulation { .. } => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::NumericalDivergence { .. }
            | Error::NotConverged { .. }
            | Error::InnerNonConvergence { .. } => CliError::NonConvergence(message),
            Error::OracleInconsistency(_)
            | Error::InsufficientGrid
            | Error::Stencil { .. }
            | Error::UndefinedDifficulty => CliError::Verification(message),
            Error::Tick { step, source } => CliError::Simulation {
                step,
                message: source.to_string(),
            },
            _ => CliError::Config(message),
        }
    }
}

/// Files produced by a command, written only once the command has finished.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let bytes = table.to_csv().map_err(|e| CliError::Output(format!("{name}: {e}")))?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| CliError::Output(format!("{name}: {e}")))?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
        self.files
            .iter()
            .map(|(name, bytes)| {
                let path = dir.join(name);
                std::fs::write(&path, bytes)
                    .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
                Ok(path)
            })
            .collect()
    }
}

/// A finished command: its files and exit code. A nonzero code here means
/// the run completed but its outcome was negative (cap hit, check failed).
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub exit_code: i32,
    pub message: String,
}

#[derive(Serialize)]
struct Metadata {
    version: &'static str,
    created_unix_seconds: u64,
}

fn metadata() -> Metadata {
    Metadata {
        version: env!("CARGO_PKG_VERSION"),
        created_unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    }
}

fn indexed(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}_{i}"))
}

fn trace_table(prog: &ConvexProgram, report: &SolveReport, counterfactual: bool) -> Result<Table, CliError> {
    let mut headers: Vec<String> = vec!["iteration".into()];
    headers.extend(indexed("x", prog.dim()));
    headers.extend(indexed("lambda", prog.num_constraints()));
    headers.extend(indexed("s", prog.num_slacks()));
    headers.extend(["stationarity", "feasibility", "complementarity"].map(String::from));
    if counterfactual {
        headers.push("counterfactual".into());
    }
    let mut table = Table::new(headers);
    for entry in &report.trace {
        let mut row = vec![entry.iteration as f64];
        row.extend(entry.x.iter().chain(&entry.lambda).chain(&entry.slack));
        let r = &entry.residual;
        row.extend([r.stationarity, r.feasibility, r.complementarity]);
        row.extend(r.counterfactual.filter(|_| counterfactual));
        table.push(row).map_err(CliError::NonConvergence)?;
    }
    Ok(table)
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    schema_version: u32,
    command: &'static str,
    mode: SolveMode,
    converged: bool,
    iterations: usize,
    x: &'a [f64],
    lambda: &'a [f64],
    s: &'a [f64],
    objective: f64,
    residual: KktResidual,
    config: &'a ExperimentConfig,
    metadata: Metadata,
}

fn run_solve(cfg: &ExperimentConfig, prog: &ConvexProgram) -> Result<SolveReport, CliError> {
    cfg.solver.validate()?;
    let report = match cfg.mode {
        SolveMode::Counterfactual => {
            solve_counterfactual(prog, &SquaredNorm::new(prog.num_slacks()), &cfg.solver, None, None)?
        }
        SolveMode::FixedSlack => {
            let s = cfg.fixed_slack.as_ref().ok_or_else(|| {
                CliError::Config("field `fixed_slack` is required when mode is \"fixed_slack\"".into())
            })?;
            solve_fixed_slack(prog, &DVector::from_row_slice(s), &cfg.solver, None, None)?
        }
    };
    Ok(report)
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let prog = cfg.build_program().map_err(CliError::Config)?;
    let report = run_solve(cfg, &prog)?;
    let mut artifacts = Artifacts::default();
    artifacts.table("trace.csv", &trace_table(&prog, &report, cfg.mode == SolveMode::Counterfactual)?)?;
    artifacts.json(
        "summary.json",
        &SolveSummary {
            schema_version: SCHEMA_VERSION,
            command: "solve",
            mode: cfg.mode,
            converged: report.converged,
            iterations: report.iterations,
            x: report.state.x.as_slice(),
            lambda: report.state.lambda.as_slice(),
            s: report.state.slack.as_slice(),
            objective: prog.objective().value(&report.state.x),
            residual: report.residual,
            config: cfg,
            metadata: metadata(),
        },
    )?;
    let (exit_code, message) = if report.converged {
        (0, format!("converged after {} iterations", report.iterations))
    } else {
        (
            2,
            format!(
                "iteration cap {} reached with max residual {:e}",
                report.iterations,
                report.residual.max_component()
            ),
        )
    };
    Ok(Outcome {
        artifacts,
        exit_code,
        message,
    })
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    schema_version: u32,
    command: &'static str,
    passed: bool,
    perturbation: f64,
    s_checked: &'a [f64],
    compromise: &'a CompromiseCertificate,
    sensitivity: &'a SensitivityReport,
    sensitivity_passed: bool,
    /// `max |−∇p*(s) − ∇h(s)|`: zero at a compromise point.
    stationarity_error: f64,
    stationarity_passed: bool,
    sensitivity_tolerance: f64,
    solve: SolvedPoint<'a>,
    config: &'a ExperimentConfig,
    metadata: Metadata,
}

#[derive(Serialize)]
struct SolvedPoint<'a> {
    iterations: usize,
    x: &'a [f64],
    lambda: &'a [f64],
    s: &'a [f64],
}

/// Solves the counterfactual program, then certifies `s† + perturbation`.
pub fn cmd_verify(cfg: &ExperimentConfig, perturbation: f64) -> Result<Outcome, CliError> {
    let prog = cfg.build_program().map_err(CliError::Config)?;
    if !perturbation.is_finite() {
        return Err(CliError::Config(format!("--perturb-slack must be finite, got {perturbation}")));
    }
    let mut solve_cfg = cfg.clone();
    solve_cfg.mode = SolveMode::Counterfactual;
    let report = run_solve(&solve_cfg, &prog)?;
    if !report.converged {
        return Err(CliError::NonConvergence(format!(
            "counterfactual solve hit the cap of {} iterations",
            report.iterations
        )));
    }
    let h = SquaredNorm::new(prog.num_slacks());
    let s = report.state.slack.map(|v| (v + perturbation).max(0.0));
    let v = &cfg.verify;
    let certificate = verify_compromise(&prog, &h, &s, &v.grid, v.tolerance, &v.oracle)?;
    let sensitivity = sensitivity_check(&prog, &s, v.fd_step, &cfg.solver, &v.oracle)?;
    let stationarity_error = (&sensitivity.lambda_oracle - h.gradient(&s)).amax();
    let sensitivity_passed = sensitivity.max_error <= v.sensitivity_tolerance;
    let stationarity_passed = stationarity_error <= v.sensitivity_tolerance;
    let passed = certificate.passed && sensitivity_passed && stationarity_passed;

    let mut table = Table::new(["slack", "s", "lambda_oracle", "lambda_solver", "grad_h", "error"]);
    let grad_h = h.gradient(&s);
    for j in 0..s.len() {
        let (o, l) = (sensitivity.lambda_oracle[j], sensitivity.lambda_solver[j]);
        table
            .push(vec![j as f64, s[j], o, l, grad_h[j], (o - l).abs()])
            .map_err(CliError::Verification)?;
    }
    let mut artifacts = Artifacts::default();
    artifacts.table("sensitivity.csv", &table)?;
    artifacts.json(
        "certificate.json",
        &VerifySummary {
            schema_version: SCHEMA_VERSION,
            command: "verify",
            passed,
            perturbation,
            s_checked: s.as_slice(),
            compromise: &certificate,
            sensitivity: &sensitivity,
            sensitivity_passed,
            stationarity_error,
            stationarity_passed,
            sensitivity_tolerance: v.sensitivity_tolerance,
            solve: SolvedPoint {
                iterations: report.iterations,
                x: report.state.x.as_slice(),
                lambda: report.state.lambda.as_slice(),
                s: report.state.slack.as_slice(),
            },
            config: cfg,
            metadata: metadata(),
        },
    )?;
    let message = format!(
        "worst violation {:e} (tolerance {:e}), sensitivity error {:e}, stationarity error {:e}",
        certificate.worst_violation, v.tolerance, sensitivity.max_error, stationarity_error
    );
    Ok(Outcome {
        artifacts,
        exit_code: if passed { 0 } else { 3 },
        message,
    })
}

/// Controllers selected by `--controller`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ControllerChoice {
    Cf,
    Lqr,
    Both,
}

fn selected_controllers(cfg: &ExperimentConfig, choice: ControllerChoice) -> Vec<Controller> {
    let nav = &cfg.navigate;
    let mut out = Vec::new();
    if choice != ControllerChoice::Lqr {
        out.push(Controller::Counterfactual);
    }
    if choice != ControllerChoice::Cf {
        out.push(Controller::Lqr {
            q: nav.baseline_q,
            r: nav.baseline_r,
        });
        if let Some(q) = nav.tuned_q {
            out.push(Controller::Lqr { q, r: nav.baseline_r });
        }
    }
    out
}

fn trajectory_table(traj: &Trajectory) -> Result<Table, CliError> {
    let with_slacks = matches!(traj.controller, Controller::Counterfactual);
    let mut headers: Vec<String> = ["step", "p_x", "p_y", "v_x", "v_y", "u_x", "u_y", "gamma"]
        .map(String::from)
        .to_vec();
    if with_slacks {
        headers.extend((1..=NUM_STATES).map(|i| format!("s_x{i}")));
        headers.extend((1..=NUM_INPUTS).map(|i| format!("s_u{i}")));
    }
    let mut table = Table::new(headers);
    for rec in &traj.records {
        let mut row = vec![rec.step as f64];
        row.extend(rec.state.position.iter().chain(&rec.state.velocity).chain(&rec.input));
        row.push(rec.gamma);
        if with_slacks {
            row.extend(rec.slack_x.iter().chain(&rec.slack_u));
        }
        table.push(row).map_err(|e| CliError::Simulation {
            step: rec.step,
            message: e,
        })?;
    }
    Ok(table)
}

/// Per-step equivalent LQR weights of a counterfactual trajectory. Row `t`
/// holds the weight on the planned state `x_{t+1}` and on the input `u_t`.
fn weight_table(traj: &Trajectory) -> Result<Table, CliError> {
    let mut headers: Vec<String> = vec!["step".into(), "t".into()];
    headers.extend((1..=NUM_STATES).map(|i| format!("q_{i}")));
    headers.extend((1..=NUM_INPUTS).map(|i| format!("r_{i}")));
    let mut table = Table::new(headers);
    for rec in &traj.records {
        let Some(w) = &rec.weights else { continue };
        for (t, (q, r)) in w.q.iter().zip(&w.r).enumerate() {
            let mut row = vec![rec.step as f64, t as f64];
            row.extend(q.iter().chain(r.iter()));
            table.push(row).map_err(|e| CliError::Simulation {
                step: rec.step,
                message: e,
            })?;
        }
    }
    Ok(table)
}

/// Largest deviation between each recorded plan and the input sequence
/// `solve_lqr` produces with that step's weights.
pub fn weight_replay_error(traj: &Trajectory, ts: f64, horizon: usize) -> crate::Result<f64> {
    let mut worst = 0.0f64;
    for rec in &traj.records {
        let Some(w) = &rec.weights else { continue };
        let plan = solve_lqr(&discretize(rec.gamma, ts)?, &rec.state.to_vector(), horizon, w)?;
        for (replayed, planned) in plan.inputs.iter().zip(&rec.planned_inputs) {
            worst = worst.max((replayed - DVector::from_row_slice(planned)).amax());
        }
    }
    Ok(worst)
}

/// Rebuilds [`LqrWeights`] for one step from a weight table.
pub fn weights_at_step(table: &Table, step: usize) -> Option<LqrWeights> {
    let rows: Vec<&Vec<f64>> = table.rows.iter().filter(|r| r[0] == step as f64).collect();
    if rows.is_empty() {
        return None;
    }
    let q = rows.iter().map(|r| DVector::from_row_slice(&r[2..2 + NUM_STATES])).collect();
    let r = rows.iter().map(|r| DVector::from_row_slice(&r[2 + NUM_STATES..])).collect();
    Some(LqrWeights { q, r })
}

#[derive(Serialize)]
struct ControllerSummary {
    label: String,
    controller: Controller,
    reached: bool,
    steps: usize,
    steps_to_threshold: Option<usize>,
    energy: f64,
    final_state: AgentState,
    solver_iterations: usize,
    tick_seconds: f64,
}

#[derive(Serialize)]
struct NavigateSummary<'a> {
    schema_version: u32,
    command: &'static str,
    controllers: Vec<ControllerSummary>,
    /// Counterfactual steps over baseline LQR steps.
    step_ratio: Option<f64>,
    /// Tuned LQR energy over counterfactual energy.
    tuned_energy_ratio: Option<f64>,
    weight_replay_error: Option<f64>,
    config: &'a ExperimentConfig,
    metadata: Metadata,
}

pub fn cmd_navigate(
    cfg: &ExperimentConfig,
    choice: ControllerChoice,
    emit_weights: bool,
) -> Result<Outcome, CliError> {
    let controllers = selected_controllers(cfg, choice);
    let sims: Vec<_> = controllers.iter().map(|c| cfg.sim.with_controller(*c)).collect();
    for sim in &sims {
        sim.validate()?;
    }
    let results: Vec<crate::Result<Trajectory>> = std::thread::scope(|scope| {
        let handles: Vec<_> = sims.iter().map(|sim| scope.spawn(move || run_simulation(sim))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("simulation thread panicked".into()))))
            .collect()
    });
    let trajectories = results.into_iter().collect::<crate::Result<Vec<_>>>()?;

    let mut artifacts = Artifacts::default();
    for traj in &trajectories {
        artifacts.table(&format!("trajectory_{}.csv", traj.controller.label()), &trajectory_table(traj)?)?;
    }
    let cf = trajectories
        .iter()
        .find(|t| matches!(t.controller, Controller::Counterfactual));
    let mut replay_error = None;
    if emit_weights {
        match cf {
            Some(cf) => {
                artifacts.table("weights.csv", &weight_table(cf)?)?;
                replay_error = Some(weight_replay_error(cf, cfg.sim.ts, cfg.sim.horizon)?);
            }
            None => warn!("--emit-weights ignored: no counterfactual run selected"),
        }
    }

    let baseline = Controller::Lqr {
        q: cfg.navigate.baseline_q,
        r: cfg.navigate.baseline_r,
    };
    let find = |c: Controller| trajectories.iter().find(|t| t.controller == c);
    let step_ratio = cf
        .zip(find(baseline))
        .map(|(cf, lqr)| cf.steps() as f64 / lqr.steps() as f64);
    let tuned_energy_ratio = cf
        .zip(cfg.navigate.tuned_q.and_then(|q| {
            find(Controller::Lqr {
                q,
                r: cfg.navigate.baseline_r,
            })
        }))
        .map(|(cf, tuned)| tuned.energy / cf.energy);

    let controllers: Vec<ControllerSummary> = trajectories
        .iter()
        .map(|t| ControllerSummary {
            label: t.controller.label(),
            controller: t.controller,
            reached: t.reached,
            steps: t.steps(),
            steps_to_threshold: t.steps_to_threshold,
            energy: t.energy,
            final_state: t.final_state,
            solver_iterations: t.records.iter().map(|r| r.solver_iterations).sum(),
            tick_seconds: t.total_tick_seconds,
        })
        .collect();
    let message = controllers
        .iter()
        .map(|c| format!("{}: {} steps, energy {:.4}", c.label, c.steps, c.energy))
        .collect::<Vec<_>>()
        .join("; ");
    info!("{message}");
    artifacts.json(
        "summary.json",
        &NavigateSummary {
            schema_version: SCHEMA_VERSION,
            command: "navigate",
            controllers,
            step_ratio,
            tuned_energy_ratio,
            weight_replay_error: replay_error,
            config: cfg,
            metadata: metadata(),
        },
    )?;
    Ok(Outcome {
        artifacts,
        exit_code: 0,
        message,
    })
}
