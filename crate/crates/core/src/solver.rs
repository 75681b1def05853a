//! Discretized primal-dual (Arrow-Hurwicz) iterations.
//!
//! [`solve_counterfactual`] ties the specification to the duals through
//! `s = (∇h)⁻¹(Gᵀλ)` at every iterate, so the fixed point is the compromise
//! specification together with its primal-dual solution.
//! [`solve_fixed_slack`] is the classical variant with `s` held constant.

use log::debug;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::problem::{ConvexProgram, KktResidual, SaddleState, SpecCost};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eta: f64,
    pub max_iterations: usize,
    /// Bound on the largest KKT residual component.
    pub tolerance: f64,
    /// Record a trace snapshot every `trace_stride` iterations.
    pub trace_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 1e-2,
            max_iterations: 200_000,
            tolerance: 1e-6,
            trace_stride: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if self.trace_stride == 0 {
            return Err(Error::InvalidArgument("trace_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub slack: DVector<f64>,
    pub residual: KktResidual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub state: SaddleState,
    pub residual: KktResidual,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

/// `x − η(∇f₀(x) + Σᵢ λᵢ∇fᵢ(x))`.
pub fn primal_step(prog: &ConvexProgram, state: &SaddleState, eta: f64) -> Result<DVector<f64>> {
    prog.check_point(&state.x)?;
    prog.check_duals(&state.lambda)?;
    let grad = prog.lagrangian_gradient(&state.x, &state.lambda);
    Ok(&state.x - grad * eta)
}

fn slack_from_duals(
    prog: &ConvexProgram,
    spec_cost: &dyn SpecCost,
    lambda: &DVector<f64>,
) -> Result<DVector<f64>> {
    let s = spec_cost.gradient_inverse(&prog.groups().aggregate(lambda));
    if let Some(j) = s.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::SpecCostContract(format!(
            "(∇h)⁻¹ returned {} for slack {j}; it must map nonnegative duals to nonnegative specifications",
            s[j]
        )));
    }
    Ok(s)
}

fn projected_dual_update(
    prog: &ConvexProgram,
    lambda: &DVector<f64>,
    values: &DVector<f64>,
    slack: &DVector<f64>,
    eta: f64,
) -> DVector<f64> {
    let groups = prog.groups();
    DVector::from_fn(lambda.len(), |i, _| {
        (lambda[i] + eta * (values[i] - slack[groups.slack_of(i)])).max(0.0)
    })
}

/// Projected dual ascent with the specification slaved to the duals.
/// Returns `(λ′, s′)` with `s′ = (∇h)⁻¹(Gᵀλ′)`.
pub fn dual_step_counterfactual(
    prog: &ConvexProgram,
    spec_cost: &dyn SpecCost,
    state: &SaddleState,
    eta: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    prog.check_point(&state.x)?;
    prog.check_duals(&state.lambda)?;
    check_dim("spec cost dimension", prog.num_slacks(), spec_cost.dim())?;
    let current = slack_from_duals(prog, spec_cost, &state.lambda)?;
    let values = prog.constraint_values(&state.x);
    let lambda = projected_dual_update(prog, &state.lambda, &values, &current, eta);
    let slack = slack_from_duals(prog, spec_cost, &lambda)?;
    Ok((lambda, slack))
}

enum SlackRule<'a> {
    Counterfactual(&'a dyn SpecCost),
    Fixed(DVector<f64>),
}

impl SlackRule<'_> {
    fn slack(&self, prog: &ConvexProgram, lambda: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            SlackRule::Counterfactual(h) => slack_from_duals(prog, *h, lambda),
            SlackRule::Fixed(s) => Ok(s.clone()),
        }
    }

    fn counterfactual_gap(
        &self,
        prog: &ConvexProgram,
        lambda: &DVector<f64>,
        slack: &DVector<f64>,
    ) -> Option<f64> {
        match self {
            SlackRule::Counterfactual(h) => {
                Some((h.gradient(slack) - prog.groups().aggregate(lambda)).norm())
            }
            SlackRule::Fixed(_) => None,
        }
    }
}

/// Algorithm-1 iteration: counterfactual primal-dual dynamics started from
/// `x = 0`, `λ = 1` unless warm-start values are given.
pub fn solve_counterfactual(
    prog: &ConvexProgram,
    spec_cost: &dyn SpecCost,
    config: &SolverConfig,
    x0: Option<&DVector<f64>>,
    lambda0: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    check_dim("spec cost dimension", prog.num_slacks(), spec_cost.dim())?;
    run(prog, SlackRule::Counterfactual(spec_cost), config, x0, lambda0)
}

/// Classical Arrow-Hurwicz iteration at a fixed specification `s`.
pub fn solve_fixed_slack(
    prog: &ConvexProgram,
    s: &DVector<f64>,
    config: &SolverConfig,
    x0: Option<&DVector<f64>>,
    lambda0: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    prog.check_slacks(s)?;
    run(prog, SlackRule::Fixed(s.clone()), config, x0, lambda0)
}

fn run(
    prog: &ConvexProgram,
    rule: SlackRule<'_>,
    config: &SolverConfig,
    x0: Option<&DVector<f64>>,
    lambda0: Option<&DVector<f64>>,
) -> Result<SolveReport> {
    config.validate()?;
    let n = prog.dim();
    let m = prog.num_constraints();
    let mut x = match x0 {
        Some(x0) => {
            prog.check_point(x0)?;
            x0.clone()
        }
        None => DVector::zeros(n),
    };
    let mut lambda = match lambda0 {
        Some(l0) => {
            prog.check_duals(l0)?;
            l0.clone()
        }
        None => DVector::from_element(m, 1.0),
    };
    let mut slack = rule.slack(prog, &lambda)?;

    let eta = config.eta;
    let groups = prog.groups();
    let mut grad = DVector::zeros(n);
    let mut values = DVector::zeros(m);
    let mut trace = Vec::new();
    let mut iteration = 0;
    let mut converged = false;
    let residual = loop {
        for (i, c) in prog.constraints().iter().enumerate() {
            values[i] = c.value(&x);
        }
        prog.lagrangian_gradient_into(&x, &lambda, &mut grad);
        let residual = KktResidual::from_parts(
            &grad,
            &values,
            &lambda,
            &groups.expand(&slack),
            rule.counterfactual_gap(prog, &lambda, &slack),
        );
        if !residual.max_component().is_finite() {
            return Err(Error::NumericalDivergence { iteration, eta });
        }
        let done = residual.max_component() <= config.tolerance;
        if iteration % config.trace_stride == 0 || done || iteration == config.max_iterations {
            trace.push(TraceEntry {
                iteration,
                x: x.clone(),
                lambda: lambda.clone(),
                slack: slack.clone(),
                residual,
            });
        }
        if done {
            converged = true;
            break residual;
        }
        if iteration == config.max_iterations {
            break residual;
        }

        // Jacobi update: both lines use the iterate from the previous step.
        x.axpy(-eta, &grad, 1.0);
        for i in 0..m {
            lambda[i] = (lambda[i] + eta * (values[i] - slack[groups.slack_of(i)])).max(0.0);
        }
        slack = rule.slack(prog, &lambda)?;
        iteration += 1;
        if x.iter().chain(lambda.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalDivergence { iteration, eta });
        }
    };

    debug!(
        "primal-dual solve finished: converged={converged} iterations={iteration} residual={:e}",
        residual.max_component()
    );
    Ok(SolveReport {
        state: SaddleState {
            x,
            lambda,
            slack,
            iteration,
        },
        residual,
        converged,
        iterations: iteration,
        trace,
    })
}
