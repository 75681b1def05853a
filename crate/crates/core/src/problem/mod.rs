//! Convex programs with grouped constraint specifications.
//!
//! A [`ConvexProgram`] describes
//!
//! ```text
//! minimize   f₀(x)
//! subject to fᵢ(x) ≤ s_{g(i)},   i = 1..m_c
//! ```
//!
//! where the group map `g` assigns every constraint to one of `m_s ≤ m_c`
//! slack columns. With the identity map each constraint owns its slack; a
//! horizon problem shares one slack per coordinate across all time steps.

mod function;
mod spec_cost;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use function::{
    finite_difference_gradient, ClosureFunction, DifferentiableFunction, QuadraticFunction,
};
pub use spec_cost::{SpecCost, SquaredNorm};

use crate::error::{check_dim, Error, Result};

/// Assignment of each constraint row to exactly one slack column.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMap {
    assignment: Vec<usize>,
    num_slacks: usize,
}

impl GroupMap {
    pub fn new(assignment: Vec<usize>, num_slacks: usize) -> Result<Self> {
        if let Some(&bad) = assignment.iter().find(|&&g| g >= num_slacks) {
            return Err(Error::InvalidArgument(format!(
                "constraint assigned to slack {bad} but only {num_slacks} slacks exist"
            )));
        }
        let mut used = vec![false; num_slacks];
        for &g in &assignment {
            used[g] = true;
        }
        if let Some(col) = used.iter().position(|u| !u) {
            return Err(Error::InvalidArgument(format!(
                "slack column {col} is not referenced by any constraint"
            )));
        }
        Ok(Self {
            assignment,
            num_slacks,
        })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            assignment: (0..m).collect(),
            num_slacks: m,
        }
    }

    /// Builds the map from an explicit `m_c × m_s` 0/1 matrix.
    pub fn from_matrix(g: &DMatrix<f64>) -> Result<Self> {
        let mut assignment = Vec::with_capacity(g.nrows());
        for (row, entries) in g.row_iter().enumerate() {
            let nonzero: Vec<usize> = entries
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(j, _)| j)
                .collect();
            match nonzero.as_slice() {
                [j] if entries[*j] == 1.0 => assignment.push(*j),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "group map row {row} must contain exactly one entry equal to 1"
                    )))
                }
            }
        }
        Self::new(assignment, g.ncols())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.assignment.len(), self.num_slacks);
        for (i, &j) in self.assignment.iter().enumerate() {
            g[(i, j)] = 1.0;
        }
        g
    }

    pub fn num_constraints(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_slacks(&self) -> usize {
        self.num_slacks
    }

    /// Slack column of constraint `i`.
    pub fn slack_of(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// `Gᵀλ`: per-slack sum of the duals of its constraints.
    pub fn aggregate(&self, lambda: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.num_slacks);
        for (i, &g) in self.assignment.iter().enumerate() {
            out[g] += lambda[i];
        }
        out
    }

    /// `Gs`: the slack seen by each constraint row.
    pub fn expand(&self, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.assignment.len(), self.assignment.iter().map(|&g| s[g]))
    }
}

/// A strongly convex objective with convex inequality constraints whose
/// right-hand sides are slack variables shared through a [`GroupMap`].
#[derive(Clone)]
pub struct ConvexProgram {
    objective: Arc<dyn DifferentiableFunction>,
    constraints: Vec<Arc<dyn DifferentiableFunction>>,
    groups: GroupMap,
}

impl std::fmt::Debug for ConvexProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexProgram")
            .field("dim", &self.dim())
            .field("constraints", &self.constraints.len())
            .field("groups", &self.groups)
            .finish()
    }
}

impl ConvexProgram {
    pub fn new(
        objective: Arc<dyn DifferentiableFunction>,
        constraints: Vec<Arc<dyn DifferentiableFunction>>,
        groups: GroupMap,
    ) -> Result<Self> {
        let n = objective.dim();
        if n == 0 {
            return Err(Error::InvalidArgument("program of dimension 0".into()));
        }
        for c in &constraints {
            check_dim("constraint dimension", n, c.dim())?;
        }
        check_dim(
            "group map rows",
            constraints.len(),
            groups.num_constraints(),
        )?;
        Ok(Self {
            objective,
            constraints,
            groups,
        })
    }

    /// One slack per constraint.
    pub fn with_identity_groups(
        objective: Arc<dyn DifferentiableFunction>,
        constraints: Vec<Arc<dyn DifferentiableFunction>>,
    ) -> Result<Self> {
        let m = constraints.len();
        Self::new(objective, constraints, GroupMap::identity(m))
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_slacks(&self) -> usize {
        self.groups.num_slacks()
    }

    pub fn objective(&self) -> &dyn DifferentiableFunction {
        self.objective.as_ref()
    }

    pub fn objective_arc(&self) -> Arc<dyn DifferentiableFunction> {
        Arc::clone(&self.objective)
    }

    pub fn constraints(&self) -> &[Arc<dyn DifferentiableFunction>] {
        &self.constraints
    }

    pub fn groups(&self) -> &GroupMap {
        &self.groups
    }

    pub fn constraint_values(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints.iter().map(|c| c.value(x)),
        )
    }

    /// `∇f₀(x) + Σᵢ λᵢ ∇fᵢ(x)` written into `out`.
    pub fn lagrangian_gradient_into(
        &self,
        x: &DVector<f64>,
        lambda: &DVector<f64>,
        out: &mut DVector<f64>,
    ) {
        out.fill(0.0);
        self.objective.add_scaled_gradient(x, 1.0, out);
        for (c, &l) in self.constraints.iter().zip(lambda.iter()) {
            if l != 0.0 {
                c.add_scaled_gradient(x, l, out);
            }
        }
    }

    pub fn lagrangian_gradient(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        self.lagrangian_gradient_into(x, lambda, &mut out);
        out
    }

    pub(crate) fn check_point(&self, x: &DVector<f64>) -> Result<()> {
        check_dim("primal point", self.dim(), x.len())
    }

    pub(crate) fn check_duals(&self, lambda: &DVector<f64>) -> Result<()> {
        check_dim("dual vector", self.num_constraints(), lambda.len())?;
        if let Some(i) = lambda.iter().position(|l| !(*l >= 0.0)) {
            return Err(Error::Precondition(format!(
                "dual {i} is {} but duals must be nonnegative",
                lambda[i]
            )));
        }
        Ok(())
    }

    pub(crate) fn check_slacks(&self, s: &DVector<f64>) -> Result<()> {
        check_dim("slack vector", self.num_slacks(), s.len())?;
        if let Some(j) = s.iter().position(|v| !(*v >= 0.0)) {
            return Err(Error::Precondition(format!(
                "slack {j} is {} but specifications must be nonnegative",
                s[j]
            )));
        }
        Ok(())
    }
}

/// Iterate of a primal-dual method: primal point, constraint duals,
/// specification, and iteration count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleState {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub slack: DVector<f64>,
    pub iteration: usize,
}

impl SaddleState {
    pub fn new(x: DVector<f64>, lambda: DVector<f64>, slack: DVector<f64>) -> Self {
        Self {
            x,
            lambda,
            slack,
            iteration: 0,
        }
    }

    pub(crate) fn validate(&self, prog: &ConvexProgram) -> Result<()> {
        prog.check_point(&self.x)?;
        prog.check_duals(&self.lambda)?;
        prog.check_slacks(&self.slack)
    }
}

/// Optimality certificate for a saddle point with optional counterfactual
/// condition `∇h(s) = Gᵀλ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    /// `None` when the specification is held fixed.
    pub counterfactual: Option<f64>,
}

impl KktResidual {
    pub fn max_component(&self) -> f64 {
        self.stationarity
            .max(self.feasibility)
            .max(self.complementarity)
            .max(self.counterfactual.unwrap_or(0.0))
    }

    /// Residual assembled from already-evaluated quantities.
    pub(crate) fn from_parts(
        lagrangian_gradient: &DVector<f64>,
        constraint_values: &DVector<f64>,
        lambda: &DVector<f64>,
        expanded_slack: &DVector<f64>,
        counterfactual: Option<f64>,
    ) -> Self {
        let mut feasibility = 0.0f64;
        let mut complementarity = 0.0f64;
        for i in 0..constraint_values.len() {
            let gap = constraint_values[i] - expanded_slack[i];
            feasibility = feasibility.max(gap.max(0.0));
            complementarity = complementarity.max((lambda[i] * gap).abs());
        }
        Self {
            stationarity: lagrangian_gradient.norm(),
            feasibility,
            complementarity,
            counterfactual,
        }
    }
}

/// `L(x, λ, s) = f₀(x) + Σᵢ λᵢ (fᵢ(x) − s_{g(i)})`.
pub fn lagrangian_eval(
    prog: &ConvexProgram,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    s: &DVector<f64>,
) -> Result<f64> {
    prog.check_point(x)?;
    prog.check_duals(lambda)?;
    check_dim("slack vector", prog.num_slacks(), s.len())?;
    let mut value = prog.objective.value(x);
    for (i, c) in prog.constraints.iter().enumerate() {
        value += lambda[i] * (c.value(x) - s[prog.groups.slack_of(i)]);
    }
    Ok(value)
}

fn counterfactual_gap(
    prog: &ConvexProgram,
    spec_cost: &dyn SpecCost,
    state: &SaddleState,
) -> Result<f64> {
    check_dim("spec cost dimension", prog.num_slacks(), spec_cost.dim())?;
    let aggregated = prog.groups.aggregate(&state.lambda);
    Ok((spec_cost.gradient(&state.slack) - aggregated).norm())
}

/// All four residuals, including `‖∇h(s) − Gᵀλ‖`.
pub fn kkt_residual(
    prog: &ConvexProgram,
    spec_cost: &dyn SpecCost,
    state: &SaddleState,
) -> Result<KktResidual> {
    state.validate(prog)?;
    let cf = counterfactual_gap(prog, spec_cost, state)?;
    Ok(residual_with(prog, state, Some(cf)))
}

/// Residuals for a problem whose specification is held fixed; the
/// counterfactual component is reported as not applicable.
pub fn kkt_residual_fixed_slack(prog: &ConvexProgram, state: &SaddleState) -> Result<KktResidual> {
    state.validate(prog)?;
    Ok(residual_with(prog, state, None))
}

fn residual_with(prog: &ConvexProgram, state: &SaddleState, cf: Option<f64>) -> KktResidual {
    let grad = prog.lagrangian_gradient(&state.x, &state.lambda);
    let values = prog.constraint_values(&state.x);
    let expanded = prog.groups.expand(&state.slack);
    KktResidual::from_parts(&grad, &values, &state.lambda, &expanded, cf)
}

/// Settings for the inner minimization behind [`dual_function_value`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerSolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100_000,
            initial_step: 1.0,
        }
    }
}

/// `g(λ, s) = min_x L(x, λ, s)`, computed by gradient descent with
/// Armijo backtracking on the strongly convex inner problem.
pub fn dual_function_value(
    prog: &ConvexProgram,
    lambda: &DVector<f64>,
    s: &DVector<f64>,
    config: &InnerSolverConfig,
) -> Result<f64> {
    prog.check_duals(lambda)?;
    check_dim("slack vector", prog.num_slacks(), s.len())?;
    let shift: f64 = (0..prog.num_constraints())
        .map(|i| lambda[i] * s[prog.groups.slack_of(i)])
        .sum();
    let inner = |x: &DVector<f64>| -> f64 {
        let mut v = prog.objective.value(x);
        for (c, &l) in prog.constraints.iter().zip(lambda.iter()) {
            if l != 0.0 {
                v += l * c.value(x);
            }
        }
        v
    };

    let n = prog.dim();
    let mut x = DVector::zeros(n);
    let mut grad = DVector::zeros(n);
    let mut trial_grad = DVector::zeros(n);
    let mut value = inner(&x);
    let mut step = config.initial_step;
    for _ in 0..config.max_iterations {
        prog.lagrangian_gradient_into(&x, lambda, &mut grad);
        let gnorm2 = grad.norm_squared();
        if gnorm2.sqrt() <= config.tolerance {
            return Ok(value - shift);
        }
        // grow back after successful steps so one tiny step does not stick
        step *= 2.0;
        let roundoff = 1e-12 * value.abs().max(1.0);
        loop {
            let trial = &x - &grad * step;
            let trial_value = inner(&trial);
            let accept = trial_value <= value - 0.5 * step * gnorm2
                || (trial_value <= value + roundoff && {
                    // near the minimum the decrease drowns in rounding; use
                    // the slope at the trial point instead (approximate Armijo)
                    prog.lagrangian_gradient_into(&trial, lambda, &mut trial_grad);
                    trial_grad.dot(&grad) >= 0.0
                });
            if accept {
                x = trial;
                value = trial_value;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::InnerNonConvergence {
                    iterations: 0,
                    best_value: value - shift,
                    gradient_norm: gnorm2.sqrt(),
                });
            }
        }
        if !value.is_finite() {
            return Err(Error::InnerNonConvergence {
                iterations: 0,
                best_value: value - shift,
                gradient_norm: gnorm2.sqrt(),
            });
        }
    }
    prog.lagrangian_gradient_into(&x, lambda, &mut grad);
    Err(Error::InnerNonConvergence {
        iterations: config.max_iterations,
        best_value: value - shift,
        gradient_norm: grad.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// f₀ = (z − 2)², f₁ = z.
    fn qp1d() -> ConvexProgram {
        let f0 = QuadraticFunction::new(
            DMatrix::from_element(1, 1, 2.0),
            DVector::from_element(1, -4.0),
            4.0,
        )
        .unwrap();
        let f1 = QuadraticFunction::affine(DVector::from_element(1, 1.0), 0.0).unwrap();
        ConvexProgram::with_identity_groups(Arc::new(f0), vec![Arc::new(f1)]).unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn lagrangian_examples() {
        let prog = qp1d();
        assert_eq!(lagrangian_eval(&prog, &v(&[1.0]), &v(&[0.0]), &v(&[0.0])).unwrap(), 1.0);
        assert_eq!(lagrangian_eval(&prog, &v(&[1.0]), &v(&[2.0]), &v(&[1.0])).unwrap(), 1.0);
        assert_eq!(lagrangian_eval(&prog, &v(&[0.0]), &v(&[1.0]), &v(&[0.0])).unwrap(), 4.0);
    }

    #[test]
    fn lagrangian_rejects_dimension_mismatch() {
        let prog = qp1d();
        let err = lagrangian_eval(&prog, &v(&[1.0, 2.0]), &v(&[0.0]), &v(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = lagrangian_eval(&prog, &v(&[1.0]), &v(&[0.0, 1.0]), &v(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn kkt_residual_vanishes_at_analytic_compromise() {
        let prog = qp1d();
        let h = SquaredNorm::new(1);
        let state = SaddleState::new(v(&[1.0]), v(&[2.0]), v(&[1.0]));
        let r = kkt_residual(&prog, &h, &state).unwrap();
        assert!(r.max_component() <= 1e-12, "{r:?}");
    }

    #[test]
    fn kkt_residual_at_origin() {
        let prog = qp1d();
        let h = SquaredNorm::new(1);
        let state = SaddleState::new(v(&[0.0]), v(&[0.0]), v(&[0.0]));
        let r = kkt_residual(&prog, &h, &state).unwrap();
        assert_eq!(r.stationarity, 4.0);
        assert_eq!(r.feasibility, 0.0);
        assert_eq!(r.complementarity, 0.0);
        assert_eq!(r.counterfactual, Some(0.0));
    }

    #[test]
    fn kkt_residual_rejects_negative_dual() {
        let prog = qp1d();
        let h = SquaredNorm::new(1);
        let state = SaddleState::new(v(&[0.0]), v(&[-0.1]), v(&[0.0]));
        assert!(matches!(
            kkt_residual(&prog, &h, &state),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn dual_function_examples() {
        let prog = qp1d();
        let cfg = InnerSolverConfig::default();
        let g = |l: f64, s: f64| dual_function_value(&prog, &v(&[l]), &v(&[s]), &cfg).unwrap();
        assert!(g(0.0, 0.0).abs() < 1e-12);
        assert!((g(2.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((g(4.0, 0.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dual_function_reports_cap() {
        let prog = qp1d();
        let cfg = InnerSolverConfig {
            max_iterations: 0,
            ..InnerSolverConfig::default()
        };
        let err = dual_function_value(&prog, &v(&[1.0]), &v(&[0.0]), &cfg).unwrap_err();
        match err {
            Error::InnerNonConvergence { best_value, .. } => assert_eq!(best_value, 4.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn group_map_validation() {
        assert!(GroupMap::new(vec![0, 0, 2], 3).is_err());
        assert!(GroupMap::new(vec![0, 3], 3).is_err());
        let g = GroupMap::new(vec![0, 1, 0, 1], 2).unwrap();
        assert_eq!(GroupMap::from_matrix(&g.to_matrix()).unwrap(), g);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(GroupMap::from_matrix(&bad).is_err());
        let not_binary = DMatrix::from_row_slice(1, 1, &[2.0]);
        assert!(GroupMap::from_matrix(&not_binary).is_err());
    }

    #[test]
    fn identity_groups_match_textbook_lagrangian() {
        let prog = qp1d();
        let (x, l, s) = (v(&[0.3]), v(&[1.7]), v(&[0.4]));
        let textbook = (0.3f64 - 2.0).powi(2) + 1.7 * (0.3 - 0.4);
        assert!((lagrangian_eval(&prog, &x, &l, &s).unwrap() - textbook).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn lagrangian_is_linear_in_slack(
            x in -3.0f64..3.0,
            l in proptest::collection::vec(0.0f64..5.0, 4),
            s in proptest::collection::vec(0.0f64..5.0, 2),
            s2 in proptest::collection::vec(0.0f64..5.0, 2),
        ) {
            // four constraints sharing two slacks
            let f0 = QuadraticFunction::new(
                DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, -1.0), 0.0).unwrap();
            let cons: Vec<Arc<dyn DifferentiableFunction>> = (0..4)
                .map(|k| Arc::new(QuadraticFunction::affine(
                    DVector::from_element(1, k as f64 - 1.5), 0.1 * k as f64).unwrap()) as _)
                .collect();
            let groups = GroupMap::new(vec![0, 1, 0, 1], 2).unwrap();
            let prog = ConvexProgram::new(Arc::new(f0), cons, groups.clone()).unwrap();
            let (xv, lv, sv, sv2) = (v(&[x]), DVector::from_vec(l), DVector::from_vec(s), DVector::from_vec(s2));
            let lhs = lagrangian_eval(&prog, &xv, &lv, &sv).unwrap()
                - lagrangian_eval(&prog, &xv, &lv, &sv2).unwrap();
            let rhs = -(groups.to_matrix().transpose() * &lv).dot(&(&sv - &sv2));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
