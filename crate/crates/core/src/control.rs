//! Finite-horizon control problems in condensed form.
//!
//! The counterfactual controller asks every state and input coordinate to be
//! exactly zero at every step of the horizon (`[x_t]ᵢ² ≤ s_{x,i}`,
//! `[u_t]ⱼ² ≤ s_{u,j}`) and lets the primal-dual solver relax these
//! specifications to their compromise. The baseline is a finite-horizon LQR
//! solved by a single dense factorization. Both eliminate the states through
//! the dynamics recursion, so the inputs are the only decision variables.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::problem::{
    kkt_residual, ConvexProgram, DifferentiableFunction, GroupMap, KktResidual, QuadraticFunction,
    SaddleState, SpecCost,
};
use crate::solver::{solve_counterfactual, SolverConfig};

/// `x_t = A x_{t−1} + B u_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearDynamics {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LinearDynamics {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidArgument(format!(
                "state matrix must be square, got {}×{}",
                a.nrows(),
                a.ncols()
            )));
        }
        check_dim("input matrix rows", a.nrows(), b.nrows())?;
        if a.is_empty() || b.ncols() == 0 {
            return Err(Error::InvalidArgument("empty dynamics".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite dynamics entry".into()));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn num_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonProblem {
    dynamics: LinearDynamics,
    x0: DVector<f64>,
    horizon: usize,
    epsilon: f64,
}

impl HorizonProblem {
    /// `epsilon` weights the `ε‖u‖²` objective that makes the program
    /// strongly convex.
    pub fn new(dynamics: LinearDynamics, x0: DVector<f64>, horizon: usize, epsilon: f64) -> Result<Self> {
        check_dim("initial state", dynamics.num_states(), x0.len())?;
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "regularizer must be positive, got {epsilon}"
            )));
        }
        Ok(Self {
            dynamics,
            x0,
            horizon,
            epsilon,
        })
    }

    pub fn dynamics(&self) -> &LinearDynamics {
        &self.dynamics
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Slack layout: `ℓ` state slacks followed by `p` input slacks.
    pub fn num_slacks(&self) -> usize {
        self.dynamics.num_states() + self.dynamics.num_inputs()
    }
}

/// Stacked prediction `X = Φ x₀ + Γ U` with `X = (x_1, …, x_T)` and
/// `U = (u_1, …, u_T)`.
#[derive(Clone, Debug)]
struct Prediction {
    phi: DMatrix<f64>,
    gamma: DMatrix<f64>,
}

impl Prediction {
    fn new(dynamics: &LinearDynamics, horizon: usize) -> Self {
        let l = dynamics.num_states();
        let p = dynamics.num_inputs();
        // powers[k] = A^k
        let mut powers = Vec::with_capacity(horizon + 1);
        powers.push(DMatrix::identity(l, l));
        for k in 1..=horizon {
            powers.push(dynamics.a() * &powers[k - 1]);
        }
        let mut phi = DMatrix::zeros(l * horizon, l);
        let mut gamma = DMatrix::zeros(l * horizon, p * horizon);
        for t in 1..=horizon {
            phi.view_mut(((t - 1) * l, 0), (l, l)).copy_from(&powers[t]);
            for k in 1..=t {
                let block = &powers[t - k] * dynamics.b();
                gamma
                    .view_mut(((t - 1) * l, (k - 1) * p), (l, p))
                    .copy_from(&block);
            }
        }
        Self { phi, gamma }
    }

    #[cfg(test)]
    fn states(&self, x0: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.phi * x0 + &self.gamma * u
    }
}

/// Constraint rows `cᵢ(U) = aᵢᵀU + bᵢ` of the condensed problem; the
/// program constrains `cᵢ² ≤ s_{g(i)}`.
struct ConstraintRows {
    a: DMatrix<f64>,
    b: DVector<f64>,
    slack_of: Vec<usize>,
    num_slacks: usize,
}

impl ConstraintRows {
    fn new(hp: &HorizonProblem) -> Self {
        let l = hp.dynamics.num_states();
        let p = hp.dynamics.num_inputs();
        let horizon = hp.horizon;
        let n = p * horizon;
        let pred = Prediction::new(&hp.dynamics, horizon);
        let mut a = DMatrix::zeros((l + p) * horizon, n);
        let mut b = DVector::zeros((l + p) * horizon);
        a.rows_mut(0, l * horizon).copy_from(&pred.gamma);
        b.rows_mut(0, l * horizon).copy_from(&(&pred.phi * &hp.x0));
        a.view_mut((l * horizon, 0), (n, n)).fill_with_identity();
        let slack_of = (0..horizon)
            .flat_map(|_| 0..l)
            .chain((0..horizon).flat_map(|_| l..l + p))
            .collect();
        Self {
            a,
            b,
            slack_of,
            num_slacks: l + p,
        }
    }
}

/// Counterfactual horizon problem as a convex program in the stacked inputs.
///
/// Constraint rows are ordered `(t, i)` for the `ℓT` state constraints,
/// then `(t, j)` for the `pT` input constraints; state row `(t, i)` maps to
/// slack `i` and input row `(t, j)` to slack `ℓ + j`.
pub fn condense(hp: &HorizonProblem) -> Result<ConvexProgram> {
    condense_rows(hp, &ConstraintRows::new(hp))
}

fn condense_rows(hp: &HorizonProblem, rows: &ConstraintRows) -> Result<ConvexProgram> {
    let n = rows.a.ncols();
    let constraints = (0..rows.a.nrows())
        .map(|i| {
            let coeffs = rows.a.row(i).transpose();
            QuadraticFunction::squared_affine(&coeffs, rows.b[i])
                .map(|f| Arc::new(f) as Arc<dyn DifferentiableFunction>)
        })
        .collect::<Result<Vec<_>>>()?;
    let objective =
        QuadraticFunction::new(DMatrix::identity(n, n) * (2.0 * hp.epsilon), DVector::zeros(n), 0.0)?;
    ConvexProgram::new(
        Arc::new(objective),
        constraints,
        GroupMap::new(rows.slack_of.clone(), rows.num_slacks)?,
    )
}

/// Planned inputs and states over one horizon, with the per-step duals and
/// tuned specifications when the plan came from the counterfactual solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlSolution {
    pub inputs: Vec<DVector<f64>>,
    pub states: Vec<DVector<f64>>,
    /// `λ_{t,i}`; empty for LQR plans.
    pub state_duals: Vec<DVector<f64>>,
    /// `μ_{t,j}`; empty for LQR plans.
    pub input_duals: Vec<DVector<f64>>,
    pub slack_x: DVector<f64>,
    pub slack_u: DVector<f64>,
    pub epsilon: f64,
    pub residual: Option<KktResidual>,
    pub iterations: usize,
}

impl ControlSolution {
    pub fn stacked_inputs(&self) -> DVector<f64> {
        stack(&self.inputs)
    }

    pub fn stacked_duals(&self) -> DVector<f64> {
        let mut all = self.state_duals.clone();
        all.extend(self.input_duals.iter().cloned());
        stack(&all)
    }

    /// Initial point for the next receding-horizon plan: every per-step
    /// block moves one step earlier and the last block is repeated.
    pub fn shifted_warm_start(&self) -> WarmStart {
        let shift = |blocks: &[DVector<f64>]| -> Vec<DVector<f64>> {
            if blocks.is_empty() {
                return Vec::new();
            }
            let mut out: Vec<_> = blocks[1..].to_vec();
            out.push(blocks[blocks.len() - 1].clone());
            out
        };
        let mut duals = shift(&self.state_duals);
        duals.extend(shift(&self.input_duals));
        WarmStart {
            inputs: stack(&shift(&self.inputs)),
            duals: stack(&duals),
        }
    }
}

fn stack(blocks: &[DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        blocks.iter().map(|b| b.len()).sum(),
        blocks.iter().flat_map(|b| b.iter().copied()),
    )
}

fn split(v: &DVector<f64>, block: usize) -> Vec<DVector<f64>> {
    v.as_slice()
        .chunks(block)
        .map(DVector::from_row_slice)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarmStart {
    pub inputs: DVector<f64>,
    pub duals: DVector<f64>,
}

/// Tunes `(s_x, s_u)` and plans the inputs with the counterfactual solver.
pub fn solve_cf_control(
    hp: &HorizonProblem,
    spec_cost: &dyn SpecCost,
    config: &SolverConfig,
) -> Result<ControlSolution> {
    solve_cf_control_warm(hp, spec_cost, config, None)
}

pub fn solve_cf_control_warm(
    hp: &HorizonProblem,
    spec_cost: &dyn SpecCost,
    config: &SolverConfig,
    warm: Option<&WarmStart>,
) -> Result<ControlSolution> {
    check_dim("spec cost dimension", hp.num_slacks(), spec_cost.dim())?;
    let rows = ConstraintRows::new(hp);
    let prog = condense_rows(hp, &rows)?;
    let report = solve_counterfactual(
        &prog,
        spec_cost,
        config,
        warm.map(|w| &w.inputs),
        warm.map(|w| &w.duals),
    )?;
    let recovered = polish(&rows, hp.epsilon, spec_cost, &report.state, config.tolerance).and_then(|state| {
        let residual = kkt_residual(&prog, spec_cost, &state).ok()?;
        (residual.max_component() <= config.tolerance).then_some((state, residual))
    });
    let (state, residual) = match recovered {
        Some(found) => found,
        None if report.converged => (report.state.clone(), report.residual),
        None => {
            return Err(Error::NotConverged {
                iterations: report.iterations,
                max_residual: report.residual.max_component(),
                report: Box::new(report),
            })
        }
    };

    let l = hp.dynamics.num_states();
    let p = hp.dynamics.num_inputs();
    let horizon = hp.horizon;
    let u = &state.x;
    let lambda = &state.lambda;
    let s = &state.slack;
    Ok(ControlSolution {
        inputs: split(u, p),
        states: rollout(&hp.dynamics, &hp.x0, u),
        state_duals: split(&lambda.rows(0, l * horizon).into_owned(), l),
        input_duals: split(&lambda.rows(l * horizon, p * horizon).into_owned(), p),
        slack_x: s.rows(0, l).into_owned(),
        slack_u: s.rows(l, p).into_owned(),
        epsilon: hp.epsilon,
        residual: Some(residual),
        iterations: report.iterations,
    })
}

const POLISH_NEWTON_STEPS: usize = 30;

/// Refines a converged saddle point by solving the counterfactual KKT
/// system exactly on a working set of tight constraints.
///
/// With `ε = 1e-6` the inputs late in the horizon are often held only by
/// constraints that are tight with multipliers of order `ε`. The iteration
/// cannot resolve duals that small, and those inputs stop anywhere within the
/// stationarity tolerance. On the working set, with `rⱼ = √sⱼ` and
/// `νᵢ = 2λᵢcᵢ`, the conditions read
///
/// ```text
/// 2εU + Σ νᵢ aᵢ = 0,   aᵢᵀU + bᵢ = σᵢ r_{g(i)},   2rⱼ ∂ⱼh(r²) = Σ_{g(i)=j} σᵢ νᵢ
/// ```
///
/// which Newton's method solves from the iterate. Rows whose multiplier comes
/// out negative leave the set and violated rows join it, one at a time.
/// Returns `None` when this does not settle; the caller still checks the full
/// residual.
fn polish(
    rows: &ConstraintRows,
    epsilon: f64,
    spec_cost: &dyn SpecCost,
    state: &SaddleState,
    tolerance: f64,
) -> Option<SaddleState> {
    let n = rows.a.ncols();
    let m = rows.num_slacks;
    let total = rows.a.nrows();
    let c0 = &rows.a * &state.x + &rows.b;
    let mut sigma = c0.map(f64::signum);
    let mut active: Vec<usize> = (0..total)
        .filter(|&i| state.lambda[i] > 0.0 || c0[i] * c0[i] >= state.slack[rows.slack_of[i]] - 10.0 * tolerance)
        .filter(|&i| c0[i] != 0.0)
        .collect();

    let mut u = state.x.clone();
    let mut r = state.slack.map(|v| v.max(0.0).sqrt());
    let mut nu = vec![0.0; total];
    for &i in &active {
        nu[i] = 2.0 * state.lambda[i] * c0[i];
    }

    for _ in 0..2 * total {
        let k = active.len();
        let mut z = DVector::zeros(n + k + m);
        z.rows_mut(0, n).copy_from(&u);
        for (row, &i) in active.iter().enumerate() {
            z[n + row] = nu[i];
        }
        z.rows_mut(n + k, m).copy_from(&r);
        let grouped: Vec<bool> = (0..m)
            .map(|j| active.iter().any(|&i| rows.slack_of[i] == j))
            .collect();
        let residual = |z: &DVector<f64>| -> DVector<f64> {
            let u = z.rows(0, n);
            let r = z.rows(n + k, m);
            let mut f = DVector::zeros(n + k + m);
            let mut stat = u * (2.0 * epsilon);
            let mut flow = DVector::<f64>::zeros(m);
            for (row, &i) in active.iter().enumerate() {
                let nu = z[n + row];
                let a = rows.a.row(i);
                stat += a.transpose() * nu;
                f[n + row] = (a * u)[0] + rows.b[i] - sigma[i] * r[rows.slack_of[i]];
                flow[rows.slack_of[i]] += sigma[i] * nu;
            }
            f.rows_mut(0, n).copy_from(&stat);
            let grad_h = spec_cost.gradient(&r.map(|v| v * v));
            for j in 0..m {
                f[n + k + j] = if grouped[j] { 2.0 * r[j] * grad_h[j] - flow[j] } else { r[j] };
            }
            f
        };

        let mut f = residual(&z);
        for _ in 0..POLISH_NEWTON_STEPS {
            if f.amax() <= 1e-14 * (1.0 + z.amax()) {
                break;
            }
            let mut jac = DMatrix::zeros(z.len(), z.len());
            for col in 0..z.len() {
                let step = 1e-7 * (1.0 + z[col].abs());
                let mut probe = z.clone();
                probe[col] += step;
                jac.set_column(col, &((residual(&probe) - &f) / step));
            }
            let delta = jac.svd(true, true).solve(&f, 1e-12).ok()?;
            z -= delta;
            f = residual(&z);
        }
        if !(f.amax() <= 1e-10 && z.iter().all(|v| v.is_finite())) {
            return None;
        }

        u = z.rows(0, n).into_owned();
        r = z.rows(n + k, m).into_owned();
        if r.iter().any(|&v| v < 0.0) {
            return None;
        }
        for (row, &i) in active.iter().enumerate() {
            nu[i] = z[n + row];
        }
        let lambda_of = |i: usize| {
            let rj = r[rows.slack_of[i]];
            if rj > 0.0 { sigma[i] * nu[i] / (2.0 * rj) } else { 0.0 }
        };

        let negative = active
            .iter()
            .enumerate()
            .map(|(row, &i)| (row, lambda_of(i)))
            .filter(|&(_, l)| l < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((row, _)) = negative {
            nu[active.remove(row)] = 0.0;
            continue;
        }
        let c = &rows.a * &u + &rows.b;
        let violated = (0..total)
            .filter(|i| !active.contains(i))
            .map(|i| (i, c[i] * c[i] - r[rows.slack_of[i]].powi(2)))
            .filter(|&(_, v)| v > 0.1 * tolerance)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, _)) = violated {
            sigma[i] = c[i].signum();
            nu[i] = 0.0;
            active.push(i);
            continue;
        }

        let lambda = DVector::from_fn(total, |i, _| if active.contains(&i) { lambda_of(i) } else { 0.0 });
        return Some(SaddleState {
            x: u,
            lambda,
            slack: r.map(|v| v * v),
            iteration: state.iteration,
        });
    }
    None
}

/// Forward simulation of the stacked inputs from `x0`.
fn rollout(dynamics: &LinearDynamics, x0: &DVector<f64>, u: &DVector<f64>) -> Vec<DVector<f64>> {
    let mut x = x0.clone();
    split(u, dynamics.num_inputs())
        .iter()
        .map(|ut| {
            x = dynamics.step(&x, ut);
            x.clone()
        })
        .collect()
}

/// Per-step diagonal weights `Q_t`, `R_t`, stored as their diagonals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqrWeights {
    pub q: Vec<DVector<f64>>,
    pub r: Vec<DVector<f64>>,
}

impl LqrWeights {
    /// `Q_t = q·I`, `R_t = r·I` for every step.
    pub fn uniform(num_states: usize, num_inputs: usize, horizon: usize, q: f64, r: f64) -> Self {
        Self {
            q: vec![DVector::from_element(num_states, q); horizon],
            r: vec![DVector::from_element(num_inputs, r); horizon],
        }
    }

    pub fn validate(&self, num_states: usize, num_inputs: usize, horizon: usize) -> Result<()> {
        check_dim("state weight steps", horizon, self.q.len())?;
        check_dim("input weight steps", horizon, self.r.len())?;
        for (q, r) in self.q.iter().zip(&self.r) {
            check_dim("state weight size", num_states, q.len())?;
            check_dim("input weight size", num_inputs, r.len())?;
            if q.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument("state weights must be nonnegative".into()));
            }
            if r.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument("input weights must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Exact minimizer of `Σ_t x_tᵀQ_t x_t + u_tᵀR_t u_t` subject to the
/// dynamics, from the condensed normal equations.
pub fn solve_lqr(
    dynamics: &LinearDynamics,
    x0: &DVector<f64>,
    horizon: usize,
    weights: &LqrWeights,
) -> Result<ControlSolution> {
    check_dim("initial state", dynamics.num_states(), x0.len())?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    weights.validate(dynamics.num_states(), dynamics.num_inputs(), horizon)?;
    let pred = Prediction::new(dynamics, horizon);
    let q_bar = DMatrix::from_diagonal(&stack(&weights.q));
    let r_bar = DMatrix::from_diagonal(&stack(&weights.r));
    let gq = pred.gamma.transpose() * &q_bar;
    let hessian = &gq * &pred.gamma + r_bar;
    let linear = &gq * (&pred.phi * x0);
    let chol = hessian
        .cholesky()
        .ok_or_else(|| Error::Internal("LQR normal matrix is not positive definite".into()))?;
    let u = -chol.solve(&linear);
    Ok(ControlSolution {
        inputs: split(&u, dynamics.num_inputs()),
        states: rollout(dynamics, x0, &u),
        state_duals: Vec::new(),
        input_duals: Vec::new(),
        slack_x: DVector::zeros(0),
        slack_u: DVector::zeros(0),
        epsilon: 0.0,
        residual: None,
        iterations: 0,
    })
}

/// `Σ_t x_tᵀQ_t x_t + u_tᵀR_t u_t` for a planned trajectory.
pub fn lqr_cost(sol: &ControlSolution, weights: &LqrWeights) -> f64 {
    let quad = |v: &DVector<f64>, d: &DVector<f64>| v.component_mul(v).dot(d);
    sol.states
        .iter()
        .zip(&weights.q)
        .map(|(x, q)| quad(x, q))
        .chain(sol.inputs.iter().zip(&weights.r).map(|(u, r)| quad(u, r)))
        .sum()
}

const INPUT_WEIGHT_FLOOR: f64 = 1e-9;

/// LQR weights whose minimizer is the counterfactual plan:
/// `Q_t = diag(λ_t)` and `R_t = diag(μ_t) + εI`, floored at `1e-9` so the
/// input weight stays positive definite.
pub fn reconstruct_lqr_weights(sol: &ControlSolution) -> LqrWeights {
    LqrWeights {
        q: sol.state_duals.clone(),
        r: sol
            .input_duals
            .iter()
            .map(|mu| mu.map(|m| (m + sol.epsilon).max(INPUT_WEIGHT_FLOOR)))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::SquaredNorm;

    fn scalar(x0: f64, horizon: usize, epsilon: f64) -> HorizonProblem {
        let dynamics =
            LinearDynamics::new(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0))
                .unwrap();
        HorizonProblem::new(dynamics, DVector::from_element(1, x0), horizon, epsilon).unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    #[test]
    fn condensed_structure_single_step() {
        let prog = condense(&scalar(1.0, 1, 1e-6)).unwrap();
        assert_eq!(prog.num_constraints(), 2);
        assert_eq!(prog.groups().to_matrix(), DMatrix::identity(2, 2));
        let u = v(&[0.3]);
        let vals = prog.constraint_values(&u);
        assert!((vals[0] - 1.3f64.powi(2)).abs() < 1e-14);
        assert!((vals[1] - 0.09).abs() < 1e-14);
    }

    #[test]
    fn condensed_structure_shares_slacks_over_time() {
        let prog = condense(&scalar(1.0, 2, 1e-6)).unwrap();
        let g = prog.groups().to_matrix();
        assert_eq!((g.nrows(), g.ncols()), (4, 2));
        assert!(g.row_iter().all(|r| r.sum() == 1.0));
        assert!(g.column_iter().all(|c| c.sum() == 2.0));
    }

    #[test]
    fn zero_initial_state_is_feasible_at_zero() {
        let prog = condense(&scalar(0.0, 3, 1e-6)).unwrap();
        assert!(prog.constraint_values(&DVector::zeros(3)).iter().all(|v| *v <= 0.0));
    }

    #[test]
    fn scalar_compromise() {
        let sol = solve_cf_control(&scalar(1.0, 1, 1e-6), &SquaredNorm::new(2), &SolverConfig::default())
            .unwrap();
        assert!((sol.inputs[0][0] + 0.5).abs() < 1e-2);
        assert!((sol.states[0][0] - 0.5).abs() < 1e-2);
        assert!((sol.slack_x[0] - 0.25).abs() < 1e-2);
        assert!((sol.slack_u[0] - 0.25).abs() < 1e-2);
        assert!((sol.state_duals[0][0] - 0.5).abs() < 1e-2);
        assert!((sol.input_duals[0][0] - 0.5).abs() < 1e-2);
        // (1 + u) ↔ −u reflection symmetry
        assert!((sol.slack_x[0] - sol.slack_u[0]).abs() < 1e-3);
    }

    #[test]
    fn nothing_to_regulate() {
        let sol = solve_cf_control(&scalar(0.0, 2, 1e-6), &SquaredNorm::new(2), &SolverConfig::default())
            .unwrap();
        assert!(sol.stacked_inputs().amax() < 1e-3);
        assert!(sol.slack_x.amax() < 1e-3 && sol.slack_u.amax() < 1e-3);
        let w = reconstruct_lqr_weights(&sol);
        assert!(w.r.iter().all(|r| r.iter().all(|v| *v >= INPUT_WEIGHT_FLOOR)));
        let lqr = solve_lqr(scalar(0.0, 2, 1e-6).dynamics(), &v(&[0.0]), 2, &w).unwrap();
        assert!(lqr.stacked_inputs().amax() < 1e-12);
    }

    #[test]
    fn lqr_examples() {
        let hp = scalar(1.0, 1, 1e-6);
        let w = LqrWeights::uniform(1, 1, 1, 1.0, 1.0);
        let sol = solve_lqr(hp.dynamics(), hp.x0(), 1, &w).unwrap();
        assert!((sol.inputs[0][0] + 0.5).abs() < 1e-12);
        assert!((lqr_cost(&sol, &w) - 0.5).abs() < 1e-12);

        let heavy = LqrWeights::uniform(1, 1, 1, 4.0, 1.0);
        let sol = solve_lqr(hp.dynamics(), hp.x0(), 1, &heavy).unwrap();
        assert!((sol.inputs[0][0] + 0.8).abs() < 1e-12);

        let sol = solve_lqr(hp.dynamics(), &v(&[0.0]), 4, &LqrWeights::uniform(1, 1, 4, 1.0, 1.0))
            .unwrap();
        assert!(sol.stacked_inputs().iter().all(|u| *u == 0.0));
    }

    #[test]
    fn lqr_rejects_bad_weights() {
        let hp = scalar(1.0, 1, 1e-6);
        let w = LqrWeights::uniform(1, 1, 1, 1.0, 0.0);
        assert!(solve_lqr(hp.dynamics(), hp.x0(), 1, &w).is_err());
        let w = LqrWeights::uniform(1, 1, 2, 1.0, 1.0);
        assert!(solve_lqr(hp.dynamics(), hp.x0(), 1, &w).is_err());
    }

    #[test]
    fn reconstructed_weights_replay_plan() {
        let hp = scalar(1.0, 1, 1e-6);
        let sol = solve_cf_control(&hp, &SquaredNorm::new(2), &SolverConfig::default()).unwrap();
        let w = reconstruct_lqr_weights(&sol);
        assert!((w.q[0][0] - 0.5).abs() < 1e-2 && (w.r[0][0] - 0.5).abs() < 1e-2);
        let replay = solve_lqr(hp.dynamics(), hp.x0(), 1, &w).unwrap();
        assert!((replay.stacked_inputs() - sol.stacked_inputs()).amax() < 1e-3);
    }

    #[test]
    fn prediction_matches_recursion() {
        let dynamics = LinearDynamics::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.2, 0.9]),
            DMatrix::from_row_slice(2, 1, &[0.1, 1.0]),
        )
        .unwrap();
        let x0 = v(&[1.0, -2.0]);
        let u = v(&[0.3, -0.1, 0.7, 0.2]);
        let pred = Prediction::new(&dynamics, 4);
        let stacked = pred.states(&x0, &u);
        for (t, x) in rollout(&dynamics, &x0, &u).iter().enumerate() {
            assert!((stacked.rows(2 * t, 2) - x).amax() < 1e-12);
        }
    }

    #[test]
    fn warm_start_shifts_blocks() {
        let sol = ControlSolution {
            inputs: vec![v(&[1.0]), v(&[2.0]), v(&[3.0])],
            states: vec![],
            state_duals: vec![v(&[10.0]), v(&[20.0]), v(&[30.0])],
            input_duals: vec![v(&[4.0]), v(&[5.0]), v(&[6.0])],
            slack_x: v(&[0.0]),
            slack_u: v(&[0.0]),
            epsilon: 1e-6,
            residual: None,
            iterations: 0,
        };
        let w = sol.shifted_warm_start();
        assert_eq!(w.inputs, v(&[2.0, 3.0, 3.0]));
        assert_eq!(w.duals, v(&[20.0, 30.0, 30.0, 5.0, 6.0, 6.0]));
    }

    #[test]
    fn rejects_invalid_horizon_problem() {
        let d = scalar(1.0, 1, 1e-6).dynamics().clone();
        assert!(HorizonProblem::new(d.clone(), v(&[1.0]), 0, 1e-6).is_err());
        assert!(HorizonProblem::new(d.clone(), v(&[1.0]), 1, 0.0).is_err());
        assert!(HorizonProblem::new(d, v(&[1.0, 2.0]), 1, 1e-6).is_err());
    }
}
