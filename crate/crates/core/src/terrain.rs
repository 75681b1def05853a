//! Receding-horizon navigation over terrain with position-dependent friction.
//!
//! The agent is a planar double integrator whose velocity is damped by a
//! friction coefficient `γ(p) = ‖p‖⁻²` outside a slippery disc of radius
//! 0.3 around the goal (inside it `γ = 0`). The agent only measures `γ` at
//! its current position, so every plan assumes that value holds over the
//! whole horizon.

use std::time::Instant;

use log::{debug, info};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::control::{
    reconstruct_lqr_weights, solve_cf_control_warm, solve_lqr, ControlSolution, HorizonProblem,
    LinearDynamics, LqrWeights, WarmStart,
};
use crate::error::{Error, Result};
use crate::problem::SquaredNorm;
use crate::solver::SolverConfig;

pub const NUM_STATES: usize = 4;
pub const NUM_INPUTS: usize = 2;

/// Position and velocity, packed as `x = (p_x, p_y, v_x, v_y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl AgentState {
    pub fn from_vector(x: &DVector<f64>) -> Result<Self> {
        if x.len() != NUM_STATES || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "agent state must be 4 finite numbers, got {:?}",
                x.as_slice()
            )));
        }
        Ok(Self {
            position: [x[0], x[1]],
            velocity: [x[2], x[3]],
        })
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_row_slice(&[
            self.position[0],
            self.position[1],
            self.velocity[0],
            self.velocity[1],
        ])
    }

    pub fn norm(self) -> f64 {
        self.to_vector().norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerrainModel {
    /// Friction vanishes for `‖p‖ ≤ threshold_radius`.
    pub threshold_radius: f64,
}

impl Default for TerrainModel {
    fn default() -> Self {
        Self {
            threshold_radius: 0.3,
        }
    }
}

impl TerrainModel {
    pub fn friction(&self, p: [f64; 2]) -> f64 {
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2.sqrt() <= self.threshold_radius {
            0.0
        } else {
            1.0 / r2
        }
    }
}

/// Friction coefficient of the default terrain.
pub fn friction(p: [f64; 2]) -> f64 {
    TerrainModel::default().friction(p)
}

/// Exact zero-order-hold discretization of `ṗ = v`, `v̇ = −γv + a`, per
/// axis, with the two axes identical and decoupled.
pub fn discretize(gamma: f64, ts: f64) -> Result<LinearDynamics> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("friction must be nonnegative, got {gamma}")));
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::InvalidArgument(format!("sampling time must be positive, got {ts}")));
    }
    let gt = gamma * ts;
    // decay = e^{−γTs}; vel_gain = (1 − e^{−γTs})/γ; pos_gain = (Ts − vel_gain)/γ
    let (decay, vel_gain, pos_gain) = if gamma == 0.0 {
        (1.0, ts, 0.5 * ts * ts)
    } else if gt < 1e-4 {
        // series expansion avoids cancellation in (Ts − vel_gain)/γ
        let ts2 = ts * ts;
        (
            (-gt).exp(),
            ts * (1.0 - gt / 2.0 + gt * gt / 6.0),
            ts2 * (0.5 - gt / 6.0 + gt * gt / 24.0),
        )
    } else {
        let vel_gain = -(-gt).exp_m1() / gamma;
        ((-gt).exp(), vel_gain, (ts - vel_gain) / gamma)
    };

    let mut a = DMatrix::identity(NUM_STATES, NUM_STATES);
    let mut b = DMatrix::zeros(NUM_STATES, NUM_INPUTS);
    for axis in 0..2 {
        let (pos, vel) = (axis, axis + 2);
        a[(pos, vel)] = vel_gain;
        a[(vel, vel)] = decay;
        b[(pos, axis)] = pos_gain;
        b[(vel, axis)] = vel_gain;
    }
    LinearDynamics::new(a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Controller {
    /// Counterfactual MPC with `h(s) = ‖s‖²`.
    Counterfactual,
    /// Finite-horizon LQR with `Q_t = q·I`, `R_t = r·I`.
    Lqr { q: f64, r: f64 },
}

impl Controller {
    pub fn label(&self) -> String {
        match self {
            Controller::Counterfactual => "cf".to_string(),
            Controller::Lqr { q, r } if *q == 1.0 && *r == 1.0 => "lqr".to_string(),
            Controller::Lqr { q, r } => format!("lqr_q{q}_r{r}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub ts: f64,
    pub horizon: usize,
    /// Stop once `‖x‖ ≤ threshold`.
    pub threshold: f64,
    pub max_steps: usize,
    pub x0: [f64; 4],
    pub controller: Controller,
    /// Weight of the `ε‖u‖²` regularizer in the counterfactual plan.
    pub epsilon: f64,
    pub solver: SolverConfig,
    /// Start each counterfactual plan from the previous one, shifted.
    pub warm_start: bool,
    pub terrain: TerrainModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            ts: 0.5,
            horizon: 3,
            threshold: 0.1,
            max_steps: 200,
            x0: [1.5, 1.5, 0.0, 0.0],
            controller: Controller::Counterfactual,
            epsilon: 1e-6,
            solver: SolverConfig::default(),
            warm_start: true,
            terrain: TerrainModel::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0) {
            return Err(Error::InvalidArgument("sampling time must be positive".into()));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidArgument("stop threshold must be positive".into()));
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("initial state must be finite".into()));
        }
        if let Controller::Lqr { q, r } = self.controller {
            if !(q >= 0.0 && r > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "LQR weights need q ≥ 0 and r > 0, got q = {q}, r = {r}"
                )));
            }
        }
        self.solver.validate()
    }

    pub fn with_controller(&self, controller: Controller) -> Self {
        Self {
            controller,
            ..self.clone()
        }
    }
}

/// One receding-horizon decision.
#[derive(Clone, Debug, PartialEq)]
pub struct Tick {
    pub input: [f64; 2],
    pub gamma: f64,
    pub dynamics: LinearDynamics,
    pub plan: ControlSolution,
}

/// Plans a horizon from `current` with the friction measured there and
/// returns the first input of the plan.
pub fn mpc_tick(
    sim: &SimConfig,
    current: &AgentState,
    warm: Option<&WarmStart>,
) -> Result<Tick> {
    let gamma = sim.terrain.friction(current.position);
    let dynamics = discretize(gamma, sim.ts)?;
    let x = current.to_vector();
    let plan = match sim.controller {
        Controller::Counterfactual => {
            let hp = HorizonProblem::new(dynamics.clone(), x, sim.horizon, sim.epsilon)?;
            solve_cf_control_warm(&hp, &SquaredNorm::new(NUM_STATES + NUM_INPUTS), &sim.solver, warm)?
        }
        Controller::Lqr { q, r } => {
            let weights = LqrWeights::uniform(NUM_STATES, NUM_INPUTS, sim.horizon, q, r);
            solve_lqr(&dynamics, &x, sim.horizon, &weights)?
        }
    };
    let first = &plan.inputs[0];
    Ok(Tick {
        input: [first[0], first[1]],
        gamma,
        dynamics,
        plan,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub state: AgentState,
    pub input: [f64; 2],
    pub gamma: f64,
    /// Whole planned input sequence; `input` is its first element.
    pub planned_inputs: Vec<[f64; 2]>,
    /// Planned specifications; empty for LQR.
    pub slack_x: Vec<f64>,
    pub slack_u: Vec<f64>,
    pub solver_iterations: usize,
    pub tick_seconds: f64,
    /// Equivalent LQR weights of the counterfactual plan.
    pub weights: Option<LqrWeights>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub controller: Controller,
    pub records: Vec<StepRecord>,
    pub final_state: AgentState,
    pub reached: bool,
    /// Number of applied inputs before `‖x‖ ≤ threshold`.
    pub steps_to_threshold: Option<usize>,
    /// `Σ_t ‖u_t‖²` over applied inputs.
    pub energy: f64,
    pub total_tick_seconds: f64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.records.len()
    }
}

/// Runs the MPC loop until `‖x‖ ≤ threshold` or `max_steps` inputs have
/// been applied. The plant advances with the same frozen-friction step the
/// planner uses, evaluated at the pre-step position.
pub fn run_simulation(sim: &SimConfig) -> Result<Trajectory> {
    sim.validate()?;
    let mut state = AgentState::from_vector(&DVector::from_row_slice(&sim.x0))?;
    let mut records = Vec::new();
    let mut energy = 0.0;
    let mut total_tick_seconds = 0.0;
    let mut warm: Option<WarmStart> = None;
    let mut reached = state.norm() <= sim.threshold;

    while !reached && records.len() < sim.max_steps {
        let step = records.len();
        let started = Instant::now();
        let tick = mpc_tick(sim, &state, if sim.warm_start { warm.as_ref() } else { None })
            .map_err(|e| Error::Tick {
                step,
                source: Box::new(e),
            })?;
        let tick_seconds = started.elapsed().as_secs_f64();
        total_tick_seconds += tick_seconds;

        let u = DVector::from_row_slice(&tick.input);
        energy += u.norm_squared();
        let is_cf = matches!(sim.controller, Controller::Counterfactual);
        records.push(StepRecord {
            step,
            state,
            input: tick.input,
            gamma: tick.gamma,
            planned_inputs: tick.plan.inputs.iter().map(|u| [u[0], u[1]]).collect(),
            slack_x: tick.plan.slack_x.iter().copied().collect(),
            slack_u: tick.plan.slack_u.iter().copied().collect(),
            solver_iterations: tick.plan.iterations,
            tick_seconds,
            weights: is_cf.then(|| reconstruct_lqr_weights(&tick.plan)),
        });
        debug!(
            "step {step}: ‖x‖ = {:.4}, γ = {:.4}, u = {:?}, {} solver iterations",
            state.norm(),
            tick.gamma,
            tick.input,
            tick.plan.iterations
        );
        state = AgentState::from_vector(&tick.dynamics.step(&state.to_vector(), &u))?;
        if is_cf {
            warm = Some(tick.plan.shifted_warm_start());
        }
        reached = state.norm() <= sim.threshold;
    }

    let steps_to_threshold = reached.then_some(records.len());
    info!(
        "{} controller: reached={reached} after {} steps, energy {energy:.4}",
        sim.controller.label(),
        records.len()
    );
    Ok(Trajectory {
        controller: sim.controller,
        records,
        final_state: state,
        reached,
        steps_to_threshold,
        energy,
        total_tick_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friction_law() {
        assert_eq!(friction([1.0, 0.0]), 1.0);
        assert_eq!(friction([2.0, 0.0]), 0.25);
        assert_eq!(friction([0.2, 0.1]), 0.0);
        assert_eq!(friction([0.3, 0.0]), 0.0);
        assert!(friction([0.3 + 1e-12, 0.0]) > 11.0);
    }

    #[test]
    fn double_integrator_discretization() {
        let d = discretize(0.0, 0.5).unwrap();
        assert_eq!(d.a()[(0, 2)], 0.5);
        assert_eq!(d.a()[(1, 3)], 0.5);
        assert_eq!(d.a()[(2, 2)], 1.0);
        assert_eq!(d.b()[(2, 0)], 0.5);
        assert_eq!(d.b()[(0, 0)], 0.125);
        assert_eq!(d.b()[(0, 1)], 0.0);
    }

    #[test]
    fn unit_friction_discretization() {
        let d = discretize(1.0, 0.5).unwrap();
        assert!((d.a()[(2, 2)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((d.b()[(2, 0)] - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((d.b()[(2, 0)] - 0.3935).abs() < 1e-4);
        // p gain: Ts − (1 − e^{−Ts})
        assert!((d.b()[(0, 0)] - (0.5 - (1.0 - (-0.5f64).exp()))).abs() < 1e-15);
    }

    #[test]
    fn heavy_friction_limit() {
        let d = discretize(100.0, 0.5).unwrap();
        assert!(d.a()[(2, 2)] < 1e-20);
        assert!((d.b()[(2, 0)] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn small_friction_is_continuous() {
        let tiny = discretize(1e-7, 0.5).unwrap();
        let zero = discretize(0.0, 0.5).unwrap();
        assert!((tiny.a() - zero.a()).amax() < 1e-7);
        assert!((tiny.b() - zero.b()).amax() < 1e-7);
        // straddle the switch from the series to the closed form
        let below = discretize(2e-4 * (1.0 - 1e-9), 0.5).unwrap();
        let above = discretize(2e-4 * (1.0 + 1e-9), 0.5).unwrap();
        assert!((below.b() - above.b()).amax() < 1e-11);
        assert!((below.a() - above.a()).amax() < 1e-11);
    }

    #[test]
    fn zero_state_tick_is_idle() {
        let rest = AgentState { position: [0.0, 0.0], velocity: [0.0, 0.0] };
        for controller in [Controller::Counterfactual, Controller::Lqr { q: 1.0, r: 1.0 }] {
            let sim = SimConfig { controller, ..SimConfig::default() };
            let tick = mpc_tick(&sim, &rest, None).unwrap();
            assert!(tick.input[0].abs() < 1e-3 && tick.input[1].abs() < 1e-3);
        }
    }

    #[test]
    fn counterfactual_tick_is_certified() {
        let sim = SimConfig::default();
        let at = AgentState { position: [1.0, 0.0], velocity: [0.0, 0.0] };
        let tick = mpc_tick(&sim, &at, None).unwrap();
        assert_eq!(tick.gamma, 1.0);
        assert!(tick.plan.residual.unwrap().max_component() <= sim.solver.tolerance);
    }

    #[test]
    fn lqr_tick_matches_direct_solve() {
        let sim = SimConfig { controller: Controller::Lqr { q: 1.0, r: 1.0 }, ..SimConfig::default() };
        let at = AgentState { position: [1.0, 0.0], velocity: [0.0, 0.0] };
        let tick = mpc_tick(&sim, &at, None).unwrap();
        let direct = solve_lqr(
            &discretize(1.0, 0.5).unwrap(),
            &at.to_vector(),
            3,
            &LqrWeights::uniform(4, 2, 3, 1.0, 1.0),
        )
        .unwrap();
        assert_eq!(tick.input, [direct.inputs[0][0], direct.inputs[0][1]]);
        // the y axis is at rest at the origin and must stay idle
        assert_eq!(tick.input[1], 0.0);
    }

    #[test]
    fn start_at_goal() {
        let sim = SimConfig { x0: [0.0; 4], ..SimConfig::default() };
        let traj = run_simulation(&sim).unwrap();
        assert_eq!(traj.steps_to_threshold, Some(0));
        assert_eq!(traj.energy, 0.0);
        assert!(traj.records.is_empty());
    }

    #[test]
    fn step_cap_flags_unconverged() {
        let sim = SimConfig {
            controller: Controller::Lqr { q: 1.0, r: 1.0 },
            max_steps: 3,
            ..SimConfig::default()
        };
        let traj = run_simulation(&sim).unwrap();
        assert!(!traj.reached);
        assert_eq!(traj.steps_to_threshold, None);
        assert_eq!(traj.steps(), 3);
    }

    #[test]
    fn tick_failure_carries_step() {
        let sim = SimConfig {
            solver: SolverConfig { max_iterations: 5, ..SolverConfig::default() },
            ..SimConfig::default()
        };
        match run_simulation(&sim).unwrap_err() {
            Error::Tick { step, source } => {
                assert_eq!(step, 0);
                assert!(matches!(*source, Error::NotConverged { .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
