//! Independent evaluation of the perturbation function `p*(s)` and the
//! checks built on it: the compromise inequality, the sensitivity identity
//! `Gᵀλ*(s) = −∇p*(s)`, and per-slack constraint difficulty.
//!
//! Programs with `n ≤ 2` are minimized by exhaustive grid search with
//! iterative box refinement, which never touches the primal-dual code path.
//! Larger programs fall back to the fixed-slack solver and certify the
//! result with the dual function.

use log::debug;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::problem::{dual_function_value, ConvexProgram, InnerSolverConfig, SpecCost};
use crate::solver::{solve_fixed_slack, SolverConfig};

/// Optimal value of the program at a given specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PStar {
    Finite(f64),
    /// No feasible point; stands for `+∞`.
    Infeasible,
}

impl PStar {
    pub fn finite(self) -> Option<f64> {
        match self {
            PStar::Finite(v) => Some(v),
            PStar::Infeasible => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, PStar::Finite(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSample {
    pub s: DVector<f64>,
    pub p_star: PStar,
    pub x_star: Option<DVector<f64>>,
    /// Constraint duals, available when the value came from the solver path.
    pub duals: Option<DVector<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Primal search box `[lo, hi]ⁿ` for the grid oracle.
    pub primal_lo: f64,
    pub primal_hi: f64,
    /// Points per axis on the first grid level.
    pub coarse_points: usize,
    /// Grid spacing at which refinement stops.
    pub resolution: f64,
    pub feasibility_tol: f64,
    /// Fixed-slack solver used when `n > 2`.
    pub fixed_slack: SolverConfig,
    pub inner: InnerSolverConfig,
    /// Allowed gap between the fixed-slack value and the dual bound.
    pub cross_check_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            primal_lo: -5.0,
            primal_hi: 5.0,
            coarse_points: 41,
            resolution: 1e-9,
            feasibility_tol: 1e-12,
            fixed_slack: SolverConfig {
                eta: 1e-3,
                max_iterations: 5_000_000,
                tolerance: 1e-8,
                trace_stride: usize::MAX,
            },
            inner: InnerSolverConfig::default(),
            cross_check_tol: 1e-4,
        }
    }
}

const GRID_MAX_DIM: usize = 2;
// each refinement level divides the grid spacing by this factor
const REFINE_FACTOR: usize = 4;

/// `p*(s)` with its minimizer.
pub fn p_star_oracle(
    prog: &ConvexProgram,
    s: &DVector<f64>,
    config: &OracleConfig,
) -> Result<PerturbationSample> {
    p_star_oracle_warm(prog, s, config, None)
}

/// As [`p_star_oracle`], warm-starting the fixed-slack path (`n > 2`) from
/// a primal-dual pair. The grid path ignores the warm start.
pub fn p_star_oracle_warm(
    prog: &ConvexProgram,
    s: &DVector<f64>,
    config: &OracleConfig,
    warm: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<PerturbationSample> {
    prog.check_slacks(s)?;
    if prog.dim() <= GRID_MAX_DIM {
        Ok(grid_oracle(prog, s, config))
    } else {
        solver_oracle(prog, s, config, warm)
    }
}

/// Grid ranking: feasible points first (zero violation), then by objective.
/// Infeasible points are ranked by violation so refinement can home in on a
/// feasible interval shorter than the coarse spacing.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
struct Rank {
    violation: f64,
    value: f64,
}

/// Minimizer of `eval` over `[primal_lo, primal_hi]` by a coarse grid
/// followed by nested refinement around the incumbent. Scans run left to
/// right and the first minimum wins.
///
/// The ranking along a line is unimodal (convex violation, then convex
/// objective), so the minimizer always lies within one spacing of the grid
/// argmin and a ±1 spacing window suffices.
fn refine_1d<T>(config: &OracleConfig, mut eval: impl FnMut(f64) -> (Rank, T)) -> (Rank, f64, T) {
    let mut scan = |start: f64, spacing: f64, points: usize, best: &mut Option<(Rank, f64, T)>| {
        for k in 0..points {
            let t = start + spacing * k as f64;
            let (rank, extra) = eval(t);
            if best.as_ref().is_none_or(|b| rank < b.0) {
                *best = Some((rank, t, extra));
            }
        }
    };
    let points = config.coarse_points.max(2);
    let mut spacing = (config.primal_hi - config.primal_lo) / (points - 1) as f64;
    let mut best = None;
    scan(config.primal_lo, spacing, points, &mut best);
    let fine_points = 2 * REFINE_FACTOR + 1;
    while spacing > config.resolution {
        let center = best.as_ref().map_or(0.0, |b| b.1);
        let half_width = spacing;
        spacing /= REFINE_FACTOR as f64;
        // the incumbent lies on the refined grid, so this never loses ground
        scan(center - half_width, spacing, fine_points, &mut best);
    }
    best.expect("the coarse grid has at least two points")
}

/// Grid oracle for `n ≤ 2`. In two dimensions the search is nested: an outer
/// 1-D grid over `x₀` of `φ(x₀) = min over feasible x₁ of f₀`, with `φ`
/// itself evaluated by a 1-D grid. Sections of a convex feasible set are
/// intervals and `φ` is convex, so refinement tracks tilted constraint
/// boundaries that a tensor grid would only staircase around.
fn grid_oracle(prog: &ConvexProgram, s: &DVector<f64>, config: &OracleConfig) -> PerturbationSample {
    let bound = prog.groups().expand(s);
    let rank = |x: &DVector<f64>| -> Rank {
        let violation = prog
            .constraints()
            .iter()
            .zip(bound.iter())
            .map(|(c, &b)| c.value(x) - b - config.feasibility_tol)
            .fold(0.0, f64::max);
        Rank {
            violation,
            value: if violation > 0.0 { 0.0 } else { prog.objective().value(x) },
        }
    };
    let mut x = DVector::zeros(prog.dim());
    let (best, point) = if prog.dim() == 1 {
        let (best, t, ()) = refine_1d(config, |t| {
            x[0] = t;
            (rank(&x), ())
        });
        (best, vec![t])
    } else {
        let (best, outer, inner) = refine_1d(config, |outer| {
            let (r, inner, ()) = refine_1d(config, |inner| {
                x[0] = outer;
                x[1] = inner;
                (rank(&x), ())
            });
            (r, inner)
        });
        (best, vec![outer, inner])
    };
    let feasible = best.violation <= 0.0;
    PerturbationSample {
        s: s.clone(),
        p_star: if feasible { PStar::Finite(best.value) } else { PStar::Infeasible },
        x_star: feasible.then(|| DVector::from_vec(point)),
        duals: None,
    }
}

fn solver_oracle(
    prog: &ConvexProgram,
    s: &DVector<f64>,
    config: &OracleConfig,
    warm: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<PerturbationSample> {
    let report = solve_fixed_slack(
        prog,
        s,
        &config.fixed_slack,
        warm.map(|w| w.0),
        warm.map(|w| w.1),
    )?;
    if !report.converged {
        return Err(Error::OracleInconsistency(format!(
            "fixed-slack solve at s = {:?} stopped after {} iterations with residual {:e}; \
             the specification may be infeasible",
            s.as_slice(),
            report.iterations,
            report.residual.max_component()
        )));
    }
    let x = report.state.x;
    let primal = prog.objective().value(&x);
    let dual = dual_function_value(prog, &report.state.lambda, s, &config.inner)?;
    if (primal - dual).abs() > config.cross_check_tol {
        return Err(Error::OracleInconsistency(format!(
            "duality gap {:e} at s = {:?} exceeds {:e}",
            primal - dual,
            s.as_slice(),
            config.cross_check_tol
        )));
    }
    Ok(PerturbationSample {
        s: s.clone(),
        p_star: PStar::Finite(primal),
        x_star: Some(x),
        duals: Some(report.state.lambda),
    })
}

/// Reference specifications against which a candidate compromise is tested.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Tensor grid `{lo, lo + step, …, hi}^{m_s}`.
    Box { lo: f64, hi: f64, step: f64 },
    /// `s† + o·eⱼ` for every slack axis `j` and offset `o`, clamped at zero.
    Axes { offsets: Vec<f64> },
    Points { points: Vec<Vec<f64>> },
}

impl GridSpec {
    pub fn references(&self, center: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        let m = center.len();
        match self {
            GridSpec::Box { lo, hi, step } => {
                if !(*step > 0.0) || hi < lo || *lo < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "slack grid needs 0 ≤ lo ≤ hi and step > 0, got [{lo}, {hi}] step {step}"
                    )));
                }
                let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
                let axis: Vec<f64> = (0..count).map(|k| lo + step * k as f64).collect();
                let total = count.pow(m as u32);
                Ok((0..total)
                    .map(|flat| {
                        let mut rem = flat;
                        DVector::from_fn(m, |_, _| {
                            let v = axis[rem % count];
                            rem /= count;
                            v
                        })
                    })
                    .collect())
            }
            GridSpec::Axes { offsets } => {
                let mut refs = Vec::with_capacity(m * offsets.len());
                for j in 0..m {
                    for &o in offsets {
                        let mut s = center.clone();
                        s[j] = (s[j] + o).max(0.0);
                        refs.push(s);
                    }
                }
                Ok(refs)
            }
            GridSpec::Points { points } => points
                .iter()
                .map(|p| {
                    check_dim("reference point", m, p.len())?;
                    Ok(DVector::from_row_slice(p))
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceEvaluation {
    #[serde(with = "crate::vector_serde")]
    pub s: DVector<f64>,
    pub p_star: PStar,
    /// `p*(s₀) + h(s₀)`, absent when `s₀` is infeasible.
    pub total_cost: Option<f64>,
}

/// Outcome of testing `p*(s†) + h(s†) ≤ p*(s₀) + h(s₀)` over a reference set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompromiseCertificate {
    #[serde(with = "crate::vector_serde")]
    pub s_dagger: DVector<f64>,
    pub p_star_dagger: f64,
    pub total_cost_dagger: f64,
    pub references: Vec<ReferenceEvaluation>,
    /// `max over feasible s₀ of h(s†) − h(s₀) − p*(s₀) + p*(s†)`.
    pub worst_violation: f64,
    #[serde(with = "crate::vector_serde")]
    pub worst_reference: DVector<f64>,
    pub skipped_infeasible: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn verify_compromise(
    prog: &ConvexProgram,
    spec_cost: &dyn SpecCost,
    s_dagger: &DVector<f64>,
    grid: &GridSpec,
    tolerance: f64,
    config: &OracleConfig,
) -> Result<CompromiseCertificate> {
    check_dim("spec cost dimension", prog.num_slacks(), spec_cost.dim())?;
    let dagger = p_star_oracle(prog, s_dagger, config)?;
    let Some(p_dagger) = dagger.p_star.finite() else {
        return Err(Error::Precondition(format!(
            "candidate specification {:?} is infeasible",
            s_dagger.as_slice()
        )));
    };
    let q_dagger = p_dagger + spec_cost.value(s_dagger);
    let warm = dagger.x_star.as_ref().zip(dagger.duals.as_ref());

    let mut references = Vec::new();
    let mut worst: Option<(f64, DVector<f64>)> = None;
    let mut skipped = 0;
    for s0 in grid.references(s_dagger)? {
        let sample = p_star_oracle_warm(prog, &s0, config, warm)?;
        let total_cost = sample.p_star.finite().map(|p| p + spec_cost.value(&s0));
        match total_cost {
            Some(q0) => {
                let violation = q_dagger - q0;
                if worst.as_ref().is_none_or(|(w, _)| violation > *w) {
                    worst = Some((violation, s0.clone()));
                }
            }
            None => skipped += 1,
        }
        references.push(ReferenceEvaluation {
            s: s0,
            p_star: sample.p_star,
            total_cost,
        });
    }
    let (worst_violation, worst_reference) = worst.ok_or(Error::InsufficientGrid)?;
    debug!(
        "compromise check: worst violation {worst_violation:e} at {:?} ({skipped} infeasible references skipped)",
        worst_reference.as_slice()
    );
    Ok(CompromiseCertificate {
        s_dagger: s_dagger.clone(),
        p_star_dagger: p_dagger,
        total_cost_dagger: q_dagger,
        references,
        worst_violation,
        worst_reference,
        skipped_infeasible: skipped,
        tolerance,
        passed: worst_violation <= tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    #[serde(with = "crate::vector_serde")]
    pub s: DVector<f64>,
    /// `−∇p*(s)` by finite differences of the oracle.
    #[serde(with = "crate::vector_serde")]
    pub lambda_oracle: DVector<f64>,
    /// `Gᵀλ*(s)` from the fixed-slack solver.
    #[serde(with = "crate::vector_serde")]
    pub lambda_solver: DVector<f64>,
    pub max_error: f64,
}

/// Compares `−∇p*(s)` (finite differences of [`p_star_oracle`]) against
/// the aggregated duals of a fixed-slack solve at `s`.
///
/// Coordinates with `sⱼ < fd_step` use a second-order forward stencil so
/// the oracle is never queried at a negative specification.
pub fn sensitivity_check(
    prog: &ConvexProgram,
    s: &DVector<f64>,
    fd_step: f64,
    solver: &SolverConfig,
    config: &OracleConfig,
) -> Result<SensitivityReport> {
    prog.check_slacks(s)?;
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument(format!("fd_step must be positive, got {fd_step}")));
    }
    let eval = |probe: &DVector<f64>, coordinate: usize| -> Result<f64> {
        p_star_oracle(prog, probe, config)?
            .p_star
            .finite()
            .ok_or(Error::Stencil { coordinate })
    };
    let m = prog.num_slacks();
    let mut lambda_oracle = DVector::zeros(m);
    for j in 0..m {
        let mut probe = s.clone();
        let derivative = if s[j] >= fd_step {
            probe[j] = s[j] + fd_step;
            let up = eval(&probe, j)?;
            probe[j] = s[j] - fd_step;
            let down = eval(&probe, j)?;
            (up - down) / (2.0 * fd_step)
        } else {
            let here = eval(&probe, j)?;
            probe[j] = s[j] + fd_step;
            let one = eval(&probe, j)?;
            probe[j] = s[j] + 2.0 * fd_step;
            let two = eval(&probe, j)?;
            (-3.0 * here + 4.0 * one - two) / (2.0 * fd_step)
        };
        lambda_oracle[j] = -derivative;
    }

    let report = solve_fixed_slack(prog, s, solver, None, None)?;
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            max_residual: report.residual.max_component(),
            report: Box::new(report),
        });
    }
    let lambda_solver = prog.groups().aggregate(&report.state.lambda);
    let max_error = (&lambda_oracle - &lambda_solver).amax();
    Ok(SensitivityReport {
        s: s.clone(),
        lambda_oracle,
        lambda_solver,
        max_error,
    })
}

/// Performance gained by relaxing one slack by `δ` from the nominal
/// specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Difficulty {
    Finite(f64),
    /// The nominal problem is infeasible and the relaxation restores
    /// feasibility; stands for `+∞`.
    RestoresFeasibility,
}

/// `Δⱼ = p*(0) − p*(δ·eⱼ)`.
pub fn constraint_difficulty(
    prog: &ConvexProgram,
    slack: usize,
    delta: f64,
    config: &OracleConfig,
) -> Result<Difficulty> {
    let m = prog.num_slacks();
    if slack >= m {
        return Err(Error::InvalidArgument(format!(
            "slack index {slack} out of range for {m} slacks"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let nominal = p_star_oracle(prog, &DVector::zeros(m), config)?.p_star;
    let mut relaxed_s = DVector::zeros(m);
    relaxed_s[slack] = delta;
    let relaxed = p_star_oracle(prog, &relaxed_s, config)?.p_star;
    match (nominal, relaxed) {
        (PStar::Finite(a), PStar::Finite(b)) => Ok(Difficulty::Finite(a - b)),
        (PStar::Infeasible, PStar::Finite(_)) => Ok(Difficulty::RestoresFeasibility),
        (PStar::Infeasible, PStar::Infeasible) => Err(Error::UndefinedDifficulty),
        (PStar::Finite(_), PStar::Infeasible) => Err(Error::OracleInconsistency(
            "relaxed specification infeasible while the nominal one is feasible".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::problem::{QuadraticFunction, SquaredNorm};
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(xs)
    }

    fn p(prog: &ConvexProgram, s: f64) -> PStar {
        p_star_oracle(prog, &v(&[s]), &OracleConfig::default())
            .unwrap()
            .p_star
    }

    #[test]
    fn qp1d_perturbation_values() {
        let prog = fixtures::qp1d();
        for (s, expected) in [(0.0, 4.0), (1.0, 1.0), (2.0, 0.0), (3.0, 0.0), (0.5, 2.25)] {
            let got = p(&prog, s).finite().unwrap();
            assert!((got - expected).abs() < 1e-8, "p*({s}) = {got}");
        }
    }

    #[test]
    fn infeasible_nominal_specification() {
        // f₁ = z² + 1 can never be ≤ 0
        let f0 = fixtures::qp1d().objective_arc();
        let f1 = QuadraticFunction::new(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 1.0)
            .unwrap();
        let prog = ConvexProgram::with_identity_groups(f0, vec![Arc::new(f1)]).unwrap();
        assert_eq!(p(&prog, 0.0), PStar::Infeasible);
        assert!(p(&prog, 1.0).is_feasible());
    }

    #[test]
    fn minimizer_is_feasible() {
        let prog = fixtures::box2d();
        let sample = p_star_oracle(&prog, &v(&[0.3, 0.1]), &OracleConfig::default()).unwrap();
        let x = sample.x_star.unwrap();
        let vals = prog.constraint_values(&x);
        assert!(vals[0] <= 0.3 + 1e-8 && vals[1] <= 0.1 + 1e-8);
    }

    #[test]
    fn compromise_certificate_examples() {
        let prog = fixtures::qp1d();
        let h = SquaredNorm::new(1);
        let grid = GridSpec::Box { lo: 0.0, hi: 3.0, step: 0.25 };
        let cfg = OracleConfig::default();
        let good = verify_compromise(&prog, &h, &v(&[1.0]), &grid, 1e-6, &cfg).unwrap();
        assert!(good.passed);
        assert!(good.worst_violation <= 1e-6);
        assert_eq!(good.references.len(), 13);

        let bad = verify_compromise(&prog, &h, &v(&[0.5]), &grid, 1e-6, &cfg).unwrap();
        assert!(!bad.passed);
        assert!((bad.worst_violation - 0.5).abs() < 1e-6);
        assert_eq!(bad.worst_reference, v(&[1.0]));
    }

    #[test]
    fn all_infeasible_grid_is_an_error() {
        let f0 = fixtures::qp1d().objective_arc();
        let f1 = QuadraticFunction::new(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 1.0)
            .unwrap();
        let prog = ConvexProgram::with_identity_groups(f0, vec![Arc::new(f1)]).unwrap();
        let grid = GridSpec::Points { points: vec![vec![0.0], vec![0.5]] };
        let err = verify_compromise(
            &prog,
            &SquaredNorm::new(1),
            &v(&[2.0]),
            &grid,
            1e-6,
            &OracleConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InsufficientGrid));
    }

    #[test]
    fn sensitivity_examples() {
        let prog = fixtures::qp1d();
        let cfg = OracleConfig::default();
        let solver = SolverConfig::default();
        let at1 = sensitivity_check(&prog, &v(&[1.0]), 1e-3, &solver, &cfg).unwrap();
        assert!((at1.lambda_oracle[0] - 2.0).abs() < 1e-4);
        assert!(at1.max_error <= 1e-2);
        let at3 = sensitivity_check(&prog, &v(&[3.0]), 1e-3, &solver, &cfg).unwrap();
        assert!(at3.lambda_oracle[0].abs() < 1e-6);
        assert!(at3.max_error <= 1e-2);
        // forward stencil at the boundary s = 0: −dp*/ds = 4
        let at0 = sensitivity_check(&prog, &v(&[0.0]), 1e-3, &solver, &cfg).unwrap();
        assert!((at0.lambda_oracle[0] - 4.0).abs() < 1e-4);
    }

    #[test]
    fn difficulty_examples() {
        let cfg = OracleConfig::default();
        let prog = fixtures::qp1d();
        let d = |delta| match constraint_difficulty(&prog, 0, delta, &cfg).unwrap() {
            Difficulty::Finite(v) => v,
            other => panic!("{other:?}"),
        };
        assert!((d(1.0) - 3.0).abs() < 1e-8);
        assert!((d(0.1) - 0.39).abs() < 1e-8);

        let inactive = fixtures::inactive();
        match constraint_difficulty(&inactive, 0, 1.0, &cfg).unwrap() {
            Difficulty::Finite(v) => assert!(v.abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(constraint_difficulty(&prog, 1, 1.0, &cfg).is_err());
    }

    #[test]
    fn difficulty_of_infeasible_nominal() {
        let cfg = OracleConfig::default();
        let f0 = fixtures::qp1d().objective_arc();
        let f1 = QuadraticFunction::new(DMatrix::from_element(1, 1, 2.0), DVector::zeros(1), 1.0)
            .unwrap();
        let prog = ConvexProgram::with_identity_groups(f0, vec![Arc::new(f1)]).unwrap();
        assert_eq!(
            constraint_difficulty(&prog, 0, 2.0, &cfg).unwrap(),
            Difficulty::RestoresFeasibility
        );
        assert!(matches!(
            constraint_difficulty(&prog, 0, 0.5, &cfg),
            Err(Error::UndefinedDifficulty)
        ));
    }

    #[test]
    fn axes_grid_clamps_at_zero() {
        let refs = GridSpec::Axes { offsets: vec![-0.5, 0.5] }
            .references(&v(&[0.2, 1.0]))
            .unwrap();
        assert_eq!(refs, vec![v(&[0.0, 1.0]), v(&[0.7, 1.0]), v(&[0.2, 0.5]), v(&[0.2, 1.5])]);
    }

    #[test]
    fn box_grid_includes_endpoints() {
        let refs = GridSpec::Box { lo: 0.0, hi: 3.0, step: 0.05 }.references(&v(&[0.0])).unwrap();
        assert_eq!(refs.len(), 61);
        assert!((refs[60][0] - 3.0).abs() < 1e-12);
    }
}
