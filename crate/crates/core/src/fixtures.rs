//! Small programs with known compromise points, shared by tests and the CLI.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::{ConvexProgram, DifferentiableFunction, QuadraticFunction};

/// `(x − c)ᵀ W (x − c)` as a quadratic.
pub fn weighted_distance(weight: &DMatrix<f64>, center: &DVector<f64>) -> QuadraticFunction {
    let wc = weight * center;
    QuadraticFunction::new(weight * 2.0, &wc * -2.0, center.dot(&wc))
        .expect("weight matrix must be symmetric")
}

fn affine(a: &[f64], b: f64) -> Arc<dyn DifferentiableFunction> {
    Arc::new(QuadraticFunction::affine(DVector::from_row_slice(a), b).unwrap())
}

/// `f₀ = (z − 2)²`, `f₁ = z`. Compromise at `z = 1`, `λ = 2`, `s = 1`.
pub fn qp1d() -> ConvexProgram {
    let f0 = weighted_distance(&DMatrix::identity(1, 1), &DVector::from_element(1, 2.0));
    ConvexProgram::with_identity_groups(Arc::new(f0), vec![affine(&[1.0], 0.0)]).unwrap()
}

/// `f₀ = z²`, `f₁ = z − 1`: the constraint is slack at the unconstrained
/// optimum, so the compromise is the nominal specification.
pub fn inactive() -> ConvexProgram {
    let f0 = weighted_distance(&DMatrix::identity(1, 1), &DVector::zeros(1));
    ConvexProgram::with_identity_groups(Arc::new(f0), vec![affine(&[1.0], -1.0)]).unwrap()
}

/// `f₀ = ‖z − (2, 1)‖²`, `f₁ = z₁`, `f₂ = z₂`.
pub fn box2d() -> ConvexProgram {
    let f0 = weighted_distance(&DMatrix::identity(2, 2), &DVector::from_vec(vec![2.0, 1.0]));
    ConvexProgram::with_identity_groups(
        Arc::new(f0),
        vec![affine(&[1.0, 0.0], 0.0), affine(&[0.0, 1.0], 0.0)],
    )
    .unwrap()
}

/// Seeded random strongly convex QP in two variables with two linear
/// constraints `aᵢᵀz + bᵢ ≤ sᵢ`.
///
/// The constraint normals are at least 45° away from antiparallel, so the
/// nominal specification always admits a strictly feasible point.
pub fn random_qp2d(seed: u64) -> ConvexProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = Matrix2::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let w = l * l.transpose() + Matrix2::identity() * 0.5;
    let weight = DMatrix::from_fn(2, 2, |i, j| w[(i, j)]);
    let center = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..2.5));
    let f0 = weighted_distance(&weight, &center);

    let theta1: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let sep: f64 = rng.gen_range(std::f64::consts::FRAC_PI_4..3.0 * std::f64::consts::FRAC_PI_4);
    let theta2 = if rng.gen_bool(0.5) { theta1 + sep } else { theta1 - sep };
    let constraints = [theta1, theta2]
        .iter()
        .map(|t| affine(&[t.cos(), t.sin()], rng.gen_range(-0.5..0.5)))
        .collect();
    ConvexProgram::with_identity_groups(Arc::new(f0), constraints).unwrap()
}

/// Names accepted by [`by_name`].
pub const NAMES: &[&str] = &["qp1d", "inactive", "box2d", "qp2d"];

/// Built-in program by name; `seed` only matters for `qp2d`.
pub fn by_name(name: &str, seed: u64) -> Option<ConvexProgram> {
    match name {
        "qp1d" => Some(qp1d()),
        "inactive" => Some(inactive()),
        "box2d" => Some(box2d()),
        "qp2d" => Some(random_qp2d(seed)),
        _ => None,
    }
}
