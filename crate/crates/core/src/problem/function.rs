use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// A real-valued function on `R^n` with an analytic gradient.
///
/// Implementations must be pure: repeated calls at the same point return the
/// same values and no call mutates shared state.
pub trait DifferentiableFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `out += scale * ∇f(x)`. Override when the gradient can be
    /// accumulated without allocating.
    fn add_scaled_gradient(&self, x: &DVector<f64>, scale: f64, out: &mut DVector<f64>) {
        out.axpy(scale, &self.gradient(x), 1.0);
    }
}

/// `½ xᵀPx + qᵀx + r` with symmetric `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFunction {
    p: DMatrix<f64>,
    q: DVector<f64>,
    r: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl QuadraticFunction {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, r: f64) -> Result<Self> {
        let n = q.len();
        if n == 0 {
            return Err(Error::InvalidArgument("quadratic of dimension 0".into()));
        }
        check_dim("quadratic P rows", n, p.nrows())?;
        check_dim("quadratic P cols", n, p.ncols())?;
        for i in 0..n {
            for j in (i + 1)..n {
                if (p[(i, j)] - p[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "P is not symmetric at ({i}, {j}): {} vs {}",
                        p[(i, j)],
                        p[(j, i)]
                    )));
                }
            }
        }
        if p.iter().chain(q.iter()).any(|v| !v.is_finite()) || !r.is_finite() {
            return Err(Error::InvalidArgument("non-finite quadratic coefficient".into()));
        }
        Ok(Self { p, q, r })
    }

    /// Affine function `qᵀx + r`.
    pub fn affine(q: DVector<f64>, r: f64) -> Result<Self> {
        let n = q.len();
        Self::new(DMatrix::zeros(n, n), q, r)
    }

    /// `(aᵀx + b)²`, the form every condensed state constraint takes.
    pub fn squared_affine(a: &DVector<f64>, b: f64) -> Result<Self> {
        let p = a * a.transpose() * 2.0;
        Self::new(p, a * (2.0 * b), b * b)
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

impl DifferentiableFunction for QuadraticFunction {
    fn dim(&self) -> usize {
        self.q.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let n = self.q.len();
        let mut quad = 0.0;
        for j in 0..n {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let mut col = 0.0;
            for i in 0..n {
                col += self.p[(i, j)] * x[i];
            }
            quad += col * xj;
        }
        0.5 * quad + self.q.dot(x) + self.r
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p * x + &self.q
    }

    fn add_scaled_gradient(&self, x: &DVector<f64>, scale: f64, out: &mut DVector<f64>) {
        out.gemv(scale, &self.p, x, 1.0);
        out.axpy(scale, &self.q, 1.0);
    }
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;

/// A differentiable function assembled from a pair of closures.
#[derive(Clone)]
pub struct ClosureFunction {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradientFn>,
}

impl ClosureFunction {
    pub fn new(
        dim: usize,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl fmt::Debug for ClosureFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureFunction").field("dim", &self.dim).finish()
    }
}

impl DifferentiableFunction for ClosureFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }
}

/// Central-difference gradient, used to audit analytic gradients.
pub fn finite_difference_gradient(
    f: &dyn DifferentiableFunction,
    x: &DVector<f64>,
    step: f64,
) -> DVector<f64> {
    let mut probe = x.clone();
    DVector::from_fn(x.len(), |i, _| {
        let xi = x[i];
        probe[i] = xi + step;
        let up = f.value(&probe);
        probe[i] = xi - step;
        let down = f.value(&probe);
        probe[i] = xi;
        (up - down) / (2.0 * step)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_quadratic() -> QuadraticFunction {
        QuadraticFunction::new(
            DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]),
            DVector::from_vec(vec![-1.0, 0.5]),
            0.25,
        )
        .unwrap()
    }

    #[test]
    fn rejects_asymmetric_p() {
        let err = QuadraticFunction::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1e-9, 1.0]),
            DVector::zeros(2),
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn rejects_mismatched_dims() {
        let err = QuadraticFunction::new(DMatrix::zeros(3, 3), DVector::zeros(2), 0.0).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn gradient_is_px_plus_q() {
        let f = sample_quadratic();
        let x = DVector::from_vec(vec![0.7, -1.3]);
        let expected = f.p() * &x + f.q();
        assert_eq!(f.gradient(&x), expected);
        let mut acc = DVector::zeros(2);
        f.add_scaled_gradient(&x, 2.0, &mut acc);
        assert!((acc - expected * 2.0).norm() < 1e-15);
    }

    #[test]
    fn squared_affine_matches_direct_square() {
        let a = DVector::from_vec(vec![0.5, -2.0, 1.0]);
        let f = QuadraticFunction::squared_affine(&a, 1.5).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.25, -3.0]);
        let direct = (a.dot(&x) + 1.5).powi(2);
        assert!((f.value(&x) - direct).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn quadratic_gradient_matches_finite_differences(
            x0 in -3.0f64..3.0, x1 in -3.0f64..3.0,
        ) {
            let f = sample_quadratic();
            let x = DVector::from_vec(vec![x0, x1]);
            let analytic = f.gradient(&x);
            let numeric = finite_difference_gradient(&f, &x, 1e-5);
            let scale = analytic.norm().max(1.0);
            prop_assert!((analytic - numeric).norm() / scale < 1e-4);
        }

        #[test]
        fn closure_gradient_matches_finite_differences(
            x0 in -2.0f64..2.0, x1 in -2.0f64..2.0,
        ) {
            // log-sum-exp, a smooth non-quadratic convex function
            let f = ClosureFunction::new(
                2,
                |x| (x[0].exp() + x[1].exp()).ln(),
                |x| {
                    let z = x[0].exp() + x[1].exp();
                    DVector::from_vec(vec![x[0].exp() / z, x[1].exp() / z])
                },
            );
            let x = DVector::from_vec(vec![x0, x1]);
            let analytic = f.gradient(&x);
            let numeric = finite_difference_gradient(&f, &x, 1e-5);
            let scale = analytic.norm().max(1.0);
            prop_assert!((analytic - numeric).norm() / scale < 1e-4);
        }
    }
}
