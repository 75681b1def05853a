use nalgebra::DVector;

/// Cost of relaxing the constraint specifications.
///
/// `h` must vanish at the nominal specification, be non-decreasing on the
/// nonnegative orthant, and be strongly convex so that `∇h` is invertible.
pub trait SpecCost: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, s: &DVector<f64>) -> f64;

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64>;

    /// `(∇h)⁻¹`, mapping aggregated duals back to a specification.
    fn gradient_inverse(&self, dual: &DVector<f64>) -> DVector<f64>;
}

/// `h(s) = ‖s‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SquaredNorm {
    dim: usize,
}

impl SquaredNorm {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SpecCost for SquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, s: &DVector<f64>) -> f64 {
        s.norm_squared()
    }

    fn gradient(&self, s: &DVector<f64>) -> DVector<f64> {
        s * 2.0
    }

    fn gradient_inverse(&self, dual: &DVector<f64>) -> DVector<f64> {
        dual * 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nominal_specification_is_free() {
        let h = SquaredNorm::new(3);
        assert_eq!(h.value(&DVector::zeros(3)), 0.0);
    }

    proptest! {
        #[test]
        fn gradient_inverse_round_trips(s in proptest::collection::vec(0.0f64..50.0, 1..6)) {
            let h = SquaredNorm::new(s.len());
            let s = DVector::from_vec(s);
            let back = h.gradient_inverse(&h.gradient(&s));
            prop_assert!((back - &s).amax() <= 1e-10);
        }

        #[test]
        fn gradient_nonnegative_on_orthant(s in proptest::collection::vec(0.0f64..50.0, 1..6)) {
            let h = SquaredNorm::new(s.len());
            prop_assert!(h.gradient(&DVector::from_vec(s)).iter().all(|g| *g >= 0.0));
        }
    }
}
