//! Pointwise maps used inside drift functionals and dissipativity checks.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

/// A map `ℝⁿ → ℝᵐ` evaluated pointwise along a history.
pub trait PointMap: Send + Sync + fmt::Debug {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Smallest `q` with `|g(x)| ≤ C(1 + |x|^q)`, when known. Used to decide
    /// whether a delay integral over an exponential tail converges.
    fn growth_degree(&self) -> Option<f64> {
        None
    }
}

/// Component-wise univariate polynomial `x_i ↦ Σ_k c_k x_i^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    coefficients: Vec<f64>,
}

impl Polynomial {
    /// `coefficients[k]` multiplies `x^k`.
    pub fn new(dim: usize, coefficients: Vec<f64>) -> Self {
        Self { dim, coefficients }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    #[inline]
    pub fn eval_scalar(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

impl PointMap for Polynomial {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        for (o, &xi) in out.iter_mut().zip(x) {
            *o = self.eval_scalar(xi);
        }
    }

    fn growth_degree(&self) -> Option<f64> {
        Some(self.degree() as f64)
    }
}

/// Wraps a closure as a [`PointMap`].
pub struct FnMap<F> {
    input_dim: usize,
    output_dim: usize,
    degree: Option<f64>,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(input_dim: usize, output_dim: usize, f: F) -> Self {
        Self { input_dim, output_dim, degree: None, f }
    }

    pub fn with_growth_degree(mut self, degree: f64) -> Self {
        self.degree = Some(degree);
        self
    }
}

impl<F> fmt::Debug for FnMap<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMap")
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

impl<F> PointMap for FnMap<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    fn growth_degree(&self) -> Option<f64> {
        self.degree
    }
}

pub type SharedMap = Arc<dyn PointMap>;

/// A nonnegative function `H: ℝⁿ × ℝⁿ → ℝ` with `H(x, x) = 0`.
pub trait PairFunction: Send + Sync + fmt::Debug {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;

    fn growth_degree(&self) -> Option<f64> {
        None
    }
}

/// `H(x, y) = (x - y)²(2x² + 2xy + 2y²)`, summed over coordinates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExampleH;

impl PairFunction for ExampleH {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(&a, &b)| {
                let d = a - b;
                // grouped so that swapping the arguments is bit-exact
                d * d * (2.0 * (a * a + b * b) + 2.0 * (a * b))
            })
            .sum()
    }

    fn growth_degree(&self) -> Option<f64> {
        Some(4.0)
    }
}

/// `H ≡ 0`, for drifts that only need the quadratic terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ZeroH;

impl PairFunction for ZeroH {
    fn eval(&self, _x: &[f64], _y: &[f64]) -> f64 {
        0.0
    }

    fn growth_degree(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn horner_matches_naive() {
        let p = Polynomial::new(1, vec![1.0, -2.0, 0.0, -2.0]);
        for &x in &[-1.5, 0.0, 0.5, 2.0] {
            assert!((p.eval_scalar(x) - (1.0 - 2.0 * x - 2.0 * x * x * x)).abs() < 1e-14);
        }
        assert_eq!(p.degree(), 3);
        assert_eq!(Polynomial::new(1, vec![0.0, 0.0]).degree(), 0);
    }

    proptest! {
        #[test]
        fn example_h_is_symmetric_and_vanishes_on_diagonal(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let h = ExampleH;
            prop_assert_eq!(h.eval(&[x], &[y]), h.eval(&[y], &[x]));
            prop_assert_eq!(h.eval(&[x], &[x]), 0.0);
            prop_assert!(h.eval(&[x], &[y]) >= 0.0);
            prop_assert!(h.eval(&[x], &[y]) <= 12.0 * (x.powi(4) + y.powi(4)) * (1.0 + 1e-12));
        }
    }
}
