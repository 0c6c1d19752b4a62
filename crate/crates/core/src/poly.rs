//! Fixed-degree polynomials evaluated with Horner's scheme.

/// Polynomial with `N` coefficients stored from the highest degree down to
/// the constant term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polynomial<const N: usize> {
    coefficients: [f64; N],
}

impl<const N: usize> Polynomial<N> {
    /// `coefficients[0]` multiplies `x^(N-1)`, the last entry is the constant.
    pub const fn new(coefficients: [f64; N]) -> Self {
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[f64; N] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        N.saturating_sub(1)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Derivative evaluated at `x`, also by Horner.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, &c) in self
            .coefficients
            .iter()
            .enumerate()
            .take(N.saturating_sub(1))
        {
            let power = (N - 1 - i) as f64;
            acc = acc * x + c * power;
        }
        acc
    }

    /// Same coefficients in the opposite order.
    pub fn reversed(&self) -> Self {
        let mut coefficients = self.coefficients;
        coefficients.reverse();
        Self { coefficients }
    }
}
