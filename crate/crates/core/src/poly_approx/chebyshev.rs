use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Grid size used to record the achieved fit error.
pub const FIT_GRID_POINTS: usize = 10_001;

/// Polynomial in the Chebyshev basis of `[lo, hi]`:
/// `p(x) = Σ c_i T_i(u)` with `u = (2x − lo − hi) / (hi − lo)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChebPoly<T> {
    lo: f64,
    hi: f64,
    coeffs: Vec<T>,
    /// Max |p − f| over a uniform grid of [`FIT_GRID_POINTS`] points.
    fit_error: f64,
}

impl<T: Scalar> ChebPoly<T> {
    /// Interpolates `f` at the `degree + 1` Chebyshev nodes of `[lo, hi]`.
    pub fn fit(f: impl Fn(f64) -> f64, lo: f64, hi: f64, degree: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Interval { lo, hi });
        }
        let n = degree + 1;
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let theta: Vec<f64> = (0..n)
            .map(|j| std::f64::consts::PI * (j as f64 + 0.5) / n as f64)
            .collect();
        let samples: Vec<f64> = theta.iter().map(|t| f(mid + half * t.cos())).collect();
        let coeffs: Vec<T> = (0..n)
            .map(|i| {
                let s: f64 = theta
                    .iter()
                    .zip(&samples)
                    .map(|(t, y)| y * (i as f64 * t).cos())
                    .sum();
                let scale = if i == 0 { 1.0 } else { 2.0 };
                T::lit(scale * s / n as f64)
            })
            .collect();
        let mut poly = Self {
            lo,
            hi,
            coeffs,
            fit_error: 0.0,
        };
        poly.fit_error = poly.grid_error(&f, FIT_GRID_POINTS);
        Ok(poly)
    }

    pub fn fit_exp(lo: f64, hi: f64, degree: usize) -> Result<Self> {
        Self::fit(f64::exp, lo, hi, degree)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn fit_error(&self) -> f64 {
        self.fit_error
    }

    /// Affine map of `[lo, hi]` onto `[-1, 1]` as `(slope, intercept)`.
    pub fn to_unit(&self) -> (f64, f64) {
        let w = self.hi - self.lo;
        (2.0 / w, -(self.lo + self.hi) / w)
    }

    /// Clenshaw recurrence at a single point.
    pub fn clenshaw(&self, x: T) -> T {
        let (a, b) = self.to_unit();
        let u = x * T::lit(a) + T::lit(b);
        let two_u = u + u;
        let (mut b1, mut b2) = (T::zero(), T::zero());
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = two_u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + self.coeffs[0]
    }

    fn grid_error(&self, f: &impl Fn(f64) -> f64, points: usize) -> f64 {
        let step = (self.hi - self.lo) / (points - 1) as f64;
        (0..points)
            .map(|i| {
                let x = self.lo + step * i as f64;
                (self.clenshaw(T::lit(x)).to_f64_lossy() - f(x)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_max_error(p: &ChebPoly<f64>, points: usize) -> f64 {
        let (lo, hi) = p.interval();
        (0..points)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                (p.clenshaw(x) - x.exp()).abs()
            })
            .fold(0.0, f64::max)
    }

    // Independent bound for interpolation at Chebyshev nodes:
    // max|f^(d+1)| / ((d+1)! 2^d) * ((hi - lo)/2)^(d+1).
    fn interpolation_bound(lo: f64, hi: f64, d: usize) -> f64 {
        let fact: f64 = (1..=d + 1).map(|i| i as f64).product();
        hi.exp() * ((hi - lo) / 2.0).powi(d as i32 + 1) / (fact * 2f64.powi(d as i32))
    }

    #[test]
    fn degree_zero_is_value_at_single_node() {
        let p = ChebPoly::<f64>::fit_exp(-1.0, 1.0, 0).unwrap();
        assert_eq!(p.degree(), 0);
        // single node is cos(pi/2) = 0 (up to rounding)
        assert!((p.coeffs()[0] - 1.0).abs() < 1e-15);
        assert!((p.clenshaw(0.7) - p.clenshaw(-0.3)).abs() == 0.0);
    }

    #[test]
    fn degree_fifteen_on_reduced_interval() {
        let p = ChebPoly::<f64>::fit_exp(-8.0, 0.0, 15).unwrap();
        let bound = interpolation_bound(-8.0, 0.0, 15);
        assert!((bound - 6.264556529e-9).abs() < 1e-17);
        assert!(p.fit_error() <= 2.0 * bound, "{} vs {}", p.fit_error(), bound);
        let dense = dense_max_error(&p, 200_001);
        assert!(dense <= 2.0 * bound);
        assert!((dense - p.fit_error()).abs() <= 0.05 * dense);
    }

    #[test]
    fn linear_fit_on_tiny_interval() {
        let eps = 1e-3;
        let p = ChebPoly::<f64>::fit_exp(0.0, eps, 1).unwrap();
        for i in 0..=10 {
            let x = eps * i as f64 / 10.0;
            assert!((p.clenshaw(x) - (1.0 + x)).abs() < 1e-6);
        }
    }

    #[test]
    fn near_minimax_against_neighbouring_degrees() {
        for d in 2..=15 {
            let cur = ChebPoly::<f64>::fit_exp(-8.0, 0.0, d).unwrap().fit_error();
            let prev = ChebPoly::<f64>::fit_exp(-8.0, 0.0, d - 1).unwrap().fit_error();
            assert!(cur <= 2.0 * cur.min(prev), "d={d}");
            assert!(cur < prev, "d={d}");
        }
    }

    #[test]
    fn degenerate_interval() {
        assert!(matches!(
            ChebPoly::<f64>::fit_exp(1.0, 1.0, 3),
            Err(Error::Interval { .. })
        ));
        assert!(ChebPoly::<f64>::fit_exp(2.0, 1.0, 3).is_err());
    }

    #[test]
    fn single_precision_fit() {
        let p = ChebPoly::<f32>::fit_exp(-8.0, 0.0, 15).unwrap();
        assert!(p.fit_error() < 1e-5);
    }
}
