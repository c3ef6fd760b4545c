//! Continuous piecewise-linear functions on a bounded interval.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Slack allowed when evaluating just outside the domain; such points are
/// clamped onto the boundary. Anything further out is an error.
pub const DOMAIN_TOL: f64 = 1e-9;

/// Continuous piecewise-linear interpolant through `(xs[i], ys[i])`.
///
/// Breakpoints are strictly increasing; extrapolation is refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                what: "piecewise-linear breakpoints vs values",
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(Error::InvalidModel(
                "piecewise-linear function needs at least two breakpoints".into(),
            ));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel(
                "piecewise-linear function has non-finite entries".into(),
            ));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidModel(
                "piecewise-linear breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self { xs, ys })
    }

    /// `x ↦ intercept + slope·x` on `[lo, hi]`.
    pub fn affine(lo: f64, hi: f64, intercept: f64, slope: f64) -> Result<Self> {
        Self::new(
            vec![lo, hi],
            vec![intercept + slope * lo, intercept + slope * hi],
        )
    }

    /// Sample `f` at every point of `xs`.
    pub fn sample(xs: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(xs.to_vec(), xs.iter().map(|&x| f(x)).collect())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn num_segments(&self) -> usize {
        self.xs.len() - 1
    }

    pub fn slope(&self, segment: usize) -> f64 {
        (self.ys[segment + 1] - self.ys[segment]) / (self.xs[segment + 1] - self.xs[segment])
    }

    /// Evaluate with interpolation; errors outside the domain beyond [`DOMAIN_TOL`].
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= self.lo() - DOMAIN_TOL && x <= self.hi() + DOMAIN_TOL) {
            return Err(Error::OutOfRange(format!(
                "x = {x} outside [{}, {}]",
                self.lo(),
                self.hi()
            )));
        }
        Ok(self.eval_clamped(x))
    }

    /// Evaluate after clamping `x` onto the domain.
    pub fn eval_clamped(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo(), self.hi());
        // first index with xs[i] > x
        let i = self.xs.partition_point(|&b| b <= x);
        if i == 0 {
            return self.ys[0];
        }
        if i == self.xs.len() {
            return self.ys[i - 1];
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| y * factor).collect(),
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.ys.windows(2).all(|w| w[1] <= w[0])
    }
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseLinear {
    type Error = Error;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self> {
        let (xs, ys) = points.into_iter().unzip();
        Self::new(xs, ys)
    }
}

impl From<PiecewiseLinear> for Vec<(f64, f64)> {
    fn from(f: PiecewiseLinear) -> Self {
        f.xs.into_iter().zip(f.ys).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_refuses_extrapolation() {
        let f = PiecewiseLinear::new(vec![0.0, 1.0, 3.0], vec![4.0, 2.0, 6.0]).unwrap();
        assert_eq!(f.eval(0.0).unwrap(), 4.0);
        assert_eq!(f.eval(1.0).unwrap(), 2.0);
        assert_eq!(f.eval(0.5).unwrap(), 3.0);
        assert_eq!(f.eval(2.0).unwrap(), 4.0);
        assert_eq!(f.eval(3.0 + 1e-12).unwrap(), 6.0);
        assert!(f.eval(3.001).is_err());
        assert!(f.eval(-0.001).is_err());
        assert!(f.eval(f64::NAN).is_err());
        assert_eq!(f.slope(1), 2.0);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(PiecewiseLinear::new(vec![0.0], vec![1.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, f64::INFINITY], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn builds_from_point_list() {
        let f = PiecewiseLinear::try_from(vec![(0.0, 1.0), (2.0, -1.0)]).unwrap();
        assert_eq!(f.eval(1.0).unwrap(), 0.0);
        let g = PiecewiseLinear::affine(0.0, 4.0, 100.0, -2.0).unwrap();
        assert_eq!(g.values(), &[100.0, 92.0]);
        assert!(g.is_nonincreasing());
    }
}
