//! Second-order forward-mode jets.
//!
//! A `Jet2` carries a value together with its full gradient and Hessian
//! with respect to `dim` independent variables. Pushing a jet through
//! rational arithmetic yields exact first and second derivatives, which
//! is all the curvature formulas ever need from a metric.

/// Arithmetic shared by `f64` and `Jet2`, so probability and covariance
/// evaluations are written once and reused for both plain values and
/// derivative-carrying ones.
pub trait Scalar: Clone {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn value(&self) -> f64;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn recip(&self) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn div(&self, rhs: &Self) -> Self {
        self.mul(&rhs.recip())
    }
    fn add_assign(&mut self, rhs: &Self) {
        *self = self.add(rhs);
    }
}

impl Scalar for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn one_like(&self) -> Self {
        1.0
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
}

/// Value, gradient, and dense Hessian in `dim` variables.
///
/// The Hessian is stored row-major (`hess[l * dim + m]`) and stays
/// symmetric under every operation below.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub val: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(dim: usize, val: f64) -> Self {
        Jet2 {
            val,
            grad: vec![0.0; dim],
            hess: vec![0.0; dim * dim],
        }
    }

    /// The `idx`-th coordinate variable evaluated at `val`.
    pub fn variable(dim: usize, idx: usize, val: f64) -> Self {
        let mut j = Jet2::constant(dim, val);
        j.grad[idx] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn d(&self, l: usize) -> f64 {
        self.grad[l]
    }

    pub fn dd(&self, l: usize, m: usize) -> f64 {
        self.hess[l * self.dim() + m]
    }
}

impl Scalar for Jet2 {
    fn zero_like(&self) -> Self {
        Jet2::constant(self.dim(), 0.0)
    }

    fn one_like(&self) -> Self {
        Jet2::constant(self.dim(), 1.0)
    }

    fn value(&self) -> f64 {
        self.val
    }

    fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }

    fn add_assign(&mut self, rhs: &Self) {
        debug_assert_eq!(self.dim(), rhs.dim());
        self.val += rhs.val;
        for (a, b) in self.grad.iter_mut().zip(&rhs.grad) {
            *a += b;
        }
        for (a, b) in self.hess.iter_mut().zip(&rhs.hess) {
            *a += b;
        }
    }

    fn sub(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        let mut out = self.clone();
        out.val -= rhs.val;
        for (a, b) in out.grad.iter_mut().zip(&rhs.grad) {
            *a -= b;
        }
        for (a, b) in out.hess.iter_mut().zip(&rhs.hess) {
            *a -= b;
        }
        out
    }

    fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim(), rhs.dim());
        let d = self.dim();
        let mut out = Jet2::constant(d, self.val * rhs.val);
        for l in 0..d {
            out.grad[l] = self.grad[l] * rhs.val + rhs.grad[l] * self.val;
        }
        for l in 0..d {
            for m in 0..d {
                out.hess[l * d + m] = self.hess[l * d + m] * rhs.val
                    + rhs.hess[l * d + m] * self.val
                    + self.grad[l] * rhs.grad[m]
                    + rhs.grad[l] * self.grad[m];
            }
        }
        out
    }

    fn recip(&self) -> Self {
        // (1/f)' = -f'/f^2, (1/f)'' = -f''/f^2 + 2 f' f' / f^3
        let d = self.dim();
        let inv = 1.0 / self.val;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        let mut out = Jet2::constant(d, inv);
        for l in 0..d {
            out.grad[l] = -self.grad[l] * inv2;
        }
        for l in 0..d {
            for m in 0..d {
                out.hess[l * d + m] =
                    -self.hess[l * d + m] * inv2 + 2.0 * self.grad[l] * self.grad[m] * inv3;
            }
        }
        out
    }

    fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.val *= c;
        for a in out.grad.iter_mut() {
            *a *= c;
        }
        for a in out.hess.iter_mut() {
            *a *= c;
        }
        out
    }
}

/// A metric together with its first and second derivatives at a point,
/// as produced by the model families and consumed by curvature.
#[derive(Debug, Clone)]
pub enum MetricJet {
    /// Diagonal metric; `entries[a]` is the jet of g_aa.
    Diagonal { entries: Vec<Jet2> },
    /// Dense symmetric metric; row-major `entries[i * dim + j]`.
    Dense { dim: usize, entries: Vec<Jet2> },
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        match self {
            MetricJet::Diagonal { entries } => entries.len(),
            MetricJet::Dense { dim, .. } => *dim,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, MetricJet::Diagonal { .. })
    }

    /// g_ij at the evaluation point.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            MetricJet::Diagonal { entries } => {
                if i == j {
                    entries[i].val
                } else {
                    0.0
                }
            }
            MetricJet::Dense { dim, entries } => entries[i * dim + j].val,
        }
    }

    pub fn d_entry(&self, i: usize, j: usize, l: usize) -> f64 {
        match self {
            MetricJet::Diagonal { entries } => {
                if i == j {
                    entries[i].grad[l]
                } else {
                    0.0
                }
            }
            MetricJet::Dense { dim, entries } => entries[i * dim + j].grad[l],
        }
    }

    pub fn dd_entry(&self, i: usize, j: usize, l: usize, m: usize) -> f64 {
        match self {
            MetricJet::Diagonal { entries } => {
                if i == j {
                    entries[i].dd(l, m)
                } else {
                    0.0
                }
            }
            MetricJet::Dense { dim, entries } => entries[i * dim + j].dd(l, m),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // f(x, y) = x^2 y + 1 / (x + y), checked against hand derivatives.
    fn f(x: &Jet2, y: &Jet2) -> Jet2 {
        let x2y = x.mul(x).mul(y);
        let inv = x.add(y).recip();
        x2y.add(&inv)
    }

    #[test]
    fn jet_matches_hand_derivatives() {
        let (xv, yv) = (0.7, 1.3);
        let x = Jet2::variable(2, 0, xv);
        let y = Jet2::variable(2, 1, yv);
        let out = f(&x, &y);

        let s = xv + yv;
        assert_abs_diff_eq!(out.val, xv * xv * yv + 1.0 / s, epsilon = 1e-14);
        assert_abs_diff_eq!(out.d(0), 2.0 * xv * yv - 1.0 / (s * s), epsilon = 1e-13);
        assert_abs_diff_eq!(out.d(1), xv * xv - 1.0 / (s * s), epsilon = 1e-13);
        assert_abs_diff_eq!(out.dd(0, 0), 2.0 * yv + 2.0 / (s * s * s), epsilon = 1e-13);
        assert_abs_diff_eq!(out.dd(0, 1), 2.0 * xv + 2.0 / (s * s * s), epsilon = 1e-13);
        assert_abs_diff_eq!(out.dd(1, 1), 2.0 / (s * s * s), epsilon = 1e-13);
        // symmetry
        assert_abs_diff_eq!(out.dd(0, 1), out.dd(1, 0), epsilon = 1e-15);
    }

    #[test]
    fn jet_agrees_with_central_differences() {
        let eval = |xv: f64, yv: f64| {
            f(&Jet2::constant(2, xv), &Jet2::constant(2, yv)).val
        };
        let (xv, yv) = (0.4, 0.9);
        let x = Jet2::variable(2, 0, xv);
        let y = Jet2::variable(2, 1, yv);
        let out = f(&x, &y);

        let h = 1e-5;
        let fd_x = (eval(xv + h, yv) - eval(xv - h, yv)) / (2.0 * h);
        let fd_xy = (eval(xv + h, yv + h) - eval(xv + h, yv - h) - eval(xv - h, yv + h)
            + eval(xv - h, yv - h))
            / (4.0 * h * h);
        assert_abs_diff_eq!(out.d(0), fd_x, epsilon = 1e-8);
        assert_abs_diff_eq!(out.dd(0, 1), fd_xy, epsilon = 1e-6);
    }

    #[test]
    fn shared_code_over_f64_and_jets_agrees() {
        fn poly<S: Scalar>(vals: &[S]) -> S {
            // x * (1 - y) + x * y * x
            let one = vals[0].one_like();
            let a = vals[0].mul(&one.sub(&vals[1]));
            let b = vals[0].mul(&vals[1]).mul(&vals[0]);
            a.add(&b)
        }
        let plain = poly(&[0.3_f64, 0.8]);
        let jets = poly(&[Jet2::variable(2, 0, 0.3), Jet2::variable(2, 1, 0.8)]);
        assert_abs_diff_eq!(plain, jets.val, epsilon = 1e-15);
    }
}
