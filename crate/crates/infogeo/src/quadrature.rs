//! Gauss-Chebyshev quadrature on (0, 1) and Richardson extrapolation.
//!
//! Every integral in this crate carries a per-axis weight of the form
//! [x(1-x)]^{alpha-1}. Splitting off [x(1-x)]^{-1/2} leaves a factor
//! [x(1-x)]^{alpha-1/2} that multiplies the integrand, so a single rule
//! family suffices: the Chebyshev-Gauss rule, whose nodes and weights
//! are closed-form (no eigenvalue solve).

use crate::error::{Error, Result};

/// Per-axis weight exponents: axis i carries [x(1-x)]^{alpha_i - 1}.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub alphas: Vec<f64>,
}

impl WeightSpec {
    /// The square-root endpoint singularity of every Bernoulli axis.
    pub fn arcsine(axes: usize) -> Self {
        WeightSpec {
            alphas: vec![0.5; axes],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &a) in self.alphas.iter().enumerate() {
            let integrable = a.is_finite() && a > 0.0;
            if !integrable {
                return Err(Error::InvalidInput(format!(
                    "axis {i}: weight exponent alpha = {a} is not integrable"
                )));
            }
        }
        Ok(())
    }

    pub fn axes(&self) -> usize {
        self.alphas.len()
    }
}

/// Chebyshev-Gauss abscissas mapped to (0, 1); each node has weight
/// pi/n against the density [x(1-x)]^{-1/2}.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let t = (2 * i - 1) as f64 * std::f64::consts::PI / (2 * n) as f64;
            0.5 * (1.0 + t.cos())
        })
        .collect()
}

/// Tensor-product quadrature of f against prod_i [x_i(1-x_i)]^{alpha_i-1}
/// with `n` nodes per axis. The [x(1-x)]^{alpha-1/2} residual factor is
/// folded into the integrand here so callers pass plain f.
///
/// The reduction is chunked by the first axis and summed in chunk order,
/// so the result is bit-identical regardless of thread count.
pub fn tensor_quadrature<F>(spec: &WeightSpec, n: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one node".into()));
    }
    let k = spec.axes();
    if k == 0 {
        return Ok(f(&[]));
    }
    let nodes = chebyshev_nodes(n);
    let residual: Vec<Vec<f64>> = spec
        .alphas
        .iter()
        .map(|&a| nodes.iter().map(|&x| (x * (1.0 - x)).powf(a - 0.5)).collect())
        .collect();
    let inner: usize = n
        .checked_pow((k - 1) as u32)
        .filter(|&t| t <= 1 << 34)
        .ok_or_else(|| Error::Capability(format!("tensor grid {n}^{k} is too large")))?;

    use rayon::prelude::*;
    let scale = (std::f64::consts::PI / n as f64).powi(k as i32);
    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut point = vec![0.0f64; k];
            point[0] = nodes[i0];
            let w0 = residual[0][i0];
            let mut acc = 0.0;
            for flat in 0..inner {
                let mut rest = flat;
                let mut w = w0;
                for axis in 1..k {
                    let idx = rest % n;
                    rest /= n;
                    point[axis] = nodes[idx];
                    w *= residual[axis][idx];
                }
                acc += w * f(&point);
            }
            acc
        })
        .collect();
    Ok(scale * partials.iter().sum::<f64>())
}

/// Result of extrapolating a node-count sequence.
#[derive(Debug, Clone, Copy)]
pub struct Extrapolation {
    pub value: f64,
    /// Estimated magnitude of the remaining truncation error.
    pub truncation: f64,
    /// Fitted convergence order, when three estimates allowed a fit.
    pub order: Option<f64>,
}

/// Richardson extrapolation with an empirically fitted order.
///
/// Endpoint singularities make these quadratures converge at an a
/// priori unknown algebraic rate I(n) = I + c n^{-p}, so p is fitted
/// from the last three estimates when their differences behave, and
/// assumed 1 when only two estimates exist.
pub fn richardson(estimates: &[(usize, f64)]) -> Result<Extrapolation> {
    match estimates {
        [] => Err(Error::InvalidInput("no quadrature estimates".into())),
        [(_, v)] => Ok(Extrapolation {
            value: *v,
            truncation: 0.0,
            order: None,
        }),
        [.., (n2, i2), (n3, i3)] if estimates.len() == 2 => {
            let (h2, h3) = (1.0 / *n2 as f64, 1.0 / *n3 as f64);
            let value = i3 + (i3 - i2) * h3 / (h2 - h3);
            Ok(Extrapolation {
                value,
                truncation: (value - i3).abs(),
                order: Some(1.0),
            })
        }
        [.., (n1, i1), (n2, i2), (n3, i3)] => {
            let scale = i1.abs().max(i2.abs()).max(i3.abs()).max(1e-300);
            let e1 = i1 - i2;
            let e2 = i2 - i3;
            if e2.abs() < 1e-14 * scale || e1 * e2 <= 0.0 {
                // Converged (or non-monotone): keep the finest estimate.
                return Ok(Extrapolation {
                    value: *i3,
                    truncation: e2.abs().max(1e-15 * scale),
                    order: None,
                });
            }
            let (h1, h2, h3) = (1.0 / *n1 as f64, 1.0 / *n2 as f64, 1.0 / *n3 as f64);
            let target = e1 / e2;
            let ratio_at = |p: f64| (h1.powf(p) - h2.powf(p)) / (h2.powf(p) - h3.powf(p));
            let (mut lo, mut hi) = (0.05, 10.0);
            // ratio_at is increasing in p for h1 > h2 > h3.
            let mut p = if target <= ratio_at(lo) {
                lo
            } else if target >= ratio_at(hi) {
                hi
            } else {
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if ratio_at(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            if !p.is_finite() {
                p = 1.0;
            }
            let c = e2 / (h2.powf(p) - h3.powf(p));
            let tail = c * h3.powf(p);
            Ok(Extrapolation {
                value: i3 - tail,
                truncation: tail.abs().max(1e-15 * scale),
                order: Some(p),
            })
        }
        _ => unreachable!("match arms cover all lengths"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn arcsine_mass_is_pi() {
        // integral of [x(1-x)]^{-1/2} over (0,1) is pi.
        let spec = WeightSpec::arcsine(1);
        let v = tensor_quadrature(&spec, 16, |_| 1.0).unwrap();
        assert_abs_diff_eq!(v, PI, epsilon = 1e-12);
    }

    #[test]
    fn beta_moments() {
        // integral x^2 [x(1-x)]^{-1/2} = B(5/2, 1/2) = 3 pi / 8.
        let spec = WeightSpec::arcsine(1);
        let v = tensor_quadrature(&spec, 8, |x| x[0] * x[0]).unwrap();
        assert_abs_diff_eq!(v, 3.0 * PI / 8.0, epsilon = 1e-13);
        // Weight [x(1-x)]^{3/2}: total mass B(5/2,5/2) = 3 pi / 128.
        let spec = WeightSpec { alphas: vec![2.5] };
        let v = tensor_quadrature(&spec, 8, |_| 1.0).unwrap();
        assert_abs_diff_eq!(v, 3.0 * PI / 128.0, epsilon = 1e-13);
    }

    #[test]
    fn tensor_rule_separates() {
        let spec = WeightSpec::arcsine(3);
        let v = tensor_quadrature(&spec, 12, |x| x[0] * x[1] * x[2]).unwrap();
        assert_abs_diff_eq!(v, (PI / 2.0).powi(3), epsilon = 1e-11);
    }

    #[test]
    fn richardson_recovers_algebraic_limits() {
        // I(n) = 7 + 3/n: first-order tail.
        let seq: Vec<(usize, f64)> = [32, 48, 64]
            .iter()
            .map(|&n| (n, 7.0 + 3.0 / n as f64))
            .collect();
        let e = richardson(&seq).unwrap();
        assert_abs_diff_eq!(e.value, 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.order.unwrap(), 1.0, epsilon = 1e-6);

        // Second-order tail.
        let seq: Vec<(usize, f64)> = [32, 48, 64]
            .iter()
            .map(|&n| (n, -2.0 + 5.0 / (n * n) as f64))
            .collect();
        let e = richardson(&seq).unwrap();
        assert_abs_diff_eq!(e.value, -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.order.unwrap(), 2.0, epsilon = 1e-5);
    }

    #[test]
    fn richardson_handles_converged_sequences() {
        let e = richardson(&[(32, 1.0), (48, 1.0), (64, 1.0)]).unwrap();
        assert_abs_diff_eq!(e.value, 1.0);
        assert!(e.truncation < 1e-12);
        let e2 = richardson(&[(32, 2.0), (64, 2.5)]).unwrap();
        assert_abs_diff_eq!(e2.value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn invalid_weight_rejected() {
        let spec = WeightSpec { alphas: vec![0.0] };
        assert!(tensor_quadrature(&spec, 8, |_| 1.0).is_err());
    }
}
