//! Zero-mean Gaussian DAG networks and their Fisher geometry.
//!
//! Node k satisfies X_k = sum_{j in pa(k)} a_{jk} X_j + eps_k with
//! eps_k ~ N(0, v_k), so the model has one weight slot per edge plus one
//! variance slot per node: d = n + |E|. The Fisher metric is block
//! diagonal across nodes; within a node the weight block is the parent
//! covariance divided by v_k and the variance entry is 1/(2 v_k^2).

use nalgebra::DMatrix;

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::jet::{Jet2, MetricJet, Scalar};

/// Variances this small are rejected as numerically degenerate.
pub const MIN_VARIANCE: f64 = 1e-12;

/// Slot layout: per node (in topological order) the weight slots in
/// ascending-parent order followed by the variance slot.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    dag: Dag,
    block_start: Vec<usize>,
    dim: usize,
}

/// What a parameter slot means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// Regression weight a_{parent,node}.
    Weight { node: usize, parent: usize },
    Variance { node: usize },
}

impl GaussianModel {
    pub fn new(dag: Dag) -> Self {
        let mut block_start = vec![0usize; dag.n_nodes()];
        let mut offset = 0;
        for &k in dag.topo_order() {
            block_start[k] = offset;
            offset += dag.parents(k).len() + 1;
        }
        GaussianModel {
            dag,
            block_start,
            dim: offset,
        }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn n_nodes(&self) -> usize {
        self.dag.n_nodes()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Weight slot for the `t`-th parent (ascending order) of `node`.
    pub fn weight_slot(&self, node: usize, t: usize) -> usize {
        debug_assert!(t < self.dag.parents(node).len());
        self.block_start[node] + t
    }

    pub fn variance_slot(&self, node: usize) -> usize {
        self.block_start[node] + self.dag.parents(node).len()
    }

    pub fn slot_kind(&self, slot: usize) -> SlotKind {
        debug_assert!(slot < self.dim);
        for &k in self.dag.topo_order() {
            let start = self.block_start[k];
            let m = self.dag.parents(k).len();
            if slot >= start && slot <= start + m {
                return if slot == start + m {
                    SlotKind::Variance { node: k }
                } else {
                    SlotKind::Weight {
                        node: k,
                        parent: self.dag.parents(k)[slot - start],
                    }
                };
            }
        }
        unreachable!("slot within dim always belongs to a block")
    }
}

/// A parameter point with strictly positive variances.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPoint {
    values: Vec<f64>,
}

impl GaussianPoint {
    pub fn new(model: &GaussianModel, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, model needs {}",
                values.len(),
                model.dim()
            )));
        }
        if let Some((j, &x)) = values.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("coordinate {j} = {x}")));
        }
        for k in 0..model.n_nodes() {
            let v = values[model.variance_slot(k)];
            if v <= MIN_VARIANCE {
                return Err(Error::InvalidInput(format!(
                    "variance of node {k} is {v}, must exceed {MIN_VARIANCE}"
                )));
            }
        }
        Ok(GaussianPoint { values })
    }

    /// Unit variances, zero weights.
    pub fn standard(model: &GaussianModel) -> Self {
        let mut values = vec![0.0; model.dim()];
        for k in 0..model.n_nodes() {
            values[model.variance_slot(k)] = 1.0;
        }
        GaussianPoint { values }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Covariance of X by forward propagation in topological order,
/// generic over plain values and jets. Row-major n x n, symmetric.
pub fn covariance_generic<S: Scalar>(model: &GaussianModel, slots: &[S]) -> Vec<S> {
    let n = model.n_nodes();
    let proto = &slots[0];
    let mut cov = vec![proto.zero_like(); n * n];
    for &k in model.dag().topo_order() {
        let parents = model.dag().parents(k);
        // Cross covariances with every earlier node, then the variance.
        for &j in model.dag().topo_order() {
            if j == k {
                break;
            }
            let mut c = proto.zero_like();
            for (t, &p) in parents.iter().enumerate() {
                let w = &slots[model.weight_slot(k, t)];
                c.add_assign(&w.mul(&cov[p * n + j]));
            }
            cov[k * n + j] = c.clone();
            cov[j * n + k] = c;
        }
        let mut var = slots[model.variance_slot(k)].clone();
        for (t, &p) in parents.iter().enumerate() {
            for (u, &q) in parents.iter().enumerate() {
                let w = slots[model.weight_slot(k, t)].mul(&slots[model.weight_slot(k, u)]);
                var.add_assign(&w.mul(&cov[p * n + q]));
            }
        }
        cov[k * n + k] = var;
    }
    cov
}

/// Covariance matrix of X at a point.
pub fn covariance(model: &GaussianModel, point: &GaussianPoint) -> DMatrix<f64> {
    let flat = covariance_generic(model, point.as_slice());
    DMatrix::from_fn(model.n_nodes(), model.n_nodes(), |i, j| {
        flat[i * model.n_nodes() + j]
    })
}

/// Dense Fisher metric, block diagonal across nodes.
pub fn gaussian_fisher_metric(model: &GaussianModel, point: &GaussianPoint) -> DMatrix<f64> {
    let n = model.n_nodes();
    let d = model.dim();
    let cov = covariance_generic(model, point.as_slice());
    let vals = point.as_slice();
    let mut g = DMatrix::zeros(d, d);
    for k in 0..n {
        let parents = model.dag().parents(k);
        let v = vals[model.variance_slot(k)];
        for (t, &p) in parents.iter().enumerate() {
            for (u, &q) in parents.iter().enumerate() {
                g[(model.weight_slot(k, t), model.weight_slot(k, u))] = cov[p * n + q] / v;
            }
        }
        let vs = model.variance_slot(k);
        g[(vs, vs)] = 1.0 / (2.0 * v * v);
    }
    g
}

/// Dense metric with exact first and second derivatives.
pub fn gaussian_metric_jet(model: &GaussianModel, point: &GaussianPoint) -> MetricJet {
    let n = model.n_nodes();
    let d = model.dim();
    let vars: Vec<Jet2> = point
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, &x)| Jet2::variable(d, j, x))
        .collect();
    let cov = covariance_generic(model, &vars);
    let mut entries = vec![Jet2::constant(d, 0.0); d * d];
    for k in 0..n {
        let parents = model.dag().parents(k);
        let vk = &vars[model.variance_slot(k)];
        let inv_v = vk.recip();
        for (t, _) in parents.iter().enumerate() {
            for (u, _) in parents.iter().enumerate() {
                let (p, q) = (parents[t], parents[u]);
                let e = cov[p * n + q].mul(&inv_v);
                entries[model.weight_slot(k, t) * d + model.weight_slot(k, u)] = e;
            }
        }
        let vs = model.variance_slot(k);
        entries[vs * d + vs] = vk.mul(vk).scale(2.0).recip();
    }
    MetricJet::Dense { dim: d, entries }
}

/// Random interior point: variances log-uniform on [0.1, 10], weights
/// uniform on [-3, 3].
pub fn sample_point<R: rand::Rng>(model: &GaussianModel, rng: &mut R) -> GaussianPoint {
    let mut values = vec![0.0; model.dim()];
    for k in 0..model.n_nodes() {
        let parents = model.dag().parents(k).len();
        for t in 0..parents {
            values[model.weight_slot(k, t)] = rng.gen_range(-3.0..3.0);
        }
        let log_v = rng.gen_range(0.1f64.ln()..10.0f64.ln());
        values[model.variance_slot(k)] = log_v.exp();
    }
    GaussianPoint { values }
}

/// Draws `count` observations of X at a point, for score-based checks.
pub fn sample_observations<R: rand::Rng>(
    model: &GaussianModel,
    point: &GaussianPoint,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    use rand::distributions::Distribution;
    let normal = rand::distributions::Uniform::new(0.0f64, 1.0);
    // Box-Muller pairs; only the cosine branch is used for simplicity.
    let gauss = move |rng: &mut R| {
        let u1: f64 = normal.sample(rng).max(f64::MIN_POSITIVE);
        let u2: f64 = normal.sample(rng);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let vals = point.as_slice();
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x = vec![0.0; model.n_nodes()];
        for &k in model.dag().topo_order() {
            let mut mean = 0.0;
            for (t, &p) in model.dag().parents(k).iter().enumerate() {
                mean += vals[model.weight_slot(k, t)] * x[p];
            }
            x[k] = mean + vals[model.variance_slot(k)].sqrt() * gauss(rng);
        }
        rows.push(x);
    }
    rows
}
