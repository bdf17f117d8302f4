//! Binary-CPT Bayesian networks ("bitnets") and their Fisher geometry.
//!
//! Every node is a Bernoulli variable with one conditional-probability
//! slot per configuration of its parents, so node k contributes a block
//! of 2^{m_k} parameters and the total dimension is d = sum_k 2^{m_k}.
//! The Fisher metric is diagonal: g_jj = pi_j / (theta_j (1 - theta_j)),
//! where pi_j is the marginal probability of the parent configuration
//! that owns slot j.

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::jet::{Jet2, MetricJet, Scalar};

/// Nodes whose ancestral closure exceeds this are refused by exact
/// enumeration.
pub const ENUMERATION_CAP: usize = 16;

/// Default strict-interior margin for loaded points.
pub const INTERIOR_EPS: f64 = 1e-9;

/// Parameter layout over a DAG: one contiguous slot block per node,
/// blocks in topological order, configurations ascending within a block.
#[derive(Debug, Clone)]
pub struct BitnetModel {
    dag: Dag,
    /// Start of each node's block, indexed by node id.
    block_start: Vec<usize>,
    /// Blocks in layout order: (start, node).
    blocks: Vec<(usize, usize)>,
    dim: usize,
}

/// A slot named structurally: node `k` at parent configuration `s`.
/// Configuration bits follow ascending parent index, lowest-index
/// parent in the least significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentConfigIndex {
    pub node: usize,
    pub config: usize,
}

impl BitnetModel {
    pub fn new(dag: Dag) -> Self {
        let mut block_start = vec![0usize; dag.n_nodes()];
        let mut blocks = Vec::with_capacity(dag.n_nodes());
        let mut offset = 0;
        for &k in dag.topo_order() {
            block_start[k] = offset;
            blocks.push((offset, k));
            offset += 1usize << dag.parents(k).len();
        }
        BitnetModel {
            dag,
            block_start,
            blocks,
            dim: offset,
        }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn n_nodes(&self) -> usize {
        self.dag.n_nodes()
    }

    /// Total parameter count d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parent_count(&self, node: usize) -> usize {
        self.dag.parents(node).len()
    }

    pub fn block_start(&self, node: usize) -> usize {
        self.block_start[node]
    }

    pub fn block_len(&self, node: usize) -> usize {
        1usize << self.parent_count(node)
    }

    pub fn slot(&self, idx: ParentConfigIndex) -> usize {
        debug_assert!(idx.config < self.block_len(idx.node));
        self.block_start[idx.node] + idx.config
    }

    pub fn slot_owner(&self, slot: usize) -> ParentConfigIndex {
        debug_assert!(slot < self.dim);
        let pos = self
            .blocks
            .partition_point(|&(start, _)| start <= slot)
            .saturating_sub(1);
        let (start, node) = self.blocks[pos];
        ParentConfigIndex {
            node,
            config: slot - start,
        }
    }

    /// Configuration index selected by `assignment` for `node`'s parents.
    pub fn config_of(&self, node: usize, assignment: &[u8]) -> usize {
        let mut cfg = 0usize;
        for (t, &p) in self.dag.parents(node).iter().enumerate() {
            cfg |= ((assignment[p] & 1) as usize) << t;
        }
        cfg
    }

    /// Nodes whose slots the metric entry of `node` can depend on:
    /// the ancestral closure of `node`'s parents.
    fn parent_closure(&self, node: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n_nodes()];
        for &p in self.dag.parents(node) {
            for a in self.dag.ancestral_set(p) {
                seen[a] = true;
            }
        }
        (0..self.n_nodes()).filter(|&v| seen[v]).collect()
    }
}

/// A strictly interior parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct BitnetPoint {
    theta: Vec<f64>,
}

impl BitnetPoint {
    pub fn new(model: &BitnetModel, theta: Vec<f64>) -> Result<Self> {
        Self::with_margin(model, theta, INTERIOR_EPS)
    }

    pub fn with_margin(model: &BitnetModel, theta: Vec<f64>, eps: f64) -> Result<Self> {
        if theta.len() != model.dim() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, model needs {}",
                theta.len(),
                model.dim()
            )));
        }
        for (j, &t) in theta.iter().enumerate() {
            if !t.is_finite() || t < eps || t > 1.0 - eps {
                return Err(Error::InvalidInput(format!(
                    "coordinate {j} = {t} outside [{eps}, 1-{eps}]"
                )));
            }
        }
        Ok(BitnetPoint { theta })
    }

    pub fn uniform(model: &BitnetModel, value: f64) -> Result<Self> {
        Self::new(model, vec![value; model.dim()])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }
}

/// All parent-configuration marginals of `node` in one sweep: entry `s`
/// is P(parents of node = s). Generic over plain values and jets.
///
/// Enumerates every assignment of the ancestral closure of the parents;
/// the closure is capped at [`ENUMERATION_CAP`] nodes.
pub fn parent_config_table<S: Scalar>(
    model: &BitnetModel,
    slots: &[S],
    node: usize,
) -> Result<Vec<S>> {
    debug_assert_eq!(slots.len(), model.dim());
    let proto = &slots[0];
    let m = model.parent_count(node);
    if m == 0 {
        return Ok(vec![proto.one_like()]);
    }
    let anc = model.parent_closure(node);
    if anc.len() > ENUMERATION_CAP {
        return Err(Error::Capability(format!(
            "exact marginal for node {node} needs enumeration over {} nodes (cap {})",
            anc.len(),
            ENUMERATION_CAP
        )));
    }
    // Position of each closure node in the enumeration word, and the
    // positions of its parents (all parents of a closure node are in
    // the closure themselves).
    let mut pos = vec![usize::MAX; model.n_nodes()];
    for (i, &v) in anc.iter().enumerate() {
        pos[v] = i;
    }
    let parent_pos: Vec<Vec<usize>> = anc
        .iter()
        .map(|&v| model.dag().parents(v).iter().map(|&p| pos[p]).collect())
        .collect();
    let target_pos: Vec<usize> = model.dag().parents(node).iter().map(|&p| pos[p]).collect();

    let complements: Vec<S> = slots
        .iter()
        .map(|s| s.one_like().sub(s))
        .collect();

    let mut table = vec![proto.zero_like(); 1usize << m];
    for word in 0..(1usize << anc.len()) {
        let mut prob = proto.one_like();
        for (i, &v) in anc.iter().enumerate() {
            let mut cfg = 0usize;
            for (t, &pp) in parent_pos[i].iter().enumerate() {
                cfg |= ((word >> pp) & 1) << t;
            }
            let slot = model.block_start(v) + cfg;
            let factor = if (word >> i) & 1 == 1 {
                &slots[slot]
            } else {
                &complements[slot]
            };
            prob = prob.mul(factor);
        }
        let mut s = 0usize;
        for (t, &pp) in target_pos.iter().enumerate() {
            s |= ((word >> pp) & 1) << t;
        }
        table[s].add_assign(&prob);
    }
    Ok(table)
}

/// P(X = assignment) as the product of per-node conditional factors.
pub fn joint_probability(model: &BitnetModel, point: &BitnetPoint, assignment: &[u8]) -> f64 {
    debug_assert_eq!(assignment.len(), model.n_nodes());
    let theta = point.as_slice();
    let mut p = 1.0;
    for k in 0..model.n_nodes() {
        let slot = model.block_start(k) + model.config_of(k, assignment);
        let t = theta[slot];
        p *= if assignment[k] & 1 == 1 { t } else { 1.0 - t };
    }
    p
}

/// pi_j for the slot `j`: the marginal probability of the parent
/// configuration that owns the slot.
pub fn parent_config_marginal(model: &BitnetModel, point: &BitnetPoint, slot: usize) -> Result<f64> {
    let owner = model.slot_owner(slot);
    let table = parent_config_table(model, point.as_slice(), owner.node)?;
    Ok(table[owner.config])
}

/// Diagonal Fisher metric: entry j is pi_j / (theta_j (1 - theta_j)).
pub fn fisher_metric(model: &BitnetModel, point: &BitnetPoint) -> Result<Vec<f64>> {
    let theta = point.as_slice();
    let mut g = vec![0.0; model.dim()];
    for k in 0..model.n_nodes() {
        let table = parent_config_table(model, theta, k)?;
        let start = model.block_start(k);
        for (s, pi) in table.iter().enumerate() {
            let t = theta[start + s];
            g[start + s] = pi / (t * (1.0 - t));
        }
    }
    Ok(g)
}

/// Diagonal metric with exact first and second derivatives, carried by
/// forward-mode jets through the same marginal evaluation as
/// [`fisher_metric`].
pub fn metric_jet(model: &BitnetModel, point: &BitnetPoint) -> Result<MetricJet> {
    let d = model.dim();
    let vars: Vec<Jet2> = point
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, &t)| Jet2::variable(d, j, t))
        .collect();
    let mut entries = vec![Jet2::constant(d, 0.0); d];
    for k in 0..model.n_nodes() {
        let table = parent_config_table(model, &vars, k)?;
        let start = model.block_start(k);
        for (s, pi) in table.into_iter().enumerate() {
            let j = start + s;
            let denom = vars[j].mul(&vars[j].one_like().sub(&vars[j]));
            entries[j] = pi.mul(&denom.recip());
        }
    }
    Ok(MetricJet::Diagonal { entries })
}

/// Maximum-likelihood CPT estimates with per-slot bookkeeping.
#[derive(Debug, Clone)]
pub struct MleReport {
    /// theta_hat per slot; slots with no matching rows fall back to 0.5
    /// and appear in `starved_slots`.
    pub theta: Vec<f64>,
    /// Rows with node = 1 among those matching the slot's parent config.
    pub ones: Vec<usize>,
    /// Rows matching the slot's parent configuration (N_k).
    pub parent_counts: Vec<usize>,
    /// Slots whose parent configuration never occurs.
    pub starved_slots: Vec<usize>,
    /// Slots whose estimate landed on 0 or 1.
    pub boundary_slots: Vec<usize>,
}

pub fn mle_and_counts(model: &BitnetModel, rows: &[Vec<u8>]) -> Result<MleReport> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    let n = model.n_nodes();
    let d = model.dim();
    let mut ones = vec![0usize; d];
    let mut parent_counts = vec![0usize; d];
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!(
                "row {r} has {} entries, model has {n} nodes",
                row.len()
            )));
        }
        if let Some(bad) = row.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidInput(format!(
                "row {r} contains non-binary value {bad}"
            )));
        }
        for k in 0..n {
            let slot = model.block_start(k) + model.config_of(k, row);
            parent_counts[slot] += 1;
            if row[k] == 1 {
                ones[slot] += 1;
            }
        }
    }
    let mut theta = vec![0.5; d];
    let mut starved = Vec::new();
    let mut boundary = Vec::new();
    for j in 0..d {
        if parent_counts[j] == 0 {
            starved.push(j);
        } else {
            theta[j] = ones[j] as f64 / parent_counts[j] as f64;
            if theta[j] == 0.0 || theta[j] == 1.0 {
                boundary.push(j);
            }
        }
    }
    Ok(MleReport {
        theta,
        ones,
        parent_counts,
        starved_slots: starved,
        boundary_slots: boundary,
    })
}

/// Ancestral sampling of `count` rows at a fixed point, seeded.
pub fn sample_rows(
    model: &BitnetModel,
    point: &BitnetPoint,
    count: usize,
    seed: u64,
) -> Vec<Vec<u8>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let theta = point.as_slice();
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let mut row = vec![0u8; model.n_nodes()];
        for &k in model.dag().topo_order() {
            let slot = model.block_start(k) + model.config_of(k, &row);
            row[k] = u8::from(rng.gen::<f64>() < theta[slot]);
        }
        rows.push(row);
    }
    rows
}
