//! Model assembly: catalog names, JSON model files, random instances.
//!
//! A model file is a small JSON object:
//! `{"kind": "bitnet" | "gaussian", "nodes": ["a", ...], "edges": [[p, c], ...]}`
//! with edges given as index pairs into `nodes`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitnet::BitnetModel;
use crate::dag::{build_catalog_dag, Dag, TopologyId};
use crate::error::{Error, Result};
use crate::gaussian::GaussianModel;

/// Parameterization family attached to a DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bitnet,
    Gaussian,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Bitnet => write!(f, "bitnet"),
            ModelKind::Gaussian => write!(f, "gaussian"),
        }
    }
}

/// On-disk model description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("model json: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for name in &self.nodes {
            if name.is_empty() {
                return Err(Error::InvalidInput("empty node name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate node name `{name}`")));
            }
        }
        // Structural errors (bad indices, self-loops, cycles) surface
        // at parse time, not when the model is first used.
        self.to_dag()?;
        Ok(())
    }

    pub fn to_dag(&self) -> Result<Dag> {
        Dag::new(self.nodes.len(), &self.edges)
    }

    pub fn build(&self) -> Result<AnyModel> {
        let dag = self.to_dag()?;
        Ok(match self.kind {
            ModelKind::Bitnet => AnyModel::Bitnet(BitnetModel::new(dag)),
            ModelKind::Gaussian => AnyModel::Gaussian(GaussianModel::new(dag)),
        })
    }
}

/// A built model of either family.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Bitnet(BitnetModel),
    Gaussian(GaussianModel),
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Bitnet(_) => ModelKind::Bitnet,
            AnyModel::Gaussian(_) => ModelKind::Gaussian,
        }
    }

    pub fn dag(&self) -> &Dag {
        match self {
            AnyModel::Bitnet(m) => m.dag(),
            AnyModel::Gaussian(m) => m.dag(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnyModel::Bitnet(m) => m.dim(),
            AnyModel::Gaussian(m) => m.dim(),
        }
    }
}

/// Parsed catalog name: family plus topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NamedModel {
    pub kind: ModelKind,
    pub topology: TopologyId,
}

/// Parse a short catalog name.
///
/// Bitnet names: `K{n}` complete, `L{n}` chain, `E{n}` exploding star
/// (n nodes), `C{n}` collapsing star (n nodes, so n-1 parents), `D4`
/// double collider, `diamond`. Prefix `gauss:` switches the family and
/// additionally accepts `chain{n}`, `star{k}` (k parents), `v` and
/// `single`. Long forms like `complete:3` work for either family.
pub fn parse_model_name(name: &str) -> Result<NamedModel> {
    let trimmed = name.trim();
    let (kind, rest) = match trimmed.strip_prefix("gauss:") {
        Some(r) => (ModelKind::Gaussian, r),
        None => (ModelKind::Bitnet, trimmed),
    };
    let lower = rest.to_ascii_lowercase();
    let numeric_suffix = |s: &str| -> Result<usize> {
        let n: usize = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad size in model name `{trimmed}`")))?;
        if n == 0 {
            return Err(Error::InvalidInput(format!("model `{trimmed}` needs n >= 1")));
        }
        if n > 24 {
            return Err(Error::InvalidInput(format!(
                "model `{trimmed}`: {n} nodes is past any supported operation"
            )));
        }
        Ok(n)
    };
    let topology = if lower.contains(':') || lower == "double-collider" || lower == "diamond" {
        let topo = lower.parse::<TopologyId>()?;
        if let TopologyId::Complete(n)
        | TopologyId::Chain(n)
        | TopologyId::ExplodingStar(n)
        | TopologyId::CollapsingStar(n) = topo
        {
            numeric_suffix(&n.to_string())?;
        }
        topo
    } else if let Some(s) = lower.strip_prefix('k') {
        TopologyId::Complete(numeric_suffix(s)?)
    } else if let Some(s) = lower.strip_prefix("chain") {
        TopologyId::Chain(numeric_suffix(s)?)
    } else if let Some(s) = lower.strip_prefix("star") {
        TopologyId::CollapsingStar(numeric_suffix(s)?)
    } else if let Some(s) = lower.strip_prefix('l') {
        TopologyId::Chain(numeric_suffix(s)?)
    } else if let Some(s) = lower.strip_prefix('e') {
        TopologyId::ExplodingStar(numeric_suffix(s)?)
    } else if lower == "d4" {
        TopologyId::DoubleCollider
    } else if let Some(s) = lower.strip_prefix('c') {
        let n = numeric_suffix(s)?;
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "model `{trimmed}`: a collapsing star needs at least 2 nodes"
            )));
        }
        TopologyId::CollapsingStar(n - 1)
    } else if lower == "v" {
        TopologyId::CollapsingStar(2)
    } else if lower == "single" {
        TopologyId::Chain(1)
    } else {
        return Err(Error::Parse(format!("unknown model name `{trimmed}`")));
    };
    Ok(NamedModel { kind, topology })
}

/// Build a catalog model straight from its short name.
pub fn build_named(name: &str) -> Result<AnyModel> {
    let named = parse_model_name(name)?;
    let dag = build_catalog_dag(named.topology)?;
    Ok(match named.kind {
        ModelKind::Bitnet => AnyModel::Bitnet(BitnetModel::new(dag)),
        ModelKind::Gaussian => AnyModel::Gaussian(GaussianModel::new(dag)),
    })
}

/// Random DAG on `n` nodes: each pair i < j gets edge i -> j with
/// probability `edge_prob`. Always acyclic by construction.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, edge_prob: f64) -> Result<Dag> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < edge_prob {
                edges.push((i, j));
            }
        }
    }
    Dag::new(n, &edges)
}

/// Random bitnet whose skeleton is a forest (first Betti number 0) with
/// at least one edge and total parameter dimension at most `max_dim`.
///
/// Edges are proposed as random low -> high pairs, so colliders do
/// occur; a union-find keeps the undirected skeleton acyclic.
pub fn random_forest_bitnet<R: Rng>(rng: &mut R, max_dim: usize) -> Result<BitnetModel> {
    if max_dim < 3 {
        return Err(Error::InvalidInput(
            "a forest with an edge needs dimension at least 3".into(),
        ));
    }
    let n = rng.gen_range(2..=4usize);
    let mut root = (0..n).collect::<Vec<usize>>();
    fn find(root: &mut [usize], mut v: usize) -> usize {
        while root[v] != v {
            root[v] = root[root[v]];
            v = root[v];
        }
        v
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut parent_count = vec![0usize; n];
    let dim_of = |pc: &[usize]| -> usize { pc.iter().map(|&m| 1usize << m).sum() };
    for _ in 0..4 * n {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (ra, rb) = (find(&mut root, lo), find(&mut root, hi));
        if ra == rb {
            continue;
        }
        let mut trial = parent_count.clone();
        trial[hi] += 1;
        if dim_of(&trial) > max_dim {
            continue;
        }
        root[ra] = rb;
        parent_count = trial;
        edges.push((lo, hi));
    }
    if edges.is_empty() {
        // Tiny fallback graph; the proposal loop essentially never
        // fails to place an edge, but the contract demands one.
        return Ok(BitnetModel::new(Dag::new(2, &[(0, 1)])?));
    }
    Ok(BitnetModel::new(Dag::new(n, &edges)?))
}

/// Random gaussian DAG model on up to `max_nodes` nodes.
pub fn random_gaussian_model<R: Rng>(rng: &mut R, max_nodes: usize) -> Result<GaussianModel> {
    let n = rng.gen_range(1..=max_nodes.max(1));
    let dag = random_dag(rng, n, 0.5)?;
    Ok(GaussianModel::new(dag))
}
