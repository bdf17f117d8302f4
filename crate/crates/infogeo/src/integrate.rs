//! Information volume and volume-averaged scalar curvature.
//!
//! Both integrals run against the Riemannian volume element
//! prod_j sqrt(g_jj) = prod_j sqrt(pi_j) * [theta_j(1-theta_j)]^{-1/2},
//! which is only proper for bitnets; gaussian models are rejected.
//!
//! Two backends:
//! * tensor quadrature with Richardson extrapolation, after reducing
//!   out leaf-node axes (each contributes an exact factor of pi);
//! * partitioned Monte Carlo with arcsine importance sampling, a ratio
//!   estimator for averages, and budget-growth divergence checks.
//!
//! Results are bit-identical across runs and thread counts: quadrature
//! sums are chunk-ordered and Monte Carlo partitions use fixed RNG
//! streams merged in partition order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitnet::{metric_jet, parent_config_table, BitnetModel, BitnetPoint};
use crate::curvature::{
    d4_pointwise_ricci, fit_collapsing_star_form, ricci_scalar_diagonal,
    ricci_scalar_diagonal_unguarded, CollapsingStarFit,
};
use crate::dag::{build_catalog_dag, TopologyId};
use crate::error::{Error, Result};
use crate::model::AnyModel;
use crate::quadrature::{chebyshev_nodes, richardson, tensor_quadrature, WeightSpec};

/// Hard floor on Monte Carlo budgets.
pub const MIN_MC_BUDGET: u64 = 1_000;
/// Quadrature is refused above this many active (non-reduced) axes.
pub const MAX_QUADRATURE_AXES: usize = 6;
/// Default number of Monte Carlo partitions (independent RNG streams).
pub const DEFAULT_PARTITIONS: u32 = 64;

const PROBE_POINTS: usize = 20;
const CONSTANT_VARIANCE_TOL: f64 = 1e-12;
/// Margin used when clamping Monte Carlo draws into the open cube.
const MC_CLAMP: f64 = 2e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GaussJacobi,
    MonteCarlo,
    ReducedQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateStatus {
    Ok,
    ConstantCurvature,
    DivergenceSuspected,
}

/// One numeric integral with its error diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_estimate: Option<f64>,
    pub method: Method,
    /// Samples drawn (Monte Carlo) or grid points visited (quadrature).
    pub budget: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: EstimateStatus,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
    pub partitions: u32,
}

impl McSettings {
    pub fn new(samples: u64, seed: u64) -> Self {
        McSettings {
            samples,
            seed,
            partitions: DEFAULT_PARTITIONS,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct QuadSettings {
    /// Node counts per axis; `None` picks a ladder suited to the
    /// number of active axes.
    pub node_counts: Option<Vec<usize>>,
}

impl QuadSettings {
    fn counts_for(&self, axes: usize) -> Result<Vec<usize>> {
        let counts = match &self.node_counts {
            Some(c) => c.clone(),
            None => match axes {
                0..=4 => vec![32, 48, 64],
                5 => vec![16, 24, 32],
                _ => vec![8, 12, 16],
            },
        };
        if counts.is_empty() {
            return Err(Error::InvalidInput("empty quadrature node-count ladder".into()));
        }
        if counts.windows(2).any(|w| w[1] <= w[0]) || counts[0] < 4 {
            return Err(Error::InvalidInput(
                "quadrature node counts must be strictly increasing and at least 4".into(),
            ));
        }
        Ok(counts)
    }
}

#[derive(Debug, Clone)]
pub enum Strategy {
    Quadrature(QuadSettings),
    MonteCarlo(McSettings),
}

/// prod over all slots of sqrt(pi_j): the smooth part of the volume
/// element once every [theta(1-theta)]^{-1/2} factor is split off.
fn sqrt_marginal_product(model: &BitnetModel, theta: &[f64]) -> Result<f64> {
    let mut f = 1.0;
    for node in 0..model.n_nodes() {
        for p in parent_config_table::<f64>(model, theta, node)? {
            f *= p.sqrt();
        }
    }
    Ok(f.max(0.0))
}

fn bitnet_ricci(model: &BitnetModel, theta: Vec<f64>) -> Result<f64> {
    let point = BitnetPoint::new(model, theta)?;
    let jet = metric_jet(model, &point)?;
    ricci_scalar_diagonal(&jet)
}

/// Integration points legitimately land deep in the corners where the
/// metric spread blows past the pointwise conditioning ceiling (Monte
/// Carlo tail draws, and dense quadrature grids on collider children
/// whose marginals multiply two corner factors); the heavy integrand
/// out there is part of the integral, so evaluation must not refuse
/// it. The ratio-form diagonal formula stays accurate at these spreads.
fn bitnet_ricci_tail(model: &BitnetModel, theta: &[f64]) -> Result<f64> {
    let point = BitnetPoint::new(model, theta.to_vec())?;
    let jet = metric_jet(model, &point)?;
    ricci_scalar_diagonal_unguarded(&jet)
}

/// Slots of nodes that have children (the active axes) and the number
/// of leaf-node slots, whose axes integrate to pi each exactly.
fn active_slots(model: &BitnetModel) -> (Vec<usize>, usize) {
    let mut active = Vec::new();
    let mut leaf = 0;
    for node in 0..model.n_nodes() {
        let start = model.block_start(node);
        let len = model.block_len(node);
        if model.dag().children(node).is_empty() {
            leaf += len;
        } else {
            active.extend(start..start + len);
        }
    }
    (active, leaf)
}

fn fill_point(dim: usize, axes: &[usize], x: &[f64]) -> Vec<f64> {
    let mut theta = vec![0.5; dim];
    for (slot, &v) in axes.iter().zip(x) {
        theta[*slot] = v;
    }
    theta
}

fn reject_gaussian(model: &AnyModel) -> Result<&BitnetModel> {
    match model {
        AnyModel::Bitnet(m) => Ok(m),
        AnyModel::Gaussian(_) => Err(Error::Capability(
            "the gaussian volume element has infinite mass, so volume and \
             volume-averaged curvature are undefined; use pointwise curvature"
                .into(),
        )),
    }
}

/// Leaf-slot coordinates never enter the marginals pi_j, but averaged
/// curvature additionally needs R itself independent of them before the
/// reduced grid is valid. Probed numerically; bitnet families used here
/// satisfy it, but the check keeps the reduction honest.
fn ricci_ignores_leaf_slots(model: &BitnetModel) -> Result<bool> {
    let (active, leaf) = active_slots(model);
    if leaf == 0 {
        return Ok(true);
    }
    let dim = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0001_eaf5_1075);
    for _ in 0..5 {
        let mut theta: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.15..0.85)).collect();
        let base = bitnet_ricci(model, theta.clone())?;
        for _ in 0..3 {
            for (slot, value) in theta.iter_mut().enumerate() {
                if !active.contains(&slot) {
                    *value = rng.gen_range(0.15..0.85);
                }
            }
            let again = bitnet_ricci(model, theta.clone())?;
            if (again - base).abs() > 1e-8 * (1.0 + base.abs()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn finite_or_err(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!(
            "{what} produced a non-finite value (metric too ill-conditioned near a grid corner); \
             lower the node counts or switch to monte-carlo"
        )))
    }
}

fn quadrature_volume(model: &BitnetModel, settings: &QuadSettings) -> Result<IntegralEstimate> {
    let (active, leaf) = active_slots(model);
    if active.len() > MAX_QUADRATURE_AXES {
        return Err(Error::Capability(format!(
            "quadrature supports at most {MAX_QUADRATURE_AXES} active axes; this model has {} \
             (dimension {} minus {leaf} leaf slots); use monte-carlo",
            active.len(),
            model.dim()
        )));
    }
    let counts = settings.counts_for(active.len())?;
    let spec = WeightSpec::arcsine(active.len());
    let dim = model.dim();
    let mut seq = Vec::new();
    let mut budget = 0u64;
    for &n in &counts {
        let i_n = tensor_quadrature(&spec, n, |x| {
            sqrt_marginal_product(model, &fill_point(dim, &active, x)).unwrap_or(f64::NAN)
        })?;
        finite_or_err(i_n, "volume quadrature")?;
        seq.push((n, i_n));
        budget += (n as u64).pow(active.len() as u32);
    }
    let ex = richardson(&seq)?;
    let scale = std::f64::consts::PI.powi(leaf as i32);
    Ok(IntegralEstimate {
        value: scale * ex.value,
        std_error: None,
        truncation_estimate: Some(scale * ex.truncation),
        method: Method::ReducedQuadrature,
        budget,
        seed: None,
        status: EstimateStatus::Ok,
        notes: vec![format!(
            "{leaf} leaf-node axis(es) integrate to pi each; {} axis(es) quadrated numerically",
            active.len()
        )],
    })
}

fn quadrature_average(model: &BitnetModel, settings: &QuadSettings) -> Result<IntegralEstimate> {
    let (active, leaf) = active_slots(model);
    let reduced = ricci_ignores_leaf_slots(model)?;
    let (axes, method, mut notes) = if reduced {
        (
            active,
            Method::ReducedQuadrature,
            vec![format!(
                "curvature probe found no leaf-slot dependence; {leaf} leaf axes reduced out"
            )],
        )
    } else {
        (
            (0..model.dim()).collect::<Vec<usize>>(),
            Method::GaussJacobi,
            vec!["curvature depends on leaf slots; full-dimensional grid used".to_string()],
        )
    };
    if axes.len() > MAX_QUADRATURE_AXES {
        return Err(Error::Capability(format!(
            "quadrature supports at most {MAX_QUADRATURE_AXES} active axes; this average needs {}; \
             use monte-carlo",
            axes.len()
        )));
    }
    let counts = settings.counts_for(axes.len())?;
    let spec = WeightSpec::arcsine(axes.len());
    let dim = model.dim();
    let mut ratios = Vec::new();
    let mut budget = 0u64;
    for &n in &counts {
        let num = tensor_quadrature(&spec, n, |x| {
            let theta = fill_point(dim, &axes, x);
            match (
                sqrt_marginal_product(model, &theta),
                bitnet_ricci_tail(model, &theta),
            ) {
                (Ok(f), Ok(r)) => f * r,
                _ => f64::NAN,
            }
        })?;
        let den = tensor_quadrature(&spec, n, |x| {
            sqrt_marginal_product(model, &fill_point(dim, &axes, x)).unwrap_or(f64::NAN)
        })?;
        finite_or_err(num, "curvature quadrature")?;
        finite_or_err(den, "volume quadrature")?;
        if den <= 0.0 {
            return Err(Error::Numerical("volume quadrature collapsed to zero".into()));
        }
        ratios.push((n, num / den));
        budget += 2 * (n as u64).pow(axes.len() as u32);
    }
    let ex = richardson(&ratios)?;
    if let Some(p) = ex.order {
        notes.push(format!("fitted convergence order {p:.3}"));
    }
    Ok(IntegralEstimate {
        value: ex.value,
        std_error: None,
        truncation_estimate: Some(ex.truncation),
        method,
        budget,
        seed: None,
        status: EstimateStatus::Ok,
        notes,
    })
}

/// Per-partition running sums for the ratio estimator. `w` is the
/// importance weight pi^d * prod sqrt(pi_j); `x` is R * w.
#[derive(Debug, Clone, Copy, Default)]
struct PartSums {
    n: u64,
    sw: f64,
    sw2: f64,
    sx: f64,
    sx2: f64,
    sxw: f64,
}

impl PartSums {
    fn merge(mut self, o: &PartSums) -> PartSums {
        self.n += o.n;
        self.sw += o.sw;
        self.sw2 += o.sw2;
        self.sx += o.sx;
        self.sx2 += o.sx2;
        self.sxw += o.sxw;
        self
    }
}

fn mc_partitions(
    model: &BitnetModel,
    settings: &McSettings,
    with_ricci: bool,
) -> Result<Vec<PartSums>> {
    if settings.samples < MIN_MC_BUDGET {
        return Err(Error::InvalidInput(format!(
            "monte-carlo budget {} is below the minimum {MIN_MC_BUDGET}",
            settings.samples
        )));
    }
    if settings.partitions == 0 {
        return Err(Error::InvalidInput("need at least one partition".into()));
    }
    let parts = settings.partitions as u64;
    let dim = model.dim();
    let log_weight_scale = (dim as f64) * std::f64::consts::PI.ln();
    let weight_scale = log_weight_scale.exp();
    if !weight_scale.is_finite() {
        return Err(Error::Capability(format!(
            "dimension {dim} overflows the pi^d importance weight"
        )));
    }

    use rayon::prelude::*;
    let sums: Vec<Result<PartSums>> = (0..parts)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(p);
            let n_p = settings.samples / parts + u64::from(p < settings.samples % parts);
            let mut acc = PartSums::default();
            let mut theta = vec![0.0f64; dim];
            for _ in 0..n_p {
                for t in theta.iter_mut() {
                    let u: f64 = rng.gen();
                    let s = (std::f64::consts::FRAC_PI_2 * u).sin();
                    *t = (s * s).clamp(MC_CLAMP, 1.0 - MC_CLAMP);
                }
                let w = weight_scale * sqrt_marginal_product(model, &theta)?;
                acc.n += 1;
                acc.sw += w;
                acc.sw2 += w * w;
                if with_ricci {
                    let r = bitnet_ricci_tail(model, &theta)?;
                    let x = r * w;
                    acc.sx += x;
                    acc.sx2 += x * x;
                    acc.sxw += x * w;
                }
            }
            Ok(acc)
        })
        .collect();
    sums.into_iter().collect()
}

fn pooled(parts: &[PartSums]) -> PartSums {
    parts.iter().fold(PartSums::default(), |a, b| a.merge(b))
}

fn mean_se(p: &PartSums) -> (f64, f64) {
    let n = p.n as f64;
    let mean = p.sw / n;
    let var = ((p.sw2 - p.sw * p.sw / n) / (n - 1.0)).max(0.0);
    (mean, (var / n).sqrt())
}

/// Delta-method standard error of the ratio sx/sw.
fn ratio_se(p: &PartSums) -> (f64, f64) {
    let n = p.n as f64;
    let wbar = p.sw / n;
    let theta = p.sx / p.sw;
    let s_xx = (p.sx2 - p.sx * p.sx / n) / (n - 1.0);
    let s_ww = (p.sw2 - p.sw * p.sw / n) / (n - 1.0);
    let s_xw = (p.sxw - p.sx * p.sw / n) / (n - 1.0);
    let var = (s_xx - 2.0 * theta * s_xw + theta * theta * s_ww) / (n * wbar * wbar);
    (theta, var.max(0.0).sqrt())
}

fn jackknife_ratio_se(parts: &[PartSums], total: &PartSums) -> Option<f64> {
    if parts.len() < 4 {
        return None;
    }
    let loo: Vec<f64> = parts
        .iter()
        .filter(|p| p.n > 0)
        .map(|p| (total.sx - p.sx) / (total.sw - p.sw))
        .collect();
    let k = loo.len() as f64;
    if k < 4.0 || loo.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mean = loo.iter().sum::<f64>() / k;
    let ss = loo.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    Some(((k - 1.0) / k * ss).sqrt())
}

/// Compare SEs of prefix budgets (1/3, 2/3, full). A healthy estimator
/// shrinks its SE like 1/sqrt(budget); stagnation marks a (near-)
/// divergent second moment.
fn divergence_flag<FEst>(parts: &[PartSums], estimator: FEst) -> bool
where
    FEst: Fn(&PartSums) -> (f64, f64),
{
    if parts.len() < 6 {
        return false;
    }
    let third = parts.len() / 3;
    let (val_a, se_a) = estimator(&pooled(&parts[..third]));
    let (val_c, se_c) = estimator(&pooled(parts));
    if !(se_a.is_finite() && se_c.is_finite()) {
        return true;
    }
    if se_a <= 0.0 {
        return false;
    }
    // Budget tripled: expect se_c around 0.58 * se_a.
    se_c > 0.85 * se_a || (val_c - val_a).abs() > 6.0 * se_a.max(se_c)
}

fn mc_volume(model: &BitnetModel, settings: &McSettings) -> Result<IntegralEstimate> {
    let parts = mc_partitions(model, settings, false)?;
    let total = pooled(&parts);
    let (mean, se) = mean_se(&total);
    finite_or_err(mean, "monte-carlo volume")?;
    let status = if divergence_flag(&parts, mean_se) {
        EstimateStatus::DivergenceSuspected
    } else {
        EstimateStatus::Ok
    };
    Ok(IntegralEstimate {
        value: mean,
        std_error: Some(se),
        truncation_estimate: None,
        method: Method::MonteCarlo,
        budget: settings.samples,
        seed: Some(settings.seed),
        status,
        notes: vec![format!("{} partitions merged in fixed order", settings.partitions)],
    })
}

fn mc_average(model: &BitnetModel, settings: &McSettings) -> Result<IntegralEstimate> {
    let parts = mc_partitions(model, settings, true)?;
    let total = pooled(&parts);
    let (theta, se_delta) = ratio_se(&total);
    finite_or_err(theta, "monte-carlo average")?;
    let mut notes = vec![format!("{} partitions merged in fixed order", settings.partitions)];
    let se_jack = jackknife_ratio_se(&parts, &total);
    let se = match se_jack {
        Some(j) if !se_delta.is_finite() || (se_delta > 0.0 && j > 3.0 * se_delta) || se_delta == 0.0 => {
            notes.push("delta-method and jackknife errors disagree; jackknife reported".into());
            j
        }
        _ => se_delta,
    };
    let status = if divergence_flag(&parts, ratio_se) {
        notes.push("standard error is not shrinking with budget; a moment integral likely diverges".into());
        EstimateStatus::DivergenceSuspected
    } else {
        EstimateStatus::Ok
    };
    Ok(IntegralEstimate {
        value: theta,
        std_error: Some(se),
        truncation_estimate: None,
        method: Method::MonteCarlo,
        budget: settings.samples,
        seed: Some(settings.seed),
        status,
        notes,
    })
}

/// Detect curvature that is constant over the whole parameter cube;
/// the average then equals the constant and needs no integration.
fn constant_curvature_probe(model: &BitnetModel) -> Result<Option<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let dim = model.dim();
    let mut values = Vec::with_capacity(PROBE_POINTS);
    for _ in 0..PROBE_POINTS {
        let theta: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.1..0.9)).collect();
        values.push(bitnet_ricci(model, theta)?);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    if var < CONSTANT_VARIANCE_TOL * (1.0 + mean * mean) {
        Ok(Some(mean))
    } else {
        Ok(None)
    }
}

/// Information volume of a bitnet.
pub fn volume(model: &AnyModel, strategy: &Strategy) -> Result<IntegralEstimate> {
    let bitnet = reject_gaussian(model)?;
    match strategy {
        Strategy::Quadrature(q) => quadrature_volume(bitnet, q),
        Strategy::MonteCarlo(mc) => mc_volume(bitnet, mc),
    }
}

/// Volume-averaged scalar curvature of a bitnet.
pub fn average_ricci(model: &AnyModel, strategy: &Strategy) -> Result<IntegralEstimate> {
    let bitnet = reject_gaussian(model)?;
    if let Some(constant) = constant_curvature_probe(bitnet)? {
        let (method, seed, std_error, truncation) = match strategy {
            Strategy::Quadrature(_) => (Method::ReducedQuadrature, None, None, Some(0.0)),
            Strategy::MonteCarlo(mc) => (Method::MonteCarlo, Some(mc.seed), Some(0.0), None),
        };
        return Ok(IntegralEstimate {
            value: constant,
            std_error,
            truncation_estimate: truncation,
            method,
            budget: PROBE_POINTS as u64,
            seed,
            status: EstimateStatus::ConstantCurvature,
            notes: vec![format!(
                "scalar curvature constant across {PROBE_POINTS} probe points; average equals the constant"
            )],
        });
    }
    match strategy {
        Strategy::Quadrature(q) => quadrature_average(bitnet, q),
        Strategy::MonteCarlo(mc) => mc_average(bitnet, mc),
    }
}

/// Average the double-collider scalar curvature over the two root
/// coordinates against the weight [r(1-r)]^{weight_exponent} per axis.
///
/// The closed form makes the averaged value exact:
/// <R> = 36 - 6 * 2(2p+1)/p at weight exponent p. Exponent 5/2 gives
/// 36/5; the exponent actually produced by marginalizing the full
/// volume element is 3/2, which gives 4.
pub fn reduced_average_d4(weight_exponent: f64, settings: &QuadSettings) -> Result<IntegralEstimate> {
    let integrable = weight_exponent.is_finite() && weight_exponent > 0.0;
    if !integrable {
        return Err(Error::InvalidInput(format!(
            "weight exponent {weight_exponent} makes the numerator non-integrable"
        )));
    }
    let counts = settings.counts_for(2)?;
    let spec = WeightSpec {
        alphas: vec![weight_exponent + 1.0; 2],
    };
    let mut ratios = Vec::new();
    let mut budget = 0u64;
    for &n in &counts {
        let num = tensor_quadrature(&spec, n, |x| {
            d4_pointwise_ricci(x[0], x[1]).unwrap_or(f64::NAN)
        })?;
        let den = tensor_quadrature(&spec, n, |_| 1.0)?;
        finite_or_err(num, "reduced double-collider quadrature")?;
        ratios.push((n, num / den));
        budget += 2 * (n as u64) * (n as u64);
    }
    let ex = richardson(&ratios)?;
    Ok(IntegralEstimate {
        value: ex.value,
        std_error: None,
        truncation_estimate: Some(ex.truncation),
        method: Method::ReducedQuadrature,
        budget,
        seed: None,
        status: EstimateStatus::Ok,
        notes: vec![format!(
            "two root axes against weight [r(1-r)]^{weight_exponent}; leaf blocks marginalized"
        )],
    })
}

/// Averaged curvature of the n-parent collapsing star, computed two
/// ways that must agree:
/// (i) affine fit R = a - b * sum 1/x_i times the closed-form root
///     expectation E[1/x] = 2^{n+1} / (2^{n-1} - 1);
/// (ii) the same fit times a numerical expectation taken against the
///     marginal root weight, itself obtained by integrating the volume
///     element over all other coordinates (child axes in closed form,
///     remaining root axes by quadrature).
#[derive(Debug, Clone, Serialize)]
pub struct CollapsingStarAverage {
    pub n_parents: usize,
    pub fit: CollapsingStarFit,
    /// Closed-form slope b_n = 2^{n-1} (2^{n-1} - 1) / 4.
    pub slope_closed_form: f64,
    pub expectation_closed_form: f64,
    pub expectation_quadrature: IntegralEstimate,
    /// Exponent of the marginal root weight fitted from the quadrature
    /// tables; the closed-form value is 2^{n-2} - 1/2.
    pub marginal_exponent_fit: f64,
    pub average_closed_form: f64,
    pub average_quadrature: f64,
}

pub fn reduced_average_collapsing_star(
    n_parents: usize,
    seed: u64,
    settings: &QuadSettings,
) -> Result<CollapsingStarAverage> {
    if !(2..=5).contains(&n_parents) {
        return Err(Error::InvalidInput(format!(
            "collapsing-star averaging supports 2..=5 parents, got {n_parents}; \
             the 1-parent case has slope 0 and average equal to the intercept"
        )));
    }
    let fit = fit_collapsing_star_form(n_parents, 8 * (n_parents + 1), seed)?;
    let model = BitnetModel::new(build_catalog_dag(TopologyId::CollapsingStar(n_parents))?);
    let dim = model.dim();

    let half = 2f64.powi(n_parents as i32 - 1);
    let slope_closed_form = half * (half - 1.0) / 4.0;
    let expectation_closed_form = 2f64.powi(n_parents as i32 + 1) / (half - 1.0);

    // Axes: root 0 is the outer axis; roots 1..n are marginalized
    // numerically for each outer node. The child block's 2^n axes
    // integrate in closed form to pi * sqrt(pi_c) per configuration,
    // and that sqrt product is exactly what sqrt_marginal_product
    // evaluates (root marginals are 1).
    let inner_axes: Vec<usize> = (1..n_parents).map(|i| model.block_start(i)).collect();
    let outer_slot = model.block_start(0);
    let inner_nodes = 24usize;
    let inner_spec = WeightSpec::arcsine(inner_axes.len());

    let counts = settings.counts_for(1)?;
    let mut ratios = Vec::new();
    let mut budget = 0u64;
    let mut finest_table: Vec<(f64, f64)> = Vec::new();
    for &n in &counts {
        let outer = chebyshev_nodes(n);
        let mut num = 0.0;
        let mut den = 0.0;
        let mut table = Vec::with_capacity(n);
        for &rho in &outer {
            let marginal = tensor_quadrature(&inner_spec, inner_nodes, |x| {
                let mut theta = vec![0.5; dim];
                theta[outer_slot] = rho;
                for (slot, &v) in inner_axes.iter().zip(x) {
                    theta[*slot] = v;
                }
                sqrt_marginal_product(&model, &theta).unwrap_or(f64::NAN)
            })?;
            finite_or_err(marginal, "marginal root weight")?;
            num += marginal / (rho * (1.0 - rho));
            den += marginal;
            table.push((rho, marginal));
        }
        if den <= 0.0 {
            return Err(Error::Numerical("marginal root weight collapsed to zero".into()));
        }
        ratios.push((n, num / den));
        budget += (n as u64) * (inner_nodes as u64).pow(inner_axes.len() as u32);
        finest_table = table;
    }
    let ex = richardson(&ratios)?;

    // Regress log marginal against log[rho(1-rho)] to expose the
    // effective exponent; subtract the 1/2 the outer weight carries.
    let logs: Vec<(f64, f64)> = finest_table
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|(r, m)| ((r * (1.0 - r)).ln(), m.ln()))
        .collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let cov = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let var = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    let marginal_exponent_fit = cov / var - 0.5;

    let expectation_quadrature = IntegralEstimate {
        value: ex.value,
        std_error: None,
        truncation_estimate: Some(ex.truncation),
        method: Method::ReducedQuadrature,
        budget,
        seed: Some(seed),
        status: EstimateStatus::Ok,
        notes: vec![format!(
            "E[1/(rho(1-rho))] against the numerically marginalized root weight; \
             {} inner axes at {inner_nodes} nodes",
            inner_axes.len()
        )],
    };

    let n = n_parents as f64;
    let average_closed_form = fit.a - fit.b * n * expectation_closed_form;
    let average_quadrature = fit.a - fit.b * n * expectation_quadrature.value;
    Ok(CollapsingStarAverage {
        n_parents,
        fit,
        slope_closed_form,
        expectation_closed_form,
        expectation_quadrature,
        marginal_exponent_fit,
        average_closed_form,
        average_quadrature,
    })
}
