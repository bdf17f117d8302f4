//! Shared helpers for the integration batteries: catalog enumeration,
//! deterministic interior points, and finite-difference cross-checks of
//! the metric jets.

use infogeo::bitnet::{fisher_metric, metric_jet, BitnetModel, BitnetPoint};
use infogeo::curvature::{ricci_scalar, ricci_scalar_diagonal};
use infogeo::dag::{build_catalog_dag, TopologyId};
use infogeo::gaussian::{gaussian_fisher_metric, gaussian_metric_jet, GaussianModel, GaussianPoint};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Step for the Richardson pairs (h, h/2). Chosen so the extrapolated
/// truncation term sits near 1e-7 relative while cancellation noise
/// stays below 1e-9 for points kept away from the domain boundary.
const FD_STEP: f64 = 2e-3;

pub fn bitnet_catalog() -> Vec<(&'static str, BitnetModel)> {
    let ids: Vec<(&'static str, TopologyId)> = vec![
        ("single", TopologyId::Chain(1)),
        ("K2", TopologyId::Complete(2)),
        ("K3", TopologyId::Complete(3)),
        ("L2", TopologyId::Chain(2)),
        ("L3", TopologyId::Chain(3)),
        ("L4", TopologyId::Chain(4)),
        ("E3", TopologyId::ExplodingStar(3)),
        ("E4", TopologyId::ExplodingStar(4)),
        ("C3", TopologyId::CollapsingStar(2)),
        ("C4", TopologyId::CollapsingStar(3)),
        ("C5", TopologyId::CollapsingStar(4)),
        ("C6", TopologyId::CollapsingStar(5)),
        ("D4", TopologyId::DoubleCollider),
        ("diamond", TopologyId::Diamond),
    ];
    ids.into_iter()
        .map(|(name, id)| (name, BitnetModel::new(build_catalog_dag(id).unwrap())))
        .collect()
}

pub fn gaussian_catalog() -> Vec<(&'static str, GaussianModel)> {
    let ids: Vec<(&'static str, TopologyId)> = vec![
        ("gauss:single", TopologyId::Chain(1)),
        ("gauss:chain2", TopologyId::Chain(2)),
        ("gauss:chain3", TopologyId::Chain(3)),
        ("gauss:chain4", TopologyId::Chain(4)),
        ("gauss:star2", TopologyId::CollapsingStar(2)),
        ("gauss:star3", TopologyId::CollapsingStar(3)),
        ("gauss:fan3", TopologyId::ExplodingStar(3)),
        ("gauss:diamond", TopologyId::Diamond),
    ];
    ids.into_iter()
        .map(|(name, id)| (name, GaussianModel::new(build_catalog_dag(id).unwrap())))
        .collect()
}

/// Deterministic interior bitnet point with every slot in [0.2, 0.8],
/// far enough from the boundary that FD probes stay interior.
pub fn bitnet_point_spread(model: &BitnetModel, salt: u64) -> BitnetPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a6a_0000 ^ salt);
    let theta: Vec<f64> = (0..model.dim()).map(|_| rng.gen_range(0.2..0.8)).collect();
    BitnetPoint::new(model, theta).unwrap()
}

/// Deterministic gaussian point with weights in [-0.8, 0.8] and
/// variances in [0.5, 1.5]; tame enough for FD probes.
pub fn gaussian_point_spread(model: &GaussianModel, salt: u64) -> GaussianPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a55_0000 ^ salt);
    let mut values = vec![0.0; model.dim()];
    for k in 0..model.n_nodes() {
        for t in 0..model.dag().parents(k).len() {
            values[model.weight_slot(k, t)] = rng.gen_range(-0.8..0.8);
        }
        values[model.variance_slot(k)] = rng.gen_range(0.5..1.5);
    }
    GaussianPoint::new(model, values).unwrap()
}

/// max |a - b| / max(|a|, |b|, floor) over paired slices.
fn max_normalized_dev(pairs: &[(f64, f64)], floor: f64) -> f64 {
    pairs
        .iter()
        .map(|&(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Richardson-extrapolated first derivative from central differences
/// at steps h and h/2: error drops from O(h^2) to O(h^4).
fn extrapolate(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// Compares every first and second derivative stored in the bitnet
/// metric jet against Richardson finite differences of the plain
/// metric. Returns (max normalized first-order dev, second-order dev).
pub fn bitnet_jet_fd_deviation(model: &BitnetModel, point: &BitnetPoint) -> (f64, f64) {
    let d = model.dim();
    let theta0 = point.as_slice().to_vec();
    let jet = metric_jet(model, point).unwrap();
    let g_at = |theta: &[f64]| -> Vec<f64> {
        let p = BitnetPoint::new(model, theta.to_vec()).unwrap();
        fisher_metric(model, &p).unwrap()
    };
    let g0 = g_at(&theta0);

    let shifted = |l: usize, dl: f64| -> Vec<f64> {
        let mut t = theta0.clone();
        t[l] += dl;
        g_at(&t)
    };

    let mut first = Vec::new();
    let mut second = Vec::new();
    let h = FD_STEP;
    for l in 0..d {
        let gp = shifted(l, h);
        let gm = shifted(l, -h);
        let gp2 = shifted(l, h / 2.0);
        let gm2 = shifted(l, -h / 2.0);
        for i in 0..d {
            let d_coarse = (gp[i] - gm[i]) / (2.0 * h);
            let d_fine = (gp2[i] - gm2[i]) / h;
            first.push((jet.d_entry(i, i, l), extrapolate(d_coarse, d_fine)));

            let s_coarse = (gp[i] - 2.0 * g0[i] + gm[i]) / (h * h);
            let s_fine = (gp2[i] - 2.0 * g0[i] + gm2[i]) / (h * h / 4.0);
            second.push((jet.dd_entry(i, i, l, l), extrapolate(s_coarse, s_fine)));
        }
    }
    // Mixed second derivatives by the four-point cross stencil.
    let cross = |l: usize, m: usize, dl: f64, dm: f64| -> Vec<f64> {
        let mut t = theta0.clone();
        t[l] += dl;
        t[m] += dm;
        g_at(&t)
    };
    for l in 0..d {
        for m in (l + 1)..d {
            let c_at = |s: f64| -> Vec<f64> {
                let pp = cross(l, m, s, s);
                let pm = cross(l, m, s, -s);
                let mp = cross(l, m, -s, s);
                let mm = cross(l, m, -s, -s);
                (0..d)
                    .map(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * s * s))
                    .collect()
            };
            let coarse = c_at(h);
            let fine = c_at(h / 2.0);
            for i in 0..d {
                second.push((
                    jet.dd_entry(i, i, l, m),
                    extrapolate(coarse[i], fine[i]),
                ));
            }
        }
    }

    let scale1 = first.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let scale2 = second.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    (
        max_normalized_dev(&first, 1e-2 * scale1),
        max_normalized_dev(&second, 1e-2 * scale2),
    )
}

/// Same cross-check for the dense gaussian jet, over all entries with
/// j >= i (the metric is symmetric).
pub fn gaussian_jet_fd_deviation(model: &GaussianModel, point: &GaussianPoint) -> (f64, f64) {
    let d = model.dim();
    let x0 = point.as_slice().to_vec();
    let jet = gaussian_metric_jet(model, point);
    let g_at = |x: &[f64]| -> Vec<f64> {
        let p = GaussianPoint::new(model, x.to_vec()).unwrap();
        let g = gaussian_fisher_metric(model, &p);
        let mut flat = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                flat.push(g[(i, j)]);
            }
        }
        flat
    };
    let g0 = g_at(&x0);
    let shifted = |l: usize, dl: f64| -> Vec<f64> {
        let mut x = x0.clone();
        x[l] += dl;
        g_at(&x)
    };

    let mut first = Vec::new();
    let mut second = Vec::new();
    let h = FD_STEP;
    for l in 0..d {
        let gp = shifted(l, h);
        let gm = shifted(l, -h);
        let gp2 = shifted(l, h / 2.0);
        let gm2 = shifted(l, -h / 2.0);
        for i in 0..d {
            for j in i..d {
                let e = i * d + j;
                let d_coarse = (gp[e] - gm[e]) / (2.0 * h);
                let d_fine = (gp2[e] - gm2[e]) / h;
                first.push((jet.d_entry(i, j, l), extrapolate(d_coarse, d_fine)));

                let s_coarse = (gp[e] - 2.0 * g0[e] + gm[e]) / (h * h);
                let s_fine = (gp2[e] - 2.0 * g0[e] + gm2[e]) / (h * h / 4.0);
                second.push((jet.dd_entry(i, j, l, l), extrapolate(s_coarse, s_fine)));
            }
        }
    }
    let cross = |l: usize, m: usize, dl: f64, dm: f64| -> Vec<f64> {
        let mut x = x0.clone();
        x[l] += dl;
        x[m] += dm;
        g_at(&x)
    };
    for l in 0..d {
        for m in (l + 1)..d {
            let c_at = |s: f64| -> Vec<f64> {
                let pp = cross(l, m, s, s);
                let pm = cross(l, m, s, -s);
                let mp = cross(l, m, -s, s);
                let mm = cross(l, m, -s, -s);
                (0..d * d)
                    .map(|e| (pp[e] - pm[e] - mp[e] + mm[e]) / (4.0 * s * s))
                    .collect()
            };
            let coarse = c_at(h);
            let fine = c_at(h / 2.0);
            for i in 0..d {
                for j in i..d {
                    second.push((
                        jet.dd_entry(i, j, l, m),
                        extrapolate(coarse[i * d + j], fine[i * d + j]),
                    ));
                }
            }
        }
    }

    let scale1 = first.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    let scale2 = second.iter().map(|p| p.0.abs()).fold(1.0, f64::max);
    (
        max_normalized_dev(&first, 1e-2 * scale1),
        max_normalized_dev(&second, 1e-2 * scale2),
    )
}

/// Relative gap between the O(d^2) diagonal Ricci route and the dense
/// tensor route on the same jet.
pub fn diagonal_vs_dense_ricci(model: &BitnetModel, point: &BitnetPoint) -> f64 {
    let jet = metric_jet(model, point).unwrap();
    let fast = ricci_scalar_diagonal(&jet).unwrap();
    let dense = ricci_scalar(&jet).unwrap();
    (fast - dense).abs() / fast.abs().max(dense.abs()).max(1.0)
}
