//! Christoffel symbols, Ricci tensor, and Ricci scalar from a metric
//! jet, plus closed forms tied to specific topologies.
//!
//! Sign convention: R^r_{s,uv} = d_u Gamma^r_{vs} - d_v Gamma^r_{us} +
//! Gamma^r_{ul} Gamma^l_{vs} - Gamma^r_{vl} Gamma^l_{us}, traced to
//! Ric_{sn} = A - B + C - D. Under it the round sphere has R > 0; the
//! calibration anchors are R = +3/2 for the two-node complete bitnet
//! and R = -2 for the Gaussian two-node chain.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};

use crate::bitnet::{metric_jet, BitnetModel, BitnetPoint};
use crate::dag::{build_catalog_dag, TopologyId};
use crate::error::{Error, Result};
use crate::jet::MetricJet;

/// Metrics with 1-norm condition estimates beyond this are refused.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Full curvature data at one point.
#[derive(Debug, Clone)]
pub struct CurvatureReport {
    pub dim: usize,
    /// christoffel[i] holds Gamma^i_{jk} as a symmetric matrix.
    pub christoffel: Vec<DMatrix<f64>>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn invert_checked(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gi = g.clone().try_inverse().ok_or(Error::IllConditioned {
        estimate: f64::INFINITY,
    })?;
    let cond = one_norm(g) * one_norm(&gi);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::IllConditioned { estimate: cond });
    }
    Ok(gi)
}

/// Ricci scalar by the dense-tensor route; accepts any metric jet.
pub fn ricci_scalar(jet: &MetricJet) -> Result<f64> {
    Ok(curvature_report(jet)?.scalar)
}

/// Christoffels, Ricci tensor, and scalar by the dense route.
pub fn curvature_report(jet: &MetricJet) -> Result<CurvatureReport> {
    let d = jet.dim();
    let g = DMatrix::from_fn(d, d, |i, j| jet.entry(i, j));
    let gi = invert_checked(&g)?;

    // dg[l][(i,j)] = d_l g_ij; dgi[l] = -gi dg[l] gi.
    let dg: Vec<DMatrix<f64>> = (0..d)
        .map(|l| DMatrix::from_fn(d, d, |i, j| jet.d_entry(i, j, l)))
        .collect();
    let dgi: Vec<DMatrix<f64>> = dg.iter().map(|dgl| -(&gi * dgl * &gi)).collect();

    // S[m][(j,k)] = d_j g_mk + d_k g_mj - d_m g_jk.
    let s: Vec<DMatrix<f64>> = (0..d)
        .map(|m| {
            DMatrix::from_fn(d, d, |j, k| dg[j][(m, k)] + dg[k][(m, j)] - dg[m][(j, k)])
        })
        .collect();

    // Gamma^i = 1/2 sum_m gi[i,m] S[m].
    let christoffel: Vec<DMatrix<f64>> = (0..d)
        .map(|i| {
            let mut acc = DMatrix::zeros(d, d);
            for m in 0..d {
                acc += &s[m] * (0.5 * gi[(i, m)]);
            }
            acc
        })
        .collect();

    // T_s = Gamma^mu_{mu s} = 1/2 tr(gi dg[s]).
    let t: Vec<f64> = (0..d)
        .map(|ss| 0.5 * (&gi * &dg[ss]).trace())
        .collect();

    // u_m = sum_mu d_mu gi[mu, m]; the contraction must run over the
    // derivative direction, not the entry row (they agree only for
    // diagonal metrics).
    let u: Vec<f64> = (0..d).map(|m| (0..d).map(|mu| dgi[mu][(mu, m)]).sum()).collect();

    let mut ricci = DMatrix::zeros(d, d);
    for sdx in 0..d {
        for n in 0..d {
            // A_{sn} = sum_mu d_mu Gamma^mu_{sn}
            let mut a = 0.0;
            for m in 0..d {
                a += u[m] * s[m][(sdx, n)];
            }
            for l in 0..d {
                for m in 0..d {
                    let ds = jet.dd_entry(m, n, l, sdx) + jet.dd_entry(m, sdx, l, n)
                        - jet.dd_entry(sdx, n, l, m);
                    a += gi[(l, m)] * ds;
                }
            }
            a *= 0.5;

            // B_{sn} = d_n T_s
            let mut b = 0.0;
            for p in 0..d {
                for q in 0..d {
                    b += dgi[n][(p, q)] * dg[sdx][(q, p)] + gi[(p, q)] * jet.dd_entry(q, p, n, sdx);
                }
            }
            b *= 0.5;

            // C_{sn} = sum_l T_l Gamma^l_{sn}
            let c: f64 = (0..d).map(|l| t[l] * christoffel[l][(sdx, n)]).sum();

            // D_{sn} = sum_{m,l} Gamma^m_{nl} Gamma^l_{ms}
            let mut dd = 0.0;
            for m in 0..d {
                for l in 0..d {
                    dd += christoffel[m][(n, l)] * christoffel[l][(m, sdx)];
                }
            }

            ricci[(sdx, n)] = a - b + c - dd;
        }
    }

    let mut scalar = 0.0;
    for sdx in 0..d {
        for n in 0..d {
            scalar += gi[(sdx, n)] * ricci[(sdx, n)];
        }
    }
    Ok(CurvatureReport {
        dim: d,
        christoffel,
        ricci,
        scalar,
    })
}

/// Ricci scalar for diagonal metrics without forming dense tensors.
///
/// With G_a = g_aa, the only nonzero Christoffels are
/// Gamma^a_{aa} = d_a G_a / 2G_a, Gamma^a_{ab} = d_b G_a / 2G_a, and
/// Gamma^a_{bb} = -d_a G_b / 2G_a, which collapses the trace to an
/// O(d^2) sum.
pub fn ricci_scalar_diagonal(jet: &MetricJet) -> Result<f64> {
    ricci_scalar_diagonal_with_limit(jet, CONDITION_LIMIT)
}

/// Same computation with no conditioning ceiling, for integrators that
/// must evaluate deep in the tails where the entry spread is genuine.
/// The formula works in relative derivative ratios, so wide spreads
/// lose little precision; degenerate entries still error.
pub fn ricci_scalar_diagonal_unguarded(jet: &MetricJet) -> Result<f64> {
    ricci_scalar_diagonal_with_limit(jet, f64::INFINITY)
}

fn ricci_scalar_diagonal_with_limit(jet: &MetricJet, limit: f64) -> Result<f64> {
    let entries = match jet {
        MetricJet::Diagonal { entries } => entries,
        MetricJet::Dense { .. } => {
            return Err(Error::InvalidInput(
                "diagonal fast path called on a dense metric jet".into(),
            ))
        }
    };
    let d = entries.len();
    let g: Vec<f64> = entries.iter().map(|e| e.val).collect();
    if g.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(Error::IllConditioned {
            estimate: f64::INFINITY,
        });
    }
    let cond = g.iter().fold(0.0f64, |m, &x| m.max(x))
        / g.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    if cond > limit {
        return Err(Error::IllConditioned { estimate: cond });
    }

    // T[lam] = 1/2 sum_mu d_lam g_mu / g_mu
    let t: Vec<f64> = (0..d)
        .map(|lam| 0.5 * (0..d).map(|mu| entries[mu].d(lam) / g[mu]).sum::<f64>())
        .collect();

    let mut r = 0.0;
    for a in 0..d {
        let ea = &entries[a];
        let da_ga = ea.d(a);
        // t1 = sum_mu d_mu Gamma^mu_{aa}
        let mut t1 = ea.dd(a, a) / (2.0 * g[a]) - da_ga * da_ga / (2.0 * g[a] * g[a]);
        // t2 = d_a T_a
        let mut t2 = 0.0;
        // t3 = sum_lam T_lam Gamma^lam_{aa}
        let mut t3 = t[a] * da_ga / (2.0 * g[a]);
        // t4 = sum_{mu,lam} Gamma^mu_{a lam} Gamma^lam_{mu a}
        let mut t4 = (da_ga / (2.0 * g[a])).powi(2);
        for mu in 0..d {
            let emu = &entries[mu];
            t2 += 0.5 * (emu.dd(a, a) / g[mu] - (emu.d(a) / g[mu]).powi(2));
            if mu == a {
                continue;
            }
            let dmu_ga = ea.d(mu);
            t1 += -ea.dd(mu, mu) / (2.0 * g[mu]) + dmu_ga * emu.d(mu) / (2.0 * g[mu] * g[mu]);
            t3 += t[mu] * (-dmu_ga / (2.0 * g[mu]));
            t4 += 2.0 * (dmu_ga / (2.0 * g[a])) * (-dmu_ga / (2.0 * g[mu]));
            t4 += (emu.d(a) / (2.0 * g[mu])).powi(2);
        }
        r += (t1 - t2 + t3 - t4) / g[a];
    }
    Ok(r)
}

/// Pointwise Ricci scalar of the double-collider bitnet as a function
/// of the two root marginals alone: R = 36 - 3/x1 - 3/x2 with
/// x = r(1-r). Equals the full 10-dimensional computation at any CPT.
pub fn d4_pointwise_ricci(r1: f64, r2: f64) -> Result<f64> {
    for (name, r) in [("r1", r1), ("r2", r2)] {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!(
                "{name} = {r} is outside the open interval (0, 1)"
            )));
        }
    }
    let x1 = r1 * (1.0 - r1);
    let x2 = r2 * (1.0 - r2);
    Ok(36.0 - 3.0 / x1 - 3.0 / x2)
}

/// Affine structure of the collapsing-star Ricci scalar,
/// R = a - b * sum_i 1/(rho_i (1 - rho_i)), recovered by least squares
/// over random interior points.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CollapsingStarFit {
    pub n_parents: usize,
    pub samples: usize,
    pub a: f64,
    pub b: f64,
    /// Largest absolute deviation of a sample from the fitted affine form.
    pub max_residual: f64,
    /// Largest change in R when only the child CPT values are
    /// re-randomized at a fixed root point.
    pub cpt_dependence: f64,
}

/// Fits (a_n, b_n) for the star with `n_parents` roots feeding one
/// collider. Root marginals are drawn from U(0.15, 0.85) to keep the
/// 1/(rho(1-rho)) regressor bounded; child CPT entries are fully
/// random, so a tiny residual certifies that R ignores them.
pub fn fit_collapsing_star_form(
    n_parents: usize,
    samples: usize,
    seed: u64,
) -> Result<CollapsingStarFit> {
    if !(1..=5).contains(&n_parents) {
        return Err(Error::InvalidInput(format!(
            "collapsing-star fit supports 1..=5 parents, got {n_parents}"
        )));
    }
    if samples < 2 * (n_parents + 1) {
        return Err(Error::InvalidInput(format!(
            "need at least {} samples for {n_parents} parents, got {samples}",
            2 * (n_parents + 1)
        )));
    }
    let dag = build_catalog_dag(TopologyId::CollapsingStar(n_parents))?;
    let model = BitnetModel::new(dag);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let mut regressor = Vec::with_capacity(samples);
    let mut response = Vec::with_capacity(samples);
    let mut cpt_dependence = 0.0f64;
    for i in 0..samples {
        let mut theta = vec![0.0; model.dim()];
        for slot in theta.iter_mut().take(n_parents) {
            *slot = rng.gen_range(0.15..0.85);
        }
        for slot in theta.iter_mut().skip(n_parents) {
            *slot = rng.gen_range(0.1..0.9);
        }
        let point = BitnetPoint::new(&model, theta.clone())?;
        let r = ricci_scalar_diagonal(&metric_jet(&model, &point)?)?;
        let s: f64 = theta[..n_parents].iter().map(|&p| 1.0 / (p * (1.0 - p))).sum();
        regressor.push(s);
        response.push(r);

        if i < 3 {
            // Same roots, fresh CPT: R must not move.
            for slot in theta.iter_mut().skip(n_parents) {
                *slot = rng.gen_range(0.1..0.9);
            }
            let point2 = BitnetPoint::new(&model, theta)?;
            let r2 = ricci_scalar_diagonal(&metric_jet(&model, &point2)?)?;
            cpt_dependence = cpt_dependence.max((r2 - r).abs());
        }
    }

    // Normal equations for R = a - b s.
    let m = samples as f64;
    let s1: f64 = regressor.iter().sum();
    let s2: f64 = regressor.iter().map(|s| s * s).sum();
    let r1: f64 = response.iter().sum();
    let sr: f64 = regressor.iter().zip(&response).map(|(s, r)| s * r).sum();
    let det = m * s2 - s1 * s1;
    if det.abs() < 1e-9 * m * s2.max(1.0) {
        return Err(Error::Numerical(
            "degenerate design matrix in collapsing-star fit".into(),
        ));
    }
    let a = (s2 * r1 - s1 * sr) / det;
    let slope = (m * sr - s1 * r1) / det; // R = a + slope*s, b = -slope
    let b = -slope;
    let max_residual = regressor
        .iter()
        .zip(&response)
        .map(|(s, r)| (r - (a - b * s)).abs())
        .fold(0.0, f64::max);

    Ok(CollapsingStarFit {
        n_parents,
        samples,
        a,
        b,
        max_residual,
        cpt_dependence,
    })
}
