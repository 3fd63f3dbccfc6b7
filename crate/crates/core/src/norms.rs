//! Multiplier norms: the exact `L^2` norm as the sup of the symbol, and lower
//! bounds for `L^p` norms from zonal test functions on both sides.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::floor_weight;
use crate::error::{Error, Result};
use crate::fourier::{
    inverse_transform_many, normalization, transform_profile, FourierQuadrature, RadialFunction,
    TensorGrid,
};
use crate::model::{density_at, weyl_dim, CartanPoint, SymmetricSpaceModel, WeightPoint};
use crate::special::{gauss_legendre, QuadratureRule};
use crate::spherical::{check_t_grid, factor_phi};
use crate::transfer::{backward_symbol, BackwardQuadrature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Exact,
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEstimate {
    pub p: f64,
    pub value: f64,
    pub kind: NormKind,
    /// Name of the maximizing trial for lower bounds.
    pub witness: Option<String>,
}

/// `sup |symbol|` over the supplied values.
pub fn l2_norm(values: &[f64]) -> Result<NormEstimate> {
    if values.is_empty() {
        return Err(Error::Domain("l2 norm of an empty symbol table".into()));
    }
    let mut sup: f64 = 0.0;
    for v in values {
        if !v.is_finite() {
            return Err(Error::Domain(format!("symbol value {v} is not finite")));
        }
        sup = sup.max(v.abs());
    }
    Ok(NormEstimate {
        p: 2.0,
        value: sup,
        kind: NormKind::Exact,
        witness: None,
    })
}

/// A rank-one test profile; on rank-`r` models it is used as a tensor power.
#[derive(Clone)]
pub struct TrialProfile {
    pub name: String,
    pub support: f64,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for TrialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrialProfile")
            .field("name", &self.name)
            .field("support", &self.support)
            .finish()
    }
}

impl TrialProfile {
    pub fn new<F>(name: impl Into<String>, support: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            support,
            f: Arc::new(f),
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self::new(format!("gaussian(sigma={sigma})"), 8.0 * sigma, move |r| {
            (-r * r / (2.0 * sigma * sigma)).exp()
        })
    }

    pub fn modulated(sigma: f64, omega: f64) -> Self {
        Self::new(
            format!("modulated(sigma={sigma},omega={omega})"),
            8.0 * sigma,
            move |r| (-r * r / (2.0 * sigma * sigma)).exp() * (omega * r).cos(),
        )
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r.abs() <= self.support {
            (self.f)(r)
        } else {
            0.0
        }
    }

    fn radial(&self, rank: usize, cap: f64) -> Result<RadialFunction> {
        let support = self.support.min(cap);
        let parts = (0..rank)
            .map(|_| {
                let me = self.clone();
                RadialFunction::from_fn(vec![support], move |h| me.eval(h[0]))
            })
            .collect::<Result<Vec<_>>>()?;
        RadialFunction::tensor(parts)
    }
}

/// Eight Gaussians of increasing width and four modulated Gaussians.
pub fn default_trials() -> Vec<TrialProfile> {
    let mut trials: Vec<TrialProfile> = [0.08, 0.12, 0.18, 0.25, 0.35, 0.5, 0.7, 1.0]
        .iter()
        .map(|&s| TrialProfile::gaussian(s))
        .collect();
    for &(s, w) in &[(0.3, 6.0), (0.3, 12.0), (0.6, 4.0), (0.6, 10.0)] {
        trials.push(TrialProfile::modulated(s, w));
    }
    trials
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p = {p} must lie in (1, inf)")));
    }
    Ok(())
}

/// First index attaining the maximum ratio; `None` when every trial vanishes.
fn best(ratios: &[Option<f64>]) -> Option<(usize, f64)> {
    let mut out: Option<(usize, f64)> = None;
    for (i, r) in ratios.iter().enumerate() {
        if let Some(v) = *r {
            if out.map_or(true, |(_, b)| v > b) {
                out = Some((i, v));
            }
        }
    }
    out
}

/// Quadrature for the flat-side norm ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlatNormConfig {
    pub fourier: FourierQuadrature,
    /// `T_m f` is measured on the ball of radius
    /// `max(output_radius_factor * support, min_output_radius)`.
    pub output_radius_factor: f64,
    pub min_output_radius: f64,
    pub panel_width: f64,
    pub panel_order: usize,
}

impl Default for FlatNormConfig {
    fn default() -> Self {
        Self {
            fourier: FourierQuadrature::default(),
            output_radius_factor: 3.0,
            min_output_radius: 8.0,
            panel_width: 0.25,
            panel_order: 20,
        }
    }
}

fn lp_norm_flat(model: &SymmetricSpaceModel, rules: &[QuadratureRule], values: &[f64], p: f64) -> f64 {
    let grid = TensorGrid::new(rules);
    let orbit = normalization(model).forward;
    let s: f64 = (0..grid.len())
        .map(|k| {
            let (h, w) = grid.point(k);
            w * density_at(model, &h) * values[k].abs().powf(p)
        })
        .sum();
    (orbit * s).powf(1.0 / p)
}

/// `max_f |T_m f|_p / |f|_p` over the trials, with `T_m f = inverse(m f^)`.
///
/// Both norms are taken over the same ball, which contains the trial support,
/// so every ratio is a valid lower bound.
pub fn lp_lower_bound_flat(
    model: &SymmetricSpaceModel,
    m: &RadialFunction,
    p: f64,
    trials: &[TrialProfile],
    cfg: &FlatNormConfig,
) -> Result<NormEstimate> {
    check_p(p)?;
    m.check_model(model)?;
    let mut ratios = Vec::with_capacity(trials.len());
    for trial in trials {
        let f = trial.radial(model.rank(), f64::INFINITY)?;
        let radius = (cfg.output_radius_factor * trial.support).max(cfg.min_output_radius);
        let panels = (radius / cfg.panel_width).ceil() as usize;
        let rule = QuadratureRule::composite(cfg.panel_order, panels, 0.0, radius)?;
        let rules = vec![rule; model.rank()];
        let grid = TensorGrid::new(&rules);
        let points: Vec<CartanPoint> = (0..grid.len()).map(|k| CartanPoint(grid.point(k).0)).collect();
        let f_vals: Vec<f64> = points.iter().map(|x| f.eval_point(x)).collect();
        let f_norm = lp_norm_flat(model, &rules, &f_vals, p);
        if f_norm == 0.0 {
            ratios.push(None);
            continue;
        }
        let hat = transform_profile(model, &f, &cfg.fourier)?;
        let m_c = m.clone();
        let hat_c = hat.clone();
        // m f^ lives on the intersection of the supports; integrating only
        // there keeps panel breaks close to any edge of m.
        let support: Vec<f64> = hat.support().iter().zip(m.support()).map(|(a, b)| a.min(*b)).collect();
        let g = RadialFunction::from_fn(support, move |z| {
            let mv = m_c.eval(z);
            if mv == 0.0 {
                0.0
            } else {
                mv * hat_c.eval(z)
            }
        })?;
        let tf = inverse_transform_many(model, &g, &points, &cfg.fourier)?;
        ratios.push(Some(lp_norm_flat(model, &rules, &tf, p) / f_norm));
    }
    let (i, value) =
        best(&ratios).ok_or_else(|| Error::Domain("every trial profile vanishes".into()))?;
    Ok(NormEstimate {
        p,
        value,
        kind: NormKind::LowerBound,
        witness: Some(trials[i].name.clone()),
    })
}

/// Quadrature for the compact-side norm ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SphericalNormConfig {
    /// Gauss-Legendre nodes in each angle on `[0, pi]`.
    pub nodes: usize,
}

impl Default for SphericalNormConfig {
    fn default() -> Self {
        Self { nodes: 256 }
    }
}

/// All weights with every coordinate at most `cut`, first axis fastest.
fn weights_up_to(rank: usize, cut: u64) -> Vec<WeightPoint> {
    let side = cut as usize + 1;
    let count = side.pow(rank as u32);
    (0..count)
        .map(|mut k| {
            let mut c = Vec::with_capacity(rank);
            for _ in 0..rank {
                c.push((k % side) as u64);
                k /= side;
            }
            WeightPoint(c)
        })
        .collect()
}

/// `max_f |T f|_p / |f|_p` over zonal trials `f = sum_{n <= cut} a_n d_n phi_n`,
/// where `T phi_n = m(n) phi_n`.
///
/// Each trial is replaced by its expansion truncated at `degree_cut`, so the
/// ratio is exact for the operator restricted to that span.
pub fn lp_lower_bound_spherical<M>(
    model: &SymmetricSpaceModel,
    m: M,
    p: f64,
    degree_cut: u64,
    trials: &[TrialProfile],
    cfg: &SphericalNormConfig,
) -> Result<NormEstimate>
where
    M: Fn(&WeightPoint) -> f64 + Sync,
{
    check_p(p)?;
    if degree_cut < 1 {
        return Err(Error::Domain("degree cut must be at least 1".into()));
    }
    let rule = gauss_legendre(cfg.nodes, 0.0, PI)?;
    // Normalized zonal measure per factor: sin^{D-1} theta d theta.
    let measures: Vec<Vec<f64>> = model
        .factors()
        .iter()
        .map(|k| {
            let raw: Vec<f64> = rule
                .iter()
                .map(|(th, w)| w * th.sin().powi(k.dim() as i32 - 1))
                .collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / total).collect()
        })
        .collect();
    // phi tables per factor: [n][node].
    let tables: Vec<Vec<Vec<f64>>> = model
        .factors()
        .iter()
        .map(|&k| {
            (0..=degree_cut)
                .map(|n| rule.nodes.iter().map(|&th| factor_phi(k, n, th)).collect())
                .collect()
        })
        .collect();
    let weights = weights_up_to(model.rank(), degree_cut);
    let symbol: Vec<f64> = weights.par_iter().map(&m).collect();
    let dims: Vec<f64> = weights.iter().map(|w| weyl_dim(model, w)).collect();
    let rules = vec![rule.clone(); model.rank()];
    let grid = TensorGrid::new(&rules);
    let side = rule.len();
    let node_index: Vec<Vec<usize>> = (0..grid.len())
        .map(|mut k| {
            (0..model.rank())
                .map(|_| {
                    let i = k % side;
                    k /= side;
                    i
                })
                .collect()
        })
        .collect();
    let mu: Vec<f64> = node_index
        .iter()
        .map(|idx| idx.iter().zip(&measures).map(|(&i, ms)| ms[i]).product())
        .collect();
    let basis = |w: &WeightPoint, k: usize| -> f64 {
        node_index[k]
            .iter()
            .zip(w.coords())
            .zip(&tables)
            .map(|((&i, &n), tab)| tab[n as usize][i])
            .product()
    };
    let norm = |vals: &[f64]| -> f64 {
        vals.iter()
            .zip(&mu)
            .map(|(v, m)| m * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };

    let ratios: Vec<Option<f64>> = trials
        .par_iter()
        .map(|trial| {
            let f: Vec<f64> = (0..grid.len())
                .map(|k| grid.point(k).0.iter().map(|&th| trial.eval(th)).product())
                .collect();
            let coeffs: Vec<f64> = weights
                .iter()
                .map(|w| (0..grid.len()).map(|k| mu[k] * f[k] * basis(w, k)).sum())
                .collect();
            let mut fn_vals = vec![0.0; grid.len()];
            let mut tf_vals = vec![0.0; grid.len()];
            for (j, w) in weights.iter().enumerate() {
                let c = coeffs[j] * dims[j];
                if c == 0.0 {
                    continue;
                }
                for k in 0..grid.len() {
                    let b = c * basis(w, k);
                    fn_vals[k] += b;
                    tf_vals[k] += symbol[j] * b;
                }
            }
            let denom = norm(&fn_vals);
            if denom <= 1e-300 {
                None
            } else {
                Some(norm(&tf_vals) / denom)
            }
        })
        .collect();
    let (i, value) =
        best(&ratios).ok_or_else(|| Error::Domain("every trial profile vanishes".into()))?;
    Ok(NormEstimate {
        p,
        value,
        kind: NormKind::LowerBound,
        witness: Some(trials[i].name.clone()),
    })
}

/// Settings for [`transference_norm_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormReportConfig {
    /// Chamber coordinates of the tested `Z` (used on every axis).
    pub z_grid: Vec<f64>,
    pub degree_cut: u64,
    pub agreement_tol: f64,
    pub backward: BackwardQuadrature,
    pub flat: FlatNormConfig,
    pub spherical: SphericalNormConfig,
}

impl Default for NormReportConfig {
    fn default() -> Self {
        Self {
            z_grid: (0..=16).map(|k| 0.25 * k as f64).collect(),
            degree_cut: 32,
            agreement_tol: 1e-2,
            backward: BackwardQuadrature::default(),
            flat: FlatNormConfig::default(),
            spherical: SphericalNormConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SphericalNormEntry {
    pub t: f64,
    /// `sup |m_t([tZ])|` over the Z grid.
    pub floored_sup: f64,
    pub estimate: NormEstimate,
    /// Flat estimate divided by the spherical estimate.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub difference: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub model: String,
    pub p: f64,
    /// `sup |xi^(Z)|` over the Z grid.
    pub flat_sup: f64,
    pub flat: NormEstimate,
    pub spherical: Vec<SphericalNormEntry>,
    /// Only at `p = 2`: `|sup |xi^| - sup |m_t||` at the largest `t`.
    pub agreement: Option<Agreement>,
}

/// Norms of `xi^` on the flat side against norms of the backward symbols `m_t`.
///
/// At `p = 2` both sides are exact sups over the Z grid and the floored
/// weights; otherwise both are lower bounds and nothing is asserted.
pub fn transference_norm_report(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    p: f64,
    t_grid: &[f64],
    trials: &[TrialProfile],
    cfg: &NormReportConfig,
) -> Result<NormReport> {
    check_p(p)?;
    check_t_grid(t_grid)?;
    if cfg.z_grid.is_empty() || cfg.z_grid.iter().any(|z| !(*z >= 0.0)) {
        return Err(Error::Config("z grid must be nonempty and nonnegative".into()));
    }
    let zs: Vec<CartanPoint> = cfg
        .z_grid
        .iter()
        .map(|&z| CartanPoint(vec![z; model.rank()]))
        .collect();
    let hat = transform_profile(model, xi, &cfg.flat.fourier)?;
    let hat_values: Vec<f64> = zs.par_iter().map(|z| hat.eval_point(z)).collect();
    let flat_sup = l2_norm(&hat_values)?.value;
    let exact = (p - 2.0).abs() < 1e-12;
    let flat = if exact {
        l2_norm(&hat_values)?
    } else {
        lp_lower_bound_flat(model, &hat, p, trials, &cfg.flat)?
    };

    let mut spherical = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let floored: Vec<WeightPoint> = zs
            .iter()
            .map(|z| floor_weight(t, z).map(|f| f.weight))
            .collect::<Result<_>>()?;
        let values: Vec<f64> = floored
            .iter()
            .map(|w| backward_symbol(model, xi, t, w, &cfg.backward))
            .collect::<Result<_>>()?;
        let floored_sup = l2_norm(&values)?.value;
        let estimate = if exact {
            l2_norm(&values)?
        } else {
            let weights = weights_up_to(model.rank(), cfg.degree_cut);
            let table: Vec<f64> = weights
                .iter()
                .map(|w| backward_symbol(model, xi, t, w, &cfg.backward))
                .collect::<Result<_>>()?;
            let side = cfg.degree_cut as usize + 1;
            let lookup = move |w: &WeightPoint| {
                let k = w
                    .coords()
                    .iter()
                    .rev()
                    .fold(0usize, |acc, &n| acc * side + n as usize);
                table[k]
            };
            lp_lower_bound_spherical(model, lookup, p, cfg.degree_cut, trials, &cfg.spherical)?
        };
        let ratio = (estimate.value > 0.0).then(|| flat.value / estimate.value);
        spherical.push(SphericalNormEntry {
            t,
            floored_sup,
            estimate,
            ratio,
        });
    }
    let agreement = exact.then(|| {
        let last = spherical.last().expect("t grid is nonempty").floored_sup;
        let difference = (flat_sup - last).abs();
        Agreement {
            difference,
            tol: cfg.agreement_tol,
            pass: difference < cfg.agreement_tol,
        }
    });
    Ok(NormReport {
        model: model.name().to_string(),
        p,
        flat_sup,
        flat,
        spherical,
        agreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_sphere, make_su2};

    fn one(rank: usize) -> RadialFunction {
        RadialFunction::from_fn(vec![1e6; rank], |_| 1.0).unwrap()
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_norm(&[0.2, -0.7, 0.5]).unwrap().value, 0.7);
        assert_eq!(l2_norm(&[-3.0; 4]).unwrap().value, 3.0);
        let g: Vec<f64> = (0..10).map(|k| (-(0.3 * k as f64).powi(2)).exp()).collect();
        assert_eq!(l2_norm(&g).unwrap().value, 1.0);
        assert!(l2_norm(&[]).is_err());
    }

    #[test]
    fn weight_enumeration_matches_lookup_order() {
        let ws = weights_up_to(2, 3);
        assert_eq!(ws.len(), 16);
        for (k, w) in ws.iter().enumerate() {
            let idx = w.coords().iter().rev().fold(0usize, |acc, &n| acc * 4 + n as usize);
            assert_eq!(idx, k);
        }
    }

    #[test]
    fn identity_symbol_has_unit_norm_on_both_sides() {
        let m = make_su2();
        let trials = vec![TrialProfile::gaussian(0.3), TrialProfile::modulated(0.3, 6.0)];
        for p in [1.5, 2.0, 3.0] {
            let flat = lp_lower_bound_flat(&m, &one(1), p, &trials, &FlatNormConfig::default()).unwrap();
            assert!((flat.value - 1.0).abs() < 1e-8, "p={p}: {}", flat.value);
            let sph = lp_lower_bound_spherical(&m, |_| 1.0, p, 16, &trials, &SphericalNormConfig::default())
                .unwrap();
            assert!((sph.value - 1.0).abs() < 1e-10);
            assert_eq!(sph.kind, NormKind::LowerBound);
        }
    }

    #[test]
    fn spherical_sign_pattern_on_constant_trial() {
        let m = make_sphere(2).unwrap();
        let trials = vec![TrialProfile::new("phi_0", PI, |_| 1.0)];
        let est = lp_lower_bound_spherical(
            &m,
            |w| if w.coords()[0] % 2 == 0 { 1.0 } else { -1.0 },
            3.0,
            12,
            &trials,
            &SphericalNormConfig::default(),
        )
        .unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spherical_p2_bounded_by_sup() {
        let m = make_sphere(3).unwrap();
        let sym = |w: &WeightPoint| (0.3 * w.coords()[0] as f64).cos() * 0.8;
        let cut = 20;
        let sup = (0..=cut).map(|n| sym(&WeightPoint(vec![n])).abs()).fold(0.0, f64::max);
        let est = lp_lower_bound_spherical(&m, sym, 2.0, cut, &default_trials(), &SphericalNormConfig::default())
            .unwrap();
        assert!(est.value <= sup + 1e-6, "{} vs {sup}", est.value);
    }

    #[test]
    fn larger_trial_sets_never_lower_the_estimate() {
        let m = make_su2();
        let sym = |w: &WeightPoint| 1.0 / (1.0 + w.coords()[0] as f64);
        let all = default_trials();
        let small =
            lp_lower_bound_spherical(&m, sym, 3.0, 24, &all[..5], &SphericalNormConfig::default()).unwrap();
        let big = lp_lower_bound_spherical(&m, sym, 3.0, 24, &all, &SphericalNormConfig::default()).unwrap();
        assert!(big.value >= small.value);
    }

    #[test]
    fn bad_arguments() {
        let m = make_su2();
        let trials = default_trials();
        assert!(lp_lower_bound_spherical(&m, |_| 1.0, 1.0, 8, &trials, &SphericalNormConfig::default()).is_err());
        assert!(lp_lower_bound_spherical(&m, |_| 1.0, 2.0, 0, &trials, &SphericalNormConfig::default()).is_err());
        let zero = vec![TrialProfile::new("zero", 1.0, |_| 0.0)];
        assert!(lp_lower_bound_spherical(&m, |_| 1.0, 2.0, 8, &zero, &SphericalNormConfig::default()).is_err());
    }
}
