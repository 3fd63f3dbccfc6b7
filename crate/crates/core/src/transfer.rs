//! Both directions of the transference.
//!
//! Forward: a family of spherical multipliers `m_t` on the weight lattice is
//! sampled along `[tZ]` and converges to a symbol on the chamber.
//!
//! Backward: a profile `xi` supported in the neighbourhood `O` produces the
//! spherical symbol
//!
//! ```text
//! m_t(lambda) = 1/mu(O) int_O int_O phi_lambda(exp(-(X+W)/t) exp(W/t)) xi(X) dX dW
//! ```
//!
//! which tends to `xi^(Z)` along `lambda = [tZ]`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contraction::{floor_weight, neighbourhood_radius};
use crate::error::{Error, Result};
use crate::fourier::{fourier_transform, FourierQuadrature, RadialFunction};
use crate::model::{CartanPoint, FactorKind, SymmetricSpaceModel, WeightPoint};
use crate::special::{gauss_legendre, sinc, sphere_area, QuadratureRule};
use crate::spherical::{check_t_grid, factor_phi, DEFAULT_RATE_BAND};

pub use crate::report::ConvergenceReport;

type FamilyFn = Arc<dyn Fn(f64, &WeightPoint) -> f64 + Send + Sync>;

/// A family `{m_t}` of functions on the weight lattice.
#[derive(Clone)]
pub struct MultiplierFamily {
    name: String,
    eval: FamilyFn,
}

impl fmt::Debug for MultiplierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiplierFamily").field("name", &self.name).finish()
    }
}

impl MultiplierFamily {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, &WeightPoint) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant {c}"), move |_, _| c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64, w: &WeightPoint) -> f64 {
        (self.eval)(t, w)
    }

    /// Largest modulus over `weights` at a fixed `t`; errors if any value is not finite.
    pub fn sup_on(&self, t: f64, weights: &[WeightPoint]) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for w in weights {
            let v = self.eval(t, w);
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "family {} is not finite at t = {t}, weight {:?}",
                    self.name,
                    w.coords()
                )));
            }
            sup = sup.max(v.abs());
        }
        Ok(sup)
    }
}

/// Samples `fam(t, [tZ])` along `t_grid`.
///
/// Errors are successive deviations `|v_k - v_{k-1}|`, reported against
/// `t_grid[1..]`; the report passes when these never increase.
pub fn forward_limit(
    model: &SymmetricSpaceModel,
    fam: &MultiplierFamily,
    z: &CartanPoint,
    t_grid: &[f64],
) -> Result<ConvergenceReport> {
    let values = sample_family(model, fam, z, t_grid)?;
    let errors: Vec<f64> = values.windows(2).map(|v| (v[1] - v[0]).abs()).collect();
    let mut report = ConvergenceReport::new(t_grid[1..].to_vec(), errors, values[1..].to_vec());
    report.pass = report.errors.iter().all(|&e| e <= 1e-12)
        || report.errors.windows(2).all(|e| e[1] <= e[0]);
    Ok(report)
}

/// Like [`forward_limit`] but with errors measured against a known limit.
/// Passes when every error is within `bound(t)`.
pub fn forward_limit_against<B>(
    model: &SymmetricSpaceModel,
    fam: &MultiplierFamily,
    z: &CartanPoint,
    t_grid: &[f64],
    target: f64,
    bound: B,
) -> Result<ConvergenceReport>
where
    B: Fn(f64) -> f64,
{
    let values = sample_family(model, fam, z, t_grid)?;
    let errors: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
    let mut report = ConvergenceReport::new(t_grid.to_vec(), errors, values);
    report.pass = report.t.iter().zip(&report.errors).all(|(&t, &e)| e <= bound(t));
    Ok(report)
}

fn sample_family(
    model: &SymmetricSpaceModel,
    fam: &MultiplierFamily,
    z: &CartanPoint,
    t_grid: &[f64],
) -> Result<Vec<f64>> {
    check_t_grid(t_grid)?;
    if t_grid.len() < 3 {
        return Err(Error::Precondition("forward limits need at least 3 t values".into()));
    }
    model.check_cartan(z)?;
    t_grid
        .iter()
        .map(|&t| {
            let w = floor_weight(t, z)?.weight;
            let v = fam.eval(t, &w);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Domain(format!("family {} is not finite at t = {t}", fam.name())))
            }
        })
        .collect()
}

/// `m_t(w) = m(H_w / t)`.
pub fn dilation_family<F>(model: &SymmetricSpaceModel, m: F) -> MultiplierFamily
where
    F: Fn(&CartanPoint) -> f64 + Send + Sync + 'static,
{
    let cal = model.calibration().to_vec();
    MultiplierFamily::new("dilation", move |t, w| {
        let h = CartanPoint(
            w.coords()
                .iter()
                .zip(&cal)
                .map(|(&n, c)| c * n as f64 / t)
                .collect(),
        );
        m(&h)
    })
}

/// `m_{t,eps}(w) = m_t(w) exp(-eps |w|^2 / t^2)`.
pub fn gaussian_regularize(fam: &MultiplierFamily, eps: f64) -> Result<MultiplierFamily> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps = {eps} must be positive")));
    }
    let inner = fam.clone();
    Ok(MultiplierFamily::new(
        format!("{} regularized (eps {eps})", fam.name()),
        move |t, w| inner.eval(t, w) * (-eps * w.norm().powi(2) / (t * t)).exp(),
    ))
}

/// Constants of the Gaussian decay bound `|m_{t,eps}([tZ])| <= c1 exp(-c2 |Z|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBound {
    pub c1: f64,
    pub c2: f64,
}

/// Decay bound of a regularized family whose unregularized members are bounded by `sup_m`.
///
/// With `|[tZ]/t - Z| <= sqrt(r)/t` one has `|[tZ]/t|^2 >= |Z|^2/2 - r/t^2`, so
/// `c2 = eps/2` and `c1 = sup_m exp(eps r / t^2)` at the given `t`.
pub fn decay_bound(model: &SymmetricSpaceModel, sup_m: f64, eps: f64, t: f64) -> DecayBound {
    DecayBound {
        c1: sup_m * (eps * model.rank() as f64 / (t * t)).exp(),
        c2: 0.5 * eps,
    }
}

/// Checks the decay bound at every `(t, Z)` pair; returns the worst ratio
/// `|m_{t,eps}([tZ])| / (c1 exp(-c2 |Z|^2))`.
pub fn check_decay(
    model: &SymmetricSpaceModel,
    fam: &MultiplierFamily,
    sup_m: f64,
    eps: f64,
    z_points: &[CartanPoint],
    t_grid: &[f64],
) -> Result<f64> {
    check_t_grid(t_grid)?;
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let b = decay_bound(model, sup_m, eps, t);
        for z in z_points {
            model.check_cartan(z)?;
            let w = floor_weight(t, z)?.weight;
            let v = fam.eval(t, &w).abs();
            let cap = b.c1 * (-b.c2 * z.norm().powi(2)).exp();
            if cap > 0.0 {
                worst = worst.max(v / cap);
            } else if v > 0.0 {
                worst = f64::INFINITY;
            }
        }
    }
    Ok(worst)
}

/// Node counts for the backward double integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackwardQuadrature {
    /// Gauss-Legendre nodes per chamber axis for the `dX` integral.
    pub radial: usize,
    /// Nodes in the distance `|W|` of the inner `dW` integral.
    pub shell: usize,
    /// Nodes in the angle between `W` and `X`.
    pub angle: usize,
}

impl Default for BackwardQuadrature {
    fn default() -> Self {
        Self {
            radial: 200,
            shell: 32,
            angle: 32,
        }
    }
}

/// Point `(cos|a|, a sinc|a|)` of the unit sphere over a planar vector `a`.
fn plane_exp(a: [f64; 2]) -> [f64; 3] {
    let r = a[0].hypot(a[1]);
    let s = sinc(r);
    [r.cos(), a[0] * s, a[1] * s]
}

fn sphere_distance(p: [f64; 3], q: [f64; 3]) -> f64 {
    let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
    let s = ((p[0] + q[0]).powi(2) + (p[1] + q[1]).powi(2) + (p[2] + q[2]).powi(2)).sqrt();
    2.0 * d.atan2(s)
}

/// Inner `dW` integral over the factor ball of radius `radius` in `R^dim`, in
/// polar coordinates around the axis of `X`.
struct InnerRule {
    points: Vec<(f64, f64, f64)>,
}

impl InnerRule {
    fn new(dim: usize, radius: f64, quad: &BackwardQuadrature) -> Result<Self> {
        let shell = gauss_legendre(quad.shell, 0.0, radius)?;
        let angle = gauss_legendre(quad.angle, 0.0, PI)?;
        let c = sphere_area(dim - 2);
        let mut points = Vec::with_capacity(shell.len() * angle.len());
        for (s, ws) in shell.iter() {
            for (g, wg) in angle.iter() {
                let w = c * ws * wg * s.powi(dim as i32 - 1) * g.sin().powi(dim as i32 - 2);
                points.push((s * g.cos(), s * g.sin(), w));
            }
        }
        Ok(Self { points })
    }

    fn volume(&self) -> f64 {
        self.points.iter().map(|p| p.2).sum()
    }

    /// `int phi_n(angle(exp((X+W)/t), exp(W/t))) dW` for `|X| = r`.
    fn kernel(&self, kind: FactorKind, n: u64, r: f64, t: f64) -> f64 {
        if n == 0 {
            return self.volume();
        }
        self.points
            .iter()
            .map(|&(a, b, w)| {
                let p = plane_exp([(r + a) / t, b / t]);
                let q = plane_exp([a / t, b / t]);
                w * factor_phi(kind, n, sphere_distance(p, q))
            })
            .sum()
    }
}

fn check_backward_support(model: &SymmetricSpaceModel, xi: &RadialFunction) -> Result<f64> {
    xi.check_model(model)?;
    let radius = neighbourhood_radius(model);
    if let Some(s) = xi.support().iter().find(|&&s| s > radius * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "profile support {s} exceeds the neighbourhood radius {radius}"
        )));
    }
    Ok(radius)
}

/// The backward symbol `m_t(w)` at an arbitrary weight.
pub fn backward_symbol(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    t: f64,
    w: &WeightPoint,
    quad: &BackwardQuadrature,
) -> Result<f64> {
    let radius = check_backward_support(model, xi)?;
    model.check_weight(w)?;
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("t = {t} must be finite and >= 1")));
    }
    let factors = model.factors();
    let radial: Vec<QuadratureRule> = xi
        .support()
        .iter()
        .map(|&s| gauss_legendre(quad.radial, 0.0, s))
        .collect::<Result<_>>()?;
    let inner: Vec<InnerRule> = factors
        .iter()
        .map(|f| InnerRule::new(f.dim(), radius, quad))
        .collect::<Result<_>>()?;
    let volume: f64 = inner.iter().map(InnerRule::volume).product();

    // Per-factor tables of orbit * r^{D-1} * weight * G(r) at the radial nodes.
    let tables: Vec<Vec<f64>> = factors
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            let dim = kind.dim() as i32;
            let orbit = sphere_area(kind.dim() - 1);
            radial[i]
                .nodes
                .par_iter()
                .zip(&radial[i].weights)
                .map(|(&r, &wr)| {
                    orbit * wr * r.powi(dim - 1) * inner[i].kernel(kind, w.coords()[i], r, t)
                })
                .collect()
        })
        .collect();

    let grid = crate::fourier::TensorGrid::new(&radial);
    let mut total = 0.0;
    let mut idx = vec![0usize; model.rank()];
    for k in 0..grid.len() {
        let (p, _) = grid.point(k);
        let mut rest = k;
        for (j, r) in radial.iter().enumerate() {
            idx[j] = rest % r.len();
            rest /= r.len();
        }
        let weight: f64 = tables.iter().zip(&idx).map(|(tab, &i)| tab[i]).product();
        total += xi.eval(&p) * weight;
    }
    Ok(total / volume)
}

/// `m_t([tZ])`.
pub fn backward_mt(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    t: f64,
    z: &CartanPoint,
    quad: &BackwardQuadrature,
) -> Result<f64> {
    model.check_cartan(z)?;
    let w = floor_weight(t, z)?.weight;
    backward_symbol(model, xi, t, &w, quad)
}

/// The backward symbols as a multiplier family.
pub fn backward_family(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    quad: &BackwardQuadrature,
) -> Result<MultiplierFamily> {
    check_backward_support(model, xi)?;
    let (model, xi, quad) = (model.clone(), xi.clone(), quad.clone());
    Ok(MultiplierFamily::new("backward", move |t, w| {
        backward_symbol(&model, &xi, t, w, &quad).unwrap_or(f64::NAN)
    }))
}

/// Errors `|m_t([tZ]) - xi^(Z)|` along `t_grid`, judged against the O(1/t) band.
pub fn backward_limit_check(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    z: &CartanPoint,
    t_grid: &[f64],
    quad: &BackwardQuadrature,
    fquad: &FourierQuadrature,
) -> Result<ConvergenceReport> {
    check_t_grid(t_grid)?;
    check_backward_support(model, xi)?;
    let target = fourier_transform(model, xi, z, fquad)?;
    let mut errors = Vec::with_capacity(t_grid.len());
    let mut estimates = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let v = backward_mt(model, xi, t, z, quad)?;
        errors.push((v - target).abs());
        estimates.push(v);
    }
    let mut report = ConvergenceReport::new(t_grid.to_vec(), errors, estimates)
        .judge_rate(DEFAULT_RATE_BAND, 1e-8);
    report.limit_estimate = target;
    Ok(report)
}
