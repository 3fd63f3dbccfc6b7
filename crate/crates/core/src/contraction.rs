//! Lattice floors `[tZ]`, the Jacobian of `Pi_1 = pi o exp`, and the
//! change-of-variable identity on the chart.
//!
//! The chart `Omega` of a model is the product of the factor balls of radius
//! `chamber_radius`; the neighbourhood used by the backward construction is the
//! product of balls of half that radius.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier::{normalization, RadialFunction};
use crate::model::{density_at, CartanPoint, FlatPoint, SymmetricSpaceModel, WeightPoint};
use crate::special::{sinc, QuadratureRule};

/// `[tZ]` together with the fractional part `{tZ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlooredWeight {
    pub weight: WeightPoint,
    pub frac: Vec<f64>,
}

pub fn floor_weight(t: f64, z: &CartanPoint) -> Result<FlooredWeight> {
    if !(t >= 1.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("t = {t} must be finite and >= 1")));
    }
    let mut weight = Vec::with_capacity(z.rank());
    let mut frac = Vec::with_capacity(z.rank());
    for &c in z.coords() {
        let v = t * c;
        if !(v >= 0.0 && v < u64::MAX as f64) {
            return Err(Error::Domain(format!("t * Z = {v} is not a valid weight coordinate")));
        }
        let n = v.floor();
        weight.push(n as u64);
        frac.push(v - n);
    }
    Ok(FlooredWeight {
        weight: WeightPoint(weight),
        frac,
    })
}

/// `J(X) = prod_alpha (sin alpha(X) / alpha(X))^{m_alpha}`.
pub fn jacobian(model: &SymmetricSpaceModel, x: &FlatPoint) -> Result<f64> {
    model.check_flat(x)?;
    let h = x.radial_part(model);
    if let Some(r) = h.coords().iter().find(|&&r| r > PI) {
        return Err(Error::Chart(format!("radius {r} exceeds the chart radius pi")));
    }
    Ok(jacobian_radial(model, h.coords()))
}

pub(crate) fn jacobian_radial(model: &SymmetricSpaceModel, h: &[f64]) -> f64 {
    model
        .roots()
        .iter()
        .map(|root| sinc(root.eval(h)).powi(root.multiplicity as i32))
        .product()
}

/// Volume of the product of balls of radius `radius` in `p`.
pub fn ball_volume(model: &SymmetricSpaceModel, radius: f64) -> f64 {
    model
        .factors()
        .iter()
        .map(|f| {
            let d = f.dim();
            crate::special::sphere_area(d - 1) * radius.powi(d as i32) / d as f64
        })
        .product()
}

/// Radius of the factor balls making up the backward neighbourhood.
pub fn neighbourhood_radius(model: &SymmetricSpaceModel) -> f64 {
    0.5 * model.chamber_radius()
}

fn mapped(rule: &QuadratureRule, lo: f64, hi: f64) -> QuadratureRule {
    let (a, b) = rule.interval;
    let s = (hi - lo) / (b - a);
    QuadratureRule {
        nodes: rule.nodes.iter().map(|x| lo + (x - a) * s).collect(),
        weights: rule.weights.iter().map(|w| w * s).collect(),
        interval: (lo, hi),
    }
}

/// Both sides of the change-of-variable identity for an invariant `f`
/// supported in the chart.
///
/// The left side integrates `f o Pi_1^{-1}` against surface measure on the
/// embedded factors, using the projection `s = sin(theta)` to the tangent
/// plane at the base point. The right side is the chart integral
/// `int_Omega f(X) J(X) dX` in polar coordinates. `quad` is mapped affinely
/// onto each axis.
pub fn change_of_variable_check(
    model: &SymmetricSpaceModel,
    f: &RadialFunction,
    quad: &QuadratureRule,
) -> Result<(f64, f64)> {
    f.check_model(model)?;
    if let Some(s) = f.support().iter().find(|&&s| s > model.chamber_radius()) {
        return Err(Error::Chart(format!(
            "support radius {s} exceeds the chart radius {}",
            model.chamber_radius()
        )));
    }
    if quad.is_empty() {
        return Err(Error::Domain("empty quadrature rule".into()));
    }
    let orbit = normalization(model).forward;
    let dims: Vec<i32> = model.factors().iter().map(|k| k.dim() as i32).collect();

    let lhs_rules: Vec<QuadratureRule> = f
        .support()
        .iter()
        .map(|&rho| mapped(quad, 0.0, rho.sin()))
        .collect();
    let lhs = orbit
        * tensor_sum(&lhs_rules, |s| {
            let theta: Vec<f64> = s.iter().map(|v| v.asin()).collect();
            let w: f64 = s
                .iter()
                .zip(&dims)
                .map(|(v, &d)| v.powi(d - 1) / (1.0 - v * v).sqrt())
                .product();
            f.eval(&theta) * w
        });

    let rhs_rules: Vec<QuadratureRule> = f
        .support()
        .iter()
        .map(|&rho| mapped(quad, 0.0, rho))
        .collect();
    let rhs = orbit
        * tensor_sum(&rhs_rules, |h| {
            f.eval(h) * jacobian_radial(model, h) * density_at(model, h)
        });
    Ok((lhs, rhs))
}

fn tensor_sum<F: Fn(&[f64]) -> f64>(rules: &[QuadratureRule], f: F) -> f64 {
    let grid = crate::fourier::TensorGrid::new(rules);
    (0..grid.len())
        .map(|k| {
            let (p, w) = grid.point(k);
            w * f(&p)
        })
        .sum()
}
