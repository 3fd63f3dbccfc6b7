//! Spherical functions and the generalized Bessel kernel.
//!
//! Points of `U/K` near the base point are only ever produced through
//! [`exp_point`]: a sphere factor embeds in `R^{d+1}`, the `SU(2)` factor as a
//! unit quaternion `(w, x, y, z)`.

use std::f64::consts::PI;

use crate::contraction::floor_weight;
use crate::error::{Error, Result};
use crate::model::{CartanPoint, FactorKind, FlatPoint, SymmetricSpaceModel, WeightPoint};
use crate::report::ConvergenceReport;
use crate::special::{bessel_j_normalized, gegenbauer_normalized, sinc, TAYLOR_CUTOFF};

/// Slope band for O(1/t) contraction limits.
pub const DEFAULT_RATE_BAND: (f64, f64) = (-1.3, -0.7);

/// A point of `U/K` given by one unit-norm embedding per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacePoint {
    pub factors: Vec<Vec<f64>>,
}

impl SpacePoint {
    pub fn base(model: &SymmetricSpaceModel) -> Self {
        Self {
            factors: model
                .factors()
                .iter()
                .map(|f| {
                    let mut v = vec![0.0; f.dim() + 1];
                    v[0] = 1.0;
                    v
                })
                .collect(),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn factor_exp(block: &[f64]) -> Result<Vec<f64>> {
    let theta = norm(block);
    if theta > PI {
        return Err(Error::Chart(format!("radius {theta} exceeds the chart radius pi")));
    }
    let mut out = Vec::with_capacity(block.len() + 1);
    out.push(theta.cos());
    let s = sinc(theta);
    out.extend(block.iter().map(|c| c * s));
    Ok(out)
}

/// `Pi_1(X) = pi(exp X)`.
pub fn exp_point(model: &SymmetricSpaceModel, x: &FlatPoint) -> Result<SpacePoint> {
    model.check_flat(x)?;
    let factors = model
        .blocks()
        .map(|r| factor_exp(&x.coords()[r]))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpacePoint { factors })
}

/// Angle between two unit vectors, accurate for nearly parallel vectors.
fn unit_angle(p: &[f64], q: &[f64]) -> f64 {
    let diff = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let sum = p.iter().zip(q).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
    2.0 * diff.atan2(sum)
}

fn quaternion_mul(a: &[f64], b: &[f64]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Conjugacy angle in `[0, pi]` of a unit quaternion.
fn conjugacy_angle(q: &[f64; 4]) -> f64 {
    norm(&q[1..]).atan2(q[0])
}

/// Normalized character `sin((n+1) theta) / ((n+1) sin theta)`.
pub fn su2_character_normalized(n: u64, theta: f64) -> f64 {
    let theta = theta.abs();
    if theta > 0.5 * PI {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        return sign * su2_character_normalized(n, PI - theta);
    }
    let m = (n + 1) as f64;
    let ratio = if theta < TAYLOR_CUTOFF {
        1.0 + theta * theta / 6.0
    } else {
        theta / theta.sin()
    };
    sinc(m * theta) * ratio
}

/// Spherical function of one rank-one factor at geodesic angle `theta`.
pub fn factor_phi(kind: FactorKind, n: u64, theta: f64) -> f64 {
    match kind {
        FactorKind::Su2 => su2_character_normalized(n, theta),
        FactorKind::Sphere { d } => {
            let alpha = 0.5 * (d as f64 - 1.0);
            gegenbauer_normalized(n as usize, alpha, theta.cos().clamp(-1.0, 1.0))
                .expect("cosine lies in [-1, 1]")
        }
    }
}

fn check_angles(model: &SymmetricSpaceModel, h: &CartanPoint) -> Result<()> {
    model.check_cartan(h)?;
    if let Some(c) = h.coords().iter().find(|&&c| c > PI) {
        return Err(Error::Chart(format!("chamber coordinate {c} exceeds pi")));
    }
    Ok(())
}

/// `phi_lambda` at the chamber point `H`; products multiply factor values.
pub fn phi(model: &SymmetricSpaceModel, w: &WeightPoint, h: &CartanPoint) -> Result<f64> {
    model.check_weight(w)?;
    check_angles(model, h)?;
    Ok(model
        .factors()
        .iter()
        .zip(w.coords())
        .zip(h.coords())
        .map(|((&kind, &n), &theta)| factor_phi(kind, n, theta))
        .product())
}

/// Invariant angle of `exp(Y) exp(X)` in factor `kind`, from the blocks of `X` and `Y`.
pub(crate) fn pair_angle(kind: FactorKind, x: &[f64], y: &[f64]) -> Result<f64> {
    let px = factor_exp(x)?;
    match kind {
        FactorKind::Sphere { .. } => {
            let neg_y: Vec<f64> = y.iter().map(|c| -c).collect();
            let py = factor_exp(&neg_y)?;
            Ok(unit_angle(&py, &px))
        }
        FactorKind::Su2 => {
            let qy = factor_exp(y)?;
            Ok(conjugacy_angle(&quaternion_mul(&qy, &px)))
        }
    }
}

/// `phi_lambda(exp(Y) exp(X))`.
///
/// By two-point homogeneity this is `phi_lambda` at the invariant angle between
/// `exp_point(-Y)` and `exp_point(X)` (spheres) or at the conjugacy angle of the
/// quaternion product (`SU(2)`), factor by factor.
pub fn phi_pair(
    model: &SymmetricSpaceModel,
    w: &WeightPoint,
    x: &FlatPoint,
    y: &FlatPoint,
) -> Result<f64> {
    model.check_weight(w)?;
    model.check_flat(x)?;
    model.check_flat(y)?;
    let mut v = 1.0;
    for ((range, &kind), &n) in model.blocks().zip(model.factors()).zip(w.coords()) {
        let angle = pair_angle(kind, &x.coords()[range.clone()], &y.coords()[range])?;
        v *= factor_phi(kind, n, angle);
    }
    Ok(v)
}

/// Generalized Bessel kernel `J(Z, X)`, the K-orbit average of `exp(i B(Z, Ad(k) X))`.
///
/// For a rank-one factor of dimension `D` this is the normalized Bessel
/// function of order `(D - 2)/2` at `z |X|`.
pub fn gen_bessel(model: &SymmetricSpaceModel, z: &CartanPoint, x: &FlatPoint) -> Result<f64> {
    model.check_cartan(z)?;
    model.check_flat(x)?;
    Ok(gen_bessel_radial(model, z.coords(), &x.radial_part(model).0))
}

/// Kernel from chamber coordinates of both arguments.
pub(crate) fn gen_bessel_radial(model: &SymmetricSpaceModel, z: &[f64], r: &[f64]) -> f64 {
    model
        .factors()
        .iter()
        .zip(model.calibration())
        .zip(z.iter().zip(r))
        .map(|((kind, cal), (zi, ri))| bessel_j_normalized(kind.bessel_order(), cal * zi * ri))
        .product()
}

/// Measures `|phi_{[tZ]}(exp(Y/t) exp(X/t)) - J(Z, X + Y)|` along `t_grid`.
///
/// The ordering `exp(-Y/t) exp(X/t)` with limit `J(Z, X - Y)` is the same call
/// with `Y` negated.
pub fn lemma_limit_check(
    model: &SymmetricSpaceModel,
    z: &CartanPoint,
    x: &FlatPoint,
    y: &FlatPoint,
    t_grid: &[f64],
) -> Result<ConvergenceReport> {
    check_t_grid(t_grid)?;
    let target = gen_bessel(model, z, &x.add(y))?;
    let mut errors = Vec::with_capacity(t_grid.len());
    let mut estimates = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let w = floor_weight(t, z)?.weight;
        let v = phi_pair(model, &w, &x.scaled(1.0 / t), &y.scaled(1.0 / t))?;
        estimates.push(v);
        errors.push((v - target).abs());
    }
    Ok(ConvergenceReport::new(t_grid.to_vec(), errors, estimates).judge_rate(DEFAULT_RATE_BAND, 1e-12))
}

pub(crate) fn check_t_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Precondition("empty t grid".into()));
    }
    if t_grid.iter().any(|&t| !(t >= 1.0) || !t.is_finite()) {
        return Err(Error::Precondition("t grid values must be finite and >= 1".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("t grid must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_product, make_sphere, make_su2};

    #[test]
    fn exp_point_examples() {
        let s2 = make_sphere(2).unwrap();
        let p = exp_point(&s2, &FlatPoint::zero(2)).unwrap();
        assert_eq!(p, SpacePoint::base(&s2));
        let p = exp_point(&s2, &FlatPoint(vec![PI / 2.0, 0.0])).unwrap();
        assert!(p.factors[0][0].abs() < 1e-16);
        assert!((p.factors[0][1] - 1.0).abs() < 1e-16);
        assert_eq!(p.factors[0][2], 0.0);
        let q = exp_point(&make_su2(), &FlatPoint(vec![0.3, -1.2, 0.4])).unwrap();
        assert!((norm(&q.factors[0]) - 1.0).abs() < 1e-15);
        assert!(matches!(
            exp_point(&s2, &FlatPoint(vec![3.0, 1.0])),
            Err(Error::Chart(_))
        ));
    }

    #[test]
    fn phi_examples() {
        let su2 = make_su2();
        let s2 = make_sphere(2).unwrap();
        let w1 = WeightPoint::new(vec![1]);
        assert!(phi(&su2, &w1, &CartanPoint(vec![PI / 2.0])).unwrap().abs() < 1e-15);
        let v = phi(&s2, &WeightPoint::new(vec![2]), &CartanPoint(vec![PI / 3.0])).unwrap();
        assert!((v + 0.125).abs() < 1e-14);
        for m in [&su2, &s2] {
            for n in 0..10 {
                let v = phi(m, &WeightPoint::new(vec![n]), &CartanPoint(vec![0.0])).unwrap();
                assert_eq!(v, 1.0);
            }
        }
        assert!(phi(&s2, &w1, &CartanPoint(vec![4.0])).is_err());
    }

    #[test]
    fn su2_agrees_with_three_sphere() {
        let s3 = make_sphere(3).unwrap();
        let su2 = make_su2();
        for n in [0u64, 1, 5, 40, 333] {
            for i in 0..=40 {
                let h = CartanPoint(vec![PI * i as f64 / 40.0]);
                let w = WeightPoint::new(vec![n]);
                let a = phi(&s3, &w, &h).unwrap();
                let b = phi(&su2, &w, &h).unwrap();
                assert!((a - b).abs() < 1e-9, "n={n} theta={:?}: {a} vs {b}", h);
            }
        }
    }

    #[test]
    fn su2_character_near_pi() {
        for n in [0u64, 1, 2, 7] {
            let v = su2_character_normalized(n, PI);
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_pair_reductions() {
        let su2 = make_su2();
        let s2 = make_sphere(2).unwrap();
        let w = WeightPoint::new(vec![1]);
        let x = FlatPoint(vec![PI / 2.0, 0.0, 0.0]);
        assert!(phi_pair(&su2, &w, &x, &FlatPoint::zero(3)).unwrap().abs() < 1e-15);
        let x2 = FlatPoint(vec![0.4, -0.7]);
        for n in 0..12u64 {
            let w = WeightPoint::new(vec![n]);
            let v = phi_pair(&s2, &w, &x2, &x2.neg()).unwrap();
            assert!((v - 1.0).abs() < 1e-14);
            let a = phi_pair(&s2, &w, &x2, &FlatPoint::zero(2)).unwrap();
            let b = phi(&s2, &w, &x2.radial_part(&s2)).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gen_bessel_examples() {
        let su2 = make_su2();
        let v = gen_bessel(&su2, &CartanPoint(vec![1.0]), &FlatPoint(vec![0.0, PI, 0.0])).unwrap();
        assert!(v.abs() < 1e-15);
        let s2 = make_sphere(2).unwrap();
        assert_eq!(gen_bessel(&s2, &CartanPoint(vec![3.0]), &FlatPoint::zero(2)).unwrap(), 1.0);
        let p = make_product(&s2, &su2);
        let z = CartanPoint(vec![1.0, 2.0]);
        let x = FlatPoint(vec![0.3, 0.4, 0.0, 0.2, 0.0]);
        let want = bessel_j_normalized(0.0, 0.5) * sinc(0.4);
        assert!((gen_bessel(&p, &z, &x).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn lemma_zero_weight_is_exact() {
        let s2 = make_sphere(2).unwrap();
        let r = lemma_limit_check(
            &s2,
            &CartanPoint(vec![0.0]),
            &FlatPoint(vec![0.5, 0.1]),
            &FlatPoint(vec![0.0, 0.3]),
            &[10.0, 20.0, 40.0],
        )
        .unwrap();
        assert!(r.errors.iter().all(|&e| e == 0.0));
        assert!(r.pass);
    }

    #[test]
    fn lemma_rejects_bad_grids() {
        let s2 = make_sphere(2).unwrap();
        let z = CartanPoint(vec![1.0]);
        let x = FlatPoint(vec![0.5, 0.0]);
        let y = FlatPoint::zero(2);
        assert!(lemma_limit_check(&s2, &z, &x, &y, &[]).is_err());
        assert!(lemma_limit_check(&s2, &z, &x, &y, &[10.0, 5.0]).is_err());
        assert!(lemma_limit_check(&s2, &z, &x, &y, &[0.5, 5.0]).is_err());
    }
}
