//! Structural data of the compact symmetric space models.
//!
//! Every model is a product of rank-one factors, each either a sphere
//! `S^d = SO(d+1)/SO(d)` or the group case `(SU(2) x SU(2))/diag`. All chamber
//! and weight data live in real coordinates with respect to the dual bases
//! `H_j` and `sigma_j`; one chamber axis belongs to each rank-one factor.
//!
//! Coordinates are calibrated so that the chamber coordinate of a rank-one
//! factor equals the geodesic angle `theta`, every restricted root takes the
//! value `theta` on it, and the pairing of a weight coordinate `n` with a
//! chamber coordinate `z` is `n * z`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default chart radius of a rank-one factor, inside the injectivity radius `pi`.
pub const DEFAULT_CHAMBER_RADIUS: f64 = PI * 0.45;

/// Nonnegative integer coordinates `(n_1, ..., n_r)` of a class-1 weight.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WeightPoint(pub Vec<u64>);

impl WeightPoint {
    pub fn new(coords: Vec<u64>) -> Self {
        Self(coords)
    }

    pub fn zero(rank: usize) -> Self {
        Self(vec![0; rank])
    }

    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    /// Cartan point `H_lambda` with the same coordinates.
    pub fn cartan(&self) -> CartanPoint {
        CartanPoint(self.0.iter().map(|&n| n as f64).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&n| (n as f64).powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&n| n == 0)
    }
}

/// Point of the closed chamber, in the `H_j` basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CartanPoint(pub Vec<f64>);

impl CartanPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Domain(format!(
                "chamber coordinates must be finite and nonnegative, got {coords:?}"
            )));
        }
        Ok(Self(coords))
    }

    pub fn zero(rank: usize) -> Self {
        Self(vec![0.0; rank])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&c| c > 0.0)
    }
}

/// Point of the flat space `p*`, stored as concatenated factor blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlatPoint(pub Vec<f64>);

impl FlatPoint {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// The point whose factor blocks point along the first axis with lengths `h`.
    pub fn radial(model: &SymmetricSpaceModel, h: &CartanPoint) -> Self {
        let mut v = vec![0.0; model.dim()];
        for (range, &c) in model.blocks().zip(h.coords()) {
            v[range.start] = c;
        }
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn add(&self, other: &FlatPoint) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Chamber representative: the norm of each factor block.
    pub fn radial_part(&self, model: &SymmetricSpaceModel) -> CartanPoint {
        CartanPoint(
            model
                .blocks()
                .map(|r| self.0[r].iter().map(|c| c * c).sum::<f64>().sqrt())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FactorKind {
    Sphere { d: usize },
    Su2,
}

impl FactorKind {
    /// Dimension of the factor as a manifold.
    pub fn dim(self) -> usize {
        match self {
            FactorKind::Sphere { d } => d,
            FactorKind::Su2 => 3,
        }
    }

    /// Multiplicity of the single restricted root.
    pub fn multiplicity(self) -> usize {
        self.dim() - 1
    }

    /// Order of the Bessel kernel: `(D - 2) / 2`.
    pub fn bessel_order(self) -> f64 {
        0.5 * (self.dim() as f64 - 2.0)
    }

    fn name(self) -> String {
        match self {
            FactorKind::Sphere { d } => format!("sphere:{d}"),
            FactorKind::Su2 => "su2".to_string(),
        }
    }

    /// Pairings `<beta, delta>` of the positive roots restricting to the factor's root.
    ///
    /// For `SO(N)`, `N = d + 1`, these are the roots `e_1 +- e_j` (and `e_1` when
    /// `N` is odd) against the full half-sum `delta`; each pairs with the class-1
    /// weight `n e_1` to `n`.
    fn delta_pairings(self) -> Vec<f64> {
        match self {
            FactorKind::Su2 => vec![1.0, 1.0],
            FactorKind::Sphere { d } => {
                let n = d + 1;
                let m = n / 2;
                let delta: Vec<f64> = if n % 2 == 1 {
                    (1..=m).map(|i| m as f64 - i as f64 + 0.5).collect()
                } else {
                    (1..=m).map(|i| (m - i) as f64).collect()
                };
                let mut out = Vec::with_capacity(d - 1);
                for dj in &delta[1..] {
                    out.push(delta[0] + dj);
                    out.push(delta[0] - dj);
                }
                if n % 2 == 1 {
                    out.push(delta[0]);
                }
                out
            }
        }
    }
}

/// A restricted positive root with its multiplicity.
///
/// `delta_pairings` holds `<beta, delta>` for each of the `multiplicity` roots
/// of the full system restricting to this one; those pairings differ between
/// roots once the factor has rank-two complexified root data (spheres with
/// `d >= 4`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedRoot {
    pub functional: Vec<f64>,
    pub multiplicity: usize,
    pub delta_pairings: Vec<f64>,
}

impl RestrictedRoot {
    /// `alpha(H)` for a chamber point.
    pub fn eval(&self, h: &[f64]) -> f64 {
        self.functional.iter().zip(h).map(|(a, b)| a * b).sum()
    }

    pub fn eval_weight(&self, w: &[u64]) -> f64 {
        self.functional
            .iter()
            .zip(w)
            .map(|(a, &n)| a * n as f64)
            .sum()
    }
}

/// Structural data of one compact symmetric space instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricSpaceModel {
    name: String,
    factors: Vec<FactorKind>,
    roots: Vec<RestrictedRoot>,
    delta: Vec<f64>,
    chamber_radius: f64,
    calibration: Vec<f64>,
}

impl SymmetricSpaceModel {
    fn from_factors(name: String, factors: Vec<FactorKind>, chamber_radius: f64) -> Result<Self> {
        let rank = factors.len();
        let roots: Vec<RestrictedRoot> = factors
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let mut functional = vec![0.0; rank];
                functional[j] = 1.0;
                RestrictedRoot {
                    functional,
                    multiplicity: f.multiplicity(),
                    delta_pairings: f.delta_pairings(),
                }
            })
            .collect();
        let mut delta = vec![0.0; rank];
        for root in &roots {
            for (d, a) in delta.iter_mut().zip(&root.functional) {
                *d += 0.5 * root.multiplicity as f64 * a;
            }
        }
        let model = Self {
            name,
            factors,
            roots,
            delta,
            chamber_radius,
            calibration: vec![1.0; rank],
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let mult: usize = self.roots.iter().map(|r| r.multiplicity).sum();
        if self.dim() != self.rank() + mult {
            return Err(Error::InvalidModel(format!(
                "dimension {} differs from rank {} + root count {mult}",
                self.dim(),
                self.rank()
            )));
        }
        for root in &self.roots {
            if root.functional.iter().any(|&c| c < 0.0) || root.functional.iter().all(|&c| c == 0.0) {
                return Err(Error::InvalidModel("root not positive on the chamber".into()));
            }
            if root.delta_pairings.len() != root.multiplicity
                || root.delta_pairings.iter().any(|&p| p <= 0.0)
            {
                return Err(Error::InvalidModel("inconsistent delta pairings".into()));
            }
        }
        if !(self.chamber_radius > 0.0 && self.chamber_radius < PI) {
            return Err(Error::InvalidModel(format!(
                "chamber radius {} outside (0, pi)",
                self.chamber_radius
            )));
        }
        // J = prod (sin a / a)^m must stay in (0, 1] on the chart ball.
        for k in 0..=64 {
            let theta = self.chamber_radius * k as f64 / 64.0;
            for f in &self.factors {
                let j = crate::special::sinc(theta).powi(f.multiplicity() as i32);
                if !(j > 0.0 && j <= 1.0) {
                    return Err(Error::InvalidModel(format!(
                        "Jacobian {j} leaves (0, 1] at radius {theta}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    pub fn factors(&self) -> &[FactorKind] {
        &self.factors
    }

    pub fn roots(&self) -> &[RestrictedRoot] {
        &self.roots
    }

    /// Half-sum of the restricted positive roots, counted with multiplicity.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    /// Radius of the chart ball; the chart itself is the product of factor balls.
    pub fn chamber_radius(&self) -> f64 {
        self.chamber_radius
    }

    pub fn calibration(&self) -> &[f64] {
        &self.calibration
    }

    /// `|Phi+|`, roots counted with multiplicity.
    pub fn positive_root_count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Index ranges of the factor blocks inside a [`FlatPoint`].
    pub fn blocks(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.factors.iter().scan(0usize, |start, f| {
            let r = *start..*start + f.dim();
            *start += f.dim();
            Some(r)
        })
    }

    /// The rank-one model of factor `i`, sharing this model's chart radius.
    pub fn factor_model(&self, i: usize) -> SymmetricSpaceModel {
        let f = self.factors[i];
        Self::from_factors(f.name(), vec![f], self.chamber_radius)
            .expect("factor of a valid model is valid")
    }

    pub fn check_weight(&self, w: &WeightPoint) -> Result<()> {
        if w.rank() != self.rank() {
            return Err(Error::Domain(format!(
                "weight of rank {} for model of rank {}",
                w.rank(),
                self.rank()
            )));
        }
        Ok(())
    }

    pub fn check_cartan(&self, h: &CartanPoint) -> Result<()> {
        if h.rank() != self.rank() {
            return Err(Error::Domain(format!(
                "chamber point of rank {} for model of rank {}",
                h.rank(),
                self.rank()
            )));
        }
        if h.coords().iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Domain(format!("{h:?} is not in the closed chamber")));
        }
        Ok(())
    }

    pub fn check_flat(&self, x: &FlatPoint) -> Result<()> {
        if x.0.len() != self.dim() {
            return Err(Error::Domain(format!(
                "flat point of dimension {} for model of dimension {}",
                x.0.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SymmetricSpaceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `S^d = SO(d+1)/SO(d)`.
pub fn make_sphere(d: usize) -> Result<SymmetricSpaceModel> {
    if d < 2 {
        return Err(Error::InvalidModel(format!("sphere dimension must be >= 2, got {d}")));
    }
    let kind = FactorKind::Sphere { d };
    SymmetricSpaceModel::from_factors(kind.name(), vec![kind], DEFAULT_CHAMBER_RADIUS)
}

/// The group case `(SU(2) x SU(2))/diag`.
pub fn make_su2() -> SymmetricSpaceModel {
    let kind = FactorKind::Su2;
    SymmetricSpaceModel::from_factors(kind.name(), vec![kind], DEFAULT_CHAMBER_RADIUS)
        .expect("su2 model is valid")
}

pub fn make_product(a: &SymmetricSpaceModel, b: &SymmetricSpaceModel) -> SymmetricSpaceModel {
    let factors: Vec<FactorKind> = a.factors.iter().chain(&b.factors).copied().collect();
    let name = product_name(&factors);
    SymmetricSpaceModel::from_factors(name, factors, a.chamber_radius.min(b.chamber_radius))
        .expect("product of valid models is valid")
}

fn product_name(factors: &[FactorKind]) -> String {
    let parts: Vec<String> = factors.iter().map(|f| f.name()).collect();
    format!("product:{}", parts.join(","))
}

impl FromStr for SymmetricSpaceModel {
    type Err = Error;

    /// Parses `sphere:d`, `su2`, or `product:<a>,<b>[,...]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("product:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() < 2 {
                return Err(Error::InvalidModel(format!(
                    "product needs at least two factors: {s:?}"
                )));
            }
            let mut model = parse_factor(parts[0])?;
            for p in &parts[1..] {
                model = make_product(&model, &parse_factor(p)?);
            }
            Ok(model)
        } else {
            parse_factor(s)
        }
    }
}

fn parse_factor(s: &str) -> Result<SymmetricSpaceModel> {
    let s = s.trim();
    if s == "su2" {
        return Ok(make_su2());
    }
    if let Some(d) = s.strip_prefix("sphere:") {
        let d: usize = d
            .parse()
            .map_err(|_| Error::InvalidModel(format!("bad sphere dimension in {s:?}")))?;
        return make_sphere(d);
    }
    Err(Error::InvalidModel(format!("unknown model name {s:?}")))
}

/// Degree `d_lambda` from the Weyl dimension formula.
pub fn weyl_dim(model: &SymmetricSpaceModel, w: &WeightPoint) -> f64 {
    let mut d = 1.0;
    for root in model.roots() {
        let a = root.eval_weight(w.coords());
        for &p in &root.delta_pairings {
            d *= (a + p) / p;
        }
    }
    d
}

/// Weyl dimension in exact integer arithmetic.
///
/// All pairings of the built-in models are half-integers, so the formula is
/// evaluated with doubled numerators and denominators. Returns `None` if a
/// pairing is not a half-integer or the product overflows.
pub fn weyl_dim_exact(model: &SymmetricSpaceModel, w: &WeightPoint) -> Option<u128> {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for root in model.roots() {
        let a2 = 2.0 * root.eval_weight(w.coords());
        for &p in &root.delta_pairings {
            let p2 = 2.0 * p;
            if a2.fract() != 0.0 || p2.fract() != 0.0 {
                return None;
            }
            num = num.checked_mul((a2 + p2) as u128)?;
            den = den.checked_mul(p2 as u128)?;
            let g = gcd(num, den);
            num /= g;
            den /= g;
        }
    }
    (den == 1).then_some(num)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Polar density `prod_alpha alpha(H)^{m_alpha}`; zero exactly on the walls.
pub fn density(model: &SymmetricSpaceModel, h: &CartanPoint) -> f64 {
    density_at(model, h.coords())
}

pub(crate) fn density_at(model: &SymmetricSpaceModel, h: &[f64]) -> f64 {
    model
        .roots()
        .iter()
        .map(|r| r.eval(h).abs().powi(r.multiplicity as i32))
        .product()
}

/// `lim_t d_{[tZ]} / t^{|Phi+|} = prod_beta alpha(Z) / <beta, delta>`.
pub fn dim_scaling_limit(model: &SymmetricSpaceModel, z: &CartanPoint) -> f64 {
    let mut v = 1.0;
    for root in model.roots() {
        let a = root.eval(z.coords());
        for &p in &root.delta_pairings {
            v *= a / p;
        }
    }
    v
}
