//! Fourier transform and inversion on `p*` for Ad(K)-invariant functions.
//!
//! An invariant function is determined by its chamber profile, and by polar
//! integration its transform reduces to a chamber integral against the
//! generalized Bessel kernel and the polynomial density:
//!
//! ```text
//! xi^(Z) = c_fwd * int_chamber xi(H) J(Z, H) prod_alpha alpha(H)^m dH
//! xi(X)  = c_inv * int_chamber xi^(Z) J(Z, X) prod_alpha alpha(Z)^m dZ
//! ```
//!
//! `c_fwd` is the product of the orbit volumes `|S^{D_j - 1}|`, which makes the
//! measure on `p*` Lebesgue measure, and `c_inv = c_fwd / (2 pi)^D`. The inverse
//! constant is also recovered numerically by [`calibrate_inverse_constant`].

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{density_at, CartanPoint, SymmetricSpaceModel};
use crate::special::{gauss_legendre, sphere_area, QuadratureRule};
use crate::spherical::gen_bessel_radial;

type ProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Profile {
    Function(ProfileFn),
    Spline(CubicSpline),
    Tensor(Vec<RadialFunction>),
}

/// An Ad(K)-invariant function given by its chamber profile on the box
/// `prod_j [0, support_j]`; it vanishes outside the box.
#[derive(Clone)]
pub struct RadialFunction {
    profile: Profile,
    support: Vec<f64>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.profile {
            Profile::Function(_) => "function",
            Profile::Spline(_) => "spline",
            Profile::Tensor(_) => "tensor",
        };
        f.debug_struct("RadialFunction")
            .field("kind", &kind)
            .field("support", &self.support)
            .finish()
    }
}

impl RadialFunction {
    pub fn from_fn<F>(support: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_support(&support)?;
        Ok(Self {
            profile: Profile::Function(Arc::new(f)),
            support,
        })
    }

    /// Rank-one profile through samples `(radius, value)`, interpolated by a
    /// natural cubic spline. The support is the last radius.
    pub fn from_samples(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let spline = CubicSpline::new(radii, values)?;
        let support = vec![*spline.x.last().unwrap()];
        check_support(&support)?;
        Ok(Self {
            profile: Profile::Spline(spline),
            support,
        })
    }

    /// Product `f_1(h_1) f_2(h_2) ...` of rank-one profiles, one per factor.
    pub fn tensor(parts: Vec<RadialFunction>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|p| p.rank() != 1) {
            return Err(Error::Domain("tensor profiles need rank-one parts".into()));
        }
        let support = parts.iter().map(|p| p.support[0]).collect();
        Ok(Self {
            profile: Profile::Tensor(parts),
            support,
        })
    }

    pub fn zero(rank: usize) -> Self {
        Self::from_fn(vec![f64::MIN_POSITIVE; rank], |_| 0.0).expect("positive support")
    }

    pub fn rank(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn support_radius(&self) -> f64 {
        self.support.iter().copied().fold(0.0, f64::max)
    }

    /// Rank-one parts when the profile is a tensor product.
    pub fn tensor_parts(&self) -> Option<&[RadialFunction]> {
        match &self.profile {
            Profile::Tensor(parts) => Some(parts),
            _ => None,
        }
    }

    pub fn eval(&self, h: &[f64]) -> f64 {
        if h.len() != self.support.len()
            || h.iter().zip(&self.support).any(|(&c, &s)| !(c.abs() <= s))
        {
            return 0.0;
        }
        match &self.profile {
            Profile::Function(f) => f(h),
            Profile::Spline(s) => s.eval(h[0].abs()),
            Profile::Tensor(parts) => parts
                .iter()
                .zip(h)
                .map(|(p, &c)| p.eval(std::slice::from_ref(&c)))
                .product(),
        }
    }

    pub fn eval_point(&self, h: &CartanPoint) -> f64 {
        self.eval(h.coords())
    }

    /// `c * self`, keeping tensor structure.
    pub fn scaled(&self, c: f64) -> Self {
        match &self.profile {
            Profile::Tensor(parts) => {
                let mut parts = parts.clone();
                parts[0] = parts[0].scaled(c);
                Self {
                    profile: Profile::Tensor(parts),
                    support: self.support.clone(),
                }
            }
            _ => {
                let inner = self.clone();
                Self::from_fn(self.support.clone(), move |h| c * inner.eval(h))
                    .expect("support already validated")
            }
        }
    }

    pub fn check_model(&self, model: &SymmetricSpaceModel) -> Result<()> {
        if self.rank() != model.rank() {
            return Err(Error::Domain(format!(
                "profile of rank {} for model of rank {}",
                self.rank(),
                model.rank()
            )));
        }
        Ok(())
    }
}

fn check_support(support: &[f64]) -> Result<()> {
    if support.is_empty() || support.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(Error::Domain(format!(
            "support radii must be positive and finite, got {support:?}"
        )));
    }
    Ok(())
}

/// Natural cubic spline through strictly increasing knots.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain("spline needs at least two (x, y) pairs".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x[0] < 0.0 {
            return Err(Error::Domain("spline knots must be nonnegative and increasing".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("spline values must be finite".into()));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for i in 0..k {
                let h0 = x[i + 1] - x[i];
                let h1 = x[i + 2] - x[i + 1];
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0);
            }
            for i in 1..k {
                let lower = x[i + 1] - x[i];
                let f = lower / diag[i - 1];
                diag[i] -= f * upper[i - 1];
                rhs[i] -= f * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Ok(Self { x, y, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Loads a rank-one profile from a two-column CSV (`radius,value`) with a header row.
pub fn load_profile_csv(path: &Path) -> Result<RadialFunction> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_profile_csv(&text)
}

pub fn parse_profile_csv(text: &str) -> Result<RadialFunction> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty profile file".into()))?;
    if header.split(',').all(|c| c.trim().parse::<f64>().is_ok()) {
        return Err(Error::Config("profile CSV needs a header row".into()));
    }
    let mut radii = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 2 {
            return Err(Error::Config(format!("profile row {} needs two columns", i + 2)));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number {s:?} in profile row {}", i + 2)))
        };
        radii.push(parse(cols[0])?);
        values.push(parse(cols[1])?);
    }
    RadialFunction::from_samples(radii, values)
}

/// Standard mollifier `exp(-1 / (1 - (r/R)^2))` on a factor of dimension `dim`,
/// scaled to unit mass.
fn factor_bump(dim: usize, radius: f64) -> RadialFunction {
    let raw = move |r: f64| {
        let s = r / radius;
        if s >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - s * s)).exp()
        }
    };
    let rule = gauss_legendre(400, 0.0, radius).expect("valid interval");
    let mass = sphere_area(dim - 1) * rule.integrate(|r| raw(r) * r.powi(dim as i32 - 1));
    RadialFunction::from_fn(vec![radius], move |h| raw(h[0].abs()) / mass)
        .expect("positive radius")
}

/// Smooth unit-mass bump supported in the ball (per factor) of radius `radius`.
pub fn unit_mass_bump(model: &SymmetricSpaceModel, radius: f64) -> Result<RadialFunction> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("bump radius {radius} must be positive")));
    }
    let parts = model
        .factors()
        .iter()
        .map(|f| factor_bump(f.dim(), radius))
        .collect();
    RadialFunction::tensor(parts)
}

/// `exp(-|H|^2 / (2 sigma^2))`, truncated per factor at `cutoff`.
pub fn gaussian(model: &SymmetricSpaceModel, sigma: f64, cutoff: f64) -> Result<RadialFunction> {
    if !(sigma > 0.0 && cutoff > 0.0) {
        return Err(Error::Domain("Gaussian width and cutoff must be positive".into()));
    }
    let parts = (0..model.rank())
        .map(|_| {
            RadialFunction::from_fn(vec![cutoff], move |h| (-h[0] * h[0] / (2.0 * sigma * sigma)).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    RadialFunction::tensor(parts)
}

/// Closed-form transform `(2 pi sigma^2)^{D/2} exp(-sigma^2 |Z|^2 / 2)` of the
/// untruncated Gaussian on `R^D`.
pub fn gaussian_transform_exact(model: &SymmetricSpaceModel, sigma: f64, z: &CartanPoint) -> f64 {
    let d = model.dim() as f64;
    (2.0 * PI * sigma * sigma).powf(0.5 * d) * (-0.5 * sigma * sigma * z.norm().powi(2)).exp()
}

/// Constants of the transform pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalization {
    pub forward: f64,
    pub inverse: f64,
}

pub fn normalization(model: &SymmetricSpaceModel) -> Normalization {
    let forward: f64 = model
        .factors()
        .iter()
        .map(|f| sphere_area(f.dim() - 1))
        .product();
    Normalization {
        forward,
        inverse: forward / (2.0 * PI).powi(model.dim() as i32),
    }
}

/// Quadrature settings for transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FourierQuadrature {
    /// Gauss-Legendre nodes per chamber axis on the profile support.
    pub order: usize,
    /// Extra forward nodes per unit of `z * support`, resolving the kernel's oscillation.
    pub oscillation_nodes: f64,
    /// Nodes per panel of the composite inversion rule.
    pub panel_order: usize,
    pub panel_width: f64,
    /// Panels never span more than this many periods of the kernel at the
    /// largest evaluation point.
    pub periods_per_panel: f64,
    pub min_panels: usize,
    /// Inversion is truncated where `|xhat| * density` drops below this.
    pub truncation_tol: f64,
    /// Relative level below which transform values are treated as round-off.
    pub noise_floor: f64,
    pub scan_step: f64,
    pub max_radius: f64,
}

impl Default for FourierQuadrature {
    fn default() -> Self {
        Self {
            order: 200,
            oscillation_nodes: 0.5,
            panel_order: 20,
            panel_width: 20.0,
            periods_per_panel: 4.0,
            min_panels: 10,
            truncation_tol: 1e-10,
            noise_floor: 1e-14,
            scan_step: 0.5,
            max_radius: 1500.0,
        }
    }
}

impl FourierQuadrature {
    fn forward_rule(&self, support: f64, z: f64) -> Result<QuadratureRule> {
        let extra = (self.oscillation_nodes * z.abs() * support).ceil() as usize;
        gauss_legendre(self.order + extra, 0.0, support)
    }

    fn inverse_rule(&self, radius: f64, x_max: f64) -> Result<QuadratureRule> {
        let mut width = self.panel_width;
        if x_max > 0.0 {
            width = width.min(self.periods_per_panel * 2.0 * PI / x_max);
        }
        let panels = ((radius / width).ceil() as usize).max(self.min_panels);
        QuadratureRule::composite(self.panel_order, panels, 0.0, radius)
    }
}

fn tensor_sum<F>(rules: &[QuadratureRule], f: F) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let mut idx = vec![0usize; rules.len()];
    let mut point = vec![0.0; rules.len()];
    let mut total = 0.0;
    if rules.iter().any(|r| r.is_empty()) {
        return 0.0;
    }
    loop {
        let mut w = 1.0;
        for (k, r) in rules.iter().enumerate() {
            point[k] = r.nodes[idx[k]];
            w *= r.weights[idx[k]];
        }
        total += w * f(&point);
        let mut k = 0;
        loop {
            if k == rules.len() {
                return total;
            }
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Radial Fourier transform `xi^(Z)`.
pub fn fourier_transform(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    z: &CartanPoint,
    quad: &FourierQuadrature,
) -> Result<f64> {
    xi.check_model(model)?;
    model.check_cartan(z)?;
    if let Some(parts) = xi.tensor_parts() {
        if model.rank() > 1 {
            let mut v = 1.0;
            for (i, part) in parts.iter().enumerate() {
                let sub = model.factor_model(i);
                v *= fourier_transform(&sub, part, &CartanPoint(vec![z.coords()[i]]), quad)?;
            }
            return Ok(v);
        }
    }
    let rules = xi
        .support()
        .iter()
        .zip(z.coords())
        .map(|(&s, &zj)| quad.forward_rule(s, zj))
        .collect::<Result<Vec<_>>>()?;
    let integral = tensor_sum(&rules, |h| {
        xi.eval(h) * gen_bessel_radial(model, z.coords(), h) * density_at(model, h)
    });
    Ok(normalization(model).forward * integral)
}

/// Inverse transform of a chamber profile `xhat`, integrated over its support box.
pub fn inverse_transform(
    model: &SymmetricSpaceModel,
    xhat: &RadialFunction,
    x: &CartanPoint,
    quad: &FourierQuadrature,
) -> Result<f64> {
    Ok(inverse_transform_many(model, xhat, std::slice::from_ref(x), quad)?[0])
}

/// Inverse transform at several points, sampling `xhat` once on the shared rule.
pub fn inverse_transform_many(
    model: &SymmetricSpaceModel,
    xhat: &RadialFunction,
    xs: &[CartanPoint],
    quad: &FourierQuadrature,
) -> Result<Vec<f64>> {
    xhat.check_model(model)?;
    for x in xs {
        model.check_cartan(x)?;
    }
    if let (Some(parts), true) = (xhat.tensor_parts(), model.rank() > 1) {
        let mut out = vec![1.0; xs.len()];
        for (i, part) in parts.iter().enumerate() {
            let sub = model.factor_model(i);
            let pts: Vec<CartanPoint> = xs.iter().map(|x| CartanPoint(vec![x.coords()[i]])).collect();
            let vals = inverse_transform_many(&sub, part, &pts, quad)?;
            for (o, v) in out.iter_mut().zip(vals) {
                *o *= v;
            }
        }
        return Ok(out);
    }
    let rules = xhat
        .support()
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let x_max = xs.iter().map(|x| x.coords()[j]).fold(0.0, f64::max);
            quad.inverse_rule(s, x_max)
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = TensorGrid::new(&rules);
    let weighted: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (p, w) = grid.point(k);
            w * xhat.eval(&p) * density_at(model, &p)
        })
        .collect();
    let c = normalization(model).inverse;
    Ok(xs
        .par_iter()
        .map(|x| {
            let mut s = 0.0;
            for (k, &wv) in weighted.iter().enumerate() {
                if wv != 0.0 {
                    let (p, _) = grid.point(k);
                    s += wv * gen_bessel_radial(model, &p, x.coords());
                }
            }
            c * s
        })
        .collect())
}

pub(crate) struct TensorGrid<'a> {
    rules: &'a [QuadratureRule],
    len: usize,
}

impl<'a> TensorGrid<'a> {
    pub(crate) fn new(rules: &'a [QuadratureRule]) -> Self {
        let len = rules.iter().map(|r| r.len()).product();
        Self { rules, len }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn point(&self, mut k: usize) -> (Vec<f64>, f64) {
        let mut p = Vec::with_capacity(self.rules.len());
        let mut w = 1.0;
        for r in self.rules {
            let i = k % r.len();
            k /= r.len();
            p.push(r.nodes[i]);
            w *= r.weights[i];
        }
        (p, w)
    }
}

/// The transform of `xi` as a profile in `Z`, truncated where
/// `|xi^| * density < truncation_tol`. Values are computed on demand.
pub fn transform_profile(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    quad: &FourierQuadrature,
) -> Result<RadialFunction> {
    xi.check_model(model)?;
    if let (Some(parts), true) = (xi.tensor_parts(), model.rank() > 1) {
        let hats = parts
            .iter()
            .enumerate()
            .map(|(i, p)| transform_profile(&model.factor_model(i), p, quad))
            .collect::<Result<Vec<_>>>()?;
        return RadialFunction::tensor(hats);
    }
    let model_c = model.clone();
    let xi_c = xi.clone();
    let quad_c = quad.clone();
    let eval = move |z: &[f64]| {
        fourier_transform(&model_c, &xi_c, &CartanPoint(z.to_vec()), &quad_c).unwrap_or(f64::NAN)
    };
    let radius = truncation_radius(model, &eval, quad);
    RadialFunction::from_fn(vec![radius; model.rank()], eval)
}

/// Last scan point along the diagonal where `|f| * density >= truncation_tol`,
/// plus one step, capped at `max_radius`.
///
/// Values below `noise_floor` times the largest modulus in the first chunk
/// count as quadrature noise; without this floor the growth of the density
/// would keep round-off above `truncation_tol` indefinitely. The scan runs in
/// chunks and stops after [`QUIET_CHUNKS`] consecutive chunks without a hit.
pub fn truncation_radius<F>(model: &SymmetricSpaceModel, f: &F, quad: &FourierQuadrature) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let steps = (quad.max_radius / quad.scan_step).ceil() as usize;
    let r = model.rank();
    let point = |k: usize| vec![k as f64 * quad.scan_step; r];
    let scale = (0..SCAN_CHUNK.min(steps + 1))
        .into_par_iter()
        .map(|k| f(&point(k)).abs())
        .reduce(|| 0.0, f64::max);
    let floor = quad.noise_floor * scale;
    let mut last = 0;
    let mut quiet = 0;
    let mut start = 0;
    while start <= steps && quiet < QUIET_CHUNKS {
        let end = (start + SCAN_CHUNK).min(steps + 1);
        let hit = (start..end)
            .into_par_iter()
            .filter(|&k| {
                let z = point(k);
                let v = f(&z).abs();
                v > floor && v * density_at(model, &z) >= quad.truncation_tol
            })
            .max();
        match hit {
            Some(k) => {
                last = k;
                quiet = 0;
            }
            None => quiet += 1,
        }
        start = end;
    }
    ((last + 1) as f64 * quad.scan_step).min(quad.max_radius)
}

const SCAN_CHUNK: usize = 64;
pub const QUIET_CHUNKS: usize = 4;

/// `xi -> inverse(transform(xi))` evaluated at `xs`.
pub fn round_trip(
    model: &SymmetricSpaceModel,
    xi: &RadialFunction,
    xs: &[CartanPoint],
    quad: &FourierQuadrature,
) -> Result<Vec<f64>> {
    let hat = transform_profile(model, xi, quad)?;
    inverse_transform_many(model, &hat, xs, quad)
}

/// Recovers the inverse constant from the Gaussian round trip at the origin.
pub fn calibrate_inverse_constant(model: &SymmetricSpaceModel, quad: &FourierQuadrature) -> Result<f64> {
    let g = gaussian(model, 1.0, 9.0)?;
    let hat = transform_profile(model, &g, quad)?;
    let raw = inverse_transform(model, &hat, &CartanPoint::zero(model.rank()), quad)?
        / normalization(model).inverse;
    Ok(1.0 / raw)
}
