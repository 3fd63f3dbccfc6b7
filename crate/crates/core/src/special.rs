//! Scalar special functions and Gauss-Legendre quadrature.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

/// Below this argument the Bessel function is summed from its power series.
pub const BESSEL_SERIES_CUTOFF: f64 = 12.0;

const BESSEL_MIN_SERIES_TERMS: usize = 30;
const BESSEL_MAX_SERIES_TERMS: usize = 600;

/// Radius below which removable singularities switch to Taylor branches.
pub const TAYLOR_CUTOFF: f64 = 1e-4;

/// A quadrature rule on a finite interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over the rule's interval.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Concatenates `panels` equal-width copies of an `order`-point rule on `(lo, hi)`.
    pub fn composite(order: usize, panels: usize, lo: f64, hi: f64) -> Result<Self> {
        if panels == 0 {
            return Err(Error::Domain("composite rule needs at least one panel".into()));
        }
        let width = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        let mut weights = Vec::with_capacity(order * panels);
        for k in 0..panels {
            let a = lo + width * k as f64;
            let b = if k + 1 == panels { hi } else { a + width };
            let panel = gauss_legendre(order, a, b)?;
            nodes.extend(panel.nodes);
            weights.extend(panel.weights);
        }
        Ok(Self {
            nodes,
            weights,
            interval: (lo, hi),
        })
    }
}

fn reference_rules() -> &'static Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes and weights of the `n`-point rule on `[-1, 1]`, ascending.
fn reference_rule(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    if let Some(rule) = reference_rules().lock().unwrap().get(&n) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(compute_reference_rule(n));
    reference_rules()
        .lock()
        .unwrap()
        .entry(n)
        .or_insert(rule)
        .clone()
}

fn compute_reference_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `n`-point Gauss-Legendre rule mapped to `(lo, hi)`.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(Error::Domain("Gauss-Legendre rule needs n >= 1".into()));
    }
    if !(lo < hi) {
        return Err(Error::Domain(format!(
            "Gauss-Legendre interval must satisfy lo < hi, got ({lo}, {hi})"
        )));
    }
    let reference = reference_rule(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    Ok(QuadratureRule {
        nodes: reference.0.iter().map(|&x| mid + half * x).collect(),
        weights: reference.1.iter().map(|&w| half * w).collect(),
        interval: (lo, hi),
    })
}

fn check_unit_interval(x: f64) -> Result<f64> {
    if !(x.abs() <= 1.0 + 1e-14) {
        return Err(Error::Domain(format!("argument {x} outside [-1, 1]")));
    }
    Ok(x.clamp(-1.0, 1.0))
}

/// `C_n^alpha(x) / C_n^alpha(1)`.
///
/// `alpha = 0` is the Chebyshev limit `cos(n arccos x)`.
pub fn gegenbauer_normalized(n: usize, alpha: f64, x: f64) -> Result<f64> {
    if !(alpha > -0.5) {
        return Err(Error::Domain(format!("Gegenbauer index {alpha} must exceed -1/2")));
    }
    let x = check_unit_interval(x)?;
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = x;
    for k in 2..=n {
        let next = normalized_gegenbauer_step(k, alpha, x, cur, prev);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// All values `C_k^alpha(x) / C_k^alpha(1)` for `k = 0..=n_max`.
pub fn gegenbauer_normalized_all(n_max: usize, alpha: f64, x: f64) -> Result<Vec<f64>> {
    if !(alpha > -0.5) {
        return Err(Error::Domain(format!("Gegenbauer index {alpha} must exceed -1/2")));
    }
    let x = check_unit_interval(x)?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max >= 1 {
        out.push(x);
    }
    for k in 2..=n_max {
        let next = normalized_gegenbauer_step(k, alpha, x, out[k - 1], out[k - 2]);
        out.push(next);
    }
    Ok(out)
}

// R_k = (2(k + a - 1) x R_{k-1} - (k - 1) R_{k-2}) / (k + 2a - 1)
#[inline]
fn normalized_gegenbauer_step(k: usize, alpha: f64, x: f64, r1: f64, r2: f64) -> f64 {
    let kf = k as f64;
    (2.0 * (kf + alpha - 1.0) * x * r1 - (kf - 1.0) * r2) / (kf + 2.0 * alpha - 1.0)
}

/// `sin(x) / x` with a Taylor branch near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < TAYLOR_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Normalized Bessel function `Gamma(nu + 1) (2/x)^nu J_nu(x)`, equal to 1 at `x = 0`.
pub fn bessel_j_normalized(nu: f64, x: f64) -> f64 {
    let x = x.abs();
    if x <= bessel_series_limit(nu) {
        bessel_normalized_series(nu, x)
    } else {
        let scale = (ln_gamma(nu + 1.0) + nu * (2.0 / x).ln()).exp();
        scale * bessel_j_asymptotic(nu, x)
    }
}

/// Switch-over point between the power series and the Hankel expansion.
///
/// The Hankel expansion loses accuracy once `nu^2` is comparable to `x`, so
/// higher orders keep the series a little longer.
fn bessel_series_limit(nu: f64) -> f64 {
    BESSEL_SERIES_CUTOFF.max(2.0 * nu * nu)
}

fn bessel_normalized_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..BESSEL_MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if k >= BESSEL_MIN_SERIES_TERMS && term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion of `J_nu(x)` for large `x`.
fn bessel_j_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let chi = x - (0.5 * nu + 0.25) * PI;
    let mut p = 0.0;
    let mut q = 0.0;
    // a_k = prod_{j=1..k} (mu - (2j-1)^2) / (k! 8^k x^k)
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..60usize {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last || a == 0.0 && k > 0 {
            break;
        }
        last = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Surface area of the unit sphere `S^k` in `R^{k+1}`; `S^0` has two points.
pub fn sphere_area(k: usize) -> f64 {
    let h = 0.5 * (k as f64 + 1.0);
    2.0 * PI.powf(h) / gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre_direct(n: usize, x: f64) -> f64 {
        match n {
            0 => 1.0,
            1 => x,
            2 => 0.5 * (3.0 * x * x - 1.0),
            3 => 0.5 * (5.0 * x.powi(3) - 3.0 * x),
            4 => (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
            _ => unreachable!(),
        }
    }

    /// Explicit sum C_n^a(x) = sum_k (-1)^k Gamma(n-k+a) / (Gamma(a) k! (n-2k)!) (2x)^(n-2k).
    fn gegenbauer_expansion(n: usize, a: f64, x: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..=n / 2 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            // Gamma(n - k + a) / Gamma(a) as a rising factorial.
            let rising: f64 = (0..n - k).map(|j| a + j as f64).product();
            let fact = |m: usize| (1..=m).map(|j| j as f64).product::<f64>();
            let coeff = rising / (fact(k) * fact(n - 2 * k));
            s += sign * coeff * (2.0 * x).powi((n - 2 * k) as i32);
        }
        s
    }

    #[test]
    fn gegenbauer_degree_zero_is_one() {
        for &a in &[0.0, 0.5, 1.0, 2.5] {
            for &x in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
                assert_eq!(gegenbauer_normalized(0, a, x).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn legendre_value_at_half() {
        let v = gegenbauer_normalized(2, 0.5, 0.5).unwrap();
        assert!((v + 0.125).abs() < 1e-15, "{v}");
        for n in 0..=4 {
            for &x in &[-0.9, -0.2, 0.35, 0.8] {
                let v = gegenbauer_normalized(n, 0.5, x).unwrap();
                assert!((v - legendre_direct(n, x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chebyshev_u_degree_one() {
        let theta: f64 = 0.7;
        let v = gegenbauer_normalized(1, 1.0, theta.cos()).unwrap();
        assert!((v - theta.cos()).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_limit_at_alpha_zero() {
        let theta: f64 = 1.1;
        for n in 0..20 {
            let v = gegenbauer_normalized(n, 0.0, theta.cos()).unwrap();
            assert!((v - (n as f64 * theta).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_expansion() {
        for &a in &[0.5, 1.0, 1.5, 2.0, 3.5] {
            for n in 0..=10 {
                let norm = gegenbauer_expansion(n, a, 1.0);
                for &x in &[-0.95, -0.4, 0.1, 0.6, 0.99] {
                    let want = gegenbauer_expansion(n, a, x) / norm;
                    let got = gegenbauer_normalized(n, a, x).unwrap();
                    assert!((got - want).abs() < 1e-12, "n={n} a={a} x={x}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn gegenbauer_all_matches_single() {
        let all = gegenbauer_normalized_all(30, 1.5, 0.3).unwrap();
        for (n, v) in all.iter().enumerate() {
            assert_eq!(*v, gegenbauer_normalized(n, 1.5, 0.3).unwrap());
        }
    }

    #[test]
    fn gegenbauer_rejects_out_of_domain() {
        assert!(matches!(gegenbauer_normalized(3, 0.5, 1.2), Err(Error::Domain(_))));
        assert!(gegenbauer_normalized(3, -0.7, 0.2).is_err());
    }

    #[test]
    fn bessel_at_origin() {
        assert_eq!(bessel_j_normalized(0.0, 0.0), 1.0);
        assert_eq!(bessel_j_normalized(1.5, 0.0), 1.0);
    }

    #[test]
    fn bessel_first_zero_of_j0() {
        // Bisection on the raw series, independent of the switch-over logic.
        let series = |x: f64| bessel_normalized_series(0.0, x);
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if series(lo) * series(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((0.5 * (lo + hi) - 2.404825557695773).abs() < 1e-12);
        assert!(bessel_j_normalized(0.0, 2.404825557695773).abs() < 1e-9);
    }

    #[test]
    fn bessel_half_order_is_sinc() {
        assert!(bessel_j_normalized(0.5, PI).abs() < 1e-12);
        for i in 0..200 {
            let x = 0.25 * i as f64;
            let want = sinc(x);
            assert!((bessel_j_normalized(0.5, x) - want).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn bessel_is_even_and_bounded() {
        for &nu in &[0.0, 0.5, 1.0, 2.5] {
            for i in 0..400 {
                let x = 0.13 * i as f64;
                let v = bessel_j_normalized(nu, x);
                assert_eq!(v, bessel_j_normalized(nu, -x));
                assert!(v.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn bessel_continuous_across_switch() {
        for &nu in &[0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let cut = bessel_series_limit(nu);
            let below = bessel_normalized_series(nu, cut);
            let scale = (ln_gamma(nu + 1.0) + nu * (2.0 / cut).ln()).exp();
            let above = scale * bessel_j_asymptotic(nu, cut);
            assert!((below - above).abs() < 1e-10, "nu={nu}: {below} vs {above}");
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        let rule = gauss_legendre(2, 0.0, 1.0).unwrap();
        assert!((rule.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-14);
        let rule = gauss_legendre(7, 0.0, 2.0).unwrap();
        assert!((rule.integrate(|_| 1.0) - 2.0).abs() < 1e-14);
        let rule = gauss_legendre(20, 0.0, PI).unwrap();
        assert!((rule.integrate(f64::sin) - 2.0).abs() < 1e-12);
        let rule = gauss_legendre(6, -1.0, 3.0).unwrap();
        let exact = (3f64.powi(12) - 1.0) / 12.0;
        assert!((rule.integrate(|x| x.powi(11)) - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn gauss_legendre_rule_invariants() {
        for &n in &[1usize, 2, 5, 64, 200, 513] {
            let rule = gauss_legendre(n, -0.5, 2.0).unwrap();
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.5).abs() < 1e-12, "n={n}");
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes[0] > -0.5 && rule.nodes[n - 1] < 2.0);
        }
    }

    #[test]
    fn gauss_legendre_error_decays() {
        let f = |x: f64| (3.0 * x).cos() * (-x * x).exp();
        let reference = gauss_legendre(400, 0.0, 2.0).unwrap().integrate(f);
        let errs: Vec<f64> = [4usize, 8, 16]
            .iter()
            .map(|&n| (gauss_legendre(n, 0.0, 2.0).unwrap().integrate(f) - reference).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn gauss_legendre_domain_errors() {
        assert!(gauss_legendre(4, 1.0, 1.0).is_err());
        assert!(gauss_legendre(4, 2.0, 1.0).is_err());
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(0) - 2.0).abs() < 1e-14);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-12);
    }
}
