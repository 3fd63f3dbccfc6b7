//! Checks against independently computed reference values.

use std::f64::consts::PI;

use transference::contraction::{floor_weight, jacobian};
use transference::fourier::{
    fourier_transform, gaussian, gaussian_transform_exact, unit_mass_bump, FourierQuadrature,
    RadialFunction,
};
use transference::model::{density, make_product, make_sphere, make_su2};
use transference::norms::{lp_lower_bound_flat, FlatNormConfig, TrialProfile};
use transference::special::{gauss_legendre, QuadratureRule};
use transference::spherical::{gen_bessel, phi};
use transference::{CartanPoint, FlatPoint, WeightPoint};

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

// P_n(x) = sum_k C(n,k)^2 ((x-1)/2)^(n-k) ((x+1)/2)^k
fn legendre_explicit(n: u64, x: f64) -> f64 {
    (0..=n)
        .map(|k| binom(n, k).powi(2) * ((x - 1.0) / 2.0).powi((n - k) as i32) * ((x + 1.0) / 2.0).powi(k as i32))
        .sum()
}

#[test]
fn sphere2_phi_is_legendre() {
    let s2 = make_sphere(2).unwrap();
    for n in 0..=12u64 {
        for &theta in &[0.0, 0.2, 0.9, 1.7, 2.6, PI] {
            let v = phi(&s2, &WeightPoint(vec![n]), &CartanPoint(vec![theta])).unwrap();
            let want = legendre_explicit(n, theta.cos());
            assert!((v - want).abs() < 1e-11, "n={n} theta={theta}: {v} vs {want}");
        }
    }
}

#[test]
fn su2_and_three_sphere_agree() {
    let su2 = make_su2();
    let s3 = make_sphere(3).unwrap();
    for n in 0..=30u64 {
        for &theta in &[0.05, 0.7, 1.3, 2.9] {
            let h = CartanPoint(vec![theta]);
            let w = WeightPoint(vec![n]);
            let a = phi(&su2, &w, &h).unwrap();
            let b = phi(&s3, &w, &h).unwrap();
            let want = ((n + 1) as f64 * theta).sin() / ((n + 1) as f64 * theta.sin());
            assert!((a - want).abs() < 1e-12 && (b - want).abs() < 1e-12, "n={n}");
        }
    }
}

#[test]
fn bessel_kernel_closed_forms() {
    // D = 3 gives sin(x)/x, D = 1 would give cos; D = 5 gives 3(sin x - x cos x)/x^3.
    let s3 = make_sphere(3).unwrap();
    let s5 = make_sphere(5).unwrap();
    for &x in &[0.1, 1.0, 4.5, 17.0] {
        let j3 = gen_bessel(&s3, &CartanPoint(vec![1.0]), &FlatPoint::radial(&s3, &CartanPoint(vec![x]))).unwrap();
        assert!((j3 - x.sin() / x).abs() < 1e-13);
        let j5 = gen_bessel(&s5, &CartanPoint(vec![x]), &FlatPoint::radial(&s5, &CartanPoint(vec![1.0]))).unwrap();
        let want = 3.0 * (x.sin() - x * x.cos()) / x.powi(3);
        assert!((j5 - want).abs() < 1e-12, "x={x}: {j5} vs {want}");
    }
}

#[test]
fn floor_and_jacobian_examples() {
    let f = floor_weight(10.0, &CartanPoint(vec![0.37, 1.0])).unwrap();
    assert_eq!(f.weight.0, vec![3, 10]);
    assert!((f.frac[0] - 0.7).abs() < 1e-12 && f.frac[1] == 0.0);
    assert!(floor_weight(0.5, &CartanPoint(vec![1.0])).is_err());

    let s2 = make_sphere(2).unwrap();
    let x = FlatPoint(vec![0.3, 0.4]);
    assert!((jacobian(&s2, &x).unwrap() - 0.5f64.sin() / 0.5).abs() < 1e-15);
    let su2 = make_su2();
    let x = FlatPoint(vec![0.0, 0.6, 0.8]);
    assert!((jacobian(&su2, &x).unwrap() - (1.0f64.sin()).powi(2)).abs() < 1e-15);
}

#[test]
fn density_of_products_multiplies() {
    let p = make_product(&make_sphere(2).unwrap(), &make_su2());
    let h = CartanPoint(vec![0.4, 1.1]);
    assert!((density(&p, &h) - 0.4 * 1.1 * 1.1).abs() < 1e-15);
}

// Two-dimensional Cartesian quadrature of f(|x|) cos(z x_1) over the square
// containing the support, compared with the radial Hankel-type transform.
#[test]
fn sphere2_transform_matches_cartesian_integral() {
    let s2 = make_sphere(2).unwrap();
    let b = unit_mass_bump(&s2, 0.5).unwrap();
    let rule = QuadratureRule::composite(20, 20, -0.5, 0.5).unwrap();
    let quad = FourierQuadrature::default();
    for &z in &[0.0, 1.0, 3.7, 10.0, 25.0] {
        let mut brute = 0.0;
        for (x1, w1) in rule.iter() {
            let c = (z * x1).cos();
            for (x2, w2) in rule.iter() {
                brute += w1 * w2 * b.eval(&[x1.hypot(x2)]) * c;
            }
        }
        let v = fourier_transform(&s2, &b, &CartanPoint(vec![z]), &quad).unwrap();
        assert!((v - brute).abs() < 1e-9, "z={z}: {v} vs {brute}");
    }
}

// In three dimensions the radial transform is (4 pi / z) int f(r) r sin(z r) dr.
#[test]
fn su2_transform_matches_sine_transform() {
    let su2 = make_su2();
    let b = unit_mass_bump(&su2, 0.5).unwrap();
    let rule = gauss_legendre(300, 0.0, 0.5).unwrap();
    let quad = FourierQuadrature::default();
    for &z in &[0.5, 2.0, 9.0, 30.0] {
        let want = 4.0 * PI / z * rule.integrate(|r| b.eval(&[r]) * r * (z * r).sin());
        let v = fourier_transform(&su2, &b, &CartanPoint(vec![z]), &quad).unwrap();
        assert!((v - want).abs() < 1e-10, "z={z}: {v} vs {want}");
    }
}

#[test]
fn product_gaussian_transform_closed_form() {
    let p = make_product(&make_sphere(2).unwrap(), &make_su2());
    let g = gaussian(&p, 0.7, 9.0 * 0.7).unwrap();
    let quad = FourierQuadrature::default();
    for z in [[0.0, 0.0], [1.0, 0.5], [2.5, 3.0]] {
        let z = CartanPoint(z.to_vec());
        let v = fourier_transform(&p, &g, &z, &quad).unwrap();
        let want = gaussian_transform_exact(&p, 0.7, &z);
        assert!((v - want).abs() < 1e-10 * want.max(1.0), "{v} vs {want}");
    }
}

// Gaussian trial (width s) through the Gaussian multiplier exp(-a |Z|^2) stays
// Gaussian with width^2 = s^2 + 2a, so
// |T f|_p / |f|_p = (s / sqrt(s^2 + 2a))^(D (1 - 1/p)).
#[test]
fn gaussian_multiplier_ratio_closed_form() {
    let a = 0.1;
    let sigma = 0.5;
    let trials = [TrialProfile::gaussian(sigma)];
    let cfg = FlatNormConfig::default();
    for name in ["sphere:2", "su2"] {
        let model: transference::SymmetricSpaceModel = name.parse().unwrap();
        let d = model.dim() as f64;
        let m = RadialFunction::from_fn(vec![40.0], move |z| (-a * z[0] * z[0]).exp()).unwrap();
        for &p in &[1.5, 2.0, 3.0] {
            let est = lp_lower_bound_flat(&model, &m, p, &trials, &cfg).unwrap();
            let s2 = sigma * sigma;
            let want = (s2 / (s2 + 2.0 * a)).sqrt().powf(d * (1.0 - 1.0 / p));
            assert!((est.value - want).abs() < 1e-6, "{name} p={p}: {} vs {want}", est.value);
        }
    }
}

fn smooth_cutoff(z: f64) -> f64 {
    let psi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = psi(2.0 - z);
    let b = psi(z - 1.0);
    a / (a + b)
}

// Full two-dimensional computation of |T_m f|_p / |f|_p for a Gaussian f on
// R^2: cosine sums for f^ and for T_m f on a Cartesian grid, disk mask for the
// output ball. Independent of the radial reduction used by the library.
fn cartesian_ratio(sigma: f64, p: f64, out_radius: f64) -> f64 {
    let g = |x: f64| (-x * x / (2.0 * sigma * sigma)).exp();
    let xr = QuadratureRule::composite(20, 16, -8.0 * sigma, 8.0 * sigma).unwrap();
    let zr = QuadratureRule::composite(20, 40, -2.0, 2.0).unwrap();
    let a: Vec<f64> = zr.nodes.iter().map(|&z| xr.integrate(|x| g(x) * (z * x).cos())).collect();
    let nz = zr.len();
    let mut amp = vec![0.0; nz * nz];
    for i in 0..nz {
        for j in 0..nz {
            let (zi, zj) = (zr.nodes[i], zr.nodes[j]);
            amp[i * nz + j] = zr.weights[i] * zr.weights[j] * smooth_cutoff(zi.hypot(zj)) * a[i] * a[j];
        }
    }
    let or = QuadratureRule::composite(10, 64, -out_radius, out_radius).unwrap();
    let no = or.len();
    let mut cos = Vec::with_capacity(no * nz);
    for &x in &or.nodes {
        cos.extend(zr.nodes.iter().map(|&z| (z * x).cos()));
    }
    // half[k][j] = sum_i cos(z_i x_k) amp[i][j]
    let mut half = vec![0.0; no * nz];
    for k in 0..no {
        for i in 0..nz {
            let c = cos[k * nz + i];
            for j in 0..nz {
                half[k * nz + j] += c * amp[i * nz + j];
            }
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..no {
        for l in 0..no {
            let (x1, x2) = (or.nodes[k], or.nodes[l]);
            if x1.hypot(x2) > out_radius {
                continue;
            }
            let w = or.weights[k] * or.weights[l];
            let tf: f64 = (0..nz).map(|j| half[k * nz + j] * cos[l * nz + j]).sum::<f64>() / (4.0 * PI * PI);
            num += w * tf.abs().powf(p);
            den += w * (g(x1) * g(x2)).powf(p);
        }
    }
    (num / den).powf(1.0 / p)
}

#[test]
fn smooth_cutoff_ratio_regression() {
    let s2 = make_sphere(2).unwrap();
    let m = RadialFunction::from_fn(vec![2.0], |z| smooth_cutoff(z[0])).unwrap();
    let sigma = 0.25;
    let p = 3.0;
    let est = lp_lower_bound_flat(&s2, &m, p, &[TrialProfile::gaussian(sigma)], &FlatNormConfig::default()).unwrap();
    let direct = cartesian_ratio(sigma, p, 8.0);
    assert!((est.value - direct).abs() < 1e-8, "{} vs {direct}", est.value);
    // Baseline from the first verified run (agrees with the radial reduction
    // computed by adaptive quadrature to 1e-10).
    assert!((est.value - 0.199696327774).abs() < 1e-9, "regression: {}", est.value);
}
