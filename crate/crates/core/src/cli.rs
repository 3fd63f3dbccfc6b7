//! The `transfer-cli` experiment driver.
//!
//! Every subcommand resolves its settings (flags over config file over
//! defaults), writes `resolved_config.json`, `<name>.csv` and `<name>.json`
//! into the output directory, and maps its outcome to an exit code:
//! 0 pass, 1 numerical failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::fourier::{
    fourier_transform, gaussian, gaussian_transform_exact, load_profile_csv, normalization,
    round_trip, unit_mass_bump, FourierQuadrature, RadialFunction,
};
use crate::model::{
    dim_scaling_limit, weyl_dim, weyl_dim_exact, CartanPoint, FlatPoint, SymmetricSpaceModel,
    WeightPoint,
};
use crate::norms::{default_trials, transference_norm_report, NormReportConfig};
use crate::spherical::lemma_limit_check;
use crate::transfer::{
    backward_limit_check, dilation_family, forward_limit_against, gaussian_regularize,
    BackwardQuadrature,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "transfer-cli", version, about = "Spherical/Euclidean multiplier transference experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Model name: sphere:d, su2 or product:a,b
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// JSON config file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// `a:b:n`, `a:b:n:log`, `a:b:n(log)` or a comma separated list
    #[arg(long, global = true)]
    pub t_grid: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Gauss-Legendre nodes per axis for transforms and the backward dX integral
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// Two-column CSV profile (radius,value) with a header row
    #[arg(long, global = true)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Contraction limit of spherical functions towards the Bessel kernel
    Lemma,
    /// Forward limit of dilated (and optionally regularized) symbols
    Forward,
    /// Backward symbols m_t against the Fourier transform of a profile
    Backward,
    /// Norm comparison between the flat and the spherical side
    Norms,
    /// Fourier round trip and Gaussian closed-form check
    FourierCheck,
    /// Structural data of a model
    ModelInfo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Lemma => "lemma",
            Command::Forward => "forward",
            Command::Backward => "backward",
            Command::Norms => "norms",
            Command::FourierCheck => "fourier-check",
            Command::ModelInfo => "model-info",
        }
    }
}

/// Grid given either as a list or as a range string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum GridSpec {
    List(Vec<f64>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    t_grid: Option<GridSpec>,
    tol: Option<f64>,
    quad_order: Option<usize>,
    profile: Option<PathBuf>,
    z: Option<Vec<f64>>,
    theta: Option<Vec<f64>>,
    p: Option<f64>,
    eps: Option<f64>,
    bump_radius: Option<f64>,
    degree_cut: Option<u64>,
}

/// Settings after merging flags, config file and defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub model: String,
    pub t_grid: Vec<f64>,
    pub tol: f64,
    pub quad_order: usize,
    pub profile: Option<String>,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: f64,
    pub eps: Option<f64>,
    pub bump_radius: f64,
    pub degree_cut: u64,
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}

/// Parses `a:b:n`, `a:b:n:log`, `a:b:n(log)` or `v1,v2,...`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let bad = || Error::Config(format!("malformed grid {text:?}"));
    if text.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    if !text.contains(':') {
        return text
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()))
            .collect();
    }
    let (body, log) = if let Some(b) = text.strip_suffix(":log") {
        (b, true)
    } else if let Some(b) = text.strip_suffix("(log)") {
        (b, true)
    } else {
        (text, false)
    };
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(Error::Config("empty grid".into()));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    if log && !(a > 0.0 && b > 0.0) {
        return Err(Error::Config(format!("log grid {text:?} needs positive ends")));
    }
    Ok((0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            let v = if log {
                a * (b / a).powf(s)
            } else {
                a + (b - a) * s
            };
            snap(v)
        })
        .collect())
}

struct Defaults {
    model: &'static str,
    t_grid: &'static str,
    tol: f64,
    z: Vec<f64>,
}

fn defaults(cmd: Command) -> Defaults {
    match cmd {
        Command::Lemma => Defaults {
            model: "su2",
            t_grid: "50:800:5:log",
            tol: 1e-12,
            z: vec![0.5, 1.0, 2.0],
        },
        Command::Forward => Defaults {
            model: "su2",
            t_grid: "10,100,1000,10000,100000,1000000",
            tol: 1e-6,
            z: vec![0.0, 0.3, 0.7, 1.0, 1.5, 2.5, 0.123456789, 1.6180339887],
        },
        Command::Backward => Defaults {
            model: "su2",
            t_grid: "20:320:5:log",
            tol: 1e-8,
            z: vec![0.0, 0.5, 1.0, 2.0],
        },
        Command::Norms => Defaults {
            model: "su2",
            t_grid: "20,80,320",
            tol: 1e-2,
            z: (0..=16).map(|k| 0.25 * k as f64).collect(),
        },
        Command::FourierCheck => Defaults {
            model: "su2",
            t_grid: "1",
            tol: 1e-5,
            z: (0..=20).map(|k| 0.5 * k as f64).collect(),
        },
        Command::ModelInfo => Defaults {
            model: "su2",
            t_grid: "1",
            tol: 0.0,
            z: vec![0.5, 1.0, 2.0],
        },
    }
}

fn resolve(cli: &Cli) -> Result<ResolvedConfig> {
    let file = match &cli.common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let d = defaults(cli.command);
    let t_grid = match (&cli.common.t_grid, &file.t_grid) {
        (Some(s), _) => parse_grid(s)?,
        (None, Some(GridSpec::Text(s))) => parse_grid(s)?,
        (None, Some(GridSpec::List(v))) => v.iter().map(|&x| snap(x)).collect(),
        (None, None) => parse_grid(d.t_grid)?,
    };
    if t_grid.is_empty() {
        return Err(Error::Config("empty t grid".into()));
    }
    let profile = cli.common.profile.clone().or(file.profile);
    Ok(ResolvedConfig {
        command: cli.command.name().to_string(),
        model: cli
            .common
            .model
            .clone()
            .or(file.model)
            .unwrap_or_else(|| d.model.to_string()),
        t_grid,
        tol: cli.common.tol.or(file.tol).unwrap_or(d.tol),
        quad_order: cli
            .common
            .quad_order
            .or(file.quad_order)
            .unwrap_or(FourierQuadrature::default().order),
        profile: profile.map(|p| p.display().to_string()),
        z: file.z.unwrap_or(d.z),
        theta: file.theta.unwrap_or_else(|| vec![0.3, 0.8, 1.2]),
        p: file.p.unwrap_or(2.0),
        eps: file.eps,
        bump_radius: file.bump_radius.unwrap_or(0.5),
        degree_cut: file.degree_cut.unwrap_or(20),
    })
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

struct Output {
    csv: String,
    json: serde_json::Value,
    pass: bool,
}

fn execute(cli: &Cli) -> Result<bool> {
    let cfg = resolve(cli)?;
    let model: SymmetricSpaceModel = cfg.model.parse()?;
    let profile = match &cfg.profile {
        Some(p) => Some(load_profile_csv(Path::new(p))?),
        None => None,
    };
    let out = match cli.command {
        Command::Lemma => lemma(&model, &cfg)?,
        Command::Forward => forward(&model, &cfg, profile)?,
        Command::Backward => backward(&model, &cfg, profile)?,
        Command::Norms => norms(&model, &cfg, profile)?,
        Command::FourierCheck => fourier_check(&model, &cfg, profile)?,
        Command::ModelInfo => model_info(&model, &cfg)?,
    };
    let dir = &cli.common.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let name = cli.command.name();
    write(&dir.join("resolved_config.json"), &to_json(&cfg)?)?;
    write(&dir.join(format!("{name}.csv")), &out.csv)?;
    write(&dir.join(format!("{name}.json")), &to_json(&out.json)?)?;
    println!("{name}: {}", if out.pass { "pass" } else { "FAIL" });
    Ok(out.pass)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn diag(model: &SymmetricSpaceModel, c: f64) -> CartanPoint {
    CartanPoint(vec![c; model.rank()])
}

fn rank_one_profile(model: &SymmetricSpaceModel, f: RadialFunction) -> Result<RadialFunction> {
    if f.rank() == model.rank() {
        return Ok(f);
    }
    // A rank-one CSV profile on a product is applied to every factor.
    RadialFunction::tensor(vec![f; model.rank()])
}

fn fourier_quad(cfg: &ResolvedConfig) -> FourierQuadrature {
    FourierQuadrature {
        order: cfg.quad_order,
        ..FourierQuadrature::default()
    }
}

fn backward_quad(cfg: &ResolvedConfig) -> BackwardQuadrature {
    BackwardQuadrature {
        radial: cfg.quad_order,
        ..BackwardQuadrature::default()
    }
}

fn xi_profile(model: &SymmetricSpaceModel, cfg: &ResolvedConfig, profile: Option<RadialFunction>) -> Result<RadialFunction> {
    match profile {
        Some(f) => rank_one_profile(model, f),
        None => unit_mass_bump(model, cfg.bump_radius),
    }
}

fn lemma(model: &SymmetricSpaceModel, cfg: &ResolvedConfig) -> Result<Output> {
    let mut csv = String::from("z,theta,t,error,estimate\n");
    let mut cases = Vec::new();
    let mut pass = true;
    for &z in &cfg.z {
        for &theta in &cfg.theta {
            let x = FlatPoint::radial(model, &diag(model, theta));
            let y = FlatPoint::zero(model.dim());
            let r = lemma_limit_check(model, &diag(model, z), &x, &y, &cfg.t_grid)?;
            for ((t, e), v) in r.t.iter().zip(&r.errors).zip(&r.estimates) {
                let _ = writeln!(csv, "{z},{theta},{t},{e},{v}");
            }
            pass &= r.pass;
            cases.push(json!({"z": z, "theta": theta, "slope": r.slope, "pass": r.pass}));
        }
    }
    Ok(Output {
        csv,
        json: json!({"model": model.name(), "cases": cases, "pass": pass}),
        pass,
    })
}

fn forward(model: &SymmetricSpaceModel, cfg: &ResolvedConfig, profile: Option<RadialFunction>) -> Result<Output> {
    let rank = model.rank() as f64;
    // Symbol and a Lipschitz constant with respect to the Euclidean norm.
    let (symbol, lip, sup): (Arc<dyn Fn(&CartanPoint) -> f64 + Send + Sync>, f64, f64) = match profile {
        None => (
            Arc::new(|z: &CartanPoint| (-z.norm().powi(2)).exp()),
            2f64.sqrt() * (-0.5f64).exp(),
            1.0,
        ),
        Some(f) => {
            let f = rank_one_profile(model, f)?;
            let (lip, sup) = sampled_lipschitz(&f);
            (Arc::new(move |z: &CartanPoint| f.eval_point(z)), lip, sup)
        }
    };
    let s = symbol.clone();
    let mut fam = dilation_family(model, move |z| s(z));
    if let Some(eps) = cfg.eps {
        fam = gaussian_regularize(&fam, eps)?;
    }
    let eps = cfg.eps.unwrap_or(0.0);
    // The regularizer exp(-eps |Z|^2) is Lipschitz with constant sqrt(2 eps) e^{-1/2}.
    let lip_total = lip + sup * (2.0 * eps).sqrt() * (-0.5f64).exp();
    let mut csv = String::from("z,t,error,estimate\n");
    let mut cases = Vec::new();
    let mut pass = true;
    for &z in &cfg.z {
        let zp = diag(model, z);
        let target = symbol(&zp) * (-eps * zp.norm().powi(2)).exp();
        let r = forward_limit_against(model, &fam, &zp, &cfg.t_grid, target, |t| {
            2.0 * lip_total * rank.sqrt() / t
        })?;
        let last_ok = r.errors.last().is_some_and(|&e| e <= cfg.tol);
        for ((t, e), v) in r.t.iter().zip(&r.errors).zip(&r.estimates) {
            let _ = writeln!(csv, "{z},{t},{e},{v}");
        }
        pass &= r.pass && last_ok;
        cases.push(json!({"z": z, "target": target, "max_error": r.max_error(), "pass": r.pass && last_ok}));
    }
    Ok(Output {
        csv,
        json: json!({"model": model.name(), "eps": cfg.eps, "lipschitz": lip_total, "cases": cases, "pass": pass}),
        pass,
    })
}

/// Difference-quotient Lipschitz constant and sup of a profile along its axes.
fn sampled_lipschitz(f: &RadialFunction) -> (f64, f64) {
    let n = 2000;
    let mut lip: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for (axis, &s) in f.support().iter().enumerate() {
        let h = s / n as f64;
        let mut prev = f.eval(&axis_point(f.rank(), axis, 0.0));
        for k in 1..=n {
            let v = f.eval(&axis_point(f.rank(), axis, k as f64 * h));
            lip = lip.max((v - prev).abs() / h);
            sup = sup.max(v.abs());
            prev = v;
        }
    }
    (lip, sup)
}

fn axis_point(rank: usize, axis: usize, v: f64) -> Vec<f64> {
    let mut p = vec![0.0; rank];
    p[axis] = v;
    p
}

fn backward(model: &SymmetricSpaceModel, cfg: &ResolvedConfig, profile: Option<RadialFunction>) -> Result<Output> {
    let xi = xi_profile(model, cfg, profile)?;
    let (bq, fq) = (backward_quad(cfg), fourier_quad(cfg));
    let mut csv = String::from("z,t,error,estimate\n");
    let mut cases = Vec::new();
    let mut pass = true;
    for &z in &cfg.z {
        let r = backward_limit_check(model, &xi, &diag(model, z), &cfg.t_grid, &bq, &fq)?;
        for ((t, e), v) in r.t.iter().zip(&r.errors).zip(&r.estimates) {
            let _ = writeln!(csv, "{z},{t},{e},{v}");
        }
        let ok = if z == 0.0 {
            r.errors.iter().all(|&e| e <= cfg.tol)
        } else {
            r.pass
        };
        pass &= ok;
        cases.push(json!({"z": z, "xi_hat": r.limit_estimate, "slope": r.slope, "pass": ok}));
    }
    Ok(Output {
        csv,
        json: json!({"model": model.name(), "cases": cases, "pass": pass}),
        pass,
    })
}

fn norms(model: &SymmetricSpaceModel, cfg: &ResolvedConfig, profile: Option<RadialFunction>) -> Result<Output> {
    let xi = xi_profile(model, cfg, profile)?;
    let mut ncfg = NormReportConfig {
        z_grid: cfg.z.clone(),
        degree_cut: cfg.degree_cut,
        agreement_tol: cfg.tol,
        backward: backward_quad(cfg),
        ..NormReportConfig::default()
    };
    ncfg.flat.fourier = fourier_quad(cfg);
    let report = transference_norm_report(model, &xi, cfg.p, &cfg.t_grid, &default_trials(), &ncfg)?;
    let mut csv = String::from("side,t,p,kind,value,witness\n");
    let kind = |k| serde_json::to_value(k).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let f = &report.flat;
    let _ = writeln!(
        csv,
        "flat,,{},{},{},{}",
        f.p,
        kind(f.kind),
        f.value,
        f.witness.clone().unwrap_or_default()
    );
    for e in &report.spherical {
        let s = &e.estimate;
        let _ = writeln!(
            csv,
            "spherical,{},{},{},{},{}",
            e.t,
            s.p,
            kind(s.kind),
            s.value,
            s.witness.clone().unwrap_or_default()
        );
    }
    let pass = report.agreement.as_ref().map_or(true, |a| a.pass);
    Ok(Output {
        csv,
        json: serde_json::to_value(&report).map_err(|e| Error::Config(e.to_string()))?,
        pass,
    })
}

fn fourier_check(model: &SymmetricSpaceModel, cfg: &ResolvedConfig, profile: Option<RadialFunction>) -> Result<Output> {
    let quad = fourier_quad(cfg);
    let xi = xi_profile(model, cfg, profile)?;
    let support = xi.support_radius();
    let xs: Vec<CartanPoint> = (0..=50).map(|k| diag(model, support * k as f64 / 50.0)).collect();
    let back = round_trip(model, &xi, &xs, &quad)?;
    let mut csv = String::from("x,value,round_trip,error\n");
    let mut sup_err: f64 = 0.0;
    for (x, b) in xs.iter().zip(&back) {
        let v = xi.eval_point(x);
        let e = (v - b).abs();
        sup_err = sup_err.max(e);
        let _ = writeln!(csv, "{},{v},{b},{e}", x.coords()[0]);
    }
    let g = gaussian(model, 1.0, 9.0)?;
    let mut gauss_err: f64 = 0.0;
    for &z in &cfg.z {
        let zp = diag(model, z);
        let got = fourier_transform(model, &g, &zp, &quad)?;
        gauss_err = gauss_err.max((got - gaussian_transform_exact(model, 1.0, &zp)).abs());
    }
    let pass = sup_err < cfg.tol && gauss_err < 1e-6;
    Ok(Output {
        csv,
        json: json!({
            "model": model.name(),
            "round_trip_sup_error": sup_err,
            "gaussian_sup_error": gauss_err,
            "normalization": normalization(model),
            "pass": pass,
        }),
        pass,
    })
}

fn model_info(model: &SymmetricSpaceModel, cfg: &ResolvedConfig) -> Result<Output> {
    let mut header: Vec<String> = (1..=model.rank()).map(|j| format!("n{j}")).collect();
    header.push("weyl_dim".into());
    let mut csv = header.join(",") + "\n";
    let side = cfg.degree_cut + 1;
    let count = side.pow(model.rank() as u32);
    for mut k in 0..count {
        let mut c = Vec::with_capacity(model.rank());
        for _ in 0..model.rank() {
            c.push(k % side);
            k /= side;
        }
        let w = WeightPoint(c);
        let dim = weyl_dim_exact(model, &w).map_or_else(|| weyl_dim(model, &w).to_string(), |d| d.to_string());
        let row: Vec<String> = w.coords().iter().map(u64::to_string).collect();
        let _ = writeln!(csv, "{},{dim}", row.join(","));
    }
    let limits: Vec<_> = cfg
        .z
        .iter()
        .map(|&z| json!({"z": z, "dim_scaling_limit": dim_scaling_limit(model, &diag(model, z))}))
        .collect();
    Ok(Output {
        csv,
        json: json!({
            "name": model.name(),
            "rank": model.rank(),
            "dim": model.dim(),
            "factors": model.factors(),
            "roots": model.roots().iter().map(|r| json!({
                "functional": r.functional,
                "multiplicity": r.multiplicity,
                "delta_pairings": r.delta_pairings,
            })).collect::<Vec<_>>(),
            "delta": model.delta(),
            "chamber_radius": model.chamber_radius(),
            "calibration": model.calibration(),
            "normalization": normalization(model),
            "dim_scaling": limits,
        }),
        pass: true,
    })
}
