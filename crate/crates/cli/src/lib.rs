//! `srl` command-line driver.
//!
//! Every run writes a header echoing the fully resolved configuration
//! (`# key = value` lines for CSV, a `config` object for JSON) followed by
//! the result. Exit codes: `0` success, `1` validation failure, `2`
//! numerical non-convergence, `64` usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use srl_core::forms::{weyl_bound, weyl_residual, QuadratureGrid, SmoothBump};
use srl_core::lanczos::{eigen_count_below, lanczos_lowest, CountBudget};
use srl_core::potential::{grad_norm_sq, potential_bounds, sub_laplacian_norm};
use srl_core::spectral::{assemble_operator, Grid3};
use srl_core::sublevel::{scaling_fit, thinness_integral, SublevelSpec, ThinnessParams};
use srl_core::suite::{run_suite, SuiteSizes};
use srl_core::{
    estimate_gamma, kaplan_norm, make_heisenberg, potential_value, verify_metivier, Error, GroupPoint,
    MetivierStructure,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "srl", version, about = "Weighted sub-Laplacians on Métivier groups")]
pub struct Cli {
    /// `heisenberg` or a path to a structure JSON file.
    #[arg(long, global = true, default_value = "heisenberg")]
    pub structure: String,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Samples used to estimate the Métivier constants of non-H-type structures.
    #[arg(long, global = true, default_value_t = 1000)]
    pub metivier_samples: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the bundled invariant suite.
    Verify(VerifyArgs),
    /// Evaluate the potential and its sandwich bounds.
    Potential(PotentialArgs),
    /// Estimate the quasi-triangle constant.
    Gamma(GammaArgs),
    /// Residuals of central Weyl quasi-modes.
    Weyl(WeylArgs),
    /// Lowest Dirichlet eigenvalues of the discretized Schrödinger operator.
    Spectrum(SpectrumArgs),
    /// Thinness integral of a sublevel set, or the scaling of ball intersections.
    Thinness(ThinnessArgs),
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1_000)]
    pub jacobian_samples: usize,
    #[arg(long, default_value_t = 100)]
    pub formula_points: usize,
    #[arg(long, default_value_t = 10_000)]
    pub potential_points: usize,
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Comma-separated coordinates `x_1,...,x_2n,t_1,...,t_m`; repeatable.
    #[arg(long = "point", value_delimiter = ';')]
    pub points: Vec<String>,
    /// Nodes per axis of a midpoint grid, used when no points are given.
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 2.0)]
    pub x_half: f64,
    #[arg(long, default_value_t = 2.0)]
    pub t_half: f64,
}

#[derive(Args, Debug)]
pub struct GammaArgs {
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct WeylArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2)]
    pub n_min: i64,
    #[arg(long, default_value_t = 64)]
    pub n_max: i64,
    /// Only powers of two in `[n_min, n_max]`.
    #[arg(long)]
    pub dyadic: bool,
    /// Defaults to `1 + max(0, -floor of the lower bound)`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Quadrature nodes per axis; defaults to 48 for alpha <= 2 and 64 otherwise.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Bump radii; default `(1, 1)` for alpha <= 2 and `(3.5, 1)` otherwise.
    #[arg(long)]
    pub x_radius: Option<f64>,
    #[arg(long)]
    pub t_radius: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub sup_samples: usize,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.0)]
    pub lx: f64,
    #[arg(long, default_value_t = 8.0)]
    pub lt: f64,
    #[arg(long, default_value_t = 24)]
    pub nx: usize,
    #[arg(long, default_value_t = 24)]
    pub nt: usize,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Count eigenvalues below this level instead of listing the lowest `k`.
    #[arg(long)]
    pub count_below: Option<f64>,
    /// Largest `k` tried when counting.
    #[arg(long, default_value_t = 50)]
    pub k_max: usize,
}

#[derive(Args, Debug)]
pub struct ThinnessArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "m-level", allow_hyphen_values = true)]
    pub m_level: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 2.0)]
    pub ell: f64,
    #[arg(long, default_value_t = 64.0)]
    pub truncation: f64,
    #[arg(long, default_value_t = 100_000)]
    pub outer: usize,
    #[arg(long, default_value_t = 10_000)]
    pub inner: usize,
    /// Fit the decay of `|Omega ∩ B((0.5 e_1, t u_1), r)|` in `t` instead.
    #[arg(long)]
    pub scaling: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [64.0, 128.0, 256.0, 512.0])]
    pub t_values: Vec<f64>,
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
}

/// Failure of a run, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    NotConverged(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotConverged { .. } => Failure::NotConverged(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Resolved configuration, echoed in every output.
struct Config(Vec<(&'static str, Value)>);

impl Config {
    fn push(&mut self, key: &'static str, v: impl Serialize) {
        self.0.push((key, serde_json::to_value(v).expect("serializable config value")));
    }

    fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<Map<_, _>>())
    }

    fn write_csv_header(&self, out: &mut String, command: &str) {
        out.push_str(&format!("# srl {command}\n"));
        for (k, v) in &self.0 {
            out.push_str(&format!("# {k} = {v}\n"));
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn load_structure(spec: &str) -> Outcome<MetivierStructure> {
    if spec == "heisenberg" {
        return Ok(make_heisenberg());
    }
    let text = fs::read_to_string(spec).map_err(|e| Failure::Invalid(format!("cannot read structure `{spec}`: {e}")))?;
    Ok(MetivierStructure::from_json_str(&text)?)
}

fn configure_threads() {
    if let Some(n) = std::env::var("SRL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// results to `out` unless `--output` is given.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok((text, code)) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, text.as_bytes()),
                None => out.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INVALID
                }
            }
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NOT_CONVERGED
        }
    }
}

fn base_config(cli: &Cli, s: &MetivierStructure, format: Format) -> Config {
    let mut c = Config(Vec::new());
    c.push("structure", &cli.structure);
    c.push("n", s.n());
    c.push("m", s.m());
    c.push("h_type", s.is_h_type());
    c.push("seed", cli.seed);
    c.push("format", format);
    c
}

fn finish(command: &str, cfg: &Config, format: Format, json_result: Value, csv_body: String) -> String {
    match format {
        Format::Json => {
            let doc = json!({ "command": command, "config": cfg.to_json(), "result": json_result });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable output");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            cfg.write_csv_header(&mut s, command);
            s.push_str(&csv_body);
            s
        }
    }
}

fn execute(cli: &Cli) -> Outcome<(String, i32)> {
    let s = load_structure(&cli.structure)?;
    match &cli.command {
        Command::Verify(a) => verify(cli, &s, a),
        Command::Potential(a) => potential(cli, &s, a).map(|t| (t, EXIT_OK)),
        Command::Gamma(a) => gamma(cli, &s, a).map(|t| (t, EXIT_OK)),
        Command::Weyl(a) => weyl(cli, &s, a).map(|t| (t, EXIT_OK)),
        Command::Spectrum(a) => spectrum(cli, &s, a).map(|t| (t, EXIT_OK)),
        Command::Thinness(a) => thinness(cli, &s, a).map(|t| (t, EXIT_OK)),
    }
}

fn verify(cli: &Cli, s: &MetivierStructure, a: &VerifyArgs) -> Outcome<(String, i32)> {
    let format = cli.format.unwrap_or(Format::Csv);
    let sizes = SuiteSizes {
        group_samples: a.samples,
        jacobian_samples: a.jacobian_samples,
        formula_points: a.formula_points,
        potential_points: a.potential_points,
    };
    let mut cfg = base_config(cli, s, format);
    cfg.push("sizes", sizes);
    let rep = run_suite(s, &sizes, cli.seed)?;
    let mut csv = String::from("check,points,value,lo,hi,passed\n");
    for c in &rep.checks {
        csv.push_str(&format!("{},{},{},{},{},{}\n", c.name, c.points, num(c.value), num(c.lo), num(c.hi), c.passed));
    }
    let code = if rep.passed() { EXIT_OK } else { EXIT_INVALID };
    Ok((finish("verify", &cfg, format, serde_json::to_value(&rep).expect("report"), csv), code))
}

fn parse_point(s: &MetivierStructure, text: &str) -> Outcome<GroupPoint> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Failure::Invalid(format!("bad coordinate `{v}`: {e}"))))
        .collect::<Outcome<_>>()?;
    let d = s.dim_x();
    if vals.len() != d + s.m() {
        return Err(Failure::Invalid(format!("point `{text}` has {} coordinates, expected {}", vals.len(), d + s.m())));
    }
    Ok(GroupPoint::new(&vals[..d], &vals[d..]))
}

fn grid_points(s: &MetivierStructure, n: usize, x_half: f64, t_half: f64) -> Outcome<Vec<GroupPoint>> {
    if n == 0 || !(x_half > 0.0 && t_half > 0.0) {
        return Err(Failure::Invalid("grid needs at least one node and positive half-widths".into()));
    }
    let dims = s.dim_x() + s.m();
    let total = n.pow(dims as u32);
    let coord = |half: f64, i: usize| -half + (i as f64 + 0.5) * 2.0 * half / n as f64;
    Ok((0..total)
        .map(|mut idx| {
            let mut c = vec![0.0; dims];
            for a in (0..dims).rev() {
                let half = if a < s.dim_x() { x_half } else { t_half };
                c[a] = coord(half, idx % n);
                idx /= n;
            }
            GroupPoint::new(&c[..s.dim_x()], &c[s.dim_x()..])
        })
        .collect())
}

fn potential(cli: &Cli, s: &MetivierStructure, a: &PotentialArgs) -> Outcome<String> {
    let format = cli.format.unwrap_or(Format::Csv);
    let points = if a.points.is_empty() {
        grid_points(s, a.grid, a.x_half, a.t_half)?
    } else {
        a.points.iter().map(|p| parse_point(s, p)).collect::<Outcome<_>>()?
    };
    let est = verify_metivier(s, cli.metivier_samples, cli.seed)?;
    let k = potential_bounds(a.alpha, &est, s)?;
    let mut cfg = base_config(cli, s, format);
    cfg.push("alpha", a.alpha);
    cfg.push("points", points.len());
    cfg.push("metivier", est);
    cfg.push("constants", k);
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        rows.push((
            p,
            kaplan_norm(s, p),
            grad_norm_sq(s, p)?,
            sub_laplacian_norm(s, p)?,
            potential_value(a.alpha, s, p)?,
            k.lower_bound(s, p),
            k.upper_bound(s, p),
        ));
    }
    let names: Vec<String> = (1..=s.dim_x())
        .map(|i| format!("x{i}"))
        .chain((1..=s.m()).map(|i| format!("t{i}")))
        .chain(["N", "grad_norm_sq", "LN", "V_alpha", "lower_bound", "upper_bound"].map(String::from))
        .collect();
    let mut csv = names.join(",");
    csv.push('\n');
    let mut json_rows = Vec::with_capacity(rows.len());
    for (p, n, g, l, v, lo, hi) in &rows {
        let coords: Vec<f64> = p.x.iter().chain(&p.t).copied().collect();
        let vals: Vec<f64> = coords.iter().copied().chain([*n, *g, *l, *v, *lo, *hi]).collect();
        csv.push_str(&vals.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
        csv.push('\n');
        json_rows.push(json!({
            "x": p.x.to_vec(), "t": p.t.to_vec(), "N": n, "grad_norm_sq": g, "LN": l,
            "V_alpha": v, "lower_bound": lo, "upper_bound": hi,
        }));
    }
    Ok(finish("potential", &cfg, format, Value::Array(json_rows), csv))
}

fn gamma(cli: &Cli, s: &MetivierStructure, a: &GammaArgs) -> Outcome<String> {
    let format = cli.format.unwrap_or(Format::Json);
    let g = estimate_gamma(s, a.samples, cli.seed)?;
    let mut cfg = base_config(cli, s, format);
    cfg.push("samples", a.samples);
    let note = "empirical lower bound for the quasi-triangle constant";
    let csv = format!("# note = {note}\ngamma_hat,samples\n{},{}\n", num(g.gamma_hat), g.samples);
    let mut v = serde_json::to_value(g).expect("gamma");
    v["note"] = json!(note);
    Ok(finish("gamma", &cfg, format, v, csv))
}

fn weyl(cli: &Cli, s: &MetivierStructure, a: &WeylArgs) -> Outcome<String> {
    let format = cli.format.unwrap_or(Format::Csv);
    if a.n_min < 2 || a.n_max < a.n_min {
        return Err(Failure::Invalid(format!("need 2 <= n-min <= n-max, got {}..{}", a.n_min, a.n_max)));
    }
    let est = verify_metivier(s, cli.metivier_samples, cli.seed)?;
    let k = potential_bounds(a.alpha, &est, s)?;
    let lambda = a.lambda.unwrap_or_else(|| 1.0 + k.analytic_floor().map(|f| (-f).max(0.0)).unwrap_or(0.0));
    let wide = a.alpha > 2.0;
    let psi = SmoothBump::new(
        a.x_radius.unwrap_or(if wide { 3.5 } else { 1.0 }),
        a.t_radius.unwrap_or(1.0),
    )?;
    let nodes = a.grid.unwrap_or(if wide { 64 } else { 48 });
    let grid = QuadratureGrid::around(s, &psi, nodes, nodes)?;
    let bound = weyl_bound(a.alpha, s, psi, lambda, &grid, a.sup_samples, cli.seed)?;
    let ns: Vec<i64> = (a.n_min..=a.n_max).filter(|n| !a.dyadic || (*n as u64).is_power_of_two()).collect();
    let records = ns.iter().map(|n| weyl_residual(a.alpha, s, psi, *n, lambda, &grid)).collect::<Result<Vec<_>, _>>()?;

    let mut cfg = base_config(cli, s, format);
    cfg.push("alpha", a.alpha);
    cfg.push("lambda", lambda);
    cfg.push("lambda_source", if a.lambda.is_some() { "flag" } else { "auto" });
    cfg.push("psi", psi);
    cfg.push("grid", nodes);
    cfg.push("n_min", a.n_min);
    cfg.push("n_max", a.n_max);
    cfg.push("dyadic", a.dyadic);
    cfg.push("sup_samples", a.sup_samples);
    cfg.push("v_sup", bound.v_sup);
    cfg.push("l_psi_norm", bound.l_psi_norm);
    let mut csv = String::from("n,residual,bound,psi_norm,overlap_check\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n_index,
            num(r.residual),
            num(bound.bound),
            num(r.psi_norm),
            num(r.overlap_check)
        ));
    }
    let v = json!({ "bound": bound, "records": records });
    Ok(finish("weyl", &cfg, format, v, csv))
}

fn spectrum(cli: &Cli, s: &MetivierStructure, a: &SpectrumArgs) -> Outcome<String> {
    let format = cli.format.unwrap_or(Format::Json);
    let grid = Grid3::new(a.lx, a.lt, a.nx, a.nt)?;
    let h = assemble_operator(a.alpha, s, &grid)?;
    let mut cfg = base_config(cli, s, format);
    cfg.push("alpha", a.alpha);
    cfg.push("grid", grid);
    cfg.push("dimension", h.dim());
    cfg.push("tol", a.tol);
    cfg.push("max_iter", a.max_iter);
    if let Some(lambda) = a.count_below {
        cfg.push("count_below", lambda);
        cfg.push("k_max", a.k_max);
        let c = eigen_count_below(&h, lambda, &CountBudget { k_max: a.k_max, tol: a.tol, max_iter: a.max_iter, seed: cli.seed })?;
        let mut csv = format!("# count = {}\n# lower_bound = {}\nindex,eigenvalue\n", c.count, c.lower_bound);
        for (i, v) in c.eigenvalues.iter().enumerate() {
            csv.push_str(&format!("{i},{}\n", num(*v)));
        }
        return Ok(finish("spectrum", &cfg, format, serde_json::to_value(&c).expect("count"), csv));
    }
    cfg.push("k", a.k);
    let res = lanczos_lowest(&h, a.k, a.tol, a.max_iter, cli.seed)?;
    let mut csv = String::from("index,eigenvalue,residual\n");
    for (i, (v, r)) in res.eigenvalues.iter().zip(&res.residuals).enumerate() {
        csv.push_str(&format!("{i},{},{}\n", num(*v), num(*r)));
    }
    let v = json!({
        "grid": grid,
        "eigenvalues": res.eigenvalues,
        "residuals": res.residuals,
        "iterations": res.iterations,
    });
    Ok(finish("spectrum", &cfg, format, v, csv))
}

fn thinness(cli: &Cli, s: &MetivierStructure, a: &ThinnessArgs) -> Outcome<String> {
    let format = cli.format.unwrap_or(Format::Json);
    let spec = SublevelSpec::new(a.alpha, a.m_level)?;
    let est = verify_metivier(s, cli.metivier_samples, cli.seed)?;
    let mut cfg = base_config(cli, s, format);
    cfg.push("alpha", a.alpha);
    cfg.push("M", a.m_level);
    cfg.push("r", a.r);
    cfg.push("metivier", est);
    if a.scaling {
        cfg.push("t_values", &a.t_values);
        cfg.push("samples", a.samples);
        let fit = scaling_fit(&spec, s, &est, a.r, &a.t_values, a.samples, cli.seed)?;
        cfg.push("threshold_k", fit.threshold_k);
        let mut csv = format!(
            "# slope = {}\n# slope_ci = [{}, {}]\n# expected_slope = {}\nt,volume,std_error,hits,samples\n",
            num(fit.slope),
            num(fit.slope_ci.0),
            num(fit.slope_ci.1),
            num(fit.expected_slope)
        );
        for p in &fit.points {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                num(p.t),
                num(p.volume.value),
                num(p.volume.std_error),
                p.volume.hits,
                p.volume.samples
            ));
        }
        return Ok(finish("thinness", &cfg, format, serde_json::to_value(&fit).expect("fit"), csv));
    }
    let params = ThinnessParams {
        r: a.r,
        ell: a.ell,
        truncation_t: a.truncation,
        outer_samples: a.outer,
        inner_samples: a.inner,
        seed: cli.seed,
    };
    cfg.push("ell", a.ell);
    cfg.push("truncation_T", a.truncation);
    cfg.push("outer", a.outer);
    cfg.push("inner", a.inner);
    let t = thinness_integral(&spec, s, &est, &params)?;
    cfg.push("threshold_k", t.threshold_k);
    let tail = t.tail_bound.map(num).unwrap_or_else(|| "inf".into());
    let csv = format!(
        "value,std_error,tail_bound,tail_finite,ell_threshold,threshold_k,cylinder_radius,gamma_hat,outer_hits\n{},{},{},{},{},{},{},{},{}\n",
        num(t.value),
        num(t.std_error),
        tail,
        t.tail_finite,
        num(t.ell_threshold),
        num(t.threshold_k),
        num(t.cylinder_radius),
        num(t.gamma_hat),
        t.outer_hits
    );
    Ok(finish("thinness", &cfg, format, serde_json::to_value(&t).expect("thinness"), csv))
}
