//! Command-line front end: `solve`, `asym`, `compare` and `mc`.
//!
//! Every subcommand writes its CSV files plus `manifest.json` into `--out`.
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{regular_expansion, singular_expansion, Case4Formula, Composition, RegularOptions, SingularOptions};
use crate::config::{parse_problem, problem_to_text};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::model::{classify, EscapeProblem};
use crate::montecarlo::{estimate_escape, trace_path, MCConfig};
use crate::solver::solve_escape_probability;
use crate::stable::{LevyMeasure, StabilityIndex};

#[derive(Debug, Parser)]
#[command(name = "escape", version, about = "Escape probabilities under small stable Levy noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Numerical p(x) on a uniform grid.
    Solve(SolveArgs),
    /// Asymptotic p(x) and its metadata.
    Asym(AsymArgs),
    /// Numerical against asymptotic p over a sweep of alpha and epsilon.
    Compare(CompareArgs),
    /// Monte Carlo estimates of p(x0).
    Mc(McArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file (`key = value` lines).
    #[arg(long)]
    pub problem: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Override epsilon.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub eps: Vec<f64>,
    /// Override alpha.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Interior grid nodes.
    #[arg(long, default_value_t = 401)]
    pub grid_n: usize,
}

#[derive(Debug, Args)]
pub struct AsymArgs {
    #[command(flatten)]
    pub common: Common,
    /// Evaluation nodes (the solver grid of the same size).
    #[arg(long, default_value_t = 401)]
    pub grid_n: usize,
    /// Impose p1 = 0 at both ends instead of the exterior values.
    #[arg(long)]
    pub corrected_p1_boundary: bool,
    /// Solve the layer equations numerically even when an explicit profile exists.
    #[arg(long)]
    pub numeric_layers: bool,
    /// Use the half-line finite-part formula for the interior constant.
    #[arg(long)]
    pub printed_constant: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 401)]
    pub grid_n: usize,
    #[arg(long)]
    pub corrected_p1_boundary: bool,
    /// Reuse an `x,p` CSV written by `solve` instead of solving (single alpha and epsilon only).
    #[arg(long)]
    pub numerical: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub common: Common,
    /// Starting points.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub x0: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Horizon; 50 transit times when omitted.
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub antithetic: bool,
    /// Only check the boundary at step ends.
    #[arg(long)]
    pub no_bridge: bool,
    /// Write (t, x) traces of the first K paths of each starting point.
    #[arg(long, default_value_t = 0)]
    pub traces: usize,
}

/// Everything needed to reproduce the CSV files of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub problem_file: String,
    /// Problem after overrides, in problem-file syntax.
    pub problem: String,
    pub parameters: Value,
    pub output_dir: String,
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::config(None, msg)
}

fn load_problem(path: &Path) -> Result<EscapeProblem> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

fn with_overrides(p: &EscapeProblem, alpha: Option<f64>, eps: Option<f64>) -> Result<EscapeProblem> {
    let mut p = p.clone();
    if let Some(a) = alpha {
        let idx = StabilityIndex::new(a).map_err(|e| config_err(format!("--alpha: {e}")))?;
        p = p.with_alpha(idx).map_err(|e| config_err(format!("--alpha: {e}")))?;
    }
    if let Some(e) = eps {
        p = p.with_epsilon(e).map_err(|err| config_err(format!("--eps: {err}")))?;
    }
    Ok(p)
}

fn single(list: &[f64], flag: &str) -> Result<Option<f64>> {
    match list {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => Err(config_err(format!("{flag} takes a single value for this subcommand"))),
    }
}

fn single_problem(c: &Common) -> Result<EscapeProblem> {
    with_overrides(&load_problem(&c.problem)?, single(&c.alpha, "--alpha")?, single(&c.eps, "--eps")?)
}

fn check_grid(n: usize) -> Result<()> {
    if n < 3 {
        return Err(config_err(format!("--grid-n must be at least 3, got {n}")));
    }
    Ok(())
}

/// Write via a temporary file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Run<'a> {
    common: &'a Common,
    subcommand: &'static str,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    fn new(common: &'a Common, subcommand: &'static str) -> Result<Self> {
        fs::create_dir_all(&common.out)?;
        Ok(Run { common, subcommand, outputs: Vec::new() })
    }

    fn write(&mut self, rel: &str, contents: &[u8]) -> Result<()> {
        let path = self.common.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        write_atomic(&path, contents)?;
        self.outputs.push(rel.to_string());
        Ok(())
    }

    fn finish(self, problem: &EscapeProblem, parameters: Value, seed: Option<u64>) -> Result<()> {
        let timestamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: self.subcommand.to_string(),
            problem_file: self.common.problem.display().to_string(),
            problem: problem_to_text(problem),
            parameters,
            output_dir: self.common.out.display().to_string(),
            seed,
            timestamp,
            outputs: self.outputs,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        write_atomic(&self.common.out.join("manifest.json"), text.as_bytes())
    }
}

fn measure_json(m: &LevyMeasure) -> Value {
    match m {
        LevyMeasure::FullPowerLaw { alpha } => json!({ "kind": "full", "alpha": alpha.value() }),
        LevyMeasure::TruncatedPowerLaw { alpha, kappa } => json!({ "kind": "truncated", "alpha": alpha.value(), "kappa": kappa }),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Result<()> {
    check_grid(args.grid_n)?;
    let problem = single_problem(&args.common)?;
    let (grid, report) = solve_escape_probability(&problem, args.grid_n)?;
    let mut run = Run::new(&args.common, "solve")?;
    run.write("solution.csv", grid.to_csv_string().as_bytes())?;
    let params = json!({
        "grid_n": args.grid_n,
        "drift_scheme": report.drift_scheme.name(),
        "upwind_fallback": report.upwind_fallback,
        "condition_estimate": report.condition_estimate,
        "residual_inf_norm": report.residual_inf_norm,
    });
    run.finish(&problem, params, None)
}

/// Asymptotic p at the interior solver nodes and the metadata describing it.
#[allow(clippy::large_enum_variant)]
enum Asymptotic {
    Regular(crate::asymptotics::RegularExpansion),
    Singular(crate::asymptotics::SingularExpansion),
}

impl Asymptotic {
    fn build(problem: &EscapeProblem, corrected: bool, numeric_layers: bool, formula: Case4Formula) -> Result<Self> {
        if !problem.diffusion().is_zero() {
            let opts = RegularOptions { corrected_p1_boundary: corrected, ..Default::default() };
            return Ok(Asymptotic::Regular(regular_expansion(problem, &opts)?));
        }
        let case = classify(problem)?;
        let mut opts = SingularOptions { numeric_layers, ..Default::default() };
        opts.case4.formula = formula;
        Ok(Asymptotic::Singular(singular_expansion(problem, &case, &opts)?))
    }

    fn values(&self, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Asymptotic::Regular(r) => r.evaluate_many(xs),
            Asymptotic::Singular(s) => Ok(xs.iter().map(|&x| s.evaluate(x)).collect()),
        }
    }

    fn metadata(&self, problem: &EscapeProblem, corrected: bool) -> Value {
        let base = json!({
            "epsilon": problem.epsilon(),
            "alpha": problem.alpha().value(),
            "measure": measure_json(problem.measure()),
        });
        let mut v = match self {
            Asymptotic::Regular(_) => json!({
                "case": "regular",
                "beta": Value::Null,
                "gamma": Value::Null,
                "constant": Value::Null,
                "corrected_p1_boundary": corrected,
            }),
            Asymptotic::Singular(s) => {
                let layer_profile = match &s.composition {
                    Composition::Left(f) | Composition::Right(f) | Composition::Internal(f) => profile_kind(f),
                    Composition::Balanced { left, .. } => profile_kind(left),
                };
                json!({
                    "case": s.case.name(),
                    "x_bar": s.case.equilibrium(),
                    "beta": s.beta,
                    "gamma": s.gamma,
                    "constant": s.interior_constant(),
                    "constant_details": s.constant.as_ref().map(|c| json!({
                        "formula": c.formula.name(),
                        "epsilons": c.epsilons,
                        "balanced": c.balanced,
                        "printed": c.printed,
                        "balanced_extrapolated": c.balanced_extrapolated,
                        "printed_extrapolated": c.printed_extrapolated,
                    })),
                    "layer_measure": measure_json(problem.measure()),
                    "layer_profile": layer_profile,
                })
            }
        };
        if let (Value::Object(m), Value::Object(b)) = (&mut v, base) {
            m.extend(b);
        }
        v
    }
}

fn profile_kind(f: &crate::layer::LayerFunction) -> &'static str {
    match f.profile {
        crate::layer::LayerProfile::Exponential { .. } => "explicit",
        crate::layer::LayerProfile::Numeric(_) => "numeric",
    }
}

fn interior_nodes(problem: &EscapeProblem, n: usize) -> Vec<f64> {
    let (a, b) = problem.domain();
    (1..=n).map(|i| a + i as f64 * (b - a) / (n + 1) as f64).collect()
}

pub fn cmd_asym(args: &AsymArgs) -> Result<()> {
    check_grid(args.grid_n)?;
    let problem = single_problem(&args.common)?;
    let formula = if args.printed_constant { Case4Formula::Printed } else { Case4Formula::Balanced };
    let asym = Asymptotic::build(&problem, args.corrected_p1_boundary, args.numeric_layers, formula)?;
    let xs = interior_nodes(&problem, args.grid_n);
    let (a, b) = problem.domain();
    let (l, r) = problem.exterior_values();
    let grid = GridFunction::new(a, b, asym.values(&xs)?, l, r)?;
    let meta = asym.metadata(&problem, args.corrected_p1_boundary);
    let mut run = Run::new(&args.common, "asym")?;
    run.write("asymptotic.csv", grid.to_csv_string().as_bytes())?;
    run.write("metadata.json", serde_json::to_string_pretty(&meta).expect("json").as_bytes())?;
    let params = json!({
        "grid_n": args.grid_n,
        "corrected_p1_boundary": args.corrected_p1_boundary,
        "numeric_layers": args.numeric_layers,
        "constant_formula": formula.name(),
    });
    run.finish(&problem, params, None)
}

/// One (α, ε) cell of a comparison sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareCell {
    pub alpha: f64,
    pub epsilon: f64,
    pub xs: Vec<f64>,
    pub p_num: Vec<f64>,
    pub p_asym: Vec<f64>,
}

impl CompareCell {
    pub fn sup_diff(&self) -> f64 {
        self.p_num.iter().zip(&self.p_asym).fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }
}

/// Numerical and asymptotic p on the interior nodes for every (α, ε), α outer.
///
/// For diffusive problems p0 and p1 are computed once per α and combined for each ε.
pub fn compare_sweep(base: &EscapeProblem, alphas: &[f64], epsilons: &[f64], n: usize, corrected: bool) -> Result<Vec<CompareCell>> {
    let per_alpha = alphas
        .par_iter()
        .map(|&alpha| -> Result<Vec<CompareCell>> {
            let at_alpha = with_overrides(base, Some(alpha), None)?;
            let xs = interior_nodes(&at_alpha, n);
            let regular = if at_alpha.diffusion().is_zero() {
                None
            } else {
                let opts = RegularOptions { corrected_p1_boundary: corrected, ..Default::default() };
                let exp = regular_expansion(&at_alpha, &opts)?;
                let p1 = xs.par_iter().map(|&x| exp.p1.eval(x)).collect::<Result<Vec<_>>>()?;
                let p0: Vec<f64> = xs.iter().map(|&x| exp.p0.eval(x)).collect();
                Some((p0, p1))
            };
            epsilons
                .par_iter()
                .map(|&eps| {
                    let p = with_overrides(&at_alpha, None, Some(eps))?;
                    let (grid, _) = solve_escape_probability(&p, n)?;
                    let p_asym = match &regular {
                        Some((p0, p1)) => {
                            let w = eps.powf(alpha);
                            p0.iter().zip(p1).map(|(a, b)| a + w * b).collect()
                        }
                        None => Asymptotic::build(&p, corrected, false, Case4Formula::Balanced)?.values(&xs)?,
                    };
                    Ok(CompareCell { alpha, epsilon: eps, xs: xs.clone(), p_num: grid.values().to_vec(), p_asym })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_alpha.into_iter().flatten().collect())
}

pub fn compare_csv(cells: &[CompareCell]) -> String {
    let mut s = String::from("alpha,epsilon,x,p_num,p_asym,abs_diff\n");
    for c in cells {
        for ((x, n), a) in c.xs.iter().zip(&c.p_num).zip(&c.p_asym) {
            s.push_str(&format!("{},{},{},{},{},{}\n", c.alpha, c.epsilon, x, n, a, (n - a).abs()));
        }
    }
    s
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    check_grid(args.grid_n)?;
    let base = load_problem(&args.common.problem)?;
    let alphas = if args.common.alpha.is_empty() { vec![base.alpha().value()] } else { args.common.alpha.clone() };
    let epsilons = if args.common.eps.is_empty() { vec![base.epsilon()] } else { args.common.eps.clone() };
    let cells = match &args.numerical {
        None => compare_sweep(&base, &alphas, &epsilons, args.grid_n, args.corrected_p1_boundary)?,
        Some(path) => {
            if alphas.len() != 1 || epsilons.len() != 1 {
                return Err(config_err("--numerical needs a single --alpha and --eps"));
            }
            let p = with_overrides(&base, Some(alphas[0]), Some(epsilons[0]))?;
            let file = fs::File::open(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
            let grid = GridFunction::read_csv(std::io::BufReader::new(file))?;
            if (grid.a(), grid.b()) != p.domain() {
                return Err(config_err("numerical CSV does not cover the problem domain"));
            }
            let xs = grid.nodes();
            let p_asym = Asymptotic::build(&p, args.corrected_p1_boundary, false, Case4Formula::Balanced)?.values(&xs)?;
            vec![CompareCell { alpha: alphas[0], epsilon: epsilons[0], xs, p_num: grid.values().to_vec(), p_asym }]
        }
    };
    let mut summary = String::from("alpha,epsilon,sup_abs_diff\n");
    for c in &cells {
        summary.push_str(&format!("{},{},{}\n", c.alpha, c.epsilon, c.sup_diff()));
    }
    let problem = base.clone();
    let mut run = Run::new(&args.common, "compare")?;
    run.write("compare.csv", compare_csv(&cells).as_bytes())?;
    run.write("compare_summary.csv", summary.as_bytes())?;
    print!("{summary}");
    let params = json!({
        "grid_n": args.grid_n,
        "alpha": alphas,
        "epsilon": epsilons,
        "corrected_p1_boundary": args.corrected_p1_boundary,
        "numerical": args.numerical.as_ref().map(|p| p.display().to_string()),
    });
    run.finish(&problem, params, None)
}

pub fn cmd_mc(args: &McArgs) -> Result<()> {
    let problem = single_problem(&args.common)?;
    let cfg = MCConfig {
        n_paths: args.paths,
        dt: args.dt,
        t_max: args.tmax,
        seed: args.seed,
        antithetic: args.antithetic,
        brownian_bridge: !args.no_bridge,
        ..Default::default()
    };
    cfg.validate(&problem).map_err(|e| config_err(e.to_string()))?;
    let (a, b) = problem.domain();
    if let Some(x) = args.x0.iter().find(|&&x| !(x > a && x < b)) {
        return Err(config_err(format!("--x0 {x} is outside ({a}, {b})")));
    }
    let mut csv = String::from("x0,p_hat,std_err,n_censored\n");
    let mut run = Run::new(&args.common, "mc")?;
    for (i, &x0) in args.x0.iter().enumerate() {
        let e = estimate_escape(&problem, x0, &cfg)?;
        csv.push_str(&format!("{},{},{},{}\n", x0, e.p_hat, e.std_err, e.n_censored));
        for k in 0..args.traces.min(args.paths) {
            let (_, tr) = trace_path(&problem, x0, &cfg, k)?;
            let mut t = String::from("t,x\n");
            for (s, x) in tr {
                t.push_str(&format!("{s},{x}\n"));
            }
            run.write(&format!("traces/x0_{i}_path_{k}.csv"), t.as_bytes())?;
        }
    }
    run.write("mc.csv", csv.as_bytes())?;
    let params = json!({
        "x0": args.x0,
        "paths": args.paths,
        "dt": args.dt,
        "tmax": args.tmax,
        "antithetic": args.antithetic,
        "brownian_bridge": !args.no_bridge,
        "small_jump_cutoff": cfg.small_jump_cutoff,
        "traces": args.traces,
    });
    run.finish(&problem, params, Some(args.seed))
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Asym(a) => cmd_asym(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Mc(a) => cmd_mc(a),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_configuration() {
        2
    } else {
        1
    }
}

/// Parse `args`, run, report errors on stderr and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
