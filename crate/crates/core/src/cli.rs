//! Command-line front end. Machine output (JSON/CSV) goes to stdout or
//! `--out`; human-readable summaries go to stderr.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid configuration,
//! 3 uncertified kernel family (`check`), 4 stability assertion failed
//! (`solve`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{check_conditions_scoped, pd_oracle, Classification, ConditionReport, PdVerdict, WeakC4Scope};
use crate::doc_dcc::{dcc_from_doc, doc_recursive, verify_identities, Tolerance};
use crate::io::{write_kinded_csv, write_snapshots_csv, write_trace_csv, write_triangle_csv};
use crate::kernels::{
    constant_kernels, l1_kernels, l1plus_kernels, rl_midpoint_kernels, volterra_kernels, weight_average_kernels,
    KernelFamily, VolterraKernel,
};
use crate::mesh::TimeMesh;
use crate::solvers::{
    allen_cahn_solve, frac_wave_solve, increment_form, volterra_solve, AllenCahnParams, GridFunction, SolverTrace,
    SpatialGrid1D,
};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNCERTIFIED: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;

const DEFAULT_MESH: &str = "graded:T=1,N=40,r=2";

#[derive(Debug, Parser)]
#[command(name = "convopd", version, about = "Discrete convolution kernels: DOC/DCC kernels, positive-definiteness checks, stability solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a time mesh as JSON {"t": [...]}.
    Mesh {
        #[arg(long, default_value = DEFAULT_MESH)]
        mesh: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a kernel triangle (optionally with DOC/DCC kernels) as CSV.
    Kernels {
        #[command(flatten)]
        family: FamilyArgs,
        /// Comma-separated subset of a,theta,p.
        #[arg(long, default_value = "a")]
        emit: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate C1-C4, the semidefinite variants and the weakened C4, plus the eigenvalue oracle.
    Check {
        #[command(flatten)]
        family: FamilyArgs,
        /// Impose the weakened C4 at every level instead of the final one.
        #[arg(long)]
        weak_c4_all_levels: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a time integrator and write its trace as CSV.
    Solve {
        #[arg(value_enum)]
        problem: Problem,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// uniform:T=,N= | graded:T=,N=,r= | random:T=,N=,low=,high=,seed= | file:PATH
    #[arg(long, default_value = DEFAULT_MESH)]
    pub mesh: String,
    /// l1:alpha= | l1plus:alpha= | rl:gamma= | weight:mu= | volterra-exp:rate= |
    /// volterra-power:beta= | volterra-weight:beta= | constant:c0,c1,...
    #[arg(long)]
    pub gen: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Ac,
    Wave,
    Volterra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForcingChoice {
    Zero,
    Const,
    Osc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitialChoice {
    Sin,
    Zero,
    One,
    Random,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = DEFAULT_MESH)]
    pub mesh: String,
    /// Number of spatial nodes.
    #[arg(long = "M", default_value_t = 64)]
    pub m: usize,
    /// Length of the periodic domain.
    #[arg(long = "L", default_value_t = 1.0)]
    pub length: f64,
    /// Caputo order (ac).
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Riemann-Liouville order (wave).
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Interface width (ac).
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Stabilization parameter (ac).
    #[arg(long = "S", default_value_t = 2.0, allow_negative_numbers = true)]
    pub stabilization: f64,
    #[arg(long = "f", value_enum, default_value = "zero")]
    pub forcing: ForcingChoice,
    #[arg(long, value_enum, default_value = "sin")]
    pub u0: InitialChoice,
    /// Seed for --u0 random.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Volterra kernel: exp:rate= | power:beta= | weight:beta=
    #[arg(long, default_value = "exp:rate=1")]
    pub kappa: String,
    /// Trace CSV path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional snapshot CSV `n,i,u`.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ZeroLeading { .. } | Error::NoConvergence { .. } | Error::Singular | Error::Quadrature { .. } => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        };
        Failure { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// `name:k=v,k=v` split into the name and a key map.
fn parse_keyed(spec: &str) -> CliResult<(String, BTreeMap<String, String>)> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut map = BTreeMap::new();
    for part in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("expected key=value in '{spec}', got '{part}'")))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Failure::config(format!("duplicate key '{k}' in '{spec}'")));
        }
    }
    Ok((name.trim().to_string(), map))
}

struct Params<'a> {
    spec: &'a str,
    map: BTreeMap<String, String>,
}

impl Params<'_> {
    fn take<T: FromStr>(&mut self, key: &str) -> CliResult<T> {
        let raw = self
            .map
            .remove(key)
            .ok_or_else(|| Failure::config(format!("'{}' is missing required key '{key}'", self.spec)))?;
        raw.parse()
            .map_err(|_| Failure::config(format!("'{}': cannot parse {key}={raw}", self.spec)))
    }

    fn finish(self) -> CliResult<()> {
        match self.map.keys().next() {
            Some(k) => Err(Failure::config(format!("'{}': unknown key '{k}'", self.spec))),
            None => Ok(()),
        }
    }
}

pub fn parse_mesh(spec: &str) -> CliResult<TimeMesh> {
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read mesh file {path}: {e}")))?;
        return Ok(TimeMesh::from_json(&text)?);
    }
    let (name, map) = parse_keyed(spec)?;
    let mut p = Params { spec, map };
    let mesh = match name.as_str() {
        "uniform" => {
            let (t, n) = (p.take("T")?, p.take("N")?);
            TimeMesh::uniform(t, n)?
        }
        "graded" => {
            let (t, n, r) = (p.take("T")?, p.take("N")?, p.take("r")?);
            TimeMesh::graded(t, n, r)?
        }
        "random" => {
            let (t, n, low, high, seed) = (p.take("T")?, p.take("N")?, p.take("low")?, p.take("high")?, p.take("seed")?);
            TimeMesh::random(t, n, low, high, seed)?
        }
        other => return Err(Failure::config(format!("unknown mesh kind '{other}'"))),
    };
    p.finish()?;
    Ok(mesh)
}

pub fn parse_family(gen: &str, mesh: &TimeMesh) -> CliResult<KernelFamily> {
    if let Some(list) = gen.strip_prefix("constant:") {
        let coefficients = list
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|_| Failure::config(format!("bad coefficient '{c}' in '{gen}'"))))
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(constant_kernels(&coefficients)?);
    }
    let (name, map) = parse_keyed(gen)?;
    let mut p = Params { spec: gen, map };
    let family = match name.as_str() {
        "l1" => l1_kernels(mesh, p.take("alpha")?)?,
        "l1plus" => l1plus_kernels(mesh, p.take("alpha")?)?,
        "rl" => rl_midpoint_kernels(mesh, p.take("gamma")?)?,
        "weight" => weight_average_kernels(mesh, p.take("mu")?)?,
        "volterra-exp" => volterra_kernels(mesh, &VolterraKernel::exponential(p.take("rate")?)?)?,
        "volterra-power" => volterra_kernels(mesh, &VolterraKernel::power(p.take("beta")?)?)?,
        "volterra-weight" => volterra_kernels(mesh, &VolterraKernel::weight(p.take("beta")?)?)?,
        other => return Err(Failure::config(format!("unknown kernel generator '{other}'"))),
    };
    p.finish()?;
    Ok(family)
}

pub fn parse_kappa(spec: &str) -> CliResult<VolterraKernel> {
    let (name, map) = parse_keyed(spec)?;
    let mut p = Params { spec, map };
    let kappa = match name.as_str() {
        "exp" => VolterraKernel::exponential(p.take("rate")?)?,
        "power" => VolterraKernel::power(p.take("beta")?)?,
        "weight" => VolterraKernel::weight(p.take("beta")?)?,
        other => return Err(Failure::config(format!("unknown Volterra kernel '{other}'"))),
    };
    p.finish()?;
    Ok(kappa)
}

fn open_out(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::config(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: &Option<PathBuf>, text: &str) -> CliResult<()> {
    let mut w = open_out(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Failure::from(Error::Io(e)))
}

/// JSON emitted by `check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub family: String,
    pub levels: usize,
    pub conditions: ConditionReport,
    pub pd: PdVerdict,
}

fn cmd_mesh(spec: &str, out: &Option<PathBuf>) -> CliResult<i32> {
    let mesh = parse_mesh(spec)?;
    write_text(out, &(mesh.to_json() + "\n"))?;
    eprintln!("mesh: N={} T={} max step {:.3e}", mesh.steps(), mesh.horizon(), mesh.max_step());
    Ok(EXIT_OK)
}

fn cmd_kernels(family: &FamilyArgs, emit: &str, out: &Option<PathBuf>) -> CliResult<i32> {
    let kinds: Vec<&str> = emit.split(',').map(str::trim).filter(|k| !k.is_empty()).collect();
    if kinds.is_empty() {
        return Err(Failure::config("--emit needs at least one of a,theta,p"));
    }
    for k in &kinds {
        if !matches!(*k, "a" | "theta" | "p") {
            return Err(Failure::config(format!("--emit: unknown kind '{k}' (expected a, theta, p)")));
        }
    }
    let tol = Tolerance::from_env()?;
    let mesh = parse_mesh(&family.mesh)?;
    let a = parse_family(&family.gen, &mesh)?;
    let mut w = open_out(out)?;
    if kinds == ["a"] {
        write_triangle_csv(&mut w, a.triangle())?;
    } else {
        let theta = doc_recursive(&a)?;
        let p = dcc_from_doc(&theta);
        let report = verify_identities(&a, &theta, &p, tol)?;
        if !report.passes() {
            return Err(Failure {
                code: EXIT_NUMERICAL,
                message: format!("identity residuals exceed tolerance (max scaled {:.3e})", report.max_scaled()),
            });
        }
        let blocks: Vec<(&str, &crate::Triangle)> = kinds
            .iter()
            .map(|k| match *k {
                "a" => ("a", a.triangle()),
                "theta" => ("theta", &theta.0),
                _ => ("p", &p.0),
            })
            .collect();
        write_kinded_csv(&mut w, &blocks)?;
        eprintln!("identities: max scaled residual {:.3e}", report.max_scaled());
    }
    eprintln!("kernels: {} with N={}", a.label(), a.levels());
    Ok(EXIT_OK)
}

fn cmd_check(family: &FamilyArgs, all_levels: bool, out: &Option<PathBuf>) -> CliResult<i32> {
    let mesh = parse_mesh(&family.mesh)?;
    let a = parse_family(&family.gen, &mesh)?;
    let scope = if all_levels { WeakC4Scope::AllLevels } else { WeakC4Scope::FinalLevel };
    let conditions = check_conditions_scoped(&a, scope);
    let pd = pd_oracle(&a)?;
    let output = CheckOutput { family: a.label().to_string(), levels: a.levels(), conditions, pd };
    write_text(out, &(serde_json::to_string_pretty(&output).map_err(Error::from)? + "\n"))?;
    eprintln!(
        "check: {} -> {}; lambda_min {:.6e}, lambda_max {:.6e} ({:?})",
        a.label(),
        conditions.classification.as_str(),
        pd.lambda_min,
        pd.lambda_max,
        pd.class
    );
    Ok(match conditions.classification {
        Classification::Uncertified => EXIT_UNCERTIFIED,
        _ => EXIT_OK,
    })
}

fn initial_data(grid: &SpatialGrid1D, choice: InitialChoice, seed: Option<u64>) -> CliResult<GridFunction> {
    let l = grid.length();
    Ok(match choice {
        InitialChoice::Sin => grid.sample(|x| (2.0 * std::f64::consts::PI * x / l).sin()),
        InitialChoice::Zero => GridFunction::constant(grid.nodes(), 0.0),
        InitialChoice::One => GridFunction::constant(grid.nodes(), 1.0),
        InitialChoice::Random => {
            let seed = seed.ok_or_else(|| Failure::config("--u0 random requires --seed"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            GridFunction((0..grid.nodes()).map(|_| rng.random_range(-1.0..=1.0)).collect())
        }
    })
}

fn forcing(choice: ForcingChoice, length: f64) -> Box<dyn Fn(f64, f64) -> f64> {
    use std::f64::consts::PI;
    match choice {
        ForcingChoice::Zero => Box::new(|_, _| 0.0),
        ForcingChoice::Const => Box::new(|_, _| 1.0),
        ForcingChoice::Osc => Box::new(move |x, t| (2.0 * PI * x / length).sin() * (2.0 * PI * t).cos()),
    }
}

fn write_trace_outputs(trace: &SolverTrace, args: &SolverArgs) -> CliResult<()> {
    let mut w = open_out(&args.out)?;
    write_trace_csv(&mut w, trace)?;
    if let Some(path) = &args.snapshots {
        let file = File::create(path).map_err(|e| Failure::config(format!("cannot create {}: {e}", path.display())))?;
        write_snapshots_csv(BufWriter::new(file), trace)?;
    }
    Ok(())
}

fn cmd_solve(problem: Problem, args: &SolverArgs) -> CliResult<i32> {
    let mesh = parse_mesh(&args.mesh)?;
    let grid = SpatialGrid1D::new(args.m, args.length)?;
    if problem == Problem::Ac && args.stabilization < 0.0 {
        return Err(Failure::config(format!("--S must be >= 0, got {}", args.stabilization)));
    }
    let u0 = initial_data(&grid, args.u0, args.seed)?;
    let f = forcing(args.forcing, args.length);
    let mut failures: Vec<String> = Vec::new();
    let trace = match problem {
        Problem::Ac => {
            if args.forcing != ForcingChoice::Zero {
                return Err(Failure::config("the Allen-Cahn scheme takes no forcing (--f zero)"));
            }
            let params = AllenCahnParams { alpha: args.alpha, eps: args.eps, stabilization: args.stabilization };
            let trace = allen_cahn_solve(&grid, &mesh, params, &u0)?;
            let certified = args.stabilization >= 2.0 && u0.linf() <= 1.0;
            if certified {
                if !trace.max_principle_holds() {
                    failures.push(format!("maximum principle: max |u| = {:.17e}", trace.max_linf()));
                }
                if !trace.energy_bounded_by_initial() {
                    failures.push("energy exceeds its initial value".into());
                }
            } else {
                eprintln!("solve ac: S < 2 or |u0| > 1, stability assertions not applied");
            }
            let form = increment_form(&l1_kernels(&mesh, args.alpha)?, &trace)?;
            eprintln!("solve ac: increment quadratic form {form:.6e}");
            trace
        }
        Problem::Wave => frac_wave_solve(&grid, &mesh, args.gamma, &u0, &*f)?,
        Problem::Volterra => volterra_solve(&grid, &mesh, &parse_kappa(&args.kappa)?, &u0, &*f)?,
    };
    if let Some(n) = trace.bound_violation() {
        failures.push(format!("L2 bound violated at step {n}"));
    }
    write_trace_outputs(&trace, args)?;
    eprintln!("solve: {} steps, max |u| {:.6e}, final l2 {:.6e}", mesh.steps(), trace.max_linf(), trace.records.last().map_or(0.0, |r| r.l2));
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        for msg in &failures {
            eprintln!("stability failure: {msg}");
        }
        Ok(EXIT_UNSTABLE)
    }
}

pub fn execute(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Mesh { mesh, out } => cmd_mesh(mesh, out),
        Command::Kernels { family, emit, out } => cmd_kernels(family, emit, out),
        Command::Check { family, weak_c4_all_levels, out } => cmd_check(family, *weak_c4_all_levels, out),
        Command::Solve { problem, solver } => cmd_solve(*problem, solver),
    }
}

/// Parse arguments, run, report errors on stderr, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_specs() {
        assert_eq!(parse_mesh("uniform:T=1,N=4").unwrap().steps(), 4);
        assert_eq!(parse_mesh("graded:T=2,N=5,r=2").unwrap().horizon(), 2.0);
        assert!(parse_mesh("random:T=1,N=5,low=0.5,high=2").is_err(), "seed is mandatory");
        assert!(parse_mesh("uniform:T=1,N=4,x=3").is_err());
        assert!(parse_mesh("spiral:T=1").is_err());
        assert!(parse_mesh("uniform:T=1,N").is_err());
    }

    #[test]
    fn generator_specs() {
        let m = parse_mesh("uniform:T=1,N=4").unwrap();
        assert!(parse_family("l1:alpha=0.5", &m).is_ok());
        assert_eq!(parse_family("constant:1,3", &m).unwrap().levels(), 2);
        let e = parse_family("l1:alpha=1.5", &m).unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
        assert!(e.message.contains("alpha"), "{}", e.message);
        assert!(parse_family("l1:gamma=0.5", &m).is_err());
        assert!(parse_kappa("power:beta=0.4").is_ok());
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(Failure::from(Error::Singular).code, EXIT_NUMERICAL);
        assert_eq!(Failure::from(Error::InvalidParameter("x".into())).code, EXIT_CONFIG);
    }
}
