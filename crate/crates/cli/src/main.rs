mod params;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use avi_core::pivot::{lemke_solve, RayInterpretation, SolveOptions, SolveStatus};
use avi_core::problem::{kkt_residual, AviProblem, Solution};
use avi_core::problems::{gen_boxed_random, gen_friction, gen_nep, read_avi, write_avi};
use avi_core::reform::{from_mcp_solution, lift_full, nnf_exact, nnf_upper_bound, reduce_lineality, to_mcp};
use avi_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use report::{exact, sci, RunReport};

const EXIT_DISAGREE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_FAILURE: u8 = 4;
const EXIT_UNRESOLVED_RAY: u8 = 5;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_IO: u8 = 66;

/// Complementary pivoting for affine variational inequalities over
/// polyhedra.
#[derive(Parser)]
#[command(name = "avi", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Relative KKT tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    iter_limit: usize,
    /// Seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Recorded in the report.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    /// Add wall time and pivot rate; such reports are not reproducible.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve an instance file along one route.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Route::Direct)]
        route: Route,
        /// Include the solution vector in the report.
        #[arg(long)]
        print_solution: bool,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Solve along several routes and check that they agree.
    Compare {
        instance: PathBuf,
        #[arg(long = "route", value_enum, value_delimiter = ',', default_values_t = [Route::Direct, Route::Mcp, Route::Reduced])]
        routes: Vec<Route>,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Generate an instance file from key=value parameters.
    Gen {
        #[arg(value_enum)]
        family: Family,
        /// Parameters as key=value.
        params: Vec<String>,
        /// File with one key=value per line.
        #[arg(long)]
        params_file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count the nonempty faces of the feasible set.
    Nnf { instance: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Route {
    Direct,
    Mcp,
    Reduced,
}

impl Route {
    fn name(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Mcp => "mcp",
            Route::Reduced => "reduced",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Friction,
    Nep,
    Random,
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }
}

fn data_error(e: Error) -> Failure {
    match e {
        Error::Io(m) => Failure::new(EXIT_IO, m),
        e => Failure::new(EXIT_DATA, e.to_string()),
    }
}

fn load(path: &Path) -> Result<AviProblem, Failure> {
    read_avi(path).map_err(|e| match e {
        Error::Io(m) => Failure::new(EXIT_IO, format!("{}: {m}", path.display())),
        e => Failure::new(EXIT_DATA, format!("{}: {e}", path.display())),
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn options(flags: &SolverFlags) -> Result<SolveOptions, Failure> {
    if !(flags.tol > 0.0) || !(flags.time_limit > 0.0) || !flags.time_limit.is_finite() {
        return Err(Failure::new(EXIT_USAGE, "tolerance and time limit must be positive"));
    }
    Ok(SolveOptions {
        tol: flags.tol,
        iter_limit: flags.iter_limit,
        time_limit: Duration::from_secs_f64(flags.time_limit),
        log_pivots: std::env::var_os("PATHAVI_LOG").is_some(),
        ..Default::default()
    })
}

/// Outcome of one route, with the solution mapped back to the instance.
struct RouteRun {
    report: RunReport,
    solution: Option<Solution>,
    code: u8,
}

fn run_route(id: &str, p: &AviProblem, route: Route, opts: &SolveOptions, flags: &SolverFlags) -> RouteRun {
    let started = std::time::Instant::now();
    let solved = match route {
        Route::Direct => lemke_solve(p, opts).map(|r| {
            let s = r.solution.clone();
            (r, s)
        }),
        Route::Mcp => lemke_solve(&to_mcp(p), opts).map(|r| {
            let s = r.solution.as_ref().map(|s| from_mcp_solution(p, s));
            (r, s)
        }),
        Route::Reduced => reduce_lineality(p).and_then(|rp| {
            lemke_solve(&rp.problem, opts).map(|r| {
                let s = r.solution.as_ref().map(|s| lift_full(p, &rp, s));
                (r, s)
            })
        }),
    };
    let elapsed = started.elapsed();
    let mut report = RunReport {
        instance: id.to_string(),
        route: route.name().to_string(),
        status: String::new(),
        iterations: 0,
        residual: None,
        stationarity: None,
        complementarity: None,
        interpretation: None,
        n: p.n(),
        m: p.m(),
        seed: flags.seed,
        message: None,
        wall_time_s: None,
        pivots_per_sec: None,
        z: None,
    };
    if flags.timings {
        report.wall_time_s = Some(sci(elapsed.as_secs_f64()));
    }
    let (res, sol) = match solved {
        Ok(x) => x,
        Err(e) => {
            let (status, code) = match &e {
                Error::Infeasible(_) => ("infeasible_set", EXIT_INFEASIBLE),
                Error::NotInvertibleOnLineality { .. } | Error::DegenerateNormalCone => ("start_failed", EXIT_FAILURE),
                Error::InvalidProblem(_) | Error::Dimension { .. } => ("invalid", EXIT_DATA),
                _ => ("numerical_failure", EXIT_FAILURE),
            };
            report.status = status.into();
            report.message = Some(e.to_string());
            return RouteRun {
                report,
                solution: None,
                code,
            };
        }
    };
    report.status = res.status.token().into();
    report.iterations = res.iterations;
    report.message = res.message.clone();
    if flags.timings && elapsed > Duration::ZERO {
        report.pivots_per_sec = Some(sci(res.iterations as f64 / elapsed.as_secs_f64()));
    }
    let code = match res.status {
        SolveStatus::Solved => 0,
        SolveStatus::RayTermination => match &res.interpretation {
            Some(RayInterpretation::Infeasible(_)) => {
                report.interpretation = Some("infeasible".into());
                EXIT_INFEASIBLE
            }
            _ => {
                report.interpretation = Some("unresolved".into());
                EXIT_UNRESOLVED_RAY
            }
        },
        SolveStatus::IterLimit | SolveStatus::TimeLimit => EXIT_LIMIT,
        SolveStatus::NumericalFailure => EXIT_FAILURE,
    };
    let solution = if res.status == SolveStatus::Solved { sol } else { None };
    if let Some(s) = &solution {
        if let Ok(kr) = kkt_residual(p, s) {
            report.residual = Some(sci(kr.max()));
            report.stationarity = Some(sci(kr.stationarity));
            report.complementarity = Some(sci(kr.complementarity));
        }
    }
    RouteRun { report, solution, code }
}

fn init_logging(verbose: bool) {
    let builder = if std::env::var_os("PATHAVI_LOG").is_some() {
        env_logger::Builder::from_env("PATHAVI_LOG")
    } else {
        let mut b = env_logger::Builder::new();
        b.filter_level(if verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn });
        b
    };
    let mut builder = builder;
    let _ = builder.target(env_logger::Target::Stderr).try_init();
}

fn cmd_solve(instance: &Path, route: Route, print_solution: bool, flags: &SolverFlags) -> Result<u8, Failure> {
    let p = load(instance)?;
    let opts = options(flags)?;
    let mut run = run_route(&instance.display().to_string(), &p, route, &opts, flags);
    log::info!("{} via {}: {}", instance.display(), route.name(), run.report.status);
    if print_solution {
        run.report.z = run.solution.as_ref().map(|s| s.z.iter().map(|&x| exact(x)).collect());
    }
    emit(&run.report.render(flags.json), flags.out.as_deref())?;
    Ok(run.code)
}

#[derive(Serialize)]
struct Agreement {
    routes_solved: usize,
    agree: bool,
    max_dz: String,
}

fn cmd_compare(instance: &Path, routes: &[Route], flags: &SolverFlags) -> Result<u8, Failure> {
    if routes.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "no routes requested"));
    }
    let p = load(instance)?;
    let opts = options(flags)?;
    let id = instance.display().to_string();
    let runs: Vec<RouteRun> = routes.iter().map(|&r| run_route(&id, &p, r, &opts, flags)).collect();
    let solved: Vec<&Solution> = runs.iter().filter_map(|r| r.solution.as_ref()).collect();
    let mut max_dz = 0.0f64;
    for s in solved.iter().skip(1) {
        for (a, b) in s.z.iter().zip(&solved[0].z) {
            max_dz = max_dz.max((a - b).abs());
        }
    }
    let agree = max_dz <= 1e-6;
    let summary = Agreement {
        routes_solved: solved.len(),
        agree,
        max_dz: sci(max_dz),
    };
    let text = if flags.json {
        let reports: Vec<&RunReport> = runs.iter().map(|r| &r.report).collect();
        let v = serde_json::json!({ "runs": reports, "summary": summary });
        serde_json::to_string_pretty(&v).expect("plain data") + "\n"
    } else {
        let mut t = String::new();
        for r in &runs {
            t.push_str(&r.report.render(false));
            t.push('\n');
        }
        t.push_str(&report::key_values(&serde_json::to_value(&summary).expect("plain data")));
        t
    };
    emit(&text, flags.out.as_deref())?;
    if !agree {
        return Ok(EXIT_DISAGREE);
    }
    // the worst route outcome, solved routes counting as 0
    Ok(if solved.is_empty() { runs.iter().map(|r| r.code).max().unwrap_or(0) } else { 0 })
}

fn cmd_gen(family: Family, items: &[String], file: Option<&Path>, seed: u64, out: Option<&Path>) -> Result<u8, Failure> {
    let mut prm = match file {
        Some(f) => {
            let text = std::fs::read_to_string(f).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", f.display())))?;
            params::parse_block(&text).map_err(|e| Failure::new(EXIT_USAGE, e))?
        }
        None => params::Params::new(),
    };
    for it in items {
        params::add(&mut prm, it).map_err(|e| Failure::new(EXIT_USAGE, e))?;
    }
    let usage = |e: String| Failure::new(EXIT_USAGE, e);
    let p = match family {
        Family::Friction => gen_friction(&params::friction(prm, seed).map_err(usage)?),
        Family::Nep => gen_nep(&params::nep(prm, seed).map_err(usage)?),
        Family::Random => {
            let r = params::random(prm, seed).map_err(usage)?;
            gen_boxed_random(r.n, r.m, r.seed, r.spectrum)
        }
    }
    .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    match out {
        Some(path) => write_avi(&p, path).map_err(data_error)?,
        None => print!("{}", avi_core::problems::format_avi(&p)),
    }
    Ok(0)
}

fn cmd_nnf(instance: &Path) -> Result<u8, Failure> {
    let p = load(instance)?;
    let bound = nnf_upper_bound(&p);
    match nnf_exact(&p) {
        Ok(k) => println!("exact={k} bound={bound}"),
        Err(Error::SizeCapExceeded(_)) => println!("exact=skipped(bound caps) bound={bound}"),
        Err(e) => return Err(data_error(e)),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let verbose = match &cli.cmd {
        Cmd::Solve { flags, .. } | Cmd::Compare { flags, .. } => flags.verbose,
        _ => false,
    };
    init_logging(verbose);
    let res = match &cli.cmd {
        Cmd::Solve {
            instance,
            route,
            print_solution,
            flags,
        } => cmd_solve(instance, *route, *print_solution, flags),
        Cmd::Compare { instance, routes, flags } => cmd_compare(instance, routes, flags),
        Cmd::Gen {
            family,
            params,
            params_file,
            seed,
            out,
        } => cmd_gen(*family, params, params_file.as_deref(), *seed, out.as_deref()),
        Cmd::Nnf { instance } => cmd_nnf(instance),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("avi: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
