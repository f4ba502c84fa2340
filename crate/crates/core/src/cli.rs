//! The `cudfsolve` command line.
//!
//! Exit codes: 0 solution (or VALID, or SAT), 1 no solution (or INVALID, or
//! UNSAT), 2 usage, I/O or parse error, 3 budget exhausted.

use std::collections::BTreeSet;
use std::error::Error;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus};
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::bench;
use crate::checker::check;
use crate::criteria::{objective_vector, CriteriaList};
use crate::cudf::{parse_document, parse_solution, print_document, print_solution, SolutionDocument};
use crate::gen::{gen_document, GenParams, RequestKind};
use crate::model::{Request, Solution, Universe};
use crate::optimizer::{solve_upgrade, Budget, Outcome};
use crate::oracle::{brute_force, OptimalResult};
use crate::sat::{dimacs, SolveResult, Solver, SolverConfig};
use crate::semver::{self, RequestMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NONE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_UNKNOWN: i32 = 3;

type CliResult = Result<i32, Box<dyn Error>>;

#[derive(Parser, Debug)]
#[command(name = "cudfsolve", version, about = "Criteria-driven CUDF dependency solver")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone)]
struct SolveOpts {
    /// Criteria string, e.g. `paranoid` or `-changed,-removed`.
    #[arg(long, default_value = "paranoid", allow_hyphen_values = true)]
    criteria: String,
    /// Total conflict budget over all SAT calls.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Solve a CUDF problem.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        #[arg(long)]
        out: Option<PathBuf>,
        /// External solver command, called as `CMD problem out criteria`.
        #[arg(long, env = "CUDF_SOLVER")]
        external: Option<String>,
        /// Seconds to wait for the external solver.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
    /// Solver entry point using the external calling convention.
    Bridge {
        problem: PathBuf,
        out: PathBuf,
        #[arg(allow_hyphen_values = true)]
        criteria: String,
    },
    /// Validate a solution against a problem.
    Check { problem: PathBuf, solution: PathBuf },
    /// Exhaustive optimum of a small problem.
    Oracle {
        problem: PathBuf,
        #[arg(long, default_value = "paranoid", allow_hyphen_values = true)]
        criteria: String,
        #[arg(long, default_value_t = crate::oracle::DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a semver manifest and registry into a CUDF problem.
    Translate {
        #[command(flatten)]
        src: SemverOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resolve a semver manifest and write a lockfile.
    Lock {
        #[command(flatten)]
        src: SemverOpts,
        #[command(flatten)]
        opts: SolveOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random CUDF problem.
    Gen {
        #[arg(long, default_value_t = 12)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "mixed")]
        kind: RequestKind,
        #[arg(long, default_value_t = 1)]
        min_versions: u64,
        #[arg(long, default_value_t = 3)]
        max_versions: u64,
        #[arg(long, default_value_t = 0.3)]
        dep_density: f64,
        #[arg(long, default_value_t = 0.1)]
        conflict_density: f64,
        #[arg(long, default_value_t = 0.3)]
        installed_fraction: f64,
    },
    /// Solve a DIMACS CNF file (`-` for standard input).
    Sat {
        input: PathBuf,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Time the optimizer on generated instances.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "100,1000")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long, default_value = "paranoid", allow_hyphen_values = true)]
        criteria: String,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Run instances concurrently; timings become unreliable.
        #[arg(long)]
        parallel: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct SemverOpts {
    manifest: PathBuf,
    /// Directory with one `<name>.json` file per package.
    #[arg(long)]
    registry: PathBuf,
    /// Existing lockfile giving the installed state.
    #[arg(long)]
    lock: Option<PathBuf>,
    /// Active qualifier tags (repeatable).
    #[arg(long = "qualifier")]
    qualifiers: Vec<String>,
    /// Upgrade locked packages instead of a plain install.
    #[arg(long)]
    upgrade: bool,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Cmd) -> CliResult {
    match cmd {
        Cmd::Solve {
            problem,
            opts,
            out,
            external,
            timeout,
        } => match external {
            Some(command) => cmd_external(&problem, &opts.criteria, out.as_deref(), &command, timeout),
            None => cmd_solve(&problem, &opts, out.as_deref()),
        },
        Cmd::Bridge {
            problem,
            out,
            criteria,
        } => cmd_solve(
            &problem,
            &SolveOpts {
                criteria,
                budget: 1_000_000,
                time_limit: None,
            },
            Some(&out),
        ),
        Cmd::Check { problem, solution } => cmd_check(&problem, &solution),
        Cmd::Oracle {
            problem,
            criteria,
            cap,
            out,
        } => cmd_oracle(&problem, &criteria, cap, out.as_deref()),
        Cmd::Translate { src, out } => {
            let (doc, _) = translate_from(&src)?;
            emit(out.as_deref(), &print_document(&doc))?;
            Ok(EXIT_OK)
        }
        Cmd::Lock { src, opts, out } => cmd_lock(&src, &opts, out.as_deref()),
        Cmd::Gen {
            size,
            seed,
            kind,
            min_versions,
            max_versions,
            dep_density,
            conflict_density,
            installed_fraction,
        } => {
            let p = GenParams {
                n_packages: size,
                versions_per_name: (min_versions, max_versions),
                dep_density,
                conflict_density,
                installed_fraction,
                seed,
            };
            emit(None, &print_document(&gen_document(&p, kind)))?;
            Ok(EXIT_OK)
        }
        Cmd::Sat { input, budget } => cmd_sat(&input, budget),
        Cmd::Bench {
            sizes,
            seeds,
            criteria,
            budget,
            csv,
            parallel,
        } => {
            let c = parse_criteria_arg(&criteria)?;
            let rows = bench::run_bench(&sizes, &seeds, &c, Budget::conflicts(budget), parallel);
            print!("{}", bench::summary(&rows));
            if let Some(path) = csv {
                write_file(&path, &bench::to_csv(&rows))?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn read_input(path: &Path) -> Result<String, Box<dyn Error>> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn write_file(path: &Path, text: &str) -> Result<(), Box<dyn Error>> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Box<dyn Error>> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn parse_criteria_arg(text: &str) -> Result<CriteriaList, Box<dyn Error>> {
    let c = crate::criteria::parse_criteria(text)?;
    if c.is_empty() {
        return Err("criteria list is empty".into());
    }
    Ok(c)
}

fn load_problem(path: &Path) -> Result<(Universe, Request), Box<dyn Error>> {
    let doc = parse_document(&read_input(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((doc.universe()?, doc.request()))
}

fn report_vector(c: &CriteriaList, u: &Universe, s: &Solution) {
    let parts: Vec<String> = c
        .criteria()
        .iter()
        .zip(objective_vector(c, u, s))
        .map(|(crit, v)| format!("{crit}={v}"))
        .collect();
    eprintln!("objective: {}", parts.join(" "));
}

fn cmd_solve(problem: &Path, opts: &SolveOpts, out: Option<&Path>) -> CliResult {
    let c = parse_criteria_arg(&opts.criteria)?;
    let (u, r) = load_problem(problem)?;
    let budget = Budget {
        conflicts: Some(opts.budget),
        time: opts.time_limit.map(Duration::from_secs_f64),
    };
    match solve_upgrade(&u, &r, &c, budget) {
        Outcome::Solution(s) => {
            report_vector(&c, &u, &s);
            emit(out, &print_solution(Some(&s)))?;
            Ok(EXIT_OK)
        }
        Outcome::NoSolution => {
            emit(out, &print_solution(None))?;
            Ok(EXIT_NONE)
        }
        Outcome::Unknown(best) => {
            eprintln!("budget exhausted before optimality was proven");
            if let Some(s) = best {
                report_vector(&c, &u, &s);
                emit(out, &print_solution(Some(&s)))?;
            }
            Ok(EXIT_UNKNOWN)
        }
    }
}

fn wait_with_timeout(child: &mut std::process::Child, timeout: Duration) -> Result<ExitStatus, Box<dyn Error>> {
    let start = Instant::now();
    loop {
        if let Some(status) = child.try_wait()? {
            return Ok(status);
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(format!("external solver timed out after {:.1} s", timeout.as_secs_f64()).into());
        }
        thread::sleep(Duration::from_millis(10));
    }
}

fn cmd_external(problem: &Path, criteria: &str, out: Option<&Path>, command: &str, timeout: f64) -> CliResult {
    let c = parse_criteria_arg(criteria)?;
    let text = read_input(problem)?;
    let doc = parse_document(&text).map_err(|e| format!("{}: {e}", problem.display()))?;
    let u = doc.universe()?;
    let r = doc.request();

    let dir = tempfile::tempdir()?;
    let problem_file = dir.path().join("problem.cudf");
    let out_file = dir.path().join("solution.cudf");
    fs::write(&problem_file, print_document(&doc))?;

    let mut words = command.split_whitespace();
    let program = words.next().ok_or("empty external solver command")?;
    let mut child = Command::new(program)
        .args(words)
        .arg(&problem_file)
        .arg(&out_file)
        .arg(criteria)
        .spawn()
        .map_err(|e| format!("cannot start {program}: {e}"))?;
    let status = wait_with_timeout(&mut child, Duration::from_secs_f64(timeout))?;
    let code = status.code();
    if !matches!(code, Some(EXIT_OK | EXIT_NONE | EXIT_UNKNOWN)) {
        return Err(format!("external solver failed with {status}").into());
    }
    let answer = fs::read_to_string(&out_file).map_err(|e| format!("external solver wrote no solution: {e}"))?;
    match parse_solution(&answer, &u)? {
        SolutionDocument::NoSolution => {
            emit(out, &print_solution(None))?;
            Ok(EXIT_NONE)
        }
        SolutionDocument::Solution(s) => {
            let report = check(&u, &r, &s)?;
            if !report.is_valid() {
                for line in report.lines() {
                    eprintln!("{line}");
                }
                return Err("external solver returned an invalid solution".into());
            }
            report_vector(&c, &u, &s);
            emit(out, &print_solution(Some(&s)))?;
            Ok(if code == Some(EXIT_UNKNOWN) { EXIT_UNKNOWN } else { EXIT_OK })
        }
    }
}

fn cmd_check(problem: &Path, solution: &Path) -> CliResult {
    let (u, r) = load_problem(problem)?;
    let text = read_input(solution)?;
    let s = match parse_solution(&text, &u).map_err(|e| format!("{}: {e}", solution.display()))? {
        SolutionDocument::Solution(s) => s,
        SolutionDocument::NoSolution => {
            println!("solution document is FAIL");
            return Ok(EXIT_NONE);
        }
    };
    let report = check(&u, &r, &s)?;
    if report.is_valid() {
        println!("VALID");
        Ok(EXIT_OK)
    } else {
        for line in report.lines() {
            println!("{line}");
        }
        Ok(EXIT_NONE)
    }
}

fn cmd_oracle(problem: &Path, criteria: &str, cap: usize, out: Option<&Path>) -> CliResult {
    let c = parse_criteria_arg(criteria)?;
    let (u, r) = load_problem(problem)?;
    match brute_force(&u, &r, &c, cap)? {
        OptimalResult::NoSolution => {
            emit(out, &print_solution(None))?;
            Ok(EXIT_NONE)
        }
        OptimalResult::Optimal { solutions, .. } => {
            eprintln!("optimal solutions: {}", solutions.len());
            report_vector(&c, &u, &solutions[0]);
            emit(out, &print_solution(Some(&solutions[0])))?;
            Ok(EXIT_OK)
        }
    }
}

fn translate_from(src: &SemverOpts) -> Result<(crate::cudf::CudfDocument, semver::VersionMapping), Box<dyn Error>> {
    let manifest = semver::load_manifest(&src.manifest)?;
    let registry = semver::load_registry(&src.registry)?;
    let lock = src.lock.as_deref().map(semver::load_lockfile).transpose()?;
    let qualifiers: BTreeSet<String> = src.qualifiers.iter().cloned().collect();
    let mode = if src.upgrade {
        RequestMode::Upgrade
    } else {
        RequestMode::Install
    };
    Ok(semver::translate(&manifest, &registry, lock.as_ref(), &qualifiers, mode)?)
}

fn cmd_lock(src: &SemverOpts, opts: &SolveOpts, out: Option<&Path>) -> CliResult {
    let c = parse_criteria_arg(&opts.criteria)?;
    let manifest = semver::load_manifest(&src.manifest)?;
    let (doc, mapping) = translate_from(src)?;
    let u = doc.universe()?;
    let budget = Budget {
        conflicts: Some(opts.budget),
        time: opts.time_limit.map(Duration::from_secs_f64),
    };
    let s = match solve_upgrade(&u, &doc.request(), &c, budget) {
        Outcome::Solution(s) => s,
        Outcome::NoSolution => {
            eprintln!("no resolution satisfies {}", manifest.name);
            for atom in doc.packages.last().into_iter().flat_map(|root| root.depends.conjuncts().iter().flatten()) {
                if u.providers(atom).is_empty() {
                    eprintln!("  nothing provides {atom}");
                }
            }
            return Ok(EXIT_NONE);
        }
        Outcome::Unknown(_) => {
            eprintln!("budget exhausted before a resolution was proven optimal");
            return Ok(EXIT_UNKNOWN);
        }
    };
    let lock = semver::lift_solution(&s, &mapping, &manifest, &opts.criteria)?;
    let mut text = serde_json::to_string_pretty(&lock)?;
    text.push('\n');
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_sat(input: &Path, budget: Option<u64>) -> CliResult {
    let cnf = dimacs::parse(&read_input(input)?)?;
    let mut solver = Solver::new(SolverConfig {
        conflict_budget: budget.or(SolverConfig::default().conflict_budget),
        ..SolverConfig::default()
    });
    solver.ensure_vars(cnf.num_vars);
    let mut consistent = true;
    for clause in &cnf.clauses {
        if solver.add_clause(clause).is_err() {
            consistent = false;
            break;
        }
    }
    let result = if consistent {
        solver.solve(&[])
    } else {
        SolveResult::Unsat(vec![])
    };
    print!("{}", dimacs::format_result(&result, cnf.num_vars));
    Ok(match result {
        SolveResult::Sat(_) => EXIT_OK,
        SolveResult::Unsat(_) => EXIT_NONE,
        SolveResult::Unknown => EXIT_UNKNOWN,
    })
}
