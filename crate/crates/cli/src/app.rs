//! Command-line driver: argument parsing, subcommands and exit codes.
//!
//! Exit codes: 0 on success, 1 when the analysis fails or does not certify
//! what was asked, 2 on usage, input or parse errors.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use prexpect_core::fixpoint::{KleeneOptions, Status};
use prexpect_core::guard::{region_partition, DEFAULT_GUARD_CAP};
use prexpect_core::oracle::{value_iteration, State, StateBox};
use prexpect_core::{exit_region, normalize, rational, wp_step, Program, Rational};

use crate::dsl::{parse_bindings, parse_program, parse_pwexpr, print_program};
use crate::report::{analyze, render_csv, render_json, render_table, AnalyzeError};

#[derive(Parser, Debug)]
#[command(name = "prexpect", version, about = "Lower bounds and exact values of expected outcomes of probabilistic loops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iterate the abstract transformer to a fixed point and report it.
    Analyze {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e12)]
        div_bound: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Pre-expectation to check against the value at initialization.
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Explicit-state value iteration from concrete start states.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        horizon: usize,
        /// `lo:hi` for every state variable, or one pair for all of them.
        #[arg(long = "box", value_name = "LO:HI,...", allow_hyphen_values = true)]
        bounds: Option<String>,
        /// Start state such as `x=1,i=0`; repeatable. Defaults to `init`.
        #[arg(long)]
        from: Vec<String>,
    },
    /// Print the guard atoms and the exit region.
    Atoms { file: PathBuf },
    /// Apply one step of the loop body to an expectation.
    Wp {
        file: PathBuf,
        #[arg(long)]
        expect: String,
    },
    /// Parse a program and print it back in canonical form.
    Fmt { file: PathBuf },
}

/// Failure with an exit code; the message goes to standard error.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn load(path: &Path) -> Result<(String, Program), Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)?;
    let name = path.display().to_string();
    let p = parse_program(&name, &text).map_err(|e| usage(e.into()))?;
    Ok((name, p))
}

fn configure_threads() {
    if let Some(n) = std::env::var("PREXPECT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // Fails only if the pool was already built, which keeps the first size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs the command line `argv` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run_cli_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    configure_threads();
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}

/// [`run_cli_with`] on the process's standard streams.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

fn io(e: std::io::Error) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cmd {
        Command::Analyze {
            file,
            eps,
            max_iter,
            div_bound,
            format,
            alpha,
        } => {
            if eps.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
                || div_bound.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
                || max_iter == 0
            {
                return Err(usage(anyhow!("--eps and --div-bound must be positive and --max-iter at least 1")));
            }
            let (name, p) = load(&file)?;
            let alpha = alpha
                .map(|a| parse_pwexpr(&p, "--alpha", &a))
                .transpose()
                .map_err(|e| usage(e.into()))?;
            let opts = KleeneOptions {
                eps,
                max_iter,
                divergence_bound: div_bound,
                ..KleeneOptions::default()
            };
            let report = match analyze(&p, &opts, alpha.as_ref()) {
                Ok(r) => r,
                Err(AnalyzeError::Setup(e)) => return Err(usage(e.into())),
                Err(AnalyzeError::Step(e)) => {
                    let _ = write!(err, "{}", render_csv(&e.partial));
                    return Err(Failure {
                        code: 1,
                        error: anyhow!("analysis failed at iteration {}: {}", e.iteration, e.error),
                    });
                }
            };
            let text = match format {
                Format::Table => render_table(&name, &report),
                Format::Csv => render_csv(&report.trace),
                Format::Json => render_json(&name, &report),
            };
            out.write_all(text.as_bytes()).map_err(io)?;
            let trace = &report.trace;
            if let Status::Diverged(d) = &trace.status {
                let _ = writeln!(err, "diverged: {d}; no pre-fixed point detected at this bound");
                return Ok(1);
            }
            if !trace.checks_passed() {
                let _ = writeln!(err, "chain check failed at steps {:?}", trace.chain_violations);
                return Ok(1);
            }
            if trace.status == Status::MaxIterations {
                let _ = writeln!(err, "warning: iteration limit reached before convergence");
            }
            if report.correctness == Some(false) {
                let _ = writeln!(err, "the supplied pre-expectation is not established");
                return Ok(1);
            }
            Ok(0)
        }
        Command::Oracle {
            file,
            horizon,
            bounds,
            from,
        } => {
            let (_, p) = load(&file)?;
            let vars = p.state_vars();
            let bounds = parse_box(bounds.as_deref(), vars.len()).map_err(usage)?;
            let starts: Vec<State> = if from.is_empty() {
                vec![init_state(&p).map_err(usage)?]
            } else {
                from.iter().map(|f| start_state(&p, f)).collect::<anyhow::Result<_>>().map_err(usage)?
            };
            let values = value_iteration(&p, horizon, &bounds, &starts).map_err(|e| Failure {
                code: 1,
                error: e.into(),
            })?;
            for s in &starts {
                let v = &values[s];
                let binding: Vec<String> = vars.iter().zip(s).map(|(v, x)| format!("{v}={x}")).collect();
                writeln!(out, "{}: {} (~{})", binding.join(","), v, rational::to_f64(v)).map_err(io)?;
            }
            Ok(0)
        }
        Command::Atoms { file } => {
            let (_, p) = load(&file)?;
            let guards = p.guards();
            let atoms = region_partition(&guards, DEFAULT_GUARD_CAP).map_err(|e| usage(e.into()))?;
            for a in atoms.iter().filter(|a| !a.members.is_empty()) {
                let members: Vec<String> = a.members.iter().map(|m| (m + 1).to_string()).collect();
                writeln!(out, "A{{{}}}: {}", members.join(","), a.region).map_err(io)?;
            }
            let exit = exit_region(&p).map_err(|e| usage(e.into()))?;
            writeln!(out, "exit: {exit}").map_err(io)?;
            Ok(0)
        }
        Command::Wp { file, expect } => {
            let (_, p) = load(&file)?;
            let x = parse_pwexpr(&p, "--expect", &expect).map_err(|e| usage(e.into()))?;
            let np = normalize(&p).map_err(|e| usage(e.into()))?;
            writeln!(out, "{}", wp_step(&np, &x)).map_err(io)?;
            Ok(0)
        }
        Command::Fmt { file } => {
            let (_, p) = load(&file)?;
            out.write_all(print_program(&p).as_bytes()).map_err(io)?;
            Ok(0)
        }
    }
}

fn parse_box(spec: Option<&str>, dims: usize) -> anyhow::Result<StateBox> {
    let Some(spec) = spec else {
        return Ok(StateBox::uniform(dims, -(1 << 40), 1 << 40));
    };
    let pairs = spec
        .split(',')
        .map(|part| {
            let (lo, hi) = part.split_once(':').ok_or_else(|| anyhow!("expected lo:hi, found `{part}`"))?;
            let lo: i64 = lo.trim().parse().with_context(|| format!("bad bound `{lo}`"))?;
            let hi: i64 = hi.trim().parse().with_context(|| format!("bad bound `{hi}`"))?;
            if lo > hi {
                bail!("empty range {lo}:{hi}");
            }
            Ok((lo, hi))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    match pairs.len() {
        1 => Ok(StateBox::uniform(dims, pairs[0].0, pairs[0].1)),
        n if n == dims => Ok(StateBox { bounds: pairs }),
        n => bail!("--box has {n} ranges for {dims} state variables"),
    }
}

fn integer(name: &str, q: &Rational) -> anyhow::Result<i64> {
    if !q.is_integer() {
        bail!("`{name}` must be an integer, got {q}");
    }
    i64::try_from(q.to_integer()).map_err(|_| anyhow!("`{name}` is out of range"))
}

fn start_state(p: &Program, text: &str) -> anyhow::Result<State> {
    let mut bindings = parse_bindings(text)?;
    let vars = p.state_vars();
    let state = vars
        .iter()
        .map(|v| {
            let q = bindings.remove(v.name()).ok_or_else(|| anyhow!("--from does not bind `{v}`"))?;
            integer(v.name(), &q)
        })
        .collect::<anyhow::Result<State>>()?;
    if let Some(extra) = bindings.keys().next() {
        bail!("`{extra}` is not a state variable");
    }
    Ok(state)
}

fn init_state(p: &Program) -> anyhow::Result<State> {
    let init = p.init.as_ref().ok_or_else(|| anyhow!("the program has no `init`; pass --from"))?;
    let empty: BTreeMap<prexpect_core::Var, Rational> = BTreeMap::new();
    p.state_vars()
        .iter()
        .map(|v| {
            let e = init.get(v).ok_or_else(|| anyhow!("`init` leaves `{v}` unset; pass --from"))?;
            if !e.is_constant() {
                bail!("`init` sets `{v}` to `{e}`, which is not a number; pass --from");
            }
            integer(v.name(), &e.eval(&empty))
        })
        .collect()
}
