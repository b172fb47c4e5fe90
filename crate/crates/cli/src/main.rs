//! `sfl`: learn closed-form solutions from run-spec files, evaluate error
//! metrics of given expressions and export comparison curves.

mod result;
mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sfl_core::eval::{self, Offset};
use sfl_core::train::{self, Progress};
use sfl_core::{parse, Expr, TaskKind};

use result::{MetricDoc, ResultDoc};
use spec::{parse_number, RunSpec};

/// Points on the exported curve.
const CURVE_POINTS: usize = 1000;

#[derive(Parser)]
#[command(name = "sfl", version, about = "Symbolic function learner")]
struct Cli {
    /// Worker threads for parallel restarts (default: all cores).
    #[arg(long, global = true, env = "SFL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a run spec and write a result document.
    Solve(SolveArgs),
    /// Print an error metric of an expression.
    Eval(EvalArgs),
    /// Write the curve of an expression next to its reference solution.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Run spec (TOML, or JSON with a .json extension).
    #[arg(long)]
    spec: PathBuf,
    /// Result document (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Also write the best expression's curve as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Record the wall time in the result document (makes it non-reproducible).
    #[arg(long)]
    wall_time: bool,
    /// No progress lines.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// Args: G A B. Integral of g(x, f, f', f'')^2 over [A, B].
    Residual,
    /// Args: P A B. Mean squared gap between the expression and the antiderivative of P.
    Antideriv,
    /// No args. Integral of (f - Phi)^2 over [-1, 3] against the normal CDF.
    Erf,
}

#[derive(Args)]
struct EvalArgs {
    /// Expression in x.
    #[arg(long)]
    expr: String,
    /// Run spec whose task supplies the residual; reports its metric intervals (or the domain).
    #[arg(long, conflicts_with = "metric")]
    task: Option<PathBuf>,
    #[arg(long)]
    metric: Option<Metric>,
    #[arg(long, num_args = 0.., allow_hyphen_values = true)]
    args: Vec<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Result document to take the task and best expression from.
    #[arg(long = "in", conflicts_with_all = ["expr", "task"])]
    input: Option<PathBuf>,
    /// Expression to plot (with --task).
    #[arg(long, requires = "task")]
    expr: Option<String>,
    /// Run spec supplying the task.
    #[arg(long, requires = "expr")]
    task: Option<PathBuf>,
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = CURVE_POINTS)]
    points: usize,
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow::anyhow!("--threads must be >= 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start the thread pool")?;
    }
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Eval(a) => Ok(eval_cmd(a)?),
        Command::Plot(a) => Ok(plot(a)?),
    }
}

/// Write `contents` next to `path` and rename it into place.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let spec = RunSpec::load(&a.spec)?.normalized();
    let r = spec.resolve()?;
    let start = Instant::now();
    let report = |p: Progress| {
        println!(
            "restart {:>3}  iter {:>6}  {:<8}  err {:.6e}",
            p.restart,
            p.iteration,
            format!("{:?}", p.mode).to_lowercase(),
            p.err
        );
    };
    let progress: Option<train::ProgressFn<'_>> = if a.quiet { None } else { Some(&report) };
    let run = train::solve(&r.task, &r.model, &r.train, progress).context("training failed")?;
    let mut doc = ResultDoc::new(spec, &run);
    if let Some(best) = run.best_expr() {
        if !r.task.residual_is_zero() {
            for &(lo, hi) in &r.residual_intervals {
                let q = eval::residual_error(best, &r.task, lo, hi).context("residual metric")?;
                doc.metrics.push(MetricDoc {
                    interval: [lo, hi],
                    residual_error: q.value.is_finite().then_some(q.value),
                    nudged: q.nudged,
                });
            }
        }
        if let Some(csv) = &a.csv {
            let rows = eval::curve(best, &r.task, CURVE_POINTS).context("curve export")?;
            write_atomic(csv, &eval::curve_csv(&rows))?;
        }
    }
    if a.wall_time {
        doc.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    write_atomic(&a.out, &doc.to_json())?;
    match &doc.best {
        Some(b) => {
            if !a.quiet {
                println!("best (restart {}): {}", b.restart, b.display);
            }
            Ok(())
        }
        None => Err(Failure {
            code: 2,
            error: anyhow::anyhow!("all {} restarts diverged", doc.restarts.len()),
        }),
    }
}

fn parse_expr(text: &str) -> Result<Expr<f64>> {
    let e = parse::<f64>(text).with_context(|| format!("cannot parse '{text}'"))?;
    if e.has_unknown() {
        bail!("'{text}' may only depend on x");
    }
    Ok(e)
}

fn interval_args(args: &[String], what: &str) -> Result<(String, f64, f64)> {
    match args {
        [text, a, b] => Ok((text.clone(), parse_number(a)?, parse_number(b)?)),
        _ => bail!("--args for {what} takes three values: expression, a, b"),
    }
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let f = parse_expr(&a.expr)?;
    let values = match (a.task, a.metric) {
        (Some(path), _) => {
            if !a.args.is_empty() {
                bail!("--args is only used with --metric");
            }
            let r = RunSpec::load(&path)?.resolve()?;
            let intervals = if r.residual_intervals.is_empty() {
                vec![r.task.domain]
            } else {
                r.residual_intervals
            };
            intervals
                .into_iter()
                .map(|(lo, hi)| Ok(eval::residual_error(&f, &r.task, lo, hi)?.value))
                .collect::<Result<Vec<_>>>()?
        }
        (None, Some(Metric::Residual)) => {
            let (g, lo, hi) = interval_args(&a.args, "residual")?;
            let task = sfl_core::TaskSpec::new(TaskKind::Ode, &g, (lo, hi), vec![], 1.0)
                .with_context(|| format!("cannot use '{g}' as a residual"))?;
            vec![eval::residual_error(&f, &task, lo, hi)?.value]
        }
        (None, Some(Metric::Antideriv)) => {
            let (p, lo, hi) = interval_args(&a.args, "antideriv")?;
            let p = parse_expr(&p)?;
            vec![eval::antideriv_error(&f, &p, lo, hi, Offset::AnchorAtOrigin)?]
        }
        (None, Some(Metric::Erf)) => {
            if !a.args.is_empty() {
                bail!("erf takes no --args");
            }
            vec![eval::erf_check(&f)?]
        }
        (None, None) => bail!("give --task or --metric"),
    };
    for v in values {
        println!("{}", eval::format_sig(v, 6));
    }
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let (task, f) = match (&a.input, &a.expr, &a.task) {
        (Some(path), _, _) => {
            let doc = ResultDoc::load(path)?;
            (doc.spec.task.resolve()?, doc.best_expr()?)
        }
        (None, Some(e), Some(t)) => (RunSpec::load(t)?.task.resolve()?, parse_expr(e)?),
        _ => bail!("give --in, or --expr with --task"),
    };
    if a.points < 2 {
        bail!("--points must be >= 2");
    }
    let rows = eval::curve(&f, &task, a.points)?;
    write_atomic(&a.csv, &eval::curve_csv(&rows))
}
