use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sossplit_core::bench::pruning::trial_seed;
use sossplit_core::bench::{
    compare_pruning, gen_bm, gen_named, gen_rn, gen_sqr, run_check, Family, GenSpec, RunOptions, RunReport,
};
use sossplit_core::parse::parse_with_names;
use sossplit_core::poly::Polynomial;
use sossplit_core::reduce::{algexa, algpca};
use sossplit_core::sdp::{OutputConvention, SolveOptions, SolverMode};

/// Exit status for bad usage, unreadable input and internal failures.
const EXIT_ERROR: u8 = 64;

#[derive(Parser)]
#[command(
    name = "sossplit",
    version,
    about = "Sum-of-squares checking with basis reduction and support splitting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a polynomial is a sum of squares.
    Check(CheckArgs),
    /// Print the reduced monomial basis.
    Reduce(ReduceArgs),
    /// Print a generated benchmark polynomial.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Run the check over a seeded batch and write one CSV row per instance.
    Bench(BenchArgs),
    /// Compare PCA pruning directions against random ones.
    ComparePruning(CompareArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Embedded,
    External,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Convention {
    Primal,
    Dual,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long, value_enum, default_value = "embedded")]
    solver: SolverKind,
    /// Solver command; receives the input and output paths as its last two arguments.
    #[arg(long)]
    external_cmd: Option<String>,
    #[arg(long, value_enum, default_value = "primal")]
    solver_output_convention: Convention,
    #[arg(long, default_value_t = 1e-8)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1e-7)]
    clip_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    residual_tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Skip reduction and splitting; solve one Gram system over the dense basis.
    #[arg(long)]
    no_split: bool,
    #[arg(long)]
    no_prechecks: bool,
    /// Directory for the per-leaf `.dat-s` files.
    #[arg(long)]
    sdpa_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

impl PipelineArgs {
    fn run_options(&self, input_id: String) -> Result<RunOptions> {
        let mode = match self.solver {
            SolverKind::Embedded => SolverMode::Embedded,
            SolverKind::External => SolverMode::External {
                command: self
                    .external_cmd
                    .clone()
                    .context("--solver external needs --external-cmd")?,
                convention: match self.solver_output_convention {
                    Convention::Primal => OutputConvention::Primal,
                    Convention::Dual => OutputConvention::Dual,
                },
                workdir: self.sdpa_dir.clone(),
            },
        };
        Ok(RunOptions {
            input_id,
            split: !self.no_split,
            prechecks: !self.no_prechecks,
            solve: SolveOptions {
                feas_tol: self.feas_tol,
                max_iter: self.max_iter,
                mode,
                ..SolveOptions::default()
            },
            clip_tol: self.clip_tol,
            residual_tol: self.residual_tol,
            sdpa_dir: self.sdpa_dir.clone(),
            keep_certificate: true,
        })
    }
}

#[derive(Args)]
struct CheckArgs {
    /// Polynomial file, or `-` for standard input.
    input: String,
    #[arg(long)]
    json: bool,
    /// Comma-separated variable order; defaults to order of appearance.
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ReduceArgs {
    input: String,
    #[arg(long)]
    json: bool,
    #[arg(long, value_delimiter = ',')]
    vars: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum GenFamily {
    Bm {
        #[arg(long)]
        m: usize,
    },
    Sqr {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Rn {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Named {
        name: String,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BenchFamily {
    Bm,
    Sqr,
    Rn,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    family: BenchFamily,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path, `-` for standard output.
    #[arg(long, default_value = "-")]
    csv: String,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Groups such as `sqr(4,5,6,3)` or `rn(5,6)`.
    #[arg(long, num_args = 1.., required = true)]
    groups: Vec<String>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    csv: String,
}

fn read_input(input: &str) -> Result<String> {
    let mut text = String::new();
    if input == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .context("reading standard input")?;
    } else {
        text = std::fs::read_to_string(input).with_context(|| format!("reading {input}"))?;
    }
    // `#` starts a comment that runs to the end of the line
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn load(input: &str, vars: Option<&[String]>) -> Result<(Polynomial, Vec<String>)> {
    let text = read_input(input)?;
    parse_with_names(&text, vars).map_err(|e| anyhow::anyhow!("{input}: {e}"))
}

fn input_id(input: &str) -> String {
    if input == "-" {
        return "stdin".into();
    }
    Path::new(input)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| input.to_string())
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn print_report(out: &mut impl Write, r: &RunReport, names: &[String]) -> std::io::Result<()> {
    writeln!(out, "verdict: {}", r.verdict.as_str())?;
    if let (Some(g0), Some(g)) = (r.g0_size, r.g_size) {
        writeln!(out, "basis: {g0} after pruning, {g} after map deletion")?;
    }
    writeln!(
        out,
        "split: {} leaves, largest basis {}",
        r.split_shape.b, r.split_shape.s
    )?;
    if let Some(point) = &r.refutation_support_point {
        let reason = serde_json::to_value(r.refutation_reason).unwrap_or_default();
        let witness = r.refutation_witness.as_ref().map(|w| w.to_string()).unwrap_or_default();
        writeln!(
            out,
            "refuted: {} at support point {point} (witness {witness})",
            reason.as_str().unwrap_or("")
        )?;
    }
    if let Some(res) = r.residual {
        writeln!(out, "residual: {res:e}")?;
    }
    if let Some(cert) = &r.certificate {
        if r.verdict == sossplit_core::bench::Verdict::Sos {
            let squares: Vec<String> = cert
                .squares
                .iter()
                .map(|q| format!("({})^2", q.display_with(names, Some(6))))
                .collect();
            writeln!(
                out,
                "certificate: {}",
                if squares.is_empty() {
                    "0".into()
                } else {
                    squares.join(" + ")
                }
            )?;
        }
    }
    if let Some(note) = &r.note {
        writeln!(out, "note: {note}")?;
    }
    writeln!(out, "time: {:.1} ms", r.timings_ms.total)
}

fn cmd_check(args: &CheckArgs) -> Result<u8> {
    set_threads(args.pipeline.threads)?;
    let (p, names) = load(&args.input, args.vars.as_deref())?;
    let opts = args.pipeline.run_options(input_id(&args.input))?;
    let report = run_check(&p, &opts);
    let mut out = std::io::stdout().lock();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        print_report(&mut out, &report, &names)?;
    }
    Ok(report.verdict.exit_code() as u8)
}

#[derive(Serialize)]
struct ReduceOutput {
    g0_size: usize,
    g_size: usize,
    basis: Vec<sossplit_core::Exponent>,
}

fn cmd_reduce(args: &ReduceArgs) -> Result<u8> {
    let (p, names) = load(&args.input, args.vars.as_deref())?;
    if p.is_zero() {
        bail!("the zero polynomial has no basis to reduce");
    }
    let g0 = algpca(&p)?;
    let g = algexa(&p)?;
    let reduced = ReduceOutput {
        g0_size: g0.len(),
        g_size: g.len(),
        basis: g.to_vec(),
    };
    let mut out = std::io::stdout().lock();
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&reduced)?)?;
    } else {
        writeln!(out, "g0_size: {}", reduced.g0_size)?;
        writeln!(out, "g_size: {}", reduced.g_size)?;
        let monomials: Vec<String> = reduced
            .basis
            .iter()
            .map(|e| {
                let m = Polynomial::monomial(sossplit_core::poly::integer(1), e.clone());
                let text = m.display_with(&names).to_string();
                text
            })
            .collect();
        writeln!(out, "basis: {}", monomials.join(", "))?;
    }
    Ok(0)
}

fn cmd_gen(family: &GenFamily) -> Result<u8> {
    let p = match family {
        GenFamily::Bm { m } => gen_bm(*m)?,
        GenFamily::Sqr { k, n, d, t, seed } => gen_sqr(*k, *n, *d, *t, *seed)?.0,
        GenFamily::Rn { n, d, seed } => gen_rn(*n, *d, *seed)?,
        GenFamily::Named { name } => gen_named(name)?,
    };
    writeln!(std::io::stdout().lock(), "{p}")?;
    Ok(0)
}

#[derive(Serialize)]
struct BenchRow {
    input_id: String,
    n: usize,
    d: u64,
    g0: Option<usize>,
    g: Option<usize>,
    b: usize,
    s: usize,
    verdict: &'static str,
    residual: Option<f64>,
    ms_total: f64,
}

impl From<&RunReport> for BenchRow {
    fn from(r: &RunReport) -> Self {
        BenchRow {
            input_id: r.input_id.clone(),
            n: r.nvars,
            d: r.degree,
            g0: r.g0_size,
            g: r.g_size,
            b: r.split_shape.b,
            s: r.split_shape.s,
            verdict: r.verdict.as_str(),
            residual: r.residual,
            ms_total: r.timings_ms.total,
        }
    }
}

fn csv_writer(path: &str) -> Result<csv::Writer<Box<dyn std::io::Write>>> {
    let sink: Box<dyn std::io::Write> = if path == "-" {
        Box::new(std::io::stdout())
    } else {
        Box::new(std::fs::File::create(path).with_context(|| format!("creating {path}"))?)
    };
    Ok(csv::Writer::from_writer(sink))
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.with_context(|| format!("this family needs --{flag}"))
}

fn cmd_bench(args: &BenchArgs) -> Result<u8> {
    set_threads(args.pipeline.threads)?;
    let family = match args.family {
        BenchFamily::Bm => Family::Bm { m: need(args.m, "m")? },
        BenchFamily::Sqr => Family::Sqr {
            k: need(args.k, "k")?,
            n: need(args.n, "n")?,
            d: need(args.d, "d")?,
            t: need(args.t, "t")?,
        },
        BenchFamily::Rn => Family::Rn {
            n: need(args.n, "n")?,
            d: need(args.d, "d")?,
        },
    };
    let trials = if matches!(family, Family::Bm { .. }) {
        1
    } else {
        args.trials
    };
    let mut out = csv_writer(&args.csv)?;
    for i in 0..trials {
        let spec = GenSpec::new(family.clone(), trial_seed(args.seed, i));
        let p = spec.generate()?;
        let report = run_check(&p, &args.pipeline.run_options(spec.id())?);
        out.serialize(BenchRow::from(&report))?;
        out.flush()?;
    }
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<u8> {
    let groups = args
        .groups
        .iter()
        .map(|g| g.parse::<Family>().map_err(anyhow::Error::msg))
        .collect::<Result<Vec<_>>>()?;
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let rows = compare_pruning(&groups, args.trials, args.seed)?;
    let mut out = csv_writer(&args.csv)?;
    for row in &rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(0)
}

/// A reader that closed stdout early (`| head`) is not an error.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| {
            c.downcast_ref::<csv::Error>().and_then(|e| match e.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            })
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Gen { family } => cmd_gen(family),
        Command::Bench(a) => cmd_bench(a),
        Command::ComparePruning(a) => cmd_compare(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
