//! Command-line front end. Every subcommand is a thin shell over the
//! library: parse or read input, call one pipeline operation, write the
//! result. Paths accept `-` for stdin/stdout so stages compose in pipes.
//!
//! Exit codes: 0 on success, 1 on domain errors (bad input, failed
//! checks), 2 on usage errors.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cwlabel::kexpr::{evaluate, gen_cotree, gen_random, parse, render, GenRandomParams, KExpr};
use cwlabel::labels::{decode, encode_with, label_stats, pack, read_cwl, write_cwl};
use cwlabel::probe::with_random_masks;
use cwlabel::union_tree::{check_proper, make_proper, UnionTree};
use cwlabel::verify::{run_suite, verify_instance_with, SuiteGrid};
use cwlabel::Parallelism;

#[derive(Parser)]
#[command(name = "cwlabel", version, about = "Adjacency labels for graphs of bounded clique-width")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random k-expression (.kx).
    Gen(GenArgs),
    /// Generate a random cograph 2-expression (.kx).
    CotreeGen(CotreeGenArgs),
    /// Evaluate an expression to its edge list (.edges).
    Eval(InOutArgs),
    /// Report whether every edge is created at its endpoints' lca; exits 1
    /// if not.
    CheckProper(InArgs),
    /// Rewrite an expression to pass check-proper, preserving its graph.
    Properize(InOutArgs),
    /// Build the per-vertex label file (.cwl). Refuses improper input;
    /// run properize first.
    Encode(InOutArgs),
    /// Decide adjacency of two vertices from their labels alone; prints
    /// "1" or "0".
    Query(QueryArgs),
    /// Print label and decomposition statistics as JSON.
    Stats(InArgs),
    /// Check decoding against the brute-force oracle: one instance (.kx),
    /// a label file's integrity (.cwl), or a full generated suite; exits
    /// 1 on any mismatch.
    Verify(VerifyArgs),
    /// Time encoding and decoding on a generated instance; prints JSON.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of vertices.
    #[arg(long)]
    n: usize,
    /// Label budget (clique-width bound), at least 2.
    #[arg(long)]
    k: u16,
    /// Probe mask width; 0 generates no masks.
    #[arg(long, default_value_t = 0)]
    w: u16,
    #[arg(long, default_value_t = 0.2)]
    p_join: f64,
    #[arg(long, default_value_t = 0.3)]
    p_relabel: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CotreeGenArgs {
    /// Number of vertices.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct InArgs {
    /// Input path, or - for stdin.
    input: PathBuf,
}

#[derive(Args)]
struct InOutArgs {
    /// Input path, or - for stdin.
    input: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    /// Label file (.cwl), or - for stdin.
    file: PathBuf,
    u: String,
    v: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Instance to verify (.kx or .cwl, - for stdin). Omit to sweep a
    /// generated suite instead.
    input: Option<PathBuf>,
    /// Suite vertex counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 8, 16, 64, 256, 1024, 4096])]
    n: Vec<usize>,
    /// Suite label budgets, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2u16, 3, 4, 8])]
    k: Vec<u16>,
    /// Suite probe widths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0u16])]
    w: Vec<u16>,
    /// Instances per grid cell.
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0.2)]
    p_join: f64,
    #[arg(long, default_value_t = 0.3)]
    p_relabel: f64,
    #[arg(long, default_value_t = 0x5eed_cafe)]
    seed: u64,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    k: u16,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random pair queries to time.
    #[arg(long, default_value_t = 1_000_000)]
    trials: usize,
    /// Run single-threaded.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).context("reading stdin")?;
        Ok(buf)
    } else {
        std::fs::read(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn read_expr(path: &Path) -> Result<KExpr> {
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).context("expression is not UTF-8")?;
    let expr = parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    cwlabel::kexpr::validate(&expr)?;
    Ok(expr)
}

fn write_bytes(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display())),
        None => write_stdout(bytes),
    }
}

/// Writes to stdout, treating a pipe closed downstream as success rather
/// than an error.
fn write_stdout(bytes: &[u8]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(bytes).and_then(|_| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(e).context("writing stdout"),
    }
}

fn print_line(text: &str) -> Result<()> {
    write_stdout(format!("{text}\n").as_bytes())
}

fn parallelism(sequential: bool) -> Parallelism {
    if sequential {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => {
            let mut expr = gen_random(GenRandomParams {
                n: args.n,
                k: args.k,
                p_join: args.p_join,
                p_relabel: args.p_relabel,
                seed: args.seed,
            })?;
            if args.w > 0 {
                expr = with_random_masks(&expr, args.w, args.seed);
            }
            write_bytes(args.output.as_deref(), format!("{}\n", render(&expr)).as_bytes())?;
        }
        Command::CotreeGen(args) => {
            let expr = gen_cotree(args.n, args.seed)?;
            write_bytes(args.output.as_deref(), format!("{}\n", render(&expr)).as_bytes())?;
        }
        Command::Eval(args) => {
            let expr = read_expr(&args.input)?;
            write_bytes(args.output.as_deref(), evaluate(&expr).to_edges_format().as_bytes())?;
        }
        Command::CheckProper(args) => {
            let expr = read_expr(&args.input)?;
            let report = check_proper(&UnionTree::from_kexpression(&expr));
            print_line(&serde_json::to_string_pretty(&report)?)?;
            if !report.proper {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Properize(args) => {
            let expr = read_expr(&args.input)?;
            let proper = make_proper(&UnionTree::from_kexpression(&expr));
            let text = format!("{}\n", render(&proper.to_kexpression()));
            write_bytes(args.output.as_deref(), text.as_bytes())?;
        }
        Command::Encode(args) => {
            let expr = read_expr(&args.input)?;
            let tree = UnionTree::from_kexpression(&expr);
            let labeling = encode_with(&tree, Parallelism::default())?;
            let mut buf = Vec::new();
            write_cwl(&labeling, &mut buf)?;
            write_bytes(args.output.as_deref(), &buf)?;
        }
        Command::Query(args) => {
            let labeling = read_cwl(read_bytes(&args.file)?.as_slice())?;
            let adjacent = labeling.adjacent(&args.u, &args.v)?;
            print_line(&(adjacent as u8).to_string())?;
        }
        Command::Stats(args) => {
            let bytes = read_bytes(&args.input)?;
            let json = if bytes.starts_with(b"CWL1") {
                let labeling = read_cwl(bytes.as_slice())?;
                serde_json::json!({ "labels": label_stats(&labeling) })
            } else {
                let text = String::from_utf8(bytes).context("expression is not UTF-8")?;
                let expr = parse(&text)?;
                cwlabel::kexpr::validate(&expr)?;
                let tree = UnionTree::from_kexpression(&expr);
                let properized = !check_proper(&tree).proper;
                let tree = if properized { make_proper(&tree) } else { tree };
                let labeling = encode_with(&tree, Parallelism::default())?;
                serde_json::json!({
                    "properized": properized,
                    "decomposition": cwlabel::decomposition::stats(&tree),
                    "labels": label_stats(&labeling),
                })
            };
            print_line(&serde_json::to_string_pretty(&json)?)?;
        }
        Command::Verify(args) => {
            let par = parallelism(args.sequential);
            let passed = match &args.input {
                Some(path) => {
                    let bytes = read_bytes(path)?;
                    if bytes.starts_with(b"CWL1") {
                        // A label file alone has no oracle; reading it
                        // already enforces every structural check.
                        let labeling = read_cwl(bytes.as_slice())?;
                        let json = serde_json::json!({
                            "file": path.display().to_string(),
                            "valid": true,
                            "labels": label_stats(&labeling),
                        });
                        print_line(&serde_json::to_string_pretty(&json)?)?;
                        true
                    } else {
                        let text = String::from_utf8(bytes).context("expression is not UTF-8")?;
                        let expr = parse(&text)?;
                        let report =
                            verify_instance_with(&expr, &path.display().to_string(), None, par);
                        print_line(&serde_json::to_string_pretty(&report)?)?;
                        report.passed()
                    }
                }
                None => {
                    let grid = SuiteGrid {
                        ns: args.n.clone(),
                        ks: args.k.clone(),
                        ws: args.w.clone(),
                        trials: args.trials,
                        p_join: args.p_join,
                        p_relabel: args.p_relabel,
                        seed: args.seed,
                    };
                    let report = run_suite(&grid, par);
                    print_line(&report.to_json())?;
                    report.passed
                }
            };
            if !passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Bench(args) => {
            let report = bench(&args)?;
            print_line(&serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(args: &BenchArgs) -> Result<serde_json::Value> {
    if args.trials == 0 {
        bail!("trials must be at least 1");
    }
    let expr = gen_random(GenRandomParams {
        n: args.n,
        k: args.k,
        p_join: 0.2,
        p_relabel: 0.3,
        seed: args.seed,
    })?;
    let par = parallelism(args.sequential);
    let tree = make_proper(&UnionTree::from_kexpression(&expr));
    let start = Instant::now();
    let labeling = encode_with(&tree, par)?;
    let encode_seconds = start.elapsed().as_secs_f64();
    let stats = label_stats(&labeling);

    let payloads: Vec<Vec<u8>> = labeling.labels.values().map(pack).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0xbe7c);
    let pairs: Vec<(usize, usize)> = (0..args.trials)
        .map(|_| {
            let i = rng.gen_range(0..payloads.len());
            let mut j = rng.gen_range(0..payloads.len() - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    let start = Instant::now();
    let mut ones = 0u64;
    for &(i, j) in &pairs {
        ones += decode(&payloads[i], &payloads[j])? as u64;
    }
    let decode_ns = start.elapsed().as_nanos() as f64 / args.trials as f64;

    Ok(serde_json::json!({
        "n": args.n,
        "k": args.k,
        "seed": args.seed,
        "parallel": par.is_parallel(),
        "encode_seconds": encode_seconds,
        "queries": args.trials,
        "decode_ns_per_query": decode_ns,
        "adjacent_fraction": ones as f64 / args.trials as f64,
        "labels": stats,
    }))
}
