//! `stratprice`: simulate, sweep, solve and verify repeated posted-price auctions.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::LazyLock;

use clap::{Parser, Subcommand};

use stratprice_core::buyers::BUYER_GRAMMAR;
use stratprice_core::experiments::{
    fmt_float, read_csv, render_chart, run_episode, run_sweep, summarize, write_csv, CsvContents, EpisodeOptions,
    ExperimentConfig, Summary,
};
use stratprice_core::model::{parse_decimal, Discount, ValueModel};
use stratprice_core::sellers::{SellerSpec, SellerTransducer, SELLER_GRAMMAR};
use stratprice_core::solver::{policy_path, solve_best_response, SolverOptions, SOLVER_CAP_ENV};
use stratprice_core::verify::{self, Suite};
use stratprice_core::{BuyerSpec, Error};

const VALUE_GRAMMAR: &str = "\
  fixed:<v>                      constant value v in [0,1]
  uniform:<v1>,<v2>,...          equally likely values, strictly ascending
  dist:<v1>@<p1>,<v2>@<p2>,...   values with probabilities summing to 1";

static SPEC_HELP: LazyLock<String> = LazyLock::new(|| {
    format!(
        "Seller specs:\n{SELLER_GRAMMAR}\n\nBuyer specs:\n{BUYER_GRAMMAR}\n\nValue models:\n{VALUE_GRAMMAR}\n\n\
         Numbers are plain decimals (no exponents). {SOLVER_CAP_ENV} overrides the solver horizon cap (default 20).\n\
         Exit codes: 0 success, 1 usage/config error, 2 runtime error, 3 verification failure."
    )
});

#[derive(Parser)]
#[command(name = "stratprice", version, about = "Repeated posted-price auctions with strategic buyers")]
#[command(after_help = SPEC_HELP.as_str())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn decimal(s: &str) -> Result<f64, String> {
    parse_decimal(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Play one episode and print the round-by-round table.
    #[command(after_help = SPEC_HELP.as_str())]
    Simulate {
        #[arg(long)]
        seller: String,
        #[arg(long)]
        buyer: String,
        #[arg(long)]
        value: String,
        #[arg(long, value_parser = decimal)]
        gamma: f64,
        #[arg(long)]
        rounds: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the transcript as CSV (t,price,accepted,value).
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Run a JSON-configured parameter sweep and write the row CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; defaults to the config's `output`, else standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Solve the fixed-value buyer's exact best response.
    #[command(after_help = SPEC_HELP.as_str())]
    BestResponse {
        #[arg(long)]
        seller: String,
        /// Buyer value, as `<v>` or `fixed:<v>`.
        #[arg(long)]
        value: String,
        #[arg(long, value_parser = decimal)]
        gamma: f64,
        #[arg(long)]
        rounds: u32,
        /// Export the policy table.
        #[arg(long)]
        policy: Option<PathBuf>,
    },
    /// Run the verification checks.
    Verify {
        #[arg(long, default_value = "all", value_parser = ["core", "sellers", "solver", "bounds", "all"])]
        suite: String,
    },
    /// Render a regret-vs-T SVG chart from a sweep or summary CSV.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(String),
    Runtime(String),
    Verification,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Verification => 3,
        }
    }
}

fn classify(err: Error) -> Failure {
    match err {
        Error::InvalidArgument(_) | Error::Parse { .. } | Error::ResourceLimit { .. } => Failure::Usage(err.to_string()),
        _ => Failure::Runtime(err.to_string()),
    }
}

fn usage(err: Error) -> Failure {
    Failure::Usage(err.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) | Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Verification => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate {
            seller,
            buyer,
            value,
            gamma,
            rounds,
            seed,
            transcript,
        } => simulate(&seller, &buyer, &value, gamma, rounds, seed, transcript.as_deref()),
        Command::Sweep { config, out, jobs } => sweep(&config, out, jobs),
        Command::BestResponse {
            seller,
            value,
            gamma,
            rounds,
            policy,
        } => best_response(&seller, &value, gamma, rounds, policy.as_deref()),
        Command::Verify { suite } => run_verify(&suite),
        Command::Plot { input, out } => plot(&input, &out),
    }
}

fn solver_options() -> Result<SolverOptions, Failure> {
    SolverOptions::from_env().map_err(usage)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn simulate(
    seller: &str,
    buyer: &str,
    value: &str,
    gamma: f64,
    rounds: u32,
    seed: u64,
    transcript: Option<&Path>,
) -> Result<(), Failure> {
    let seller = SellerSpec::parse(seller).map_err(usage)?;
    let buyer = BuyerSpec::parse(buyer).map_err(usage)?;
    let vm = ValueModel::parse(value).map_err(usage)?;
    let gamma = Discount::new(gamma).map_err(usage)?;
    if rounds == 0 {
        return Err(Failure::Usage("--rounds must be at least 1".into()));
    }
    let options = EpisodeOptions {
        solver: solver_options()?,
        ..Default::default()
    };
    let (tr, result) = run_episode(&seller, &buyer, &vm, gamma, rounds, seed, &options).map_err(classify)?;
    println!("{:>6}  {:>14}  accepted", "t", "price");
    for r in tr.records() {
        println!("{:>6}  {:>14}  {}", r.t, fmt_float(r.price.get()), if r.accepted { "yes" } else { "no" });
    }
    println!("revenue        {}", fmt_float(result.revenue));
    println!("surplus        {}", fmt_float(result.surplus));
    println!("benchmark_rate {}", fmt_float(result.benchmark_rate));
    println!("regret         {}", fmt_float(result.regret));
    if let Some(path) = transcript {
        write_file(path, &tr.to_csv())?;
    }
    Ok(())
}

fn print_summaries(summaries: &[Summary], to_stderr: bool) {
    let mut lines = vec![format!(
        "{:<24} {:<16} {:>6} {:>7} {:>5} {:>14} {:>12} {:>14} {:>14}",
        "seller", "buyer", "gamma", "T", "n", "regret", "stderr", "revenue", "surplus"
    )];
    for s in summaries {
        lines.push(format!(
            "{:<24} {:<16} {:>6} {:>7} {:>5} {:>14} {:>12} {:>14} {:>14}",
            s.seller,
            s.buyer,
            fmt_float(s.gamma),
            s.horizon,
            s.n,
            fmt_float(s.regret.mean),
            fmt_float(s.regret.stderr),
            fmt_float(s.revenue.mean),
            fmt_float(s.surplus.mean)
        ));
    }
    for l in lines {
        if to_stderr {
            eprintln!("{l}");
        } else {
            println!("{l}");
        }
    }
}

fn sweep(config: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<(), Failure> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", config.display())))?;
    let raw = ExperimentConfig::from_json(&text).map_err(usage)?;
    let resolved = raw.resolve().map_err(usage)?;
    if jobs == Some(0) {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let output = run_sweep(&resolved, jobs, solver_options()?).map_err(|e| match e {
        Error::Row { .. } => Failure::Runtime(e.to_string()),
        other => classify(other),
    })?;
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    let summaries = summarize(&output.rows).map_err(classify)?;
    match out.or(raw.output) {
        Some(path) => {
            write_csv(&output.rows, &path).map_err(classify)?;
            print_summaries(&summaries, false);
            println!("wrote {} rows to {}", output.rows.len(), path.display());
        }
        None => {
            print!("{}", stratprice_core::experiments::rows_to_csv(&output.rows));
            print_summaries(&summaries, true);
        }
    }
    Ok(())
}

fn best_response(seller: &str, value: &str, gamma: f64, rounds: u32, policy: Option<&Path>) -> Result<(), Failure> {
    let spec = SellerSpec::parse(seller).map_err(usage)?;
    let v = match value.strip_prefix("fixed:") {
        Some(v) => parse_decimal(v),
        None => parse_decimal(value),
    }
    .map_err(usage)?;
    let gamma = Discount::new(gamma).map_err(usage)?;
    let s = spec.build(rounds).map_err(usage)?;
    let report = solve_best_response(&s, v, gamma, &solver_options()?).map_err(classify)?;
    println!("seller                 {}", s.label());
    println!("optimal_surplus        {}", fmt_float(report.optimal_surplus));
    println!("truthful_surplus       {}", fmt_float(report.truthful_surplus));
    println!("expected_revenue       {}", fmt_float(report.expected_revenue_under_policy));
    println!("regret                 {}", fmt_float(report.regret_under_policy));
    println!("nodes                  {}", report.node_count);
    if s.is_deterministic() {
        let path = policy_path(&report.policy, &s).map_err(classify)?;
        let decisions: Vec<String> = path
            .iter()
            .map(|(p, a)| format!("{}:{}", fmt_float(p.get()), if *a { "accept" } else { "reject" }))
            .collect();
        println!("path                   {}", decisions.join(" "));
    }
    if let Some(path) = policy {
        write_file(path, &report.policy.export())?;
    }
    Ok(())
}

fn run_verify(suite: &str) -> Result<(), Failure> {
    let suite: Suite = suite.parse().map_err(usage)?;
    let checks = verify::run(suite);
    let mut failed = 0;
    for c in &checks {
        println!("{c}");
        if !c.passed {
            failed += 1;
        }
    }
    println!("{} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        Err(Failure::Verification)
    } else {
        Ok(())
    }
}

fn plot(input: &Path, out: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", input.display())))?;
    let summaries = match read_csv(&text).map_err(usage)? {
        CsvContents::Rows(rows) => summarize(&rows).map_err(usage)?,
        CsvContents::Summaries(s) => s,
    };
    render_chart(&summaries, out).map_err(classify)
}
