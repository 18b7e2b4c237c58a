use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use noisy_dialog::adversary::AdversarySpec;
use noisy_dialog::channel::ChannelLog;
use noisy_dialog::config::{derive_params, ParamSpec};
use noisy_dialog::harness::{
    aggregate, attack_experiment, run_outcomes, sweep, write_aggregate_json, write_results_csv, BatchSpec, DagSource,
};
use noisy_dialog::{ecc, hash, meeting, Result};

#[derive(Parser)]
#[command(name = "noisy-dialog", version, about = "Simulate small-space interactive coding over an adversarial channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded trials.
    Run(RunArgs),
    /// Run the same batch at several noise rates.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated noise rates.
        #[arg(long, value_delimiter = ',', default_value = "0.02,0.01,0.005,0.002")]
        epsilons: Vec<f64>,
    },
    /// Paired runs of an attack with the third meeting point on and off.
    Attack(RunArgs),
    /// Check the meeting-point properties exhaustively on small ranges.
    Selftest,
    /// Print hash and error-correction golden vectors.
    Vectors,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Key = value parameter file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    depth: Option<u64>,
    #[arg(long)]
    states: Option<u64>,
    /// noise_free, random_flip[:p], burst:START:LEN, figure1[:DIVE:KICKS:START],
    /// sneaky[:W:ATTACKS:START] or greedy_desync.
    #[arg(long, default_value = "noise_free")]
    adversary: String,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, env = "NOISY_DIALOG_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mp3: Option<Toggle>,
    /// Protocol file instead of random DAGs.
    #[arg(long)]
    dag: Option<PathBuf>,
    /// Channel trace of the first trial (CSV).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Per-iteration ghost trace of the first trial (CSV).
    #[arg(long)]
    ghost_trace: Option<PathBuf>,
    /// Output prefix: writes PREFIX.csv and PREFIX.json. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl RunArgs {
    fn batch(&self) -> Result<BatchSpec> {
        let mut params = match &self.config {
            Some(path) => ParamSpec::load(path)?,
            None => ParamSpec::default(),
        };
        if let Some(e) = self.epsilon {
            params.epsilon = e;
        }
        if let Some(d) = self.depth {
            params.depth = d;
        }
        if let Some(s) = self.states {
            params.states = s;
        }
        if let Some(seed) = self.seed {
            params.seed = seed;
        }
        if let Some(t) = self.mp3 {
            params.mp3_enabled = matches!(t, Toggle::On);
        }
        derive_params(&params)?;
        let adversary: AdversarySpec = self.adversary.parse()?;
        let mut batch = BatchSpec::new(params, adversary, self.trials);
        batch.workers = self.workers;
        batch.options.trace = self.trace.is_some();
        if let Some(path) = &self.dag {
            batch.dag = DagSource::File(path.clone());
        }
        Ok(batch)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes CSV and JSON either to PREFIX.csv / PREFIX.json or both to stdout.
fn emit(out: &Option<PathBuf>, csv: impl FnOnce(&mut dyn Write) -> Result<()>, json: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(prefix) => {
            csv(&mut create(&prefix.with_extension("csv"))?)?;
            json(&mut create(&prefix.with_extension("json"))?)?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            csv(&mut lock)?;
            json(&mut lock)?;
        }
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let batch = args.batch()?;
    let want_first = args.trace.is_some() || args.ghost_trace.is_some();
    let outcomes = run_outcomes(&batch, |i| want_first && i == 0)?;
    if let Some((_, Some(first))) = outcomes.first() {
        if let Some(path) = &args.trace {
            let mut log = ChannelLog::new(create(path)?)?;
            for record in &first.channel {
                log.record(record)?;
            }
            log.finish()?;
        }
        if let Some(path) = &args.ghost_trace {
            first.ghost.write_trace(create(path)?)?;
        }
    }
    let results: Vec<_> = outcomes.into_iter().map(|(r, _)| r).collect();
    let agg = aggregate(&batch, &results);
    log::info!("{} of {} trials succeeded", agg.successes, agg.trials);
    emit(&args.out, |w| write_results_csv(w, &results), |w| write_aggregate_json(w, &agg))
}

fn selftest() -> Result<()> {
    let mut failed = false;
    let mut report = |name: &str, outcome: std::result::Result<u64, String>| match outcome {
        Ok(n) => println!("ok    {name} ({n} cases)"),
        Err(e) => {
            failed = true;
            println!("FAIL  {name}: {e}");
        }
    };
    report("membership p in M_a, p, a <= 4096", meeting::checks::membership(1 << 12));
    report("common point, l <= 1024, j <= 8", meeting::checks::common_point(1 << 10, 8));
    report("forgetting on 1000 random walks", meeting::checks::forgetting_walks(1000, 300, 1));
    if failed {
        Err(noisy_dialog::Error::Parameter("selftest failed".into()))
    } else {
        Ok(())
    }
}

fn vectors() -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "# hash: t o len input_hex seed_hex output_hex")?;
    for line in hash::golden_vectors() {
        writeln!(out, "{line}")?;
    }
    writeln!(out, "# ecc: msg_len guard message_hex codeword_hex")?;
    for line in ecc::golden_vectors() {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Sweep { run, epsilons } => run.batch().and_then(|batch| {
            let points = sweep(&batch, epsilons)?;
            let results: Vec<_> = points.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
            let summary: Vec<_> = points.into_iter().map(|(p, _)| p).collect();
            emit(&run.out, |w| write_results_csv(w, &results), |w| write_aggregate_json(w, &summary))
        }),
        Command::Attack(args) => args.batch().and_then(|batch| {
            let (report, [on, off]) = attack_experiment(&batch)?;
            let results: Vec<_> = on.into_iter().chain(off).collect();
            emit(&args.out, |w| write_results_csv(w, &results), |w| write_aggregate_json(w, &report))
        }),
        Command::Selftest => selftest(),
        Command::Vectors => vectors(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
