use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ising_learn::compile::{LambdaPolicy, PenaltyConfig};
use ising_learn::data::MnistConfig;
use ising_learn::poly::parse_rational;
use ising_learn::solver::{success_probability, AnnealSchedule};
use ising_learn::topology::NetworkSpec;
use ising_learn::workflow::{self, DataSource, RunConfig, WorkflowError};

#[derive(Parser)]
#[command(name = "ising-learn", version, about = "Train quantized networks by compiling them to QUBO")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a network and dataset into a QUBO with its manifests.
    Compile(RunArgs),
    /// Solve a QUBO file.
    Solve {
        qubo: PathBuf,
        /// Variable manifest enabling the conditioned exact solver.
        #[arg(long)]
        variables: Option<PathBuf>,
        #[command(flatten)]
        sched: SchedArgs,
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value = "report.txt")]
        out: PathBuf,
    },
    /// Compile, solve, decode and evaluate.
    Train(RunArgs),
    /// Spin budget of an architecture over dataset sizes.
    CountSpins {
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        layers: usize,
        #[arg(long, default_value_t = 1)]
        hidden: usize,
        #[arg(long, default_value_t = 4)]
        inputs: usize,
        #[arg(long, default_value_t = 1)]
        outputs: usize,
        #[arg(long, default_value_t = 0)]
        input_bits: u32,
        /// Dataset sizes.
        #[arg(short = 'N', long = "samples", value_delimiter = ',', default_value = "4")]
        samples: Vec<usize>,
    },
    /// Preprocess the 6/9 MNIST digits into a dataset file.
    PreprocessMnist {
        /// Directory with IDX files (default: ISING_LEARN_DATA_DIR or the vendored subset).
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value_t = 127)]
        threshold: u8,
        #[arg(long, default_value_t = 0.1)]
        t1: f64,
        #[arg(long, default_value_t = 0.35)]
        t2: f64,
        /// Also write a stratified train/test split with this many samples per class.
        #[arg(long)]
        per_class: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "mnist69.txt")]
        out: PathBuf,
    },
    /// Generate a quantized two-moon dataset.
    GenTwoMoon {
        #[arg(short = 'N', long = "samples", default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = ising_learn::data::TWO_MOON_DEFAULT_NOISE)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        input_bits: u32,
        #[arg(long, default_value = "two_moon.txt")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SchedArgs {
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long, default_value_t = 100)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    /// Wall-clock budget per restart; replaces --sweeps by a calibrated count.
    #[arg(long)]
    time_budget_ms: Option<u64>,
}

impl SchedArgs {
    fn schedule(&self) -> AnnealSchedule {
        AnnealSchedule {
            sweeps: self.sweeps,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
            restarts: self.restarts,
            seed: self.seed,
            time_budget_ms: self.time_budget_ms,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    net: PathBuf,
    /// Dataset file, `two-moon:n=..,noise=..,seed=..,bits=..` or `mnist:per_class=..,seed=..`.
    #[arg(long)]
    data: String,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    rho: Option<String>,
    /// `auto` or `fixed:<value>`.
    #[arg(long, default_value = "auto")]
    lambda: String,
    #[command(flatten)]
    sched: SchedArgs,
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value = "run")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, WorkflowError> {
        let rho = match &self.rho {
            Some(r) => Some(parse_rational(r).map_err(WorkflowError::Config)?),
            None => None,
        };
        let lambda: LambdaPolicy = self.lambda.parse()?;
        let mut cfg = RunConfig::new(&self.net, self.data.parse::<DataSource>()?, &self.out);
        cfg.test = self.test.clone();
        cfg.penalty = PenaltyConfig { rho, lambda };
        cfg.schedule = self.sched.schedule();
        cfg.exact = self.exact;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), WorkflowError> {
    match cli.cmd {
        Cmd::Compile(args) => {
            let out = workflow::cmd_compile(&args.config()?)?;
            let c = &out.compiled;
            println!("original {} auxiliary {} total {}", c.original_bits, c.auxiliary_bits(), c.qubo.num_vars);
        }
        Cmd::Solve { qubo, variables, sched, exact, out } => {
            let r = workflow::cmd_solve(&qubo, variables.as_deref(), &sched.schedule(), exact, &out)?;
            println!("best_rescaled {} hits {} p_s {}", r.best.rescaled, r.hits, success_probability(&r));
        }
        Cmd::Train(args) => {
            let out = workflow::cmd_train(&args.config()?)?;
            print!("{}", out.params.to_text());
            println!("hits {} p_s {}", out.report.hits, success_probability(&out.report));
            println!("train accuracy {:.4} mse {}", out.train_eval.accuracy, out.train_eval.mse);
            if let Some(t) = out.test_eval {
                println!("test accuracy {:.4} ({} / {})", t.accuracy, t.correct, t.total);
            }
        }
        Cmd::CountSpins { net, layers, hidden, inputs, outputs, input_bits, samples } => {
            let spec = match net {
                Some(p) => NetworkSpec::parse(&std::fs::read_to_string(&p).map_err(|source| WorkflowError::Io { path: p.display().to_string(), source })?)?,
                None => NetworkSpec::dense(layers, hidden, inputs, outputs, input_bits),
            };
            print!("{}", workflow::cmd_count_spins(&spec, &samples)?.1);
        }
        Cmd::PreprocessMnist { dir, threshold, t1, t2, per_class, seed, out } => {
            let cfg = MnistConfig { binarize_threshold: threshold, t1, t2, ..MnistConfig::default() };
            let dir = dir.unwrap_or_else(ising_learn::data::data_dir);
            let ds = workflow::cmd_preprocess_mnist(&dir, &cfg, per_class.map(|k| (k, seed)), &out)?;
            println!("{} samples -> {}", ds.len(), out.display());
        }
        Cmd::GenTwoMoon { samples, noise, seed, input_bits, out } => {
            let ds = workflow::cmd_gen_two_moon(samples, noise, seed, input_bits, &out)?;
            println!("{} samples -> {}", ds.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(workflow::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
