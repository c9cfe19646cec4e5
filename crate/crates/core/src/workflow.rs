//! End-to-end commands behind the `ising-learn` binary. Each command reads
//! and writes the plain-text artifacts defined by the owning modules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::compile::{compile, CompileError, Compiled, PenaltyConfig, QuboInstance, ReductionTrace};
use crate::data::{self, DataError, MnistConfig, QuantizedDataset};
use crate::encoding::{asymptotic_reference, build_registry, closed_form_rows, closed_form_total, EncodingError, VariableKind, VariableRegistry};
use crate::model::{canonicalize, decode, evaluate_model, DecodedParameters, EvalReport, ModelError, Task};
use crate::poly::fmt_rational;
use crate::solver::{exact_report, solve_exact, solve_exact_conditioned, solve_sa, AnnealSchedule, RunReport, SolverError, DEFAULT_EXACT_CAP};
use crate::topology::{LossKind, NetworkSpec, TopologyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER_CAP: i32 = 3;
pub const EXIT_DATA: i32 = 4;

/// Largest cutset the conditioned exact solver is asked to enumerate.
pub const CUTSET_CAP: usize = 30;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl WorkflowError {
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkflowError::Solver(SolverError::CapExceeded { .. } | SolverError::ComponentTooLarge { .. }) => EXIT_SOLVER_CAP,
            WorkflowError::Data(_) | WorkflowError::Io { .. } => EXIT_DATA,
            _ => EXIT_CONFIG,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkflowError + '_ {
    move |source| WorkflowError::Io { path: path.display().to_string(), source }
}

fn read(path: &Path) -> Result<String, WorkflowError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn write(path: &Path, text: &str) -> Result<(), WorkflowError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Where training data comes from.
///
/// Text forms: a dataset file path, `two-moon:n=20,noise=0.1,seed=0,bits=1`
/// or `mnist:per_class=2,seed=0`. Every key is optional.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    TwoMoon { samples: usize, noise: f64, seed: u64, input_bits: u32 },
    /// Stratified subset of the preprocessed 6/9 digits; the rest is the test set.
    Mnist { per_class: usize, seed: u64 },
}

fn parse_kv(spec: &str) -> Result<BTreeMap<&str, &str>, WorkflowError> {
    let mut out = BTreeMap::new();
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| WorkflowError::Config(format!("expected key=value, got `{part}`")))?;
        out.insert(k.trim(), v.trim());
    }
    Ok(out)
}

fn take<T: FromStr>(kv: &mut BTreeMap<&str, &str>, key: &str, default: T) -> Result<T, WorkflowError> {
    match kv.remove(key) {
        Some(v) => v.parse().map_err(|_| WorkflowError::Config(format!("bad value `{v}` for `{key}`"))),
        None => Ok(default),
    }
}

impl FromStr for DataSource {
    type Err = WorkflowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let src = match kind {
            "two-moon" => {
                let mut kv = parse_kv(rest)?;
                let src = DataSource::TwoMoon {
                    samples: take(&mut kv, "n", 20)?,
                    noise: take(&mut kv, "noise", data::TWO_MOON_DEFAULT_NOISE)?,
                    seed: take(&mut kv, "seed", 0)?,
                    input_bits: take(&mut kv, "bits", 1)?,
                };
                if let Some(k) = kv.keys().next() {
                    return Err(WorkflowError::Config(format!("unknown two-moon key `{k}`")));
                }
                src
            }
            "mnist" => {
                let mut kv = parse_kv(rest)?;
                let src = DataSource::Mnist { per_class: take(&mut kv, "per_class", 2)?, seed: take(&mut kv, "seed", 0)? };
                if let Some(k) = kv.keys().next() {
                    return Err(WorkflowError::Config(format!("unknown mnist key `{k}`")));
                }
                src
            }
            _ => DataSource::File(PathBuf::from(s)),
        };
        Ok(src)
    }
}

impl std::fmt::Display for DataSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSource::File(p) => write!(f, "{}", p.display()),
            DataSource::TwoMoon { samples, noise, seed, input_bits } => {
                write!(f, "two-moon:n={samples},noise={noise},seed={seed},bits={input_bits}")
            }
            DataSource::Mnist { per_class, seed } => write!(f, "mnist:per_class={per_class},seed={seed}"),
        }
    }
}

impl DataSource {
    /// Training set and, when the source has one, the held-out set.
    pub fn load(&self) -> Result<(QuantizedDataset, Option<QuantizedDataset>), WorkflowError> {
        Ok(match self {
            DataSource::File(p) => (QuantizedDataset::read(p)?, None),
            DataSource::TwoMoon { samples, noise, seed, input_bits } => (data::two_moon(*samples, *noise, *seed, *input_bits)?, None),
            DataSource::Mnist { per_class, seed } => {
                let all = data::load_mnist(&data::data_dir(), &MnistConfig::default())?;
                let (train, test) = data::select_training_subset(&all, *per_class, *seed)?;
                (train, Some(test))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub net: PathBuf,
    pub data: DataSource,
    /// Extra evaluation set; overrides the held-out part of an MNIST source.
    pub test: Option<PathBuf>,
    pub penalty: PenaltyConfig,
    pub schedule: AnnealSchedule,
    pub exact: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(net: impl Into<PathBuf>, data: DataSource, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            net: net.into(),
            data,
            test: None,
            penalty: PenaltyConfig::default(),
            schedule: AnnealSchedule::default(),
            exact: false,
            out: out.into(),
        }
    }

    pub fn network(&self) -> Result<NetworkSpec, WorkflowError> {
        let spec = NetworkSpec::parse(&read(&self.net)?)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Artifact names inside an output directory.
pub mod files {
    pub const NETWORK: &str = "network.txt";
    pub const DATASET: &str = "dataset.txt";
    pub const QUBO: &str = "qubo.txt";
    pub const VARIABLES: &str = "variables.txt";
    pub const TRACE: &str = "trace.txt";
    pub const MANIFEST: &str = "manifest.txt";
    pub const REPORT: &str = "report.txt";
    pub const PARAMS: &str = "params.txt";
    pub const EVAL_TRAIN: &str = "eval_train.txt";
    pub const EVAL_TEST: &str = "eval_test.txt";
    pub const CONFUSION: &str = "confusion_test.csv";
}

/// `key value` lines recording every default and derived bound of a run.
pub fn run_manifest(cfg: &RunConfig, net: &NetworkSpec, compiled: &Compiled, schedule: Option<&str>) -> String {
    let mut out = String::from("# ising-learn run manifest\n");
    let kv = |out: &mut String, k: &str, v: &dyn std::fmt::Display| writeln!(out, "{k} {v}").unwrap();
    kv(&mut out, "net_file", &cfg.net.display());
    kv(&mut out, "data", &cfg.data);
    kv(&mut out, "samples", &compiled.dataset.len());
    for line in compiled.dataset.provenance.lines() {
        kv(&mut out, "provenance", &line);
    }
    kv(&mut out, "label_snap_max_move", &fmt_rational(&compiled.snap_distance));
    kv(&mut out, "rho", &fmt_rational(&compiled.rho));
    kv(&mut out, "rho_source", &if cfg.penalty.rho.is_some() { "override" } else { "default 4(2H)^2 N + 1" });
    kv(&mut out, "lambda_policy", &cfg.penalty.lambda);
    kv(&mut out, "original_bits", &compiled.original_bits);
    kv(&mut out, "auxiliary_bits", &compiled.auxiliary_bits());
    kv(&mut out, "total_bits", &compiled.qubo.num_vars);
    kv(&mut out, "closed_form_bits", &closed_form_total(net, compiled.dataset.len()));
    kv(&mut out, "constraints", &compiled.constraints.len());
    kv(&mut out, "couplings", &compiled.qubo.coefficients.len());
    kv(&mut out, "qubo_scale", &fmt_rational(&compiled.qubo.scale));
    kv(&mut out, "qubo_offset", &compiled.qubo.offset);
    kv(&mut out, "max_abs_coefficient", &compiled.qubo.max_abs_coefficient());
    for (k, r) in compiled.trace.records.iter().enumerate() {
        writeln!(out, "lambda {k} {} {} {} {}", r.u1.0, r.u2.0, r.v.0, fmt_rational(&r.lambda)).unwrap();
    }
    if let Some(s) = schedule {
        kv(&mut out, "schedule", &s);
    }
    out
}

#[derive(Debug)]
pub struct CompileOutcome {
    pub net: NetworkSpec,
    pub compiled: Compiled,
    pub test: Option<QuantizedDataset>,
}

fn compile_stage(cfg: &RunConfig) -> Result<CompileOutcome, WorkflowError> {
    let net = cfg.network()?;
    let (train, mut test) = cfg.data.load()?;
    if let Some(p) = &cfg.test {
        test = Some(QuantizedDataset::read(p)?);
    }
    let compiled = compile(&net, &train, &cfg.penalty)?;
    write(&cfg.out.join(files::NETWORK), &net.to_text())?;
    write(&cfg.out.join(files::DATASET), &compiled.dataset.to_text())?;
    write(&cfg.out.join(files::QUBO), &compiled.qubo.to_text())?;
    write(&cfg.out.join(files::VARIABLES), &compiled.registry.to_manifest())?;
    write(&cfg.out.join(files::TRACE), &compiled.trace.to_text())?;
    Ok(CompileOutcome { net, compiled, test })
}

/// Writes network, dataset, QUBO, variable manifest, reduction trace and run
/// manifest into `cfg.out`.
pub fn cmd_compile(cfg: &RunConfig) -> Result<CompileOutcome, WorkflowError> {
    let outcome = compile_stage(cfg)?;
    write(&cfg.out.join(files::MANIFEST), &run_manifest(cfg, &outcome.net, &outcome.compiled, None))?;
    Ok(outcome)
}

/// Bits to condition on for the exact solver: every parameter bit, every
/// auxiliary standing for a product of parameter bits, and the
/// post-activation variables. Fixing them leaves one small component per
/// sample.
pub fn exact_cutset(registry: &VariableRegistry, trace: &ReductionTrace) -> Vec<u32> {
    let mut params: BTreeSet<u32> =
        registry.entries().iter().filter(|(k, _)| k.kind.is_parameter()).flat_map(|(_, e)| e.bits().map(|b| b.0)).collect();
    for r in &trace.records {
        if params.contains(&r.u1.0) && params.contains(&r.u2.0) {
            params.insert(r.v.0);
        }
    }
    let post = registry.entries().iter().filter(|(k, _)| k.kind == VariableKind::PostAct).flat_map(|(_, e)| e.bits().map(|b| b.0));
    params.extend(post);
    params.into_iter().collect()
}

/// Exact ground state: plain enumeration up to the cap, else conditioned on
/// [`exact_cutset`] when the registry and trace are known.
pub fn solve_exactly(q: &QuboInstance, known: Option<(&VariableRegistry, &ReductionTrace)>) -> Result<RunReport, WorkflowError> {
    if q.num_vars <= DEFAULT_EXACT_CAP {
        return Ok(exact_report(q, solve_exact(q, DEFAULT_EXACT_CAP)?));
    }
    let Some((reg, trace)) = known else {
        return Err(SolverError::CapExceeded { vars: q.num_vars, cap: DEFAULT_EXACT_CAP }.into());
    };
    let cut = exact_cutset(reg, trace);
    if cut.len() > CUTSET_CAP {
        return Err(SolverError::CapExceeded { vars: cut.len(), cap: CUTSET_CAP }.into());
    }
    let mut report = exact_report(q, solve_exact_conditioned(q, &cut, DEFAULT_EXACT_CAP)?);
    report.solver = "exact-conditioned".into();
    Ok(report)
}

fn run_solver(q: &QuboInstance, known: Option<(&VariableRegistry, &ReductionTrace)>, schedule: &AnnealSchedule, exact: bool) -> Result<RunReport, WorkflowError> {
    if exact {
        solve_exactly(q, known)
    } else {
        Ok(solve_sa(q, schedule)?)
    }
}

/// Solves a QUBO file and writes the report to `out`. With `exact`, the
/// variable manifest and reduction trace (default: `variables.txt` and
/// `trace.txt` beside the QUBO) enable the conditioned solver above the
/// enumeration cap.
pub fn cmd_solve(qubo: &Path, variables: Option<&Path>, schedule: &AnnealSchedule, exact: bool, out: &Path) -> Result<RunReport, WorkflowError> {
    let q = QuboInstance::parse_text(&read(qubo)?)?;
    let vars_path = variables.map(Path::to_path_buf).unwrap_or_else(|| qubo.with_file_name(files::VARIABLES));
    let trace_path = vars_path.with_file_name(files::TRACE);
    let known = if exact && vars_path.exists() && trace_path.exists() {
        Some((VariableRegistry::parse_manifest(&read(&vars_path)?)?, ReductionTrace::parse_text(&read(&trace_path)?)?))
    } else {
        None
    };
    let report = run_solver(&q, known.as_ref().map(|(r, t)| (r, t)), schedule, exact)?;
    write(out, &report.to_text())?;
    Ok(report)
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub compile: CompileOutcome,
    pub report: RunReport,
    /// Canonical form of the best restart's parameters.
    pub params: DecodedParameters,
    pub train_eval: EvalReport,
    pub test_eval: Option<EvalReport>,
}

fn task_for(net: &NetworkSpec, ds: &QuantizedDataset) -> Task {
    let binary = ds.outputs_per_sample() == 1 && ds.labels.iter().all(|y| y[0] == crate::poly::int(1) || y[0] == crate::poly::int(-1));
    if binary || net.loss == LossKind::Hinge {
        Task::BinaryClassification
    } else {
        Task::Regression
    }
}

/// Compile, solve, decode the best restart, canonicalize and evaluate.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome, WorkflowError> {
    let compile = compile_stage(cfg)?;
    let reg = &compile.compiled.registry;
    let report = run_solver(&compile.compiled.qubo, Some((reg, &compile.compiled.trace)), &cfg.schedule, cfg.exact)?;
    let schedule = match &report.schedule {
        Some(s) => format!("sa sweeps {} beta_start {:e} beta_end {:e} restarts {} seed {}", s.sweeps, s.beta_start, s.beta_end, s.restarts, s.seed),
        None => report.solver.clone(),
    };
    write(&cfg.out.join(files::MANIFEST), &run_manifest(cfg, &compile.net, &compile.compiled, Some(&schedule)))?;
    write(&cfg.out.join(files::REPORT), &report.to_text())?;
    let params = canonicalize(&decode(&report.best.assignment, reg, &compile.net)?);
    write(&cfg.out.join(files::PARAMS), &params.to_text())?;
    let task = task_for(&compile.net, &compile.compiled.dataset);
    let train_eval = evaluate_model(&params, &compile.compiled.dataset, task)?;
    write(&cfg.out.join(files::EVAL_TRAIN), &train_eval.to_text())?;
    let test_eval = match &compile.test {
        Some(ds) => {
            let e = evaluate_model(&params, ds, task)?;
            write(&cfg.out.join(files::EVAL_TEST), &e.to_text())?;
            if let Some(csv) = e.confusion_csv() {
                write(&cfg.out.join(files::CONFUSION), &csv)?;
            }
            Some(e)
        }
        None => None,
    };
    Ok(TrainOutcome { compile, report, params, train_eval, test_eval })
}

/// Bit budget of one architecture and dataset size.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinBudgetReport {
    pub layers: usize,
    pub hidden: usize,
    pub dataset_size: usize,
    pub by_kind: BTreeMap<VariableKind, u32>,
    pub total: u32,
    pub closed_form: u64,
    /// `H^2 L + H L N log2 H`.
    pub reference: f64,
    pub ratio: f64,
}

impl SpinBudgetReport {
    pub fn new(net: &NetworkSpec, dataset_size: usize) -> Result<Self, WorkflowError> {
        let reg = build_registry(net, dataset_size)?;
        let total = reg.num_bits();
        let reference = asymptotic_reference(net.hidden, net.layers, dataset_size);
        Ok(SpinBudgetReport {
            layers: net.layers,
            hidden: net.hidden,
            dataset_size,
            by_kind: reg.bits_by_kind(),
            total,
            closed_form: closed_form_total(net, dataset_size),
            reference,
            ratio: if reference > 0.0 { total as f64 / reference } else { f64::NAN },
        })
    }

    pub fn header() -> &'static str {
        "L H N total closed_form reference ratio kinds"
    }

    pub fn row(&self) -> String {
        let kinds: Vec<String> = self.by_kind.iter().map(|(k, v)| format!("{}={v}", k.tag())).collect();
        format!(
            "{} {} {} {} {} {} {:.4} {}",
            self.layers,
            self.hidden,
            self.dataset_size,
            self.total,
            self.closed_form,
            self.reference,
            self.ratio,
            kinds.join(",")
        )
    }
}

/// One report per dataset size, plus the closed-form rows of the first.
pub fn cmd_count_spins(net: &NetworkSpec, sizes: &[usize]) -> Result<(Vec<SpinBudgetReport>, String), WorkflowError> {
    net.validate()?;
    if sizes.is_empty() {
        return Err(WorkflowError::Config("at least one dataset size is needed".into()));
    }
    let reports = sizes.iter().map(|&n| SpinBudgetReport::new(net, n)).collect::<Result<Vec<_>, _>>()?;
    let mut text = format!("# closed form, N={}\n# family bits_per_variable variables total\n", sizes[0]);
    for (label, w, c) in closed_form_rows(net, sizes[0]) {
        writeln!(text, "# {label} {w} {c} {}", w * c).unwrap();
    }
    writeln!(text, "{}", SpinBudgetReport::header()).unwrap();
    for r in &reports {
        writeln!(text, "{}", r.row()).unwrap();
    }
    Ok((reports, text))
}

/// Preprocesses the 6/9 digits found in `dir` into `out`; with `per_class`,
/// also writes `<stem>.train.txt` and `<stem>.test.txt`.
pub fn cmd_preprocess_mnist(dir: &Path, cfg: &MnistConfig, split: Option<(usize, u64)>, out: &Path) -> Result<QuantizedDataset, WorkflowError> {
    cfg.validate()?;
    let ds = data::load_mnist(dir, cfg)?;
    write(out, &ds.to_text())?;
    if let Some((per_class, seed)) = split {
        let (train, test) = data::select_training_subset(&ds, per_class, seed)?;
        write(&out.with_extension("train.txt"), &train.to_text())?;
        write(&out.with_extension("test.txt"), &test.to_text())?;
    }
    Ok(ds)
}

pub fn cmd_gen_two_moon(samples: usize, noise: f64, seed: u64, input_bits: u32, out: &Path) -> Result<QuantizedDataset, WorkflowError> {
    let ds = data::two_moon(samples, noise, seed, input_bits)?;
    write(out, &ds.to_text())?;
    Ok(ds)
}

/// Reads back every artifact of a compile directory.
pub fn load_compiled_artifacts(dir: &Path) -> Result<(QuboInstance, VariableRegistry, ReductionTrace), WorkflowError> {
    let q = QuboInstance::parse_text(&read(&dir.join(files::QUBO))?)?;
    let reg = VariableRegistry::parse_manifest(&read(&dir.join(files::VARIABLES))?)?;
    let trace = ReductionTrace::parse_text(&read(&dir.join(files::TRACE))?)?;
    Ok((q, reg, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::int;

    fn write_net(dir: &Path, net: &NetworkSpec) -> PathBuf {
        let p = dir.join("net.txt");
        fs::write(&p, net.to_text()).unwrap();
        p
    }

    #[test]
    fn data_source_parsing() {
        assert_eq!(
            "two-moon:n=8,seed=3".parse::<DataSource>().unwrap(),
            DataSource::TwoMoon { samples: 8, noise: data::TWO_MOON_DEFAULT_NOISE, seed: 3, input_bits: 1 }
        );
        assert_eq!("mnist:".parse::<DataSource>().unwrap(), DataSource::Mnist { per_class: 2, seed: 0 });
        assert_eq!("x/y.txt".parse::<DataSource>().unwrap(), DataSource::File("x/y.txt".into()));
        assert!("two-moon:n=8,colour=red".parse::<DataSource>().is_err());
        assert!("mnist:seed=x".parse::<DataSource>().is_err());
        let s = DataSource::TwoMoon { samples: 6, noise: 0.2, seed: 1, input_bits: 2 };
        assert_eq!(s.to_string().parse::<DataSource>().unwrap(), s);
    }

    #[test]
    fn trivially_fittable_task_trains_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let net = NetworkSpec::dense(2, 1, 1, 1, 0);
        let ds = QuantizedDataset::new(vec![vec![1]], vec![vec![int(1)]], 0, "one sample").unwrap();
        let data_path = dir.path().join("d.txt");
        fs::write(&data_path, ds.to_text()).unwrap();
        let mut cfg = RunConfig::new(write_net(dir.path(), &net), DataSource::File(data_path), dir.path().join("out"));
        cfg.exact = true;
        let out = cmd_train(&cfg).unwrap();
        assert_eq!(out.train_eval.mse, int(0));
        assert_eq!(out.report.hits, 1);
        for f in [files::QUBO, files::VARIABLES, files::TRACE, files::MANIFEST, files::REPORT, files::PARAMS, files::EVAL_TRAIN] {
            assert!(cfg.out.join(f).exists(), "{f}");
        }
        let (q, reg, trace) = load_compiled_artifacts(&cfg.out).unwrap();
        assert_eq!(q, out.compile.compiled.qubo);
        assert_eq!(reg, out.compile.compiled.registry);
        assert_eq!(trace, out.compile.compiled.trace);
    }

    #[test]
    fn solve_without_manifest_hits_cap() {
        let dir = tempfile::tempdir().unwrap();
        let q = QuboInstance { num_vars: 30, coefficients: Default::default(), offset: 0, scale: int(1) };
        let p = dir.path().join("big.qubo");
        fs::write(&p, q.to_text()).unwrap();
        let err = cmd_solve(&p, None, &AnnealSchedule::default(), true, &dir.path().join("r.txt")).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_SOLVER_CAP);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(WorkflowError::Config("x".into()).exit_code(), EXIT_CONFIG);
        assert_eq!(WorkflowError::Data(DataError::EmptySelection).exit_code(), EXIT_DATA);
        let e: WorkflowError = "tanh".parse::<crate::topology::Activation>().unwrap_err().into();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn spin_budget_doubles_per_sample_rows() {
        let net = NetworkSpec::dense(3, 2, 3, 1, 1);
        let (r, text) = cmd_count_spins(&net, &[4, 8]).unwrap();
        assert!(text.contains("closed form"));
        for (kind, &bits) in &r[0].by_kind {
            let doubled = r[1].by_kind[kind];
            if kind.per_sample() {
                assert_eq!(doubled, 2 * bits, "{kind:?}");
            } else {
                assert_eq!(doubled, bits, "{kind:?}");
            }
        }
        assert_eq!(r[0].total as u64, r[0].closed_form);
    }
}
