//! `ptrot`: compile, analyze, verify and benchmark partial-Trotter circuits.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ptrot_core::compile::{analyze, compile, verify, CompileOptions, Method};
use ptrot_core::models::{build_model, load_hamiltonian, GridSpec, Model, ModelParams, Topology};
use ptrot_core::numerics::DENSE_LIMIT;
use ptrot_core::suite::{fixed_target_comparison, gate_counts, group_size_sweep, spin_models, BenchRow, ModelSpec};
use ptrot_core::synth::{SynthCache, SynthConfig};
use ptrot_core::Hamiltonian;

#[derive(Parser)]
#[command(name = "ptrot", version, about = "Partial-Trotterization compiler to u3/cx circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile exp(iHt) to OpenQASM and a JSON report.
    Compile(CompileArgs),
    /// Print partitions, conflict graph, groups and error bounds.
    Analyze(AnalyzeArgs),
    /// Check a QASM file against exp(iHt).
    Verify(VerifyArgs),
    /// Run benchmark suites and emit rows as JSON or CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct Source {
    /// Generated model (with --rows/--cols/--topology).
    #[arg(long, value_enum, conflicts_with = "hamiltonian")]
    model: Option<ModelArg>,
    #[arg(long, default_value_t = 1)]
    rows: usize,
    #[arg(long, default_value_t = 1)]
    cols: usize,
    #[arg(long, value_enum, default_value = "line")]
    topology: TopologyArg,
    /// Spin coupling J.
    #[arg(long, default_value_t = 1.0)]
    j: f64,
    /// Transverse field h (Ising).
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Hopping amplitude (Fermi–Hubbard).
    #[arg(long, default_value_t = 1.0)]
    hopping: f64,
    /// On-site interaction U (Fermi–Hubbard).
    #[arg(long, default_value_t = 2.0)]
    interaction: f64,
    /// Hamiltonian JSON file: {"num_qubits": n, "terms": [{"coeff": c, "pauli": "XIZ"}, ...]}.
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<Hamiltonian> {
        if let Some(path) = &self.hamiltonian {
            return Ok(load_hamiltonian(path)?);
        }
        let Some(model) = self.model else {
            bail!("give either --model or --hamiltonian");
        };
        let grid = GridSpec::new(self.rows, self.cols, self.topology.into())?;
        let params = ModelParams {
            j: self.j,
            h: self.h,
            t_hop: self.hopping,
            u: self.interaction,
        };
        Ok(build_model(model.into(), grid, params)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ising,
    Heisenberg,
    Fh,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Ising => Model::Ising,
            ModelArg::Heisenberg => Model::Heisenberg,
            ModelArg::Fh => Model::FermiHubbard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Line,
    Square,
    Triangular,
}

impl From<TopologyArg> for Topology {
    fn from(t: TopologyArg) -> Topology {
        match t {
            TopologyArg::Line => Topology::Line,
            TopologyArg::Square => Topology::Square,
            TopologyArg::Triangular => Topology::Triangular,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Kernpiler,
    Naive1,
    Naive2,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Kernpiler => Method::Kernpiler,
            MethodArg::Naive1 => Method::Naive1,
            MethodArg::Naive2 => Method::Naive2,
        }
    }
}

#[derive(Args)]
struct Tuning {
    /// Maximum qubits per partition.
    #[arg(long, default_value_t = 3)]
    group_size: usize,
    /// Seeds shuffling and synthesis.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Zero the wall-clock field so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
    /// Synthesis cache file, read if present and rewritten afterwards.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// MCTS iterations per block.
    #[arg(long, default_value_t = SynthConfig::default().iterations)]
    iterations: usize,
    /// Synthesis accuracy (phase-aligned Frobenius).
    #[arg(long, default_value_t = SynthConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long)]
    no_merge: bool,
    #[arg(long)]
    no_shuffle: bool,
    /// Keep the edge groups in place on every step.
    #[arg(long)]
    no_alternate: bool,
    /// Keep every U3 of the synthesis ansatz.
    #[arg(long)]
    no_prune: bool,
}

impl Tuning {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            n_max: self.group_size,
            seed: self.seed,
            deterministic: self.deterministic,
            merge: !self.no_merge,
            shuffle: !self.no_shuffle,
            alternate_edges: !self.no_alternate,
            synth: SynthConfig {
                iterations: self.iterations,
                epsilon: self.epsilon,
                prune_u3: !self.no_prune,
                ..SynthConfig::default()
            },
            ..CompileOptions::default()
        }
    }

    fn open_cache(&self) -> Result<SynthCache> {
        match &self.cache {
            Some(p) if p.exists() => Ok(SynthCache::load(p)?),
            _ => Ok(SynthCache::new()),
        }
    }

    fn close_cache(&self, cache: &SynthCache) -> Result<()> {
        if let Some(p) = &self.cache {
            cache.save(p)?;
        }
        Ok(())
    }
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, default_value_t = 1.0)]
    time: f64,
    /// Trotter steps (default 1 unless --target-error is given).
    #[arg(long, conflicts_with = "target_error")]
    steps: Option<usize>,
    /// 1 or 2; naive methods fix their own order.
    #[arg(long)]
    order: Option<usize>,
    /// Choose the fewest steps whose spectral error is at most this.
    #[arg(long)]
    target_error: Option<f64>,
    #[arg(long, value_enum, default_value = "kernpiler")]
    method: MethodArg,
    /// QASM output (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report output (stdout if absent and --out is given).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 3)]
    group_size: usize,
    #[arg(long, default_value_t = 1.0)]
    time: f64,
    #[arg(long, default_value_t = 1)]
    steps: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// QASM file to check.
    qasm: PathBuf,
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 1.0)]
    time: f64,
    /// Fail if the spectral error exceeds this.
    #[arg(long)]
    max_error: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Sweep,
    Compare,
    Gates,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    /// Models as model:RxC:topology (repeatable). Defaults to the 10-qubit
    /// spin models for sweep/compare and 50/100-qubit Ising and Heisenberg
    /// lines for gates.
    #[arg(long = "models", value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Evolution time; 0.1 suits the first-order default.
    #[arg(long, default_value_t = 0.1)]
    time: f64,
    /// Error target for the comparison suite.
    #[arg(long, default_value_t = 0.07)]
    target_error: f64,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_compile(a: &CompileArgs) -> Result<()> {
    let h = a.source.load()?;
    let method: Method = a.method.into();
    let order = match (method.fixed_order(), a.order) {
        (Some(fixed), Some(o)) if o != fixed => bail!("--method {method} implies --order {fixed}"),
        (Some(fixed), _) => fixed,
        (None, o) => o.unwrap_or(1),
    };
    let opts = CompileOptions {
        method,
        time: a.time,
        steps: a.steps,
        target_error: a.target_error,
        order,
        ..a.tuning.options()
    };
    let mut cache = a.tuning.open_cache()?;
    let out = compile(&h, &opts, &mut cache)?;
    a.tuning.close_cache(&cache)?;
    let report = serde_json::to_string_pretty(&out.report)? + "\n";
    write_or_print(a.out.as_deref(), &out.qasm())?;
    match (&a.report, &a.out) {
        (Some(p), _) => write_or_print(Some(p), &report)?,
        (None, Some(_)) => print!("{report}"),
        (None, None) => {}
    }
    Ok(())
}

fn run_analyze(a: &AnalyzeArgs) -> Result<()> {
    let h = a.source.load()?;
    let r = analyze(&h, a.group_size, a.time, a.steps)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Result<bool> {
    let h = a.source.load()?;
    let text = fs::read_to_string(&a.qasm).with_context(|| format!("reading {}", a.qasm.display()))?;
    let r = verify(&text, &h, a.time, DENSE_LIMIT)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(a.max_error.is_none_or(|m| r.spectral_error <= m))
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let parse = |defaults: Vec<ModelSpec>| -> Result<Vec<ModelSpec>> {
        if a.models.is_empty() {
            return Ok(defaults);
        }
        a.models.iter().map(|s| Ok(s.parse::<ModelSpec>()?)).collect()
    };
    let base = a.tuning.options();
    let seeds: Vec<u64> = (0..a.seeds).map(|i| a.tuning.seed + i).collect();
    let mut cache = a.tuning.open_cache()?;
    let mut rows: Vec<BenchRow> = Vec::new();
    let suites = |s: SuiteArg| a.suite == s || a.suite == SuiteArg::All;
    if suites(SuiteArg::Sweep) {
        for m in parse(spin_models())? {
            rows.extend(group_size_sweep(&m, &[1, 2, 3], &seeds, a.time, 10, &base, &mut cache)?);
        }
    }
    if suites(SuiteArg::Compare) {
        let methods = [Method::Naive1, Method::Kernpiler];
        for m in parse(spin_models())? {
            rows.extend(fixed_target_comparison(&m, &methods, a.time, a.target_error, &base, &mut cache)?);
        }
    }
    if suites(SuiteArg::Gates) {
        let large = ["ising:50x1:line", "heisenberg:50x1:line", "ising:100x1:line", "heisenberg:100x1:line"]
            .iter()
            .map(|s| s.parse())
            .collect::<ptrot_core::Result<Vec<ModelSpec>>>()?;
        for m in parse(large)? {
            rows.extend(gate_counts(&m, &[Method::Naive1, Method::Kernpiler], a.time, 3, &base, &mut cache)?);
        }
    }
    a.tuning.close_cache(&cache)?;
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r)?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    write_or_print(a.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile(a) => run_compile(a).map(|_| true),
        Command::Analyze(a) => run_analyze(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
        Command::Bench(a) => run_bench(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: spectral error above --max-error");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
