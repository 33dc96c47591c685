//! Benchmark suites behind `ptrot bench`: group-size sweep, fixed-target
//! comparison, and gate-count-only runs on large models.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::compile::{compile, CompileOptions, CompileReport, Method};
use crate::error::{Error, Result};
use crate::models::{build_model, GridSpec, Model, ModelParams, Topology};
use crate::pauli::Hamiltonian;
use crate::synth::SynthCache;

/// A generated benchmark Hamiltonian, written `model:RxC:topology`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelSpec {
    pub model: Model,
    pub grid: GridSpec,
}

impl ModelSpec {
    pub fn new(model: Model, rows: usize, cols: usize, topology: Topology) -> Result<Self> {
        Ok(ModelSpec {
            model,
            grid: GridSpec::new(rows, cols, topology)?,
        })
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        build_model(self.model, self.grid, ModelParams::default())
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}x{}:{}", self.model, self.grid.rows(), self.grid.cols(), self.grid.topology())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("model spec {s:?} is not model:RxC:topology"));
        let parts: Vec<&str> = s.split(':').collect();
        let [model, size, topology] = parts[..] else {
            return Err(bad());
        };
        let (r, c) = size.split_once('x').ok_or_else(bad)?;
        ModelSpec::new(
            model.parse()?,
            r.parse().map_err(|_| bad())?,
            c.parse().map_err(|_| bad())?,
            topology.parse()?,
        )
    }
}

/// Heisenberg and Ising on the 10-qubit line, 5×2 square and 5×2 triangular grids.
pub fn spin_models() -> Vec<ModelSpec> {
    let mut out = Vec::new();
    for model in [Model::Ising, Model::Heisenberg] {
        for (r, c, t) in [(10, 1, Topology::Line), (5, 2, Topology::Square), (5, 2, Topology::Triangular)] {
            out.push(ModelSpec::new(model, r, c, t).expect("valid preset"));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub suite: String,
    pub model: String,
    pub method: Method,
    pub n_max: usize,
    pub seed: u64,
    pub t: f64,
    pub order: usize,
    pub steps: usize,
    pub target_error: Option<f64>,
    pub cnot_count: usize,
    pub u3_count: usize,
    pub depth: usize,
    pub spectral_error: Option<f64>,
    pub frobenius_error: Option<f64>,
    pub wall_time_ms: u64,
}

impl BenchRow {
    fn from_report(suite: &str, model: &ModelSpec, target: Option<f64>, r: &CompileReport) -> Self {
        BenchRow {
            suite: suite.to_string(),
            model: model.to_string(),
            method: r.method,
            n_max: r.n_max,
            seed: r.seed,
            t: r.t,
            order: r.order,
            steps: r.steps,
            target_error: target,
            cnot_count: r.cnot_count,
            u3_count: r.u3_count,
            depth: r.depth,
            spectral_error: r.spectral_error,
            frobenius_error: r.frobenius_error,
            wall_time_ms: r.wall_time_ms,
        }
    }
}

/// Group-size sweep: first order, fixed steps, merging, shuffling and
/// edge alternation all off, so only the partition size changes.
pub fn group_size_sweep(
    model: &ModelSpec,
    n_maxes: &[usize],
    seeds: &[u64],
    time: f64,
    steps: usize,
    base: &CompileOptions,
    cache: &mut SynthCache,
) -> Result<Vec<BenchRow>> {
    let h = model.build()?;
    let mut rows = Vec::new();
    for &n_max in n_maxes {
        for &seed in seeds {
            let opts = CompileOptions {
                method: Method::Kernpiler,
                time,
                steps: Some(steps),
                target_error: None,
                order: 1,
                n_max,
                seed,
                merge: false,
                shuffle: false,
                alternate_edges: false,
                ..base.clone()
            };
            let c = compile(&h, &opts, cache)?;
            rows.push(BenchRow::from_report("sweep", model, None, &c.report));
        }
    }
    Ok(rows)
}

/// Each method compiled with the fewest steps that meet `target`.
pub fn fixed_target_comparison(
    model: &ModelSpec,
    methods: &[Method],
    time: f64,
    target: f64,
    base: &CompileOptions,
    cache: &mut SynthCache,
) -> Result<Vec<BenchRow>> {
    let h = model.build()?;
    let mut rows = Vec::new();
    for &method in methods {
        let opts = CompileOptions {
            method,
            time,
            steps: None,
            target_error: Some(target),
            order: method.fixed_order().unwrap_or(base.order),
            ..base.clone()
        };
        let c = compile(&h, &opts, cache)?;
        rows.push(BenchRow::from_report("compare", model, Some(target), &c.report));
    }
    Ok(rows)
}

/// Fixed step count regardless of error; errors are `None` above the dense limit.
pub fn gate_counts(
    model: &ModelSpec,
    methods: &[Method],
    time: f64,
    steps: usize,
    base: &CompileOptions,
    cache: &mut SynthCache,
) -> Result<Vec<BenchRow>> {
    let h = model.build()?;
    let mut rows = Vec::new();
    for &method in methods {
        let opts = CompileOptions {
            method,
            time,
            steps: Some(steps),
            target_error: None,
            order: method.fixed_order().unwrap_or(base.order),
            ..base.clone()
        };
        let c = compile(&h, &opts, cache)?;
        rows.push(BenchRow::from_report("gates", model, None, &c.report));
    }
    Ok(rows)
}
