//! Experiment orchestration: batches of seeded trials, sweeps over ε,
//! paired MP3 ablations, and their CSV/JSON outputs.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::AdversarySpec;
use crate::config::{derive_params, ParamSpec, RunConfig};
use crate::error::{param, Result};
use crate::protocol::{build_random_dag, ProtocolDag};
use crate::trial::{run_trial, TrialOptions, TrialOutcome, TrialResult};

/// Output schema version written into every aggregate.
pub const SCHEMA_VERSION: u32 = 1;

/// Where each trial's protocol comes from.
#[derive(Clone, Debug)]
pub enum DagSource {
    /// A fresh random layered DAG per trial, seeded by the trial seed.
    Random { states: usize },
    /// One fixed protocol for every trial.
    Fixed(Arc<ProtocolDag>),
    /// A protocol loaded from a text file.
    File(PathBuf),
}

impl DagSource {
    fn resolve(&self) -> Result<Option<Arc<ProtocolDag>>> {
        match self {
            DagSource::Random { .. } => Ok(None),
            DagSource::Fixed(dag) => Ok(Some(dag.clone())),
            DagSource::File(path) => Ok(Some(Arc::new(ProtocolDag::load(path)?))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchSpec {
    pub params: ParamSpec,
    pub dag: DagSource,
    pub adversary: AdversarySpec,
    pub trials: u64,
    /// Trial i uses seed `seed + i`.
    pub seed: u64,
    /// Concurrent trials; 0 picks the number of CPUs.
    pub workers: usize,
    pub options: TrialOptions,
}

impl BatchSpec {
    pub fn new(params: ParamSpec, adversary: AdversarySpec, trials: u64) -> Self {
        let states = params.states.min(1 << 14) as usize;
        let seed = params.seed;
        BatchSpec {
            params,
            dag: DagSource::Random { states },
            adversary,
            trials,
            seed,
            workers: 0,
            options: TrialOptions::default(),
        }
    }
}

fn trial_dag(cfg: &RunConfig, source: &DagSource, fixed: &Option<Arc<ProtocolDag>>, seed: u64) -> Result<Arc<ProtocolDag>> {
    match (fixed, source) {
        (Some(dag), _) => Ok(dag.clone()),
        (None, DagSource::Random { states }) => {
            let depth = u32::try_from(cfg.depth()).map_err(|_| param("depth too large for a DAG"))?;
            Ok(Arc::new(build_random_dag(depth, *states, seed)?))
        }
        (None, _) => unreachable!("non-random sources resolve to a fixed DAG"),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| param(format!("cannot start worker pool: {e}")))
}

/// Runs the batch and keeps every outcome, ordered by trial index.
/// `keep` selects which outcomes retain their full state.
pub fn run_outcomes(spec: &BatchSpec, keep: impl Fn(u64) -> bool + Sync) -> Result<Vec<(TrialResult, Option<TrialOutcome>)>> {
    let cfg = derive_params(&spec.params)?;
    let fixed = spec.dag.resolve()?;
    let run = |i: u64| -> Result<(TrialResult, Option<TrialOutcome>)> {
        let seed = spec.seed.wrapping_add(i);
        let dag = trial_dag(&cfg, &spec.dag, &fixed, seed)?;
        let outcome = run_trial(&cfg, dag, &spec.adversary, i, seed, &spec.options)?;
        let result = outcome.result.clone();
        Ok((result, keep(i).then_some(outcome)))
    };
    pool(spec.workers)?.install(|| (0..spec.trials).into_par_iter().map(run).collect())
}

/// Runs the batch; results are ordered by trial index.
pub fn run_trials(spec: &BatchSpec) -> Result<Vec<TrialResult>> {
    Ok(run_outcomes(spec, |_| false)?.into_iter().map(|(r, _)| r).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub v: u32,
    pub adversary: String,
    pub epsilon: f64,
    pub depth: u64,
    pub states: u64,
    pub mp3_enabled: bool,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_overhead: f64,
    pub p95_memory_bits: u64,
    pub mean_budget_spent: f64,
    pub max_rewind: u64,
    pub total_small_collisions: u64,
    pub total_big_collisions: u64,
    pub suppressed_flips: u64,
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[u64], pct: f64) -> u64 {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = ((pct / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

pub fn aggregate(spec: &BatchSpec, results: &[TrialResult]) -> Aggregate {
    let n = results.len().max(1) as f64;
    let successes = results.iter().filter(|r| r.success).count() as u64;
    let memory: Vec<u64> = results.iter().map(|r| r.peak_memory_bits_a.max(r.peak_memory_bits_b)).collect();
    Aggregate {
        v: SCHEMA_VERSION,
        adversary: spec.adversary.to_string(),
        epsilon: spec.params.epsilon,
        depth: spec.params.depth,
        states: spec.params.states,
        mp3_enabled: spec.params.mp3_enabled,
        trials: results.len() as u64,
        successes,
        success_rate: successes as f64 / n,
        mean_overhead: results.iter().map(|r| r.overhead).sum::<f64>() / n,
        p95_memory_bits: percentile(&memory, 95.0),
        mean_budget_spent: results.iter().map(|r| r.budget_spent as f64).sum::<f64>() / n,
        max_rewind: results.iter().map(|r| r.max_rewind).max().unwrap_or(0),
        total_small_collisions: results.iter().map(|r| r.small_collisions).sum(),
        total_big_collisions: results.iter().map(|r| r.big_collisions).sum(),
        suppressed_flips: results.iter().map(|r| r.suppressed_flips).sum(),
    }
}

/// One CSV row per trial.
pub fn write_results_csv<W: Write>(out: W, results: &[TrialResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub aggregate: Aggregate,
}

/// Runs the same batch at each ε.
pub fn sweep(base: &BatchSpec, epsilons: &[f64]) -> Result<Vec<(SweepPoint, Vec<TrialResult>)>> {
    epsilons
        .iter()
        .map(|&eps| {
            let mut spec = base.clone();
            spec.params.epsilon = eps;
            let results = run_trials(&spec)?;
            let aggregate = aggregate(&spec, &results);
            Ok((SweepPoint { epsilon: eps, aggregate }, results))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ArmReport {
    pub mp3_enabled: bool,
    pub successes: u64,
    pub success_rate: f64,
    pub mean_max_rewind: f64,
    pub median_max_rewind: u64,
    pub max_rewinds: Vec<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub v: u32,
    pub attack: String,
    pub trials: u64,
    pub on: ArmReport,
    pub off: ArmReport,
    /// Pairs where the MP3-off arm rewound strictly further.
    pub pairs_off_larger: u64,
    pub pairs_on_larger: u64,
    /// One-sided sign-test p-value for "off rewinds further".
    pub sign_test_p: f64,
}

/// P(X ≥ k) for X ~ Binomial(n, 1/2).
pub fn sign_test_p(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut coeff = 1.0f64; // C(n, 0)
    let mut tail = 0.0;
    for i in 0..=n {
        if i >= k {
            tail += coeff;
        }
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    tail / 2f64.powi(n as i32)
}

fn arm(mp3: bool, results: &[TrialResult]) -> ArmReport {
    let rewinds: Vec<u64> = results.iter().map(|r| r.max_rewind).collect();
    let successes = results.iter().filter(|r| r.success).count() as u64;
    let n = results.len().max(1) as f64;
    ArmReport {
        mp3_enabled: mp3,
        successes,
        success_rate: successes as f64 / n,
        mean_max_rewind: rewinds.iter().sum::<u64>() as f64 / n,
        median_max_rewind: percentile(&rewinds, 50.0),
        max_rewinds: rewinds,
    }
}

/// Paired runs of one attack with MP3 on and off; trial i of both arms
/// shares its seed and protocol.
pub fn attack_experiment(base: &BatchSpec) -> Result<(AttackReport, [Vec<TrialResult>; 2])> {
    let mut on = base.clone();
    on.params.mp3_enabled = true;
    let mut off = base.clone();
    off.params.mp3_enabled = false;
    let on_results = run_trials(&on)?;
    let off_results = run_trials(&off)?;
    let off_larger = on_results.iter().zip(&off_results).filter(|(a, b)| b.max_rewind > a.max_rewind).count() as u64;
    let on_larger = on_results.iter().zip(&off_results).filter(|(a, b)| a.max_rewind > b.max_rewind).count() as u64;
    let report = AttackReport {
        v: SCHEMA_VERSION,
        attack: base.adversary.to_string(),
        trials: base.trials,
        on: arm(true, &on_results),
        off: arm(false, &off_results),
        pairs_off_larger: off_larger,
        pairs_on_larger: on_larger,
        sign_test_p: sign_test_p(off_larger, off_larger + on_larger),
    };
    Ok((report, [on_results, off_results]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<u64> = (1..=20).collect();
        assert_eq!(percentile(&v, 95.0), 19);
        assert_eq!(percentile(&v, 50.0), 10);
        assert_eq!(percentile(&[7], 95.0), 7);
        assert_eq!(percentile(&[], 95.0), 0);
    }

    #[test]
    fn sign_test_matches_binomial_tail() {
        // Independent: sum C(10, i) for i >= 8 is 45 + 10 + 1 = 56.
        assert!((sign_test_p(8, 10) - 56.0 / 1024.0).abs() < 1e-12);
        assert_eq!(sign_test_p(0, 5), 1.0);
        assert_eq!(sign_test_p(0, 0), 1.0);
    }
}
