//! Monte Carlo benchmark: random networks, simulated experiments,
//! reconstruction with each method and structure metrics against the truth.

use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compare, StructureMetrics};
use crate::netgen::{random_ct_system, simulate_ct, generate_case, GenConfig, StepInput};
use crate::network::{dsf_from_state_space, BooleanNetwork, StructureSource};
use crate::reconstruct::{reconstruct, ReconstructionConfig};
use crate::regression::ExperimentData;
use crate::solver::Method;

/// Default `lambda` for a scenario: 0.1 at SNR up to 10 dB, 0.01 at 20 dB,
/// 0.001 at 40 dB or noise free; halved for networks of 5 nodes or fewer.
pub fn default_lambda(snr_db: Option<f64>, nodes: usize) -> f64 {
    let base = match snr_db {
        Some(s) if s <= 10.0 => 0.1,
        Some(s) if s <= 20.0 => 0.01,
        _ => 0.001,
    };
    if nodes <= 5 {
        base / 2.0
    } else {
        base
    }
}

/// Default relative pruning threshold of the SBL variances: larger for
/// noisier data.
pub fn default_prune_gamma(snr_db: Option<f64>) -> f64 {
    match snr_db {
        Some(s) if s <= 10.0 => 3e-3,
        Some(s) if s <= 20.0 => 1e-3,
        Some(_) => 1e-4,
        None => 1e-8,
    }
}

/// SplitMix64 mix of the global seed and the trial index.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    let mut z = seed.wrapping_add((trial as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Network and data settings; its seed is replaced per trial.
    pub generator: GenConfig,
    /// Solver settings; `lambda` and `prune_gamma` below override theirs.
    pub reconstruction: ReconstructionConfig,
    /// `None` picks [`default_lambda`].
    pub lambda: Option<f64>,
    /// `None` picks [`default_prune_gamma`].
    pub prune_gamma: Option<f64>,
    /// Samples per experiment given to the MCMC method; `None` uses all.
    pub gsmc_samples: Option<usize>,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            trials: 20,
            seed: 0,
            methods: Method::ALL.to_vec(),
            generator: GenConfig::default(),
            reconstruction: ReconstructionConfig::default(),
            lambda: None,
            prune_gamma: None,
            gsmc_samples: Some(100),
            jobs: 0,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.methods.is_empty() {
            return Err(Error::InvalidArgument("need at least one trial and one method".into()));
        }
        self.generator.validate()?;
        self.reconstruction.l1.validate()?;
        self.reconstruction.sbl.validate()?;
        self.reconstruction.mcmc.validate()
    }

    /// Reconstruction settings for `method` in trial `trial`.
    pub fn method_config(&self, method: Method, trial_seed: u64) -> ReconstructionConfig {
        let mut rc = self.reconstruction.clone();
        rc.method = method;
        rc.l1.lambda = self
            .lambda
            .unwrap_or_else(|| default_lambda(self.generator.snr_db, self.generator.nodes));
        rc.sbl.prune_gamma = self
            .prune_gamma
            .unwrap_or_else(|| default_prune_gamma(self.generator.snr_db));
        rc.mcmc.seed = trial_seed;
        rc
    }
}

/// Result of one method on one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub metrics: StructureMetrics,
    /// All per-experiment structures equal the reconstructed one.
    pub consistent: bool,
    pub seconds: f64,
}

/// Trial that could not be completed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub reason: String,
}

/// Mean and sample standard deviation per method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub trials: usize,
    pub precision_mean: f64,
    pub precision_sd: f64,
    pub tpr_mean: f64,
    pub tpr_sd: f64,
    pub degenerate: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub config: BenchConfig,
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    pub summary: Vec<MethodSummary>,
    pub complete: bool,
    pub seconds: f64,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Per-method aggregates recomputed from trial records.
pub fn summarize(methods: &[Method], records: &[TrialRecord]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let rows: Vec<&TrialRecord> = records.iter().filter(|r| r.method == method).collect();
            let prec: Vec<f64> = rows.iter().map(|r| r.metrics.precision).collect();
            let tpr: Vec<f64> = rows.iter().map(|r| r.metrics.tpr).collect();
            let (pm, ps) = mean_sd(&prec);
            let (tm, ts) = mean_sd(&tpr);
            MethodSummary {
                method,
                trials: rows.len(),
                precision_mean: pm,
                precision_sd: ps,
                tpr_mean: tm,
                tpr_sd: ts,
                degenerate: rows.iter().filter(|r| r.metrics.precision_degenerate).count(),
                seconds: rows.iter().map(|r| r.seconds).sum(),
            }
        })
        .collect()
}

/// Whether every per-experiment structure has the `y -> y` arcs of `net`.
pub fn structures_consistent(net: &BooleanNetwork, per_experiment: &[BooleanNetwork]) -> bool {
    per_experiment.iter().all(|e| e.yy == net.yy && e.uy == net.uy)
}

/// Run one trial for all configured methods.
pub fn run_trial(cfg: &BenchConfig, trial: usize) -> Result<Vec<TrialRecord>> {
    let seed = trial_seed(cfg.seed, trial);
    let gen = GenConfig {
        seed,
        ..cfg.generator.clone()
    };
    let case = generate_case(&gen)?;
    cfg.methods
        .iter()
        .map(|&method| {
            let rc = cfg.method_config(method, seed);
            let data: Vec<ExperimentData> = match (method, cfg.gsmc_samples) {
                (Method::Gsmc, Some(n)) => case.data.iter().map(|d| d.truncated(n)).collect(),
                _ => case.data.clone(),
            };
            let start = Instant::now();
            let rec = reconstruct(&data, &rc)?;
            let seconds = start.elapsed().as_secs_f64();
            Ok(TrialRecord {
                trial,
                seed,
                method,
                metrics: compare(&case.truth, &rec.network)?,
                consistent: structures_consistent(&rec.network, &rec.per_experiment),
                seconds,
            })
        })
        .collect()
}

/// Run all trials on a pool of `cfg.jobs` threads; records come back in trial
/// order whatever the thread count.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<Vec<TrialRecord>>> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, t)).collect());
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (trial, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(r) => records.extend(r),
            Err(e) => {
                log::warn!("trial {trial} failed: {e}");
                failures.push(TrialFailure {
                    trial,
                    seed: trial_seed(cfg.seed, trial),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(BenchmarkReport {
        schema: crate::io::SCHEMA.to_string(),
        summary: summarize(&cfg.methods, &records),
        complete: failures.is_empty(),
        config: cfg.clone(),
        records,
        failures,
        seconds: start.elapsed().as_secs_f64(),
    })
}

impl BenchmarkReport {
    /// One CSV row per trial and method.
    pub fn write_trials_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "trial", "seed", "method", "tp", "fp", "fn", "tn", "precision", "tpr", "degenerate", "consistent",
            "seconds",
        ])?;
        for r in &self.records {
            let m = &r.metrics;
            out.write_record([
                r.trial.to_string(),
                r.seed.to_string(),
                r.method.to_string(),
                m.tp.to_string(),
                m.fp.to_string(),
                m.fn_.to_string(),
                m.tn.to_string(),
                m.precision.to_string(),
                m.tpr.to_string(),
                m.precision_degenerate.to_string(),
                r.consistent.to_string(),
                r.seconds.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Settings of the continuous-time smoke benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CtSmokeConfig {
    pub states: usize,
    pub outputs: usize,
    pub density: f64,
    pub experiments: usize,
    pub perturbation: f64,
    pub duration: f64,
    pub process_noise_std: f64,
    pub fs_multiplier: f64,
    pub reconstruction: ReconstructionConfig,
    pub seed: u64,
}

impl Default for CtSmokeConfig {
    fn default() -> Self {
        CtSmokeConfig {
            states: 10,
            outputs: 10,
            density: 0.1,
            experiments: 2,
            perturbation: 0.1,
            duration: 20.0,
            process_noise_std: 0.01,
            fs_multiplier: 40.0,
            reconstruction: ReconstructionConfig {
                l1: crate::solver::l1::L1Config {
                    lambda: 1e-3,
                    ..Default::default()
                },
                ..Default::default()
            },
            seed: 0,
        }
    }
}

/// Outcome of the continuous-time smoke benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtSmokeReport {
    pub truth: BooleanNetwork,
    pub estimate: BooleanNetwork,
    pub metrics: StructureMetrics,
}

/// Sparse continuous-time system, perturbed copies of its `A`, sampled step
/// responses, and reconstruction against the structure of its DSF.
pub fn run_ct_smoke(cfg: &CtSmokeConfig) -> Result<CtSmokeReport> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ss = random_ct_system(cfg.states, cfg.outputs, cfg.density, &mut rng)?;
    let truth = dsf_from_state_space(&ss)?.boolean_structure(crate::network::DEFAULT_STRUCTURE_TOL);
    let mut data = Vec::with_capacity(cfg.experiments);
    for _ in 0..cfg.experiments {
        let mut sys = ss.clone();
        for v in sys.a.iter_mut() {
            if *v != 0.0 {
                *v *= 1.0 + rng.random_range(-cfg.perturbation..=cfg.perturbation);
            }
        }
        if !sys.is_stable() {
            sys = ss.clone();
        }
        let step = StepInput {
            amplitude: 1.0,
            start: 0.0,
        };
        data.push(simulate_ct(
            &sys,
            step,
            cfg.process_noise_std,
            cfg.fs_multiplier,
            cfg.duration,
            rng.random(),
        )?);
    }
    let n = data.iter().map(|d| d.samples()).min().unwrap_or(0);
    let data: Vec<ExperimentData> = data.iter().map(|d| d.truncated(n)).collect();
    let rec = reconstruct(&data, &cfg.reconstruction)?;
    let metrics = compare(&truth, &rec.network)?;
    Ok(CtSmokeReport {
        truth,
        estimate: rec.network,
        metrics,
    })
}
