use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use dynet::bench::{run_benchmark, run_ct_smoke, BenchConfig, CtSmokeConfig};
use dynet::io::{
    model_from_json, model_to_json, network_from_json, network_to_json, read_experiment_file, read_input_file, read_json, tagged,
    write_experiment_file, write_json,
};
use dynet::metrics::compare;
use dynet::netgen::{generate_case, simulate_arx, white_input, GenConfig};
use dynet::reconstruct::{reconstruct, ReconstructionConfig};
use dynet::solver::Method;
use dynet::Error;

use crate::{BenchmarkArgs, Cli, Command, GenerateArgs, MetricsArgs, ReconstructArgs, SimulateArgs};

/// Failure with its exit code: 1 for bad input, 2 for runtime errors.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Parse(_)
            | Error::InvalidArgument(_)
            | Error::Dimension(_)
            | Error::InfeasibleStructure(_)
            | Error::InsufficientSamples { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

fn read_input(path: &Path) -> CmdResult<Value> {
    read_json(path).map_err(|e| Failure::Usage(e.to_string()))
}

fn load_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> CmdResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let v = read_input(p)?;
            serde_json::from_value(v).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn out_dir(cli: &Cli) -> CmdResult<&Path> {
    fs::create_dir_all(&cli.out).map_err(|e| Failure::Runtime(format!("{}: {e}", cli.out.display())))?;
    Ok(&cli.out)
}

fn save(path: &Path, v: &Value) -> CmdResult {
    write_json(path, v).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Reconstruct(a) => reconstruct_cmd(cli, a),
        Command::Benchmark(a) => benchmark(cli, a),
        Command::Metrics(a) => metrics(a),
    }
}

fn apply_gen_flags(cfg: &mut GenConfig, a: &GenerateArgs) {
    if let Some(v) = a.nodes {
        cfg.nodes = v;
    }
    if let Some(v) = a.density {
        cfg.density = v;
    }
    if let Some(v) = a.order {
        cfg.order = v;
    }
    if let Some(v) = a.experiments {
        cfg.experiments = v;
    }
    if let Some(v) = a.samples {
        cfg.samples = v;
    }
    if let Some(v) = a.perturbation {
        cfg.perturbation = v;
    }
    if a.noise_free {
        cfg.snr_db = None;
    } else if let Some(v) = a.snr_db {
        cfg.snr_db = Some(v);
    }
}

fn generate(cli: &Cli, a: &GenerateArgs) -> CmdResult {
    let mut cfg: GenConfig = load_config(cli.config.as_ref())?;
    apply_gen_flags(&mut cfg, a);
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let case = generate_case(&cfg)?;
    let dir = out_dir(cli)?;
    save(&dir.join("truth.json"), &network_to_json(&case.truth))?;
    save(&dir.join("nominal.json"), &model_to_json(&case.nominal))?;
    let mut models = Vec::new();
    let mut data = Vec::new();
    for (l, (model, d)) in case.models.iter().zip(&case.data).enumerate() {
        let mname = format!("model_{}.json", l + 1);
        let dname = format!("experiment_{}.csv", l + 1);
        save(&dir.join(&mname), &model_to_json(model))?;
        write_experiment_file(&dir.join(&dname), d)?;
        models.push(mname);
        data.push(dname);
    }
    let manifest = json!({
        "schema": dynet::io::SCHEMA,
        "type": "case",
        "seed": case.seed,
        "config": cfg,
        "truth": "truth.json",
        "nominal": "nominal.json",
        "models": models,
        "data": data,
        "realized_snr_db": case.realized_snr_db,
    });
    save(&dir.join("manifest.json"), &manifest)?;
    println!(
        "generated {} nodes, {} arcs, {} experiments in {}",
        case.truth.p,
        case.truth.yy_count(),
        case.models.len(),
        dir.display()
    );
    Ok(())
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> CmdResult {
    let model = model_from_json(&read_input(&a.model)?)
        .map_err(|e| Failure::Usage(format!("{}: {e}", a.model.display())))?;
    let (u, period) = match &a.input {
        Some(p) => read_input_file(p)?,
        None => (white_input(a.samples, model.inputs(), cli.seed.unwrap_or(0)), 1.0),
    };
    let mut sim = simulate_arx(&model, &u, a.snr_db, cli.seed.unwrap_or(0).wrapping_add(1))?;
    sim.data.sample_period = period;
    let path = out_dir(cli)?.join(&a.output);
    write_experiment_file(&path, &sim.data)?;
    println!("wrote {} samples to {}", sim.data.samples(), path.display());
    Ok(())
}

fn reconstruct_cmd(cli: &Cli, a: &ReconstructArgs) -> CmdResult {
    let mut cfg: ReconstructionConfig = load_config(cli.config.as_ref())?;
    if let Some(m) = &a.method {
        cfg.method = m.parse::<Method>()?;
    }
    if let Some(l) = a.lambda {
        cfg.l1.lambda = l;
    }
    if let Some(o) = a.order {
        cfg.order = o;
    }
    if a.homogeneous {
        cfg.heterogeneous = false;
    }
    if let Some(s) = cli.seed {
        cfg.mcmc.seed = s;
    }
    let data = a
        .data
        .iter()
        .map(|p| read_experiment_file(p).map_err(Failure::from))
        .collect::<CmdResult<Vec<_>>>()?;
    let rec = reconstruct(&data, &cfg)?;
    let dir = out_dir(cli)?;
    save(&dir.join("network.json"), &network_to_json(&rec.network))?;
    let doc = json!({
        "schema": dynet::io::SCHEMA,
        "type": "reconstruction",
        "config": cfg,
        "network": network_to_json(&rec.network),
        "per_experiment": rec.per_experiment.iter().map(network_to_json).collect::<Vec<_>>(),
        "results": rec.results,
    });
    save(&dir.join("result.json"), &doc)?;
    println!("{}: {} arcs", cfg.method, rec.network.yy_count());
    for (f, t) in &rec.network.yy {
        println!("  y{} -> y{}", f + 1, t + 1);
    }
    Ok(())
}

fn benchmark(cli: &Cli, a: &BenchmarkArgs) -> CmdResult {
    let dir = out_dir(cli)?;
    if a.ct_smoke {
        let mut cfg: CtSmokeConfig = load_config(cli.config.as_ref())?;
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        let rep = run_ct_smoke(&cfg)?;
        save(&dir.join("ct_smoke.json"), &tagged("ct-smoke", &rep)?)?;
        println!("ct smoke: Prec={:.3} TPR={:.3}", rep.metrics.precision, rep.metrics.tpr);
        return Ok(());
    }
    let mut cfg: BenchConfig = load_config(cli.config.as_ref())?;
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(ms) = &a.methods {
        cfg.methods = ms.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?;
    }
    if let Some(n) = a.nodes {
        cfg.generator.nodes = n;
    }
    if a.noise_free {
        cfg.generator.snr_db = None;
    } else if let Some(s) = a.snr_db {
        cfg.generator.snr_db = Some(s);
    }
    if let Some(e) = a.experiments {
        cfg.generator.experiments = e;
    }
    if let Some(n) = a.samples {
        cfg.generator.samples = n;
    }
    if let Some(l) = a.lambda {
        cfg.lambda = Some(l);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    let report = run_benchmark(&cfg)?;
    save(&dir.join("report.json"), &tagged("benchmark-report", &report)?)?;
    let csv_path = dir.join("trials.csv");
    let f = fs::File::create(&csv_path).map_err(|e| Failure::Runtime(format!("{}: {e}", csv_path.display())))?;
    report.write_trials_csv(f)?;
    for s in &report.summary {
        println!(
            "{:<6} Prec {:.4} ± {:.4}  TPR {:.4} ± {:.4}  ({} trials)",
            s.method, s.precision_mean, s.precision_sd, s.tpr_mean, s.tpr_sd, s.trials
        );
    }
    for f in &report.failures {
        eprintln!("trial {} (seed {}) failed: {}", f.trial, f.seed, f.reason);
    }
    if report.complete {
        Ok(())
    } else {
        Err(Failure::Runtime(format!("{} trials failed", report.failures.len())))
    }
}

fn metrics(a: &MetricsArgs) -> CmdResult {
    let load = |p: &PathBuf| -> CmdResult<_> {
        network_from_json(&read_input(p)?).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))
    };
    let truth = load(&a.truth)?;
    let est = load(&a.estimate)?;
    let m = compare(&truth, &est)?;
    println!("Prec={:?} TPR={:?}", m.precision, m.tpr);
    println!("TP={} FP={} FN={} TN={}", m.tp, m.fp, m.fn_, m.tn);
    if m.precision_degenerate {
        println!("note: no arcs predicted; precision uses the degenerate convention");
    }
    Ok(())
}
