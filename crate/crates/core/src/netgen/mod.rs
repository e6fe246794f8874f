//! Random benchmark networks and multi-experiment data.

pub mod arx;
pub mod ct;
pub mod structure;

pub use arx::{
    bounded_simulation_peak, feedback_gain, make_replica, path_gain_bound, perturb, random_polynomials,
    random_stable_monic, run_arx, simulate_arx, stabilize_network, true_parameters, white_input, InputLayout,
    PolynomialSpec, SimulatedExperiment, TunedLoop,
};
pub use ct::{random_ct_system, sampling_frequency, simulate_ct, StepInput};
pub use structure::{arc_count, feedback_arcs, random_boolean_structure, FeedbackArc};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ArxNetworkModel, BooleanNetwork};
use crate::regression::ExperimentData;

/// Settings of one generated network with its experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub nodes: usize,
    pub density: f64,
    pub order: usize,
    pub pole_radius: f64,
    pub gain_range: (f64, f64),
    pub max_feedback: usize,
    /// Loop-gain bound after tuning the feedback arcs.
    pub safety: f64,
    /// Networks whose tuned feedback arcs fall below this H-infinity norm
    /// are regenerated.
    pub min_feedback_norm: f64,
    /// `None` is noise free.
    pub snr_db: Option<f64>,
    pub experiments: usize,
    pub perturbation: f64,
    pub samples: usize,
    pub input_layout: InputLayout,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            nodes: 10,
            density: 0.2,
            order: 2,
            pole_radius: 0.9,
            gain_range: (0.5, 1.5),
            max_feedback: 3,
            safety: 0.9,
            min_feedback_norm: 0.05,
            snr_db: Some(10.0),
            experiments: 2,
            perturbation: 0.1,
            samples: 500,
            input_layout: InputLayout::Diagonal,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.nodes == 0 || self.order == 0 || self.experiments == 0 {
            return bad("nodes, order and experiments must be positive".into());
        }
        if !(self.pole_radius > 0.0 && self.pole_radius < 1.0) {
            return bad(format!("pole radius {} not in (0, 1)", self.pole_radius));
        }
        if !(self.min_feedback_norm >= 0.0) {
            return bad(format!("min feedback norm {} must be nonnegative", self.min_feedback_norm));
        }
        if !(self.safety > 0.0 && self.safety < 1.0) {
            return bad(format!("safety {} not in (0, 1)", self.safety));
        }
        if !(self.gain_range.0 > 0.0 && self.gain_range.0 <= self.gain_range.1) {
            return bad("gain range must be positive and ordered".into());
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return bad("snr must be finite or absent".into());
            }
        }
        if self.samples <= self.order {
            return bad(format!("{} samples for order {}", self.samples, self.order));
        }
        Ok(())
    }

    fn poly_spec(&self) -> PolynomialSpec {
        PolynomialSpec {
            order: self.order,
            pole_radius: self.pole_radius,
            gain_range: self.gain_range,
        }
    }
}

/// Stable random network with its structure, regenerated (up to 20 times)
/// until the tuned model is stable.
pub fn generate_network<R: Rng + ?Sized>(
    cfg: &GenConfig,
    rng: &mut R,
) -> Result<(BooleanNetwork, ArxNetworkModel, Vec<TunedLoop>)> {
    cfg.validate()?;
    const ATTEMPTS: usize = 20;
    for attempt in 0..ATTEMPTS {
        let net = random_boolean_structure(cfg.nodes, cfg.density, cfg.max_feedback, rng)?;
        let raw = random_polynomials(&net, cfg.input_layout, &cfg.poly_spec(), rng)?;
        match stabilize_network(&net, &raw, cfg.safety) {
            Ok((_, loops))
                if loops
                    .iter()
                    .any(|l| l.gain * l.feedback_norm < cfg.min_feedback_norm) =>
            {
                log::debug!("attempt {attempt}: feedback arc too weak after tuning")
            }
            Ok((model, loops)) if model.is_stable() => {
                let mut truth = net;
                truth.m = model.inputs();
                for (k, i) in cfg.input_layout.arcs(cfg.nodes) {
                    truth.add_uy(k, i)?;
                }
                return Ok((truth, model, loops));
            }
            Ok(_) => log::debug!("attempt {attempt}: tuned network unstable"),
            Err(e) => log::debug!("attempt {attempt}: {e}"),
        }
    }
    Err(Error::GenerationFailed {
        attempts: ATTEMPTS,
        seed: cfg.seed,
    })
}

/// A generated network with its perturbed replica and simulated data.
#[derive(Clone, Debug)]
pub struct GeneratedBenchmarkCase {
    pub truth: BooleanNetwork,
    pub nominal: ArxNetworkModel,
    pub models: Vec<ArxNetworkModel>,
    pub data: Vec<ExperimentData>,
    pub realized_snr_db: Vec<Vec<f64>>,
    pub seed: u64,
}

/// Network, `experiments` perturbed stable copies and one simulation per
/// copy with white Gaussian inputs, all from `cfg.seed`.
pub fn generate_case(cfg: &GenConfig) -> Result<GeneratedBenchmarkCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (truth, nominal, _) = generate_network(cfg, &mut rng)?;
    let models = make_replica(&nominal, cfg.perturbation, cfg.experiments, &mut rng).map_err(|e| match e {
        Error::GenerationFailed { attempts, .. } => Error::GenerationFailed {
            attempts,
            seed: cfg.seed,
        },
        other => other,
    })?;
    let mut data = Vec::with_capacity(models.len());
    let mut snr = Vec::with_capacity(models.len());
    for model in &models {
        let u = white_input(cfg.samples, model.inputs(), rng.random());
        let sim = simulate_arx(model, &u, cfg.snr_db, rng.random())?;
        data.push(sim.data);
        snr.push(sim.realized_snr_db);
    }
    Ok(GeneratedBenchmarkCase {
        truth,
        nominal,
        models,
        data,
        realized_snr_db: snr,
        seed: cfg.seed,
    })
}
