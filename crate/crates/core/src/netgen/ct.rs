//! Sparse stable continuous-time systems and their Euler-Maruyama
//! simulation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::Domain;
use crate::network::StateSpaceModel;
use crate::regression::ExperimentData;

/// Sparse Hurwitz `A` (strictly diagonally dominant with negative diagonal,
/// nonzero superdiagonal), `B = e_1`, `C = [I 0]`, `D = 0`.
pub fn random_ct_system<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    density: f64,
    rng: &mut R,
) -> Result<StateSpaceModel> {
    if n < p || p == 0 {
        return Err(Error::InvalidArgument(format!("need n >= p >= 1, got n={n}, p={p}")));
    }
    let mut a = DMatrix::<f64>::zeros(n, n);
    let sign = |rng: &mut R| if rng.random::<bool>() { 1.0 } else { -1.0 };
    for i in 0..n {
        if i + 1 < n {
            a[(i, i + 1)] = sign(rng) * rng.random_range(0.5..1.5);
        }
        for j in 0..n {
            if j != i && j != i + 1 && rng.random::<f64>() < density {
                a[(i, j)] = sign(rng) * rng.random_range(0.5..1.5);
            }
        }
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        a[(i, i)] = -(off + rng.random_range(0.1..1.0));
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(0, 0)] = 1.0;
    let mut c = DMatrix::zeros(p, n);
    for i in 0..p {
        c[(i, i)] = 1.0;
    }
    let ss = StateSpaceModel::deterministic(a, b, c, DMatrix::zeros(p, 1), Domain::Continuous);
    debug_assert!(ss.is_stable());
    Ok(ss)
}

/// Step input `u(t) = amplitude` for `t >= start`, zero before.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInput {
    pub amplitude: f64,
    pub start: f64,
}

impl StepInput {
    fn at(&self, t: f64) -> f64 {
        if t >= self.start {
            self.amplitude
        } else {
            0.0
        }
    }
}

/// Sampling frequency `multiplier * (max |Im eig| + max |Re eig|) / (2 pi)`.
pub fn sampling_frequency(ss: &StateSpaceModel, multiplier: f64) -> f64 {
    let eig = ss.poles();
    let im = eig.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let re = eig.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    multiplier * (im + re) / (2.0 * std::f64::consts::PI)
}

/// Integrate `dx = (A x + B u) dt + std dW` with step `h = 1 / (100 f_s)` from
/// `x(0) = 0` over `[0, duration]`, sampling `y = C x + D u` at `f_s`.
pub fn simulate_ct(
    ss: &StateSpaceModel,
    input: StepInput,
    process_noise_std: f64,
    fs_multiplier: f64,
    duration: f64,
    seed: u64,
) -> Result<ExperimentData> {
    ss.validate()?;
    if duration <= 0.0 || fs_multiplier <= 0.0 {
        return Err(Error::InvalidArgument("duration and multiplier must be positive".into()));
    }
    let fs = sampling_frequency(ss, fs_multiplier);
    if fs <= 0.0 {
        return Err(Error::InvalidArgument("system has no dynamics to sample".into()));
    }
    const SUBSTEPS: usize = 100;
    let h = 1.0 / (SUBSTEPS as f64 * fs);
    let samples = (duration * fs).floor() as usize + 1;
    let (n, p, m) = (ss.states(), ss.outputs(), ss.inputs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::<f64>::zeros(n);
    let mut y = DMatrix::zeros(samples, p);
    let mut u = DMatrix::zeros(samples, m);
    let sq = h.sqrt() * process_noise_std;
    for s in 0..samples {
        let t = s as f64 / fs;
        let us = DVector::from_element(m, input.at(t));
        y.set_row(s, &(&ss.c * &x + &ss.d * &us).transpose());
        u.set_row(s, &us.transpose());
        for k in 0..SUBSTEPS {
            let tk = t + k as f64 * h;
            let uk = DVector::from_element(m, input.at(tk));
            let drift = &ss.a * &x + &ss.b * uk;
            x += drift * h;
            if process_noise_std > 0.0 {
                for v in x.iter_mut() {
                    *v += sq * rng.sample::<f64, _>(StandardNormal);
                }
            }
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e150) {
            return Err(Error::Diverged { step: s, seed });
        }
    }
    ExperimentData::new(y, u, 1.0 / fs)
}
