//! Random stable ARX networks: polynomials, small-gain tuning of feedback
//! arcs, replica and simulation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::structure::feedback_arcs;
use crate::error::{Error, Result};
use crate::lti::{Domain, Polynomial, RationalTransferFunction, DEFAULT_HINF_GRID};
use crate::network::{ArxNetworkModel, BooleanNetwork};
use crate::regression::ExperimentData;

/// Which inputs drive which outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputLayout {
    /// `m = p`, input `k` drives output `k`.
    #[default]
    Diagonal,
    /// One input driving the first output.
    First,
}

impl InputLayout {
    pub fn inputs(self, p: usize) -> usize {
        match self {
            InputLayout::Diagonal => p,
            InputLayout::First => 1,
        }
    }

    pub fn arcs(self, p: usize) -> Vec<(usize, usize)> {
        match self {
            InputLayout::Diagonal => (0..p).map(|k| (k, k)).collect(),
            InputLayout::First => vec![(0, 0)],
        }
    }
}

/// Parameters of the random polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub order: usize,
    pub pole_radius: f64,
    /// Range of the H-infinity norm of every `Q_ij` and `P_ik`.
    pub gain_range: (f64, f64),
}

impl Default for PolynomialSpec {
    fn default() -> Self {
        PolynomialSpec {
            order: 2,
            pole_radius: 0.9,
            gain_range: (0.5, 1.5),
        }
    }
}

fn uniform_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Complex64 {
    let r = radius * rng.random::<f64>().sqrt();
    let th = rng.random_range(0.0..std::f64::consts::PI);
    Complex64::from_polar(r, th)
}

/// Monic polynomial in `q^-1` of the given degree whose roots (in `q`) are
/// drawn uniformly in the disk of radius `radius`, in conjugate pairs, with a
/// real root for odd degrees.
pub fn random_stable_monic<R: Rng + ?Sized>(degree: usize, radius: f64, rng: &mut R) -> Polynomial {
    let mut roots = Vec::with_capacity(degree);
    while roots.len() + 2 <= degree {
        let z = uniform_disk(rng, radius);
        roots.push(z);
        roots.push(z.conj());
    }
    if roots.len() < degree {
        roots.push(Complex64::new(rng.random_range(-radius..radius), 0.0));
    }
    let fwd = Polynomial::from_roots(&roots, Domain::Continuous);
    let mut c: Vec<f64> = fwd.coeffs().iter().rev().copied().collect();
    c[0] = 1.0;
    Polynomial::discrete(c)
}

/// `q^-1` times a monic stable polynomial of degree `order - 1`.
fn random_numerator<R: Rng + ?Sized>(order: usize, radius: f64, rng: &mut R) -> Polynomial {
    let base = random_stable_monic(order.saturating_sub(1), radius, rng);
    let mut c = vec![0.0];
    c.extend_from_slice(base.coeffs());
    Polynomial::discrete(c)
}

/// Scale `num` so that `||num / den||_inf` equals a random value in `range`,
/// with a random sign.
fn normalize_gain<R: Rng + ?Sized>(
    num: Polynomial,
    den: &Polynomial,
    range: (f64, f64),
    rng: &mut R,
) -> Result<Polynomial> {
    let g = RationalTransferFunction::new(num.clone(), den.clone())?.hinf_norm(DEFAULT_HINF_GRID)?;
    let target = rng.random_range(range.0..=range.1);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    Ok(num.scale(sign * target / g))
}

/// Random stable polynomials on a given structure, feedback arcs untuned.
pub fn random_polynomials<R: Rng + ?Sized>(
    net: &BooleanNetwork,
    layout: InputLayout,
    spec: &PolynomialSpec,
    rng: &mut R,
) -> Result<ArxNetworkModel> {
    let p = net.p;
    let mut model = ArxNetworkModel::empty(p, layout.inputs(p));
    for a in model.a.iter_mut() {
        *a = random_stable_monic(spec.order, spec.pole_radius, rng);
    }
    for &(from, to) in &net.yy {
        let num = random_numerator(spec.order, spec.pole_radius, rng);
        model.by[to][from] = normalize_gain(num, &model.a[to], spec.gain_range, rng)?;
    }
    for (k, to) in layout.arcs(p) {
        let num = random_numerator(spec.order, spec.pole_radius, rng);
        model.bu[to][k] = normalize_gain(num, &model.a[to], spec.gain_range, rng)?;
    }
    model.validate()?;
    Ok(model)
}

/// Gain applied to a feedback arc so that the loop-gain bound is `safety`:
/// `safety / (forward * feedback)`.
pub fn feedback_gain(forward_bound: f64, feedback_norm: f64, safety: f64) -> f64 {
    safety / (forward_bound * feedback_norm)
}

/// Record of one tuned feedback arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunedLoop {
    pub from: usize,
    pub to: usize,
    pub forward_bound: f64,
    pub feedback_norm: f64,
    pub gain: f64,
}

/// Upper bound on the H-infinity norm from node `src` to node `dst` of the
/// interconnection with arc-norm matrix `n` (`n[(i, j)]` for `y_j -> y_i`),
/// restricted to `nodes`: entry of `(I - N)^-1`, i.e. the sum over walks of
/// the products of arc norms. `None` when the walk sum diverges, which for a
/// nonnegative `N` is exactly when `(I - N)^-1` fails to exist or to be
/// nonnegative.
pub fn path_gain_bound(n: &DMatrix<f64>, nodes: &[usize], src: usize, dst: usize) -> Option<f64> {
    let k = nodes.len();
    let sub = DMatrix::from_fn(k, k, |r, c| n[(nodes[r], nodes[c])]);
    let inv = (DMatrix::identity(k, k) - sub).try_inverse()?;
    if inv.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return None;
    }
    let si = nodes.iter().position(|&v| v == src)?;
    let di = nodes.iter().position(|&v| v == dst)?;
    Some(inv[(di, si)])
}

/// Scale every feedback arc, inner loops first, so that the small-gain
/// bound of its loop is `safety`. The forward part of each loop is bounded
/// from the arc norms by series (product), parallel (sum) and closed inner
/// loops (walk sums), never from lumped transfer functions.
pub fn stabilize_network(
    net: &BooleanNetwork,
    model: &ArxNetworkModel,
    safety: f64,
) -> Result<(ArxNetworkModel, Vec<TunedLoop>)> {
    let p = net.p;
    let mut out = model.clone();
    let mut norms = DMatrix::zeros(p, p);
    for &(from, to) in &net.yy {
        let q = RationalTransferFunction::new(out.by[to][from].clone(), out.a[to].clone())?;
        norms[(to, from)] = q.hinf_norm(DEFAULT_HINF_GRID)?;
    }
    let mut tuned = Vec::new();
    for f in feedback_arcs(net) {
        let fb = norms[(f.to, f.from)];
        norms[(f.to, f.from)] = 0.0;
        let nodes: Vec<usize> = (f.to..=f.from).collect();
        let fwd = path_gain_bound(&norms, &nodes, f.to, f.from).ok_or_else(|| {
            Error::InvalidArgument("inner loops are not contractive".into())
        })?;
        let gain = feedback_gain(fwd, fb, safety);
        out.by[f.to][f.from] = out.by[f.to][f.from].scale(gain);
        norms[(f.to, f.from)] = fb * gain;
        tuned.push(TunedLoop {
            from: f.from,
            to: f.to,
            forward_bound: fwd,
            feedback_norm: fb,
            gain,
        });
    }
    Ok((out, tuned))
}

/// Scale all nonzero coefficients (except the leading ones of `A` and `C`)
/// by independent factors `1 + delta`, `delta ~ U[-perturbation, perturbation]`.
pub fn perturb<R: Rng + ?Sized>(model: &ArxNetworkModel, perturbation: f64, rng: &mut R) -> ArxNetworkModel {
    let mut jitter = |poly: &Polynomial, keep_first: bool| {
        let c: Vec<f64> = poly
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if v == 0.0 || (keep_first && k == 0) || perturbation == 0.0 {
                    v
                } else {
                    v * (1.0 + rng.random_range(-perturbation..=perturbation))
                }
            })
            .collect();
        Polynomial::discrete(c)
    };
    let mut out = model.clone();
    for a in out.a.iter_mut() {
        *a = jitter(a, true);
    }
    for row in out.by.iter_mut().chain(out.bu.iter_mut()) {
        for b in row.iter_mut() {
            *b = jitter(b, false);
        }
    }
    if let Some(c) = out.c.as_mut() {
        for ci in c.iter_mut() {
            *ci = jitter(ci, true);
        }
    }
    out
}

/// `count` perturbed copies, each re-drawn (up to 20 times) until stable.
pub fn make_replica<R: Rng + ?Sized>(
    model: &ArxNetworkModel,
    perturbation: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ArxNetworkModel>> {
    if !(0.0..1.0).contains(&perturbation) {
        return Err(Error::InvalidArgument(format!(
            "perturbation {perturbation} not in [0, 1)"
        )));
    }
    const ATTEMPTS: usize = 20;
    (0..count)
        .map(|_| {
            for _ in 0..ATTEMPTS {
                let m = perturb(model, perturbation, rng);
                if m.is_stable() {
                    return Ok(m);
                }
            }
            Err(Error::GenerationFailed {
                attempts: ATTEMPTS,
                seed: 0,
            })
        })
        .collect()
}

/// Run the ARX difference equations from zero initial conditions with
/// input `u` (`N x m`) and unit-scaled innovations `e` (`N x p`).
pub fn run_arx(model: &ArxNetworkModel, u: &DMatrix<f64>, e: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let p = model.outputs();
    let n = u.nrows();
    if u.ncols() != model.inputs() {
        return Err(Error::Dimension(format!(
            "input has {} columns, model has {} inputs",
            u.ncols(),
            model.inputs()
        )));
    }
    if let Some(e) = e {
        if e.shape() != (n, p) {
            return Err(Error::Dimension("noise must be N x p".into()));
        }
    }
    let mut y = DMatrix::<f64>::zeros(n, p);
    for t in 0..n {
        for i in 0..p {
            let mut v = 0.0;
            for (k, a) in model.a[i].coeffs().iter().enumerate().skip(1) {
                if k <= t {
                    v -= a * y[(t - k, i)];
                }
            }
            for (j, b) in model.by[i].iter().enumerate() {
                for (k, c) in b.coeffs().iter().enumerate().skip(1) {
                    if k <= t {
                        v += c * y[(t - k, j)];
                    }
                }
            }
            for (j, b) in model.bu[i].iter().enumerate() {
                for (k, c) in b.coeffs().iter().enumerate().skip(1) {
                    if k <= t {
                        v += c * u[(t - k, j)];
                    }
                }
            }
            if let Some(e) = e {
                v += e[(t, i)];
                if let Some(cpoly) = &model.c {
                    for (k, c) in cpoly[i].coeffs().iter().enumerate().skip(1) {
                        if k <= t {
                            v += c * e[(t - k, i)];
                        }
                    }
                }
            }
            if !v.is_finite() || v.abs() > 1e150 {
                return Err(Error::Diverged { step: t, seed: 0 });
            }
            y[(t, i)] = v;
        }
    }
    Ok(y)
}

/// Simulated experiment with the noise scaling used.
#[derive(Clone, Debug)]
pub struct SimulatedExperiment {
    pub data: ExperimentData,
    pub noise_std: Vec<f64>,
    /// `10 log10(var(noiseless y_i) / var(noise part of y_i))`.
    pub realized_snr_db: Vec<f64>,
}

fn column_variance(m: &DMatrix<f64>, i: usize) -> f64 {
    m.column(i).variance()
}

/// Simulate with white Gaussian innovations scaled so that every output has
/// the requested SNR exactly (over this realization). `snr_db = None` is
/// noise free.
pub fn simulate_arx(
    model: &ArxNetworkModel,
    u: &DMatrix<f64>,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<SimulatedExperiment> {
    let with_seed = |e: Error| match e {
        Error::Diverged { step, .. } => Error::Diverged { step, seed },
        other => other,
    };
    let p = model.outputs();
    let n = u.nrows();
    let clean = run_arx(model, u, None).map_err(with_seed)?;
    let Some(snr) = snr_db else {
        return Ok(SimulatedExperiment {
            data: ExperimentData::new(clean, u.clone(), 1.0)?,
            noise_std: vec![0.0; p],
            realized_snr_db: vec![f64::INFINITY; p],
        });
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = DMatrix::<f64>::from_fn(n, p, |_, _| rng.sample(StandardNormal));
    let zero_u = DMatrix::zeros(n, u.ncols());
    // response of all outputs to unit innovations on output j alone
    let responses = (0..p)
        .map(|j| {
            let mut ej = DMatrix::zeros(n, p);
            ej.set_column(j, &e.column(j));
            run_arx(model, &zero_u, Some(&ej)).map_err(with_seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let ratio = 10f64.powf(snr / 10.0);
    let target: Vec<f64> = (0..p).map(|i| column_variance(&clean, i) / ratio).collect();
    let mut sigma: Vec<f64> = (0..p)
        .map(|i| {
            let own = column_variance(&responses[i], i);
            if own > 0.0 {
                (target[i] / own).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let noise_part = |sigma: &[f64]| {
        let mut acc = DMatrix::<f64>::zeros(n, p);
        for (j, r) in responses.iter().enumerate() {
            acc += r * sigma[j];
        }
        acc
    };
    for _ in 0..500 {
        let noise = noise_part(&sigma);
        let mut worst = 0.0_f64;
        for i in 0..p {
            let cur = column_variance(&noise, i);
            if cur > 0.0 && target[i] > 0.0 {
                worst = worst.max((cur / target[i] - 1.0).abs());
                sigma[i] *= (target[i] / cur).sqrt();
            }
        }
        if worst < 1e-12 {
            break;
        }
    }
    let noise = noise_part(&sigma);
    let y = &clean + &noise;
    let realized = (0..p)
        .map(|i| 10.0 * (column_variance(&clean, i) / column_variance(&noise, i)).log10())
        .collect();
    Ok(SimulatedExperiment {
        data: ExperimentData::new(y, u.clone(), 1.0)?,
        noise_std: sigma,
        realized_snr_db: realized,
    })
}

/// `N x m` i.i.d. standard normal input.
pub fn white_input(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
}

/// Largest absolute output over a noise-free simulation with unit white
/// input.
pub fn bounded_simulation_peak(model: &ArxNetworkModel, steps: usize, seed: u64) -> Result<f64> {
    let u = white_input(steps, model.inputs(), seed);
    let y = run_arx(model, &u, None)?;
    Ok(y.amax())
}

/// `theta_i` of output `i` in the regression layout with uniform `order`:
/// `[a_i (in block i), By_ij (blocks j != i), Bu_ik]`.
pub fn true_parameters(model: &ArxNetworkModel, i: usize, order: usize) -> DVector<f64> {
    let p = model.outputs();
    let m = model.inputs();
    let mut theta = Vec::with_capacity((p + m) * order);
    for j in 0..p {
        let poly = if j == i { &model.a[i] } else { &model.by[i][j] };
        theta.extend((1..=order).map(|k| poly.coeff(k)));
    }
    for k in 0..m {
        theta.extend((1..=order).map(|d| model.bu[i][k].coeff(d)));
    }
    DVector::from_vec(theta)
}
