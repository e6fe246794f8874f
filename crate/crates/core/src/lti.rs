//! Polynomials and SISO rational transfer functions.
//!
//! Coefficients are stored constant term first. For [`Domain::Discrete`] the
//! variable is the backward shift `q^-1`, so `[1.0, -0.5]` is `1 - 0.5 q^-1`
//! and the difference equation of an ARX row can be read off directly. For
//! [`Domain::Continuous`] the variable is `s`, so `[2.0, 1.0]` is `s + 2`.
//!
//! Roots are always reported in the forward variable (`q` or `s`), which is
//! where the stability regions live: `|q| < 1` and `Re(s) < 0`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative trimming threshold for trailing coefficients.
pub const TRIM_RELATIVE: f64 = 1e-12;

/// Default number of frequency grid points for [`RationalTransferFunction::hinf_norm`].
pub const DEFAULT_HINF_GRID: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    #[default]
    Discrete,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<f64>,
    domain: Domain,
}

fn inf_norm(c: &[f64]) -> f64 {
    c.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

impl Polynomial {
    /// Builds a polynomial, trimming trailing coefficients below
    /// `1e-12 * max|c|`.
    pub fn new(coeffs: Vec<f64>, domain: Domain) -> Self {
        let mut coeffs = coeffs;
        let scale = inf_norm(&coeffs);
        while let Some(last) = coeffs.last() {
            if last.abs() <= TRIM_RELATIVE * scale {
                coeffs.pop();
            } else {
                break;
            }
        }
        Polynomial { coeffs, domain }
    }

    pub fn discrete(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, Domain::Discrete)
    }

    pub fn continuous(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs, Domain::Continuous)
    }

    pub fn zero(domain: Domain) -> Self {
        Polynomial { coeffs: Vec::new(), domain }
    }

    pub fn constant(value: f64, domain: Domain) -> Self {
        Self::new(vec![value], domain)
    }

    pub fn one(domain: Domain) -> Self {
        Self::constant(1.0, domain)
    }

    /// Builds the monic polynomial with the given roots in the forward
    /// variable. Complex roots must come in conjugate pairs; the imaginary
    /// residue of the product is dropped.
    pub fn from_roots(roots: &[Complex64], domain: Domain) -> Self {
        // highest-first coefficients of prod (x - r)
        let mut hf = vec![Complex64::new(1.0, 0.0)];
        for r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); hf.len() + 1];
            for (k, c) in hf.iter().enumerate() {
                next[k] += c;
                next[k + 1] -= c * r;
            }
            hf = next;
        }
        let hf: Vec<f64> = hf.iter().map(|c| c.re).collect();
        match domain {
            // in q^-1, constant-first equals q-highest-first
            Domain::Discrete => Self::new(hf, domain),
            Domain::Continuous => Self::new(hf.into_iter().rev().collect(), domain),
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    /// Degree in the stored variable, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of the `k`-th power, zero beyond the stored length.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Index of the lowest-order nonzero coefficient.
    pub fn lowest_index(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| *c != 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        inf_norm(&self.coeffs)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect(), self.domain)
    }

    /// Evaluates the polynomial in its stored variable at `x`
    /// (`x` stands for `q^-1` or `s`).
    pub fn eval_stored(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
    }

    /// Evaluates at a point of the forward variable, multiplied by
    /// `z^shift` in the discrete case so that evaluation at `z = 0` is finite.
    /// Needs `shift >= len - 1` for discrete polynomials.
    fn eval_forward_scaled(&self, z: Complex64, shift: usize) -> Complex64 {
        match self.domain {
            Domain::Continuous => self.eval_stored(z),
            Domain::Discrete => {
                // sum c_k z^(shift - k)
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..=shift {
                    acc = acc * z + self.coeff(k);
                }
                acc
            }
        }
    }

    /// Coefficients of the polynomial in the forward variable, highest power
    /// first, with leading near-zeros removed.
    fn forward_highest_first(&self) -> Vec<f64> {
        let scale = self.max_abs_coeff();
        let mut hf: Vec<f64> = match self.domain {
            Domain::Discrete => self.coeffs.clone(),
            Domain::Continuous => self.coeffs.iter().rev().copied().collect(),
        };
        while let Some(first) = hf.first() {
            if first.abs() <= TRIM_RELATIVE * scale {
                hf.remove(0);
            } else {
                break;
            }
        }
        hf
    }

    /// All roots in the forward variable (`q` or `s`), from the eigenvalues
    /// of the companion matrix followed by a guarded Newton polish.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let hf = self.forward_highest_first();
        let n = hf.len() - 1;
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = hf[0];
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            companion[(0, k)] = -hf[k + 1] / lead;
        }
        for k in 1..n {
            companion[(k, k - 1)] = 1.0;
        }
        let eig = eigenvalues(&companion);
        let poly = |x: Complex64| {
            let mut v = Complex64::new(0.0, 0.0);
            let mut d = Complex64::new(0.0, 0.0);
            for c in &hf {
                d = d * x + v;
                v = v * x + c;
            }
            (v, d)
        };
        let roots = eig
            .iter()
            .map(|&r0| {
                let mut r = r0;
                let mut best = poly(r).0.norm();
                for _ in 0..3 {
                    let (v, d) = poly(r);
                    if d.norm() == 0.0 {
                        break;
                    }
                    let cand = r - v / d;
                    let cv = poly(cand).0.norm();
                    if cv < best {
                        r = cand;
                        best = cv;
                    } else {
                        break;
                    }
                }
                r
            })
            .collect();
        Ok(roots)
    }

    /// True when all forward-variable roots lie in the stability region.
    pub fn is_stable(&self) -> bool {
        match self.roots() {
            Ok(roots) => roots.iter().all(|r| root_is_stable(*r, self.domain)),
            Err(_) => false,
        }
    }

    /// Pads (discrete) or reverses into a polynomial in `q` with constant
    /// first, of exactly `degree + 1` coefficients. Used to move between the
    /// forward-shift algebra and the stored `q^-1` convention.
    pub fn reversed(&self, len: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..len).map(|k| self.coeff(k)).collect();
        v.reverse();
        v
    }

    fn assert_same_domain(&self, other: &Self) {
        assert_eq!(
            self.domain, other.domain,
            "polynomial arithmetic across discrete and continuous domains"
        );
    }
}

pub(crate) fn root_is_stable(r: Complex64, domain: Domain) -> bool {
    match domain {
        Domain::Discrete => r.norm() < 1.0,
        Domain::Continuous => r.re < 0.0,
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let var = match self.domain {
            Domain::Discrete => "q^-",
            Domain::Continuous => "s^",
        };
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if *c < 0.0 { '-' } else { '+' })?;
            } else if *c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            if k == 0 {
                write!(f, "{}", c.abs())?;
            } else {
                write!(f, "{}{}{}", c.abs(), var, k)?;
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_domain(rhs);
        let n = self.len().max(rhs.len());
        Polynomial::new(
            (0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect(),
            self.domain,
        )
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_domain(rhs);
        let n = self.len().max(rhs.len());
        Polynomial::new(
            (0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect(),
            self.domain,
        )
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_domain(rhs);
        if self.is_empty() || rhs.is_empty() {
            return Polynomial::zero(self.domain);
        }
        let mut out = vec![0.0; self.len() + rhs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out, self.domain)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// SISO real-rational transfer function `num / den`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalTransferFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalTransferFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        num.assert_same_domain(&den);
        Ok(RationalTransferFunction { num, den })
    }

    pub fn zero(domain: Domain) -> Self {
        RationalTransferFunction {
            num: Polynomial::zero(domain),
            den: Polynomial::one(domain),
        }
    }

    pub fn constant(k: f64, domain: Domain) -> Self {
        RationalTransferFunction {
            num: Polynomial::constant(k, domain),
            den: Polynomial::one(domain),
        }
    }

    /// Polynomial (FIR in the discrete case) transfer function.
    pub fn from_polynomial(num: Polynomial) -> Self {
        let domain = num.domain();
        RationalTransferFunction {
            num,
            den: Polynomial::one(domain),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn domain(&self) -> Domain {
        self.den.domain()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Relative degree in the forward variable: `deg(den) - deg(num)`.
    /// `None` for the zero function.
    pub fn relative_degree(&self) -> Option<i64> {
        if self.num.is_zero() {
            return None;
        }
        match self.domain() {
            // b(q^-1)/a(q^-1): each leading zero of b relative to a is one
            // pure delay
            Domain::Discrete => {
                let nb = self.num.lowest_index()? as i64;
                let na = self.den.lowest_index()? as i64;
                Some(nb - na)
            }
            Domain::Continuous => {
                Some(self.den.degree()? as i64 - self.num.degree()? as i64)
            }
        }
    }

    pub fn is_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r >= 0)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.relative_degree().is_none_or(|r| r > 0)
    }

    /// Evaluates at a point of the forward variable.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let shift = self.num.len().max(self.den.len()).saturating_sub(1);
        let d = self.den.eval_forward_scaled(z, shift);
        let n = self.num.eval_forward_scaled(z, shift);
        let scale = self.den.max_abs_coeff() * (1.0 + z.norm()).powi(shift as i32);
        if d.norm() <= 1e-14 * scale {
            return Err(Error::EvaluatedAtPole { re: z.re, im: z.im });
        }
        Ok(n / d)
    }

    pub fn frequency_response(&self, points: &[Complex64]) -> Result<Vec<Complex64>> {
        points.iter().map(|z| self.eval(*z)).collect()
    }

    /// Stability of the denominator, ignoring pole/zero cancellations.
    pub fn is_stable(&self) -> bool {
        self.den.is_stable()
    }

    pub fn scale(&self, k: f64) -> Self {
        RationalTransferFunction {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// Negative feedback `self / (1 + self * other)`.
    pub fn feedback(&self, other: &Self) -> Result<Self> {
        let num = &self.num * &other.den;
        let den = &(&self.den * &other.den) + &(&self.num * &other.num);
        Self::new(num, den)
    }

    /// Gain at a frequency on the stability boundary.
    fn boundary_gain(&self, omega: f64) -> f64 {
        let z = match self.domain() {
            Domain::Discrete => Complex64::from_polar(1.0, omega),
            Domain::Continuous => Complex64::new(0.0, omega),
        };
        self.eval(z).map(|v| v.norm()).unwrap_or(f64::INFINITY)
    }

    /// H-infinity norm estimate.
    ///
    /// The gain is sampled on `grid_size` points of the stability boundary
    /// and the best grid point is refined by golden-section search over its
    /// two neighbouring intervals. The result is a lower estimate of the true
    /// norm; it is exact whenever the peak is at a grid endpoint.
    pub fn hinf_norm(&self, grid_size: usize) -> Result<f64> {
        if !self.is_stable() {
            return Err(Error::Unstable);
        }
        if self.num.is_zero() {
            return Ok(0.0);
        }
        let grid_size = grid_size.max(8);
        match self.domain() {
            Domain::Discrete => {
                let step = std::f64::consts::PI / (grid_size - 1) as f64;
                let grid: Vec<f64> = (0..grid_size).map(|k| k as f64 * step).collect();
                Ok(self.grid_refine(&grid, |w| w))
            }
            Domain::Continuous => {
                let mut mags: Vec<f64> = Vec::new();
                for p in [&self.num, &self.den] {
                    if let Ok(r) = p.roots() {
                        mags.extend(r.iter().map(|c| c.norm()).filter(|m| *m > 1e-12));
                    }
                }
                let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = mags.iter().cloned().fold(0.0_f64, f64::max);
                let (lo, hi) = if mags.is_empty() {
                    (1e-3, 1e3)
                } else {
                    (lo / 100.0, hi * 100.0)
                };
                let (llo, lhi) = (lo.log10(), hi.log10());
                let step = (lhi - llo) / (grid_size - 1) as f64;
                let grid: Vec<f64> = (0..grid_size).map(|k| llo + k as f64 * step).collect();
                let mut best = self.grid_refine(&grid, |x| 10f64.powf(x));
                best = best.max(self.boundary_gain(0.0));
                // limit at infinite frequency
                if self.num.degree() == self.den.degree() {
                    let lead = |p: &Polynomial| p.coeffs().last().copied().unwrap_or(0.0);
                    best = best.max((lead(&self.num) / lead(&self.den)).abs());
                }
                Ok(best)
            }
        }
    }

    fn grid_refine(&self, grid: &[f64], to_omega: impl Fn(f64) -> f64) -> f64 {
        let gains: Vec<f64> = grid.iter().map(|x| self.boundary_gain(to_omega(*x))).collect();
        let (k, &g) = gains
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");
        let a = grid[k.saturating_sub(1)];
        let b = grid[(k + 1).min(grid.len() - 1)];
        let refined = golden_section_max(|x| self.boundary_gain(to_omega(x)), a, b, 60);
        g.max(refined)
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

impl Mul for &RationalTransferFunction {
    type Output = RationalTransferFunction;
    fn mul(self, rhs: &RationalTransferFunction) -> RationalTransferFunction {
        RationalTransferFunction {
            num: &self.num * &rhs.num,
            den: &self.den * &rhs.den,
        }
    }
}

impl Add for &RationalTransferFunction {
    type Output = RationalTransferFunction;
    fn add(self, rhs: &RationalTransferFunction) -> RationalTransferFunction {
        if self.den == rhs.den {
            return RationalTransferFunction {
                num: &self.num + &rhs.num,
                den: self.den.clone(),
            };
        }
        RationalTransferFunction {
            num: &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            den: &self.den * &rhs.den,
        }
    }
}

impl Sub for &RationalTransferFunction {
    type Output = RationalTransferFunction;
    fn sub(self, rhs: &RationalTransferFunction) -> RationalTransferFunction {
        self + &rhs.scale(-1.0)
    }
}

impl fmt::Display for RationalTransferFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

/// Points `e^{j 2 pi k / n}` on the unit circle, offset by half a step so

/// Eigenvalues of a square matrix. The Schur iteration is bounded; when it
/// stalls it is retried on orthogonally similar matrices, and entries of
/// unresolved eigenvalues are NaN.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex64> {
    const MAX_ITER: usize = 20_000;
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if let Some(s) = Schur::try_new(m.clone(), f64::EPSILON, MAX_ITER) {
        return s.complex_eigenvalues().iter().copied().collect();
    }
    for k in 1..=8 {
        let v = DVector::from_fn(n, |i, _| (0.754_877_666 * ((i + 1) * k) as f64).sin() + 0.1);
        let v = v.normalize();
        let h = DMatrix::identity(n, n) - &v * v.transpose() * 2.0;
        let similar = &h * m * &h;
        if let Some(s) = Schur::try_new(similar, f64::EPSILON, MAX_ITER) {
            return s.complex_eigenvalues().iter().copied().collect();
        }
    }
    log::warn!("eigenvalue iteration did not converge for a {n}x{n} matrix");
    vec![Complex64::new(f64::NAN, f64::NAN); n]
}

/// that `z = 1` and `z = -1` are avoided.
pub fn unit_circle_points(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let w = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
            Complex64::from_polar(1.0, w)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trims_trailing_coefficients() {
        let p = Polynomial::discrete(vec![1.0, 2.0, 1e-14, 0.0]);
        assert_eq!(p.degree(), Some(1));
        assert_eq!(Polynomial::discrete(vec![0.0, 0.0]).degree(), None);
    }

    #[test]
    fn linear_discrete_root() {
        let r = Polynomial::discrete(vec![1.0, -0.5]).roots().unwrap();
        assert_eq!(r.len(), 1);
        assert_relative_eq!(r[0].re, 0.5, epsilon = 1e-14);
        assert_relative_eq!(r[0].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn difference_of_squares() {
        let mut r: Vec<f64> = Polynomial::continuous(vec![-1.0, 0.0, 1.0])
            .roots()
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        r.sort_by(f64::total_cmp);
        assert_relative_eq!(r[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(r[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_polynomial_roots_error() {
        assert!(matches!(
            Polynomial::zero(Domain::Discrete).roots(),
            Err(Error::ZeroPolynomial)
        ));
    }

    #[test]
    fn delayed_numerator_has_no_finite_roots() {
        // 0.3 q^-1 = 0.3 / q
        let r = Polynomial::discrete(vec![0.0, 0.3]).roots().unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn from_roots_round_trip() {
        let roots = [c(0.5, 0.2), c(0.5, -0.2), c(-0.3, 0.0)];
        let p = Polynomial::from_roots(&roots, Domain::Discrete);
        assert_relative_eq!(p.coeff(0), 1.0);
        for r in p.roots().unwrap() {
            assert!(roots.iter().any(|x| (x - r).norm() < 1e-10));
        }
        let pc = Polynomial::from_roots(&[c(-2.0, 0.0)], Domain::Continuous);
        assert_eq!(pc.coeffs(), &[2.0, 1.0]);
    }

    #[test]
    fn stability_examples() {
        let one = Polynomial::one(Domain::Discrete);
        let g = RationalTransferFunction::new(one.clone(), Polynomial::discrete(vec![1.0, -0.5]))
            .unwrap();
        assert!(g.is_stable());
        let g = RationalTransferFunction::new(one, Polynomial::discrete(vec![1.0, -1.1])).unwrap();
        assert!(!g.is_stable());
        let g = RationalTransferFunction::new(
            Polynomial::one(Domain::Continuous),
            Polynomial::continuous(vec![2.0, 1.0]),
        )
        .unwrap();
        assert!(g.is_stable());
    }

    #[test]
    fn hinf_of_constant_and_first_order() {
        let k = RationalTransferFunction::constant(2.0, Domain::Discrete);
        assert_relative_eq!(k.hinf_norm(DEFAULT_HINF_GRID).unwrap(), 2.0, epsilon = 1e-12);
        let g = RationalTransferFunction::new(
            Polynomial::one(Domain::Discrete),
            Polynomial::discrete(vec![1.0, -0.5]),
        )
        .unwrap();
        assert_relative_eq!(g.hinf_norm(DEFAULT_HINF_GRID).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn hinf_of_delayed_first_order_matches_dense_grid() {
        let g = RationalTransferFunction::new(
            Polynomial::discrete(vec![0.0, 0.3]),
            Polynomial::discrete(vec![1.0, -0.4]),
        )
        .unwrap();
        // brute force over 10^6 frequencies
        let n = 1_000_000;
        let brute = (0..n)
            .map(|k| {
                let w = std::f64::consts::PI * k as f64 / (n - 1) as f64;
                g.eval(Complex64::from_polar(1.0, w)).unwrap().norm()
            })
            .fold(0.0_f64, f64::max);
        assert_relative_eq!(brute, 0.5, epsilon = 1e-12);
        assert_relative_eq!(g.hinf_norm(DEFAULT_HINF_GRID).unwrap(), brute, epsilon = 1e-12);
    }

    #[test]
    fn hinf_refinement_finds_resonance() {
        // lightly damped pair at angle 1.0 rad, radius 0.98
        let pole = Complex64::from_polar(0.98, 1.0);
        let den = Polynomial::from_roots(&[pole, pole.conj()], Domain::Discrete);
        let g = RationalTransferFunction::new(Polynomial::one(Domain::Discrete), den).unwrap();
        let n = 400_000;
        let brute = (0..n)
            .map(|k| {
                let w = std::f64::consts::PI * k as f64 / (n - 1) as f64;
                g.eval(Complex64::from_polar(1.0, w)).unwrap().norm()
            })
            .fold(0.0_f64, f64::max);
        let est = g.hinf_norm(64).unwrap();
        assert!(est <= brute * (1.0 + 1e-9));
        assert!(est >= brute * (1.0 - 1e-6), "est {est} brute {brute}");
    }

    #[test]
    fn hinf_continuous_first_order() {
        // 3 / (s + 2): peak 1.5 at dc
        let g = RationalTransferFunction::new(
            Polynomial::continuous(vec![3.0]),
            Polynomial::continuous(vec![2.0, 1.0]),
        )
        .unwrap();
        assert_relative_eq!(g.hinf_norm(256).unwrap(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn hinf_rejects_unstable() {
        let g = RationalTransferFunction::new(
            Polynomial::one(Domain::Discrete),
            Polynomial::discrete(vec![1.0, -1.1]),
        )
        .unwrap();
        assert!(matches!(g.hinf_norm(64), Err(Error::Unstable)));
    }

    #[test]
    fn frequency_response_examples() {
        let one = RationalTransferFunction::constant(1.0, Domain::Discrete);
        assert_eq!(one.eval(c(0.3, -2.0)).unwrap(), c(1.0, 0.0));
        let g = RationalTransferFunction::new(
            Polynomial::one(Domain::Discrete),
            Polynomial::discrete(vec![1.0, -0.5]),
        )
        .unwrap();
        let v = g.eval(c(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 2.0, epsilon = 1e-14);
        assert!(matches!(g.eval(c(0.5, 0.0)), Err(Error::EvaluatedAtPole { .. })));
    }

    #[test]
    fn evaluation_at_origin_of_strictly_proper_discrete() {
        // q^-1 / (1 - 0.5 q^-1) = 1 / (q - 0.5), finite at q = 0
        let g = RationalTransferFunction::new(
            Polynomial::discrete(vec![0.0, 1.0]),
            Polynomial::discrete(vec![1.0, -0.5]),
        )
        .unwrap();
        let v = g.eval(c(0.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn properness() {
        let sp = RationalTransferFunction::new(
            Polynomial::discrete(vec![0.0, 0.5]),
            Polynomial::discrete(vec![1.0, -0.3]),
        )
        .unwrap();
        assert!(sp.is_strictly_proper());
        let p = RationalTransferFunction::new(
            Polynomial::discrete(vec![1.0, 0.5]),
            Polynomial::discrete(vec![1.0, -0.3]),
        )
        .unwrap();
        assert!(p.is_proper() && !p.is_strictly_proper());
        let c_improper = RationalTransferFunction::new(
            Polynomial::continuous(vec![1.0, 0.0, 1.0]),
            Polynomial::continuous(vec![1.0, 1.0]),
        )
        .unwrap();
        assert!(!c_improper.is_proper());
    }

    #[test]
    fn feedback_of_integrator() {
        // 1/s with unit feedback -> 1/(s+1)
        let g = RationalTransferFunction::new(
            Polynomial::one(Domain::Continuous),
            Polynomial::continuous(vec![0.0, 1.0]),
        )
        .unwrap();
        let cl = g
            .feedback(&RationalTransferFunction::constant(1.0, Domain::Continuous))
            .unwrap();
        assert_eq!(cl.den().coeffs(), &[1.0, 1.0]);
        assert!(cl.is_stable());
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(matches!(
            RationalTransferFunction::new(
                Polynomial::one(Domain::Discrete),
                Polynomial::zero(Domain::Discrete)
            ),
            Err(Error::ZeroDenominator)
        ));
    }
}
