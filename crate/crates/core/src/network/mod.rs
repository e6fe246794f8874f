//! Network model types: dynamical structure functions, ARX networks, Boolean
//! networks and state-space realizations, with the conversions among them.

mod state_space;

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{root_is_stable, Domain, Polynomial, RationalTransferFunction};

pub use state_space::{dsf_from_state_space, dsf_from_state_space_with_basis, null_space_basis};

/// Default relative tolerance for structure extraction.
pub const DEFAULT_STRUCTURE_TOL: f64 = 1e-8;

/// Dense matrix of SISO transfer functions, row major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TfMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalTransferFunction>,
}

impl TfMatrix {
    pub fn zeros(rows: usize, cols: usize, domain: Domain) -> Self {
        TfMatrix {
            rows,
            cols,
            entries: vec![RationalTransferFunction::zero(domain); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalTransferFunction {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, g: RationalTransferFunction) {
        self.entries[i * self.cols + j] = g;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &RationalTransferFunction)> {
        self.entries
            .iter()
            .enumerate()
            .map(move |(k, g)| (k / self.cols, k % self.cols, g))
    }

    pub fn eval(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (i, j, g) in self.iter() {
            if !g.is_zero() {
                out[(i, j)] = g.eval(z)?;
            }
        }
        Ok(out)
    }
}

/// Dynamical structure function `y = Q y + P u + H e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsfModel {
    pub q: TfMatrix,
    pub p: TfMatrix,
    pub h: TfMatrix,
    pub domain: Domain,
    /// Marks the model as satisfying the square, diagonal, full-rank `H`
    /// identifiability condition; checked by [`DsfModel::validate`].
    pub diagonal_h: bool,
}

impl DsfModel {
    pub fn outputs(&self) -> usize {
        self.q.rows()
    }

    pub fn inputs(&self) -> usize {
        self.p.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.outputs();
        if self.q.cols() != n || self.p.rows() != n || self.h.rows() != n {
            return Err(Error::Dimension("Q must be p x p and P, H must have p rows".into()));
        }
        for (i, j, g) in self.q.iter() {
            if i == j && !g.is_zero() {
                return Err(Error::InvalidArgument(format!("Q[{i}][{i}] must be zero")));
            }
            if i != j && !g.is_strictly_proper() {
                return Err(Error::InvalidArgument(format!(
                    "Q[{i}][{j}] must be strictly proper"
                )));
            }
        }
        for (name, m) in [("P", &self.p), ("H", &self.h)] {
            for (i, j, g) in m.iter() {
                if !g.is_proper() {
                    return Err(Error::InvalidArgument(format!("{name}[{i}][{j}] must be proper")));
                }
            }
        }
        if self.diagonal_h {
            if self.h.cols() != n {
                return Err(Error::InvalidArgument("H must be square".into()));
            }
            for (i, j, g) in self.h.iter() {
                if (i == j) == g.is_zero() {
                    return Err(Error::InvalidArgument(
                        "H must be diagonal with nonzero diagonal".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Input-output response `(I - Q(z))^-1 P(z)` at one point.
    pub fn io_response(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.outputs();
        let q = self.q.eval(z)?;
        let p = self.p.eval(z)?;
        let lhs = DMatrix::<Complex64>::identity(n, n) - q;
        lhs.lu()
            .solve(&p)
            .ok_or(Error::EvaluatedAtPole { re: z.re, im: z.im })
    }

    /// Stability of the network: every entry of `Q`, `P`, `H` is stable and
    /// `det(I - Q)` has no zeros outside the stability region.
    ///
    /// The determinant condition is checked on the polynomial matrix obtained
    /// by clearing the denominators of each row of `I - Q`, through the
    /// eigenvalues of its block companion matrix.
    pub fn is_stable(&self) -> bool {
        let entries_stable = [&self.q, &self.p, &self.h]
            .iter()
            .all(|m| m.iter().all(|(_, _, g)| g.is_zero() || g.is_stable()));
        if !entries_stable {
            return false;
        }
        match loop_zeros(&self.q, self.domain) {
            Some(zeros) => zeros.iter().all(|r| root_is_stable(*r, self.domain)),
            None => false,
        }
    }
}

/// Zeros of `det(I - Q)` in the forward variable, or `None` if the loop is
/// ill-posed (singular leading coefficient).
fn loop_zeros(q: &TfMatrix, domain: Domain) -> Option<Vec<Complex64>> {
    let n = q.rows();
    // polynomial rows of diag(D_i) (I - Q)
    let mut rows: Vec<Vec<Polynomial>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut dens: Vec<Polynomial> = Vec::new();
        let mut which: Vec<(usize, usize)> = Vec::new();
        for j in 0..n {
            let g = q.get(i, j);
            if i == j || g.is_zero() {
                continue;
            }
            let k = match dens.iter().position(|d| same_up_to_scale(d, g.den())) {
                Some(k) => k,
                None => {
                    dens.push(g.den().clone());
                    dens.len() - 1
                }
            };
            which.push((j, k));
        }
        let one = Polynomial::one(domain);
        let row_den = dens.iter().fold(one.clone(), |acc, d| &acc * d);
        let mut row = vec![Polynomial::zero(domain); n];
        row[i] = row_den;
        for (j, k) in which {
            let g = q.get(i, j);
            // rescale when the shared denominator differs by a constant factor
            let ratio = ratio_of(&dens[k], g.den());
            let others = dens
                .iter()
                .enumerate()
                .filter(|(l, _)| *l != k)
                .fold(one.clone(), |acc, (_, d)| &acc * d);
            row[j] = (&g.num().scale(-ratio) * &others).clone();
        }
        rows.push(row);
    }

    // highest-first coefficient matrices in the forward variable
    let lead_mats: Vec<DMatrix<f64>> = match domain {
        Domain::Discrete => {
            let len = rows
                .iter()
                .flat_map(|r| r.iter().map(|p| p.len()))
                .max()
                .unwrap_or(1)
                .max(1);
            (0..len)
                .map(|k| DMatrix::from_fn(n, n, |i, j| rows[i][j].coeff(k)))
                .collect()
        }
        Domain::Continuous => {
            let deg: Vec<usize> = rows.iter().enumerate().map(|(i, r)| r[i].len() - 1).collect();
            let d = deg.iter().copied().max().unwrap_or(0);
            let stable_factor = Polynomial::continuous(vec![1.0, 1.0]);
            for (i, row) in rows.iter_mut().enumerate() {
                for _ in deg[i]..d {
                    for p in row.iter_mut() {
                        *p = &*p * &stable_factor;
                    }
                }
            }
            (0..=d)
                .rev()
                .map(|k| DMatrix::from_fn(n, n, |i, j| rows[i][j].coeff(k)))
                .collect()
        }
    };
    let order = lead_mats.len() - 1;
    if order == 0 {
        return Some(Vec::new());
    }
    let lead = lead_mats[0].clone().lu();
    let size = n * order;
    let mut comp = DMatrix::<f64>::zeros(size, size);
    for k in 1..=order {
        let blk = lead.solve(&lead_mats[k])?;
        if blk.iter().any(|v| !v.is_finite()) {
            return None;
        }
        comp.view_mut((0, (k - 1) * n), (n, n)).copy_from(&(-blk));
    }
    for k in n..size {
        comp[(k, k - n)] = 1.0;
    }
    Some(crate::lti::eigenvalues(&comp))
}

fn same_up_to_scale(a: &Polynomial, b: &Polynomial) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let r = ratio_of(a, b);
    let scale = a.max_abs_coeff();
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .all(|(x, y)| (x - r * y).abs() <= 1e-12 * scale)
}

/// `a / b` for polynomials known to be proportional.
fn ratio_of(a: &Polynomial, b: &Polynomial) -> f64 {
    let k = b
        .coeffs()
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    a.coeff(k) / b.coeff(k)
}

/// Network of ARX rows `A_i y_i = sum_j By_ij y_j + sum_k Bu_ik u_k (+ C_i e_i)`.
///
/// Polynomials are in `q^-1`. Each `A_i` (and `C_i`) is monic with constant
/// term one; every `B` polynomial starts at `q^-1`; the diagonal of `By` is
/// zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArxNetworkModel {
    pub a: Vec<Polynomial>,
    pub by: Vec<Vec<Polynomial>>,
    pub bu: Vec<Vec<Polynomial>>,
    pub c: Option<Vec<Polynomial>>,
}

impl ArxNetworkModel {
    pub fn new(
        a: Vec<Polynomial>,
        by: Vec<Vec<Polynomial>>,
        bu: Vec<Vec<Polynomial>>,
        c: Option<Vec<Polynomial>>,
    ) -> Result<Self> {
        let m = ArxNetworkModel { a, by, bu, c };
        m.validate()?;
        Ok(m)
    }

    /// Model with `A_i = 1` and all `B` zero.
    pub fn empty(p: usize, m: usize) -> Self {
        let d = Domain::Discrete;
        ArxNetworkModel {
            a: vec![Polynomial::one(d); p],
            by: vec![vec![Polynomial::zero(d); p]; p],
            bu: vec![vec![Polynomial::zero(d); m]; p],
            c: None,
        }
    }

    pub fn outputs(&self) -> usize {
        self.a.len()
    }

    pub fn inputs(&self) -> usize {
        self.bu.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.outputs();
        let m = self.inputs();
        if self.by.len() != p || self.by.iter().any(|r| r.len() != p) {
            return Err(Error::Dimension("By must be p x p".into()));
        }
        if self.bu.len() != p || self.bu.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("Bu must be p x m".into()));
        }
        let monic = |poly: &Polynomial| poly.coeff(0) == 1.0;
        for (i, a) in self.a.iter().enumerate() {
            if a.domain() != Domain::Discrete || !monic(a) {
                return Err(Error::InvalidArgument(format!("A[{i}] must be monic in q^-1")));
            }
        }
        if let Some(c) = &self.c {
            if c.len() != p || !c.iter().all(monic) {
                return Err(Error::InvalidArgument("C must be p monic polynomials".into()));
            }
        }
        for i in 0..p {
            if !self.by[i][i].is_zero() {
                return Err(Error::InvalidArgument(format!("By[{i}][{i}] must be zero")));
            }
            for poly in self.by[i].iter().chain(self.bu[i].iter()) {
                if poly.coeff(0) != 0.0 {
                    return Err(Error::InvalidArgument(
                        "B polynomials must have zero constant term".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Largest lag appearing in any polynomial.
    pub fn max_lag(&self) -> usize {
        let rows = self.by.iter().chain(self.bu.iter()).flat_map(|r| r.iter());
        self.a
            .iter()
            .chain(rows)
            .chain(self.c.iter().flatten())
            .map(|p| p.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    /// `Q = A^-1 By`, `P = A^-1 Bu`, `H = A^-1 C`.
    pub fn to_dsf(&self) -> Result<DsfModel> {
        let p = self.outputs();
        let m = self.inputs();
        let d = Domain::Discrete;
        let mut q = TfMatrix::zeros(p, p, d);
        let mut pm = TfMatrix::zeros(p, m, d);
        let mut h = TfMatrix::zeros(p, p, d);
        for i in 0..p {
            let a = &self.a[i];
            for j in 0..p {
                if i != j && !self.by[i][j].is_zero() {
                    q.set(i, j, RationalTransferFunction::new(self.by[i][j].clone(), a.clone())?);
                }
            }
            for k in 0..m {
                if !self.bu[i][k].is_zero() {
                    pm.set(i, k, RationalTransferFunction::new(self.bu[i][k].clone(), a.clone())?);
                }
            }
            let c = self
                .c
                .as_ref()
                .map_or_else(|| Polynomial::one(d), |c| c[i].clone());
            h.set(i, i, RationalTransferFunction::new(c, a.clone())?);
        }
        Ok(DsfModel {
            q,
            p: pm,
            h,
            domain: d,
            diagonal_h: true,
        })
    }

    /// Stability of the ARX network: all `A_i` stable and the MIMO
    /// polynomial `A(q) - By(q)` has all zeros inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.to_dsf().map(|d| d.is_stable()).unwrap_or(false)
    }
}

/// Directed graph of the network; arcs are stored 0-based as
/// `(source, target)`, so `Q[i][j] != 0` is the arc `(j, i)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanNetwork {
    pub p: usize,
    pub m: usize,
    pub yy: BTreeSet<(usize, usize)>,
    pub uy: BTreeSet<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ey: Option<BTreeSet<(usize, usize)>>,
}

impl BooleanNetwork {
    pub fn new(p: usize, m: usize) -> Self {
        BooleanNetwork {
            p,
            m,
            ..Default::default()
        }
    }

    pub fn add_yy(&mut self, from: usize, to: usize) -> Result<()> {
        if from == to {
            return Err(Error::InvalidArgument(format!("self-arc on y{}", from + 1)));
        }
        if from >= self.p || to >= self.p {
            return Err(Error::IndexOutOfRange {
                index: from.max(to),
                len: self.p,
            });
        }
        self.yy.insert((from, to));
        Ok(())
    }

    pub fn add_uy(&mut self, input: usize, to: usize) -> Result<()> {
        if input >= self.m || to >= self.p {
            return Err(Error::Dimension(format!("arc u{} -> y{}", input + 1, to + 1)));
        }
        self.uy.insert((input, to));
        Ok(())
    }

    pub fn has_yy(&self, from: usize, to: usize) -> bool {
        self.yy.contains(&(from, to))
    }

    pub fn yy_count(&self) -> usize {
        self.yy.len()
    }

    /// `|y -> y arcs| / p^2`.
    pub fn density(&self) -> f64 {
        if self.p == 0 {
            0.0
        } else {
            self.yy.len() as f64 / (self.p * self.p) as f64
        }
    }

    /// Adjacency in the `Q` layout: entry `(i, j)` is true for arc `y_j -> y_i`.
    pub fn q_pattern(&self) -> DMatrix<bool> {
        let mut m = DMatrix::from_element(self.p, self.p, false);
        for &(j, i) in &self.yy {
            m[(i, j)] = true;
        }
        m
    }
}

/// Anything whose Boolean structure can be read off.
pub trait StructureSource {
    /// Arc present when the entry's largest coefficient exceeds `tol` times
    /// the largest coefficient of the whole model.
    fn boolean_structure(&self, tol: f64) -> BooleanNetwork;
}

fn tf_magnitude(g: &RationalTransferFunction) -> f64 {
    if g.is_zero() {
        0.0
    } else {
        g.num().max_abs_coeff() / g.den().max_abs_coeff()
    }
}

impl StructureSource for DsfModel {
    fn boolean_structure(&self, tol: f64) -> BooleanNetwork {
        let scale = [&self.q, &self.p]
            .iter()
            .flat_map(|m| m.iter().map(|(_, _, g)| tf_magnitude(g)))
            .fold(0.0_f64, f64::max);
        let mut net = BooleanNetwork::new(self.outputs(), self.inputs());
        if scale == 0.0 {
            return net;
        }
        for (i, j, g) in self.q.iter() {
            if i != j && tf_magnitude(g) > tol * scale {
                net.yy.insert((j, i));
            }
        }
        for (i, k, g) in self.p.iter() {
            if tf_magnitude(g) > tol * scale {
                net.uy.insert((k, i));
            }
        }
        net
    }
}

impl StructureSource for ArxNetworkModel {
    fn boolean_structure(&self, tol: f64) -> BooleanNetwork {
        let p = self.outputs();
        let scale = self
            .by
            .iter()
            .chain(self.bu.iter())
            .flat_map(|r| r.iter().map(|poly| poly.max_abs_coeff()))
            .fold(0.0_f64, f64::max);
        let mut net = BooleanNetwork::new(p, self.inputs());
        if scale == 0.0 {
            return net;
        }
        for i in 0..p {
            for (j, poly) in self.by[i].iter().enumerate() {
                if i != j && poly.max_abs_coeff() > tol * scale {
                    net.yy.insert((j, i));
                }
            }
            for (k, poly) in self.bu[i].iter().enumerate() {
                if poly.max_abs_coeff() > tol * scale {
                    net.uy.insert((k, i));
                }
            }
        }
        net
    }
}

/// `x(t+1) = A x + B u + K e`, `y = C x + D u + e` (or the continuous-time
/// analogue), with `e ~ N(0, R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub r: DMatrix<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<DVector<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<DMatrix<f64>>,
    pub domain: Domain,
}

impl StateSpaceModel {
    /// Model without noise (`K = 0`, `R = I`).
    pub fn deterministic(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        domain: Domain,
    ) -> Self {
        let (n, p) = (a.nrows(), c.nrows());
        StateSpaceModel {
            a,
            b,
            c,
            d,
            k: DMatrix::zeros(n, p),
            r: DMatrix::identity(p, p),
            m0: None,
            r0: None,
            domain,
        }
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, p, m) = (self.states(), self.outputs(), self.inputs());
        let ok = self.a.ncols() == n
            && self.b.nrows() == n
            && self.c.ncols() == n
            && self.d.shape() == (p, m)
            && self.k.shape() == (n, p);
        if !ok {
            return Err(Error::Dimension("inconsistent state-space matrices".into()));
        }
        if n < p {
            return Err(Error::InvalidArgument(format!("need n >= p, got n={n}, p={p}")));
        }
        Ok(())
    }

    /// `C (zI - A)^-1 B + D` at one point.
    pub fn io_response(&self, z: Complex64) -> Result<DMatrix<Complex64>> {
        let n = self.states();
        let to_c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
        let lhs = DMatrix::<Complex64>::identity(n, n) * z - to_c(&self.a);
        let x = lhs
            .lu()
            .solve(&to_c(&self.b))
            .ok_or(Error::EvaluatedAtPole { re: z.re, im: z.im })?;
        Ok(to_c(&self.c) * x + to_c(&self.d))
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Vec<Complex64> {
        crate::lti::eigenvalues(&self.a)
    }

    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|r| root_is_stable(*r, self.domain))
    }
}
