//! Structure function of a state-space model with the first `p` states (in
//! output coordinates) measured.

use nalgebra::{DMatrix, DVector};

use super::{DsfModel, StateSpaceModel, TfMatrix};
use crate::error::{Error, Result};
use crate::lti::{Domain, Polynomial, RationalTransferFunction};

/// Largest hidden-state dimension for which the adjugate is expanded with
/// Faddeev-LeVerrier; beyond it, characteristic-polynomial differences are used.
const FADDEEV_MAX_DIM: usize = 6;

/// Orthonormal basis (columns) of the null space of `c`.
pub fn null_space_basis(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (p, n) = c.shape();
    check_full_row_rank(c)?;
    let eig = (c.transpose() * c).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let cols: Vec<DVector<f64>> = order[..n - p]
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok(if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    })
}

fn check_full_row_rank(c: &DMatrix<f64>) -> Result<()> {
    let p = c.nrows();
    let sv = c.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-10 * smax.max(f64::MIN_POSITIVE)).count();
    if rank < p || c.ncols() < p {
        return Err(Error::RankDeficientOutput { rank, rows: p });
    }
    Ok(())
}

/// DSF of a state-space model, using an orthonormal complement of `C` chosen
/// internally. The result does not depend on that choice.
pub fn dsf_from_state_space(ss: &StateSpaceModel) -> Result<DsfModel> {
    let e = null_space_basis(&ss.c)?;
    dsf_from_state_space_with_basis(ss, &e)
}

/// DSF with an explicit complement `E` (columns spanning the null space of `C`).
pub fn dsf_from_state_space_with_basis(
    ss: &StateSpaceModel,
    e: &DMatrix<f64>,
) -> Result<DsfModel> {
    ss.validate()?;
    check_full_row_rank(&ss.c)?;
    let (n, p, m) = (ss.states(), ss.outputs(), ss.inputs());
    let r = n - p;
    if e.shape() != (n, r) {
        return Err(Error::Dimension(format!("E must be {n} x {r}")));
    }
    if (&ss.c * e).amax() > 1e-8 * ss.c.amax().max(1.0) {
        return Err(Error::InvalidArgument("E must span the null space of C".into()));
    }

    // T = [C; E^T], T^-1 = [C^T (C C^T)^-1, E (E^T E)^-1]
    let cct = &ss.c * ss.c.transpose();
    let ebar = ss.c.transpose()
        * cct
            .try_inverse()
            .ok_or(Error::RankDeficientOutput { rank: 0, rows: p })?;
    let ete_inv = (e.transpose() * e)
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("E is rank deficient".into()))?;
    let e_left = e * &ete_inv;
    let mut tinv = DMatrix::zeros(n, n);
    tinv.columns_mut(0, p).copy_from(&ebar);
    tinv.columns_mut(p, r).copy_from(&e_left);
    let mut t = DMatrix::zeros(n, n);
    t.rows_mut(0, p).copy_from(&ss.c);
    t.rows_mut(p, r).copy_from(&(&ete_inv * e.transpose()));

    let ah = &t * &ss.a * &tinv;
    let bh = &t * &ss.b;
    let kh = &t * &ss.k;
    let a11 = ah.view((0, 0), (p, p)).into_owned();
    let a12 = ah.view((0, p), (p, r)).into_owned();
    let a21 = ah.view((p, 0), (r, p)).into_owned();
    let a22 = ah.view((p, p), (r, r)).into_owned();
    let b1 = bh.rows(0, p).into_owned();
    let b2 = bh.rows(p, r).into_owned();
    let k1 = kh.rows(0, p).into_owned();
    let k2 = kh.rows(p, r).into_owned();

    // forward-variable polynomials, constant first, all of length r + 2
    let adj = Adjugate::new(&a22);
    let chi = adj.charpoly.clone();
    let numerator = |direct: f64, row: usize, col: DVector<f64>| -> Vec<f64> {
        let mut out = vec![0.0; r + 2];
        for (k, c) in chi.iter().enumerate() {
            out[k] += direct * c;
        }
        if r > 0 {
            let cvec = a12.row(row).transpose();
            for (k, c) in adj.bilinear(&cvec, &col).iter().enumerate() {
                out[k] += c;
            }
        }
        out
    };
    let w: Vec<Vec<Vec<f64>>> = (0..p)
        .map(|i| (0..p).map(|j| numerator(a11[(i, j)], i, a21.column(j).into_owned())).collect())
        .collect();
    let den: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut d = vec![0.0; r + 2];
            for (k, c) in chi.iter().enumerate() {
                d[k + 1] += c;
            }
            for (k, c) in w[i][i].iter().enumerate() {
                d[k] -= c;
            }
            d
        })
        .collect();

    let domain = ss.domain;
    let make = |num: Vec<f64>, den: &[f64]| -> Result<RationalTransferFunction> {
        let (nc, dc) = match domain {
            Domain::Continuous => (num, den.to_vec()),
            Domain::Discrete => (
                num.iter().rev().copied().collect(),
                den.iter().rev().copied().collect(),
            ),
        };
        let num = Polynomial::new(nc, domain);
        if num.is_zero() {
            return Ok(RationalTransferFunction::zero(domain));
        }
        RationalTransferFunction::new(num, Polynomial::new(dc, domain))
    };
    let lincomb = |terms: &[(f64, &[f64])]| -> Vec<f64> {
        let mut out = vec![0.0; r + 2];
        for (w, v) in terms {
            for (o, x) in out.iter_mut().zip(v.iter()) {
                *o += w * x;
            }
        }
        out
    };

    let mut q = TfMatrix::zeros(p, p, domain);
    let mut pm = TfMatrix::zeros(p, m, domain);
    let mut h = TfMatrix::zeros(p, p, domain);
    for i in 0..p {
        for j in 0..p {
            if i != j {
                q.set(i, j, make(w[i][j].clone(), &den[i])?);
            }
        }
        for k in 0..m {
            let v = numerator(b1[(i, k)], i, b2.column(k).into_owned());
            let mut terms: Vec<(f64, &[f64])> = vec![(1.0, &v), (ss.d[(i, k)], &den[i])];
            for j in (0..p).filter(|&j| j != i) {
                terms.push((-ss.d[(j, k)], &w[i][j]));
            }
            pm.set(i, k, make(lincomb(&terms), &den[i])?);
        }
        for l in 0..p {
            let lnum = numerator(k1[(i, l)], i, k2.column(l).into_owned());
            let num = if l == i {
                lincomb(&[(1.0, &lnum), (1.0, &den[i])])
            } else {
                lincomb(&[(1.0, &lnum), (-1.0, &w[i][l])])
            };
            h.set(i, l, make(num, &den[i])?);
        }
    }
    Ok(DsfModel {
        q,
        p: pm,
        h,
        domain,
        diagonal_h: false,
    })
}

/// Characteristic polynomial of `M` and the bilinear forms `c^T adj(xI - M) b`,
/// all constant-first in `x`.
struct Adjugate {
    m: DMatrix<f64>,
    charpoly: Vec<f64>,
    /// `adj(xI - M) = sum_k N_k x^(r-1-k)` (small dimensions only)
    terms: Option<Vec<DMatrix<f64>>>,
}

impl Adjugate {
    fn new(m: &DMatrix<f64>) -> Self {
        let r = m.nrows();
        if r <= FADDEEV_MAX_DIM {
            let mut c = vec![1.0];
            let mut terms = Vec::with_capacity(r);
            let mut nk = DMatrix::<f64>::identity(r, r);
            for k in 1..=r {
                let am = m * &nk;
                let ck = -am.trace() / k as f64;
                c.push(ck);
                terms.push(nk);
                nk = am + DMatrix::identity(r, r) * ck;
            }
            c.reverse();
            Adjugate {
                m: m.clone(),
                charpoly: c,
                terms: Some(terms),
            }
        } else {
            Adjugate {
                m: m.clone(),
                charpoly: charpoly_eig(m),
                terms: None,
            }
        }
    }

    /// Coefficients (constant first, length `r`) of `c^T adj(xI - M) b`.
    fn bilinear(&self, c: &DVector<f64>, b: &DVector<f64>) -> Vec<f64> {
        let r = self.m.nrows();
        match &self.terms {
            Some(terms) => {
                let mut out: Vec<f64> = terms.iter().map(|nk| c.dot(&(nk * b))).collect();
                out.reverse();
                out
            }
            None => {
                // det(xI - M + b c^T) - det(xI - M) = c^T adj(xI - M) b
                let shifted = charpoly_eig(&(&self.m - b * c.transpose()));
                (0..r).map(|k| shifted[k] - self.charpoly[k]).collect()
            }
        }
    }
}

/// Characteristic polynomial from the eigenvalues, constant first.
fn charpoly_eig(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = crate::lti::eigenvalues(m);
    Polynomial::from_roots(&eig, Domain::Continuous).coeffs().to_vec()
}
