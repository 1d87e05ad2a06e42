//! Compressed sparse row storage and the sparse direct solve.

use std::ops::{AddAssign, Mul};
use std::time::{Duration, Instant};

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{invalid, Error, Result};
use crate::C64;

pub trait Scalar: Copy + Default + PartialEq + AddAssign + Mul<Output = Self> + std::fmt::Debug {
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for C64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Row-major sparse matrix with strictly increasing column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Duplicates are summed in input order, so contributions pushed in
    /// ascending element index give bitwise-reproducible entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|(i, j, _)| *i >= nrows || *j >= ncols) {
            return Err(invalid(format!("entry ({i}, {j}) outside a {nrows}x{ncols} matrix")));
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<T> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for t in order {
            let (i, j, v) = triplets[t];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize, one: T) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![one; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Entries in (row, column) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => T::default(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.magnitude()))
    }

    /// `max |a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> f64
    where
        T: std::ops::Sub<Output = T>,
    {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).magnitude())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec<V>(&self, x: &[V]) -> Vec<V>
    where
        V: Scalar + Mul<T, Output = V>,
    {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let mut acc = V::default();
                for (j, v) in self.row(i) {
                    acc += x[j] * v;
                }
                acc
            })
            .collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl CsrMatrix<f64> {
    /// `Σ c_m A_m` over the union pattern, summed term by term in the given order.
    pub fn linear_combination(terms: &[(C64, &CsrMatrix<f64>)]) -> Result<CsrMatrix<C64>> {
        let (nrows, ncols) = match terms.first() {
            Some((_, m)) => (m.nrows, m.ncols),
            None => return Err(invalid("empty linear combination")),
        };
        if terms.iter().any(|(_, m)| m.nrows != nrows || m.ncols != ncols) {
            return Err(invalid("linear combination of matrices with different shapes"));
        }
        let mut triplets = Vec::new();
        for (c, m) in terms {
            triplets.extend(m.iter().map(|(i, j, v)| (i, j, *c * v)));
        }
        CsrMatrix::from_triplets(nrows, ncols, &triplets)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `‖Ax - b‖₂ / ‖b‖₂`, recomputed from the caller's matrix.
    pub relative_residual: f64,
    /// Residual after the factorization solve and after each refinement step.
    pub residual_history: Vec<f64>,
    pub refinement_steps: usize,
    pub dimension: usize,
    pub nnz: usize,
    pub wall_time: Duration,
}

pub const MAX_REFINEMENT_STEPS: usize = 3;

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn relative_residual(a: &CsrMatrix<C64>, x: &[C64], b: &[C64], b_norm: f64) -> (Vec<C64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let rel = norm2(&r) / b_norm;
    (r, if rel.is_finite() { rel } else { f64::INFINITY })
}

/// Sparse LU with fill-reducing ordering, followed by iterative refinement
/// when the recomputed residual misses `tol`.
pub fn solve_sparse_complex(a: &CsrMatrix<C64>, b: &[C64], tol: f64) -> Result<(Vec<C64>, SolveReport)> {
    let start = Instant::now();
    if !(tol > 1e-14 && tol < 1e-4) {
        return Err(invalid(format!("solver tolerance {tol:e} outside (1e-14, 1e-4)")));
    }
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(invalid(format!(
            "system shape {}x{} with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let report = |x_res: f64, history: Vec<f64>, steps: usize| SolveReport {
        relative_residual: x_res,
        residual_history: history,
        refinement_steps: steps,
        dimension: n,
        nnz: a.nnz(),
        wall_time: start.elapsed(),
    };
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((vec![C64::default(); n], report(0.0, vec![0.0], 0)));
    }

    let triplets: Vec<Triplet<usize, usize, C64>> =
        a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let faer_a = SparseColMat::<usize, C64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| invalid(format!("sparse matrix construction failed: {e:?}")))?;
    let lu = faer_a.sp_lu().map_err(|e| Error::SingularSystem {
        reason: format!("sparse LU factorization failed: {e:?}"),
        history: vec![],
    })?;
    let solve = |rhs: &[C64]| -> Vec<C64> {
        let m = Mat::<C64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&m);
        (0..n).map(|i| x[(i, 0)]).collect()
    };

    let mut x = solve(b);
    let mut history = Vec::new();
    let (mut r, mut res) = relative_residual(a, &x, b, b_norm);
    history.push(res);
    let mut steps = 0;
    while res > tol && res.is_finite() && steps < MAX_REFINEMENT_STEPS {
        let dx = solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        (r, res) = relative_residual(a, &x, b, b_norm);
        history.push(res);
        steps += 1;
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularSystem {
            reason: "factorization produced non-finite values (numerically singular pivot)".into(),
            history,
        });
    }
    if res > tol {
        return Err(Error::SingularSystem {
            reason: format!("relative residual {res:e} above tolerance {tol:e} after refinement"),
            history,
        });
    }
    Ok((x, report(res, history, steps)))
}
