//! Dense and matrix-free solvers for complex linear systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatterError};
use crate::linalg::C64;

/// A square complex operator given by its action on vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    /// Dense LU with partial pivoting.
    Direct,
    /// Restarted GMRES with a matrix-free operator.
    #[default]
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { tol: 1e-10, restart: 60, max_iters: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖b − Ax‖/‖b‖` recomputed from the returned solution.
    pub relative_residual: f64,
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `⟨a, b⟩ = Σ conj(aᵢ)·bᵢ`.
fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `‖b − A·x‖ / ‖b‖` (absolute residual when `b = 0`).
pub fn relative_residual(op: &dyn LinearOperator, x: &[C64], b: &[C64]) -> f64 {
    let mut ax = vec![C64::new(0.0, 0.0); op.dim()];
    op.apply(x, &mut ax);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Restarted GMRES(m) with modified Gram–Schmidt and Givens rotations,
/// started from zero.
pub fn gmres(op: &dyn LinearOperator, b: &[C64], opts: &GmresOptions) -> Result<(Vec<C64>, SolveStats)> {
    let n = op.dim();
    if b.len() != n {
        return Err(ScatterError::Validation(format!("right-hand side has length {}, expected {n}", b.len())));
    }
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((x, SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut tmp = vec![zero; n];
    loop {
        let beta = norm(&r);
        if beta / bnorm <= opts.tol {
            break;
        }
        if iterations >= opts.max_iters {
            return Err(ScatterError::NotConverged { iterations, residual: beta / bnorm });
        }
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|z| z / beta).collect());
        let mut hess: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut rot: Vec<(C64, C64)> = Vec::with_capacity(m);
        let mut g = vec![zero; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut steps = 0;
        for j in 0..m {
            op.apply(&basis[j], &mut tmp);
            let mut w = tmp.clone();
            let mut col = vec![zero; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = inner(v, &w);
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
                col[i] = hij;
            }
            let wnorm = norm(&w);
            col[j + 1] = C64::new(wnorm, 0.0);
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (a, bb) = (col[i], col[i + 1]);
                col[i] = c.conj() * a + s.conj() * bb;
                col[i + 1] = -s * a + c * bb;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 { (C64::new(1.0, 0.0), zero) } else { (a / den, bb / den) };
            col[j] = c.conj() * a + s.conj() * bb;
            col[j + 1] = zero;
            let gj = g[j];
            g[j] = c.conj() * gj;
            g[j + 1] = -s * gj;
            rot.push((c, s));
            hess.push(col);
            steps = j + 1;
            iterations += 1;
            let est = g[j + 1].norm() / bnorm;
            if est <= opts.tol || wnorm == 0.0 || iterations >= opts.max_iters {
                break;
            }
            basis.push(w.iter().map(|z| z / wnorm).collect());
        }
        // Back substitution on the triangular Hessenberg factor.
        let mut y = vec![zero; steps];
        for i in (0..steps).rev() {
            let mut s = g[i];
            for k in i + 1..steps {
                s -= hess[k][i] * y[k];
            }
            if hess[i][i].norm() == 0.0 {
                return Err(ScatterError::Singular("GMRES breakdown on a singular operator".into()));
            }
            y[i] = s / hess[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[k]) {
                *xi += yk * vi;
            }
        }
        op.apply(&x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
    }
    let relative_residual = relative_residual(op, &x, b);
    Ok((x, SolveStats { iterations, relative_residual }))
}

/// Dense LU solve with partial pivoting.
pub fn dense_solve(matrix: DMatrix<C64>, b: &[C64]) -> Result<Vec<C64>> {
    let n = matrix.nrows();
    if matrix.ncols() != n || b.len() != n {
        return Err(ScatterError::Validation("dense solve needs a square system".into()));
    }
    let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = matrix.lu();
    let u = lu.u();
    let min_pivot = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if n > 0 && !(min_pivot > 1e-14 * scale) {
        return Err(ScatterError::Singular(format!("zero pivot in LU factorization (|u_min| = {min_pivot:.3e})")));
    }
    let rhs = DVector::from_column_slice(b);
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| ScatterError::Singular("LU solve failed".into()))?;
    Ok(x.iter().copied().collect())
}

/// Dense matrix viewed as an operator.
pub struct DenseOperator(pub DMatrix<C64>);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.0.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self.0[(i, j)] * x[j]).sum();
        }
    }
}
