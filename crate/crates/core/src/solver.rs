//! Preconditioned conjugate gradients with an optional subspace-removal hook.
//!
//! The hook runs on the initial iterate/residual and on every preconditioned
//! residual, which keeps the Krylov space inside the orthogonal complement of
//! a known kernel (constants on the torus, rigid modes for pure-traction
//! problems). Summation order is fixed, so results are bit-stable.

use crate::error::{Error, Result};

/// Convergence record for one CG solve.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
    /// Relative residual after each iteration.
    pub history: Vec<f64>,
}

/// Matrix-free operator interface for CG.
pub trait LinearOp {
    fn size(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOp for crate::fem::Csr {
    fn size(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for i in 0..y.len() {
        y[i] += alpha * x[i];
    }
}

/// Solves `A x = b` for symmetric positive semidefinite `A`.
///
/// * `inv_diag`: Jacobi preconditioner entries (1/diag), or `None` for identity.
/// * `project`: applied to x0, r0, and every preconditioned residual;
///   use it to remove kernel components. Pass `&mut |_| {}` when not needed.
/// * `rel_tol`: stop once `||r|| <= rel_tol * ||b||`.
///
/// Fails with `SolveDiverged` (carrying the residual history) at `max_iter`.
pub fn pcg<A: LinearOp + ?Sized>(
    a: &A,
    b: &[f64],
    x: &mut [f64],
    inv_diag: Option<&[f64]>,
    rel_tol: f64,
    max_iter: usize,
    project: &mut dyn FnMut(&mut [f64]),
) -> Result<CgOutcome> {
    let n = a.size();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);

    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(CgOutcome {
            iterations: 0,
            rel_residual: 0.0,
            history: vec![],
        });
    }

    project(x);
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    project(&mut r);

    let precond = |r: &[f64], z: &mut [f64], project: &mut dyn FnMut(&mut [f64])| {
        match inv_diag {
            Some(d) => {
                for i in 0..r.len() {
                    z[i] = d[i] * r[i];
                }
            }
            None => z.copy_from_slice(r),
        }
        project(z);
    };

    let mut z = vec![0.0; n];
    precond(&r, &mut z, project);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = Vec::new();

    let mut rel = dot(&r, &r).sqrt() / b_norm;
    if rel <= rel_tol {
        return Ok(CgOutcome {
            iterations: 0,
            rel_residual: rel,
            history,
        });
    }

    for it in 1..=max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            // Search direction fell into the (projected-out) kernel or the
            // operator is indefinite; either way CG cannot proceed.
            return Err(Error::SolveDiverged {
                iterations: it,
                residual: rel,
                tail: history.iter().rev().take(8).copied().collect(),
            });
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        rel = dot(&r, &r).sqrt() / b_norm;
        history.push(rel);
        if rel <= rel_tol {
            return Ok(CgOutcome {
                iterations: it,
                rel_residual: rel,
                history,
            });
        }
        precond(&r, &mut z, project);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    Err(Error::SolveDiverged {
        iterations: max_iter,
        residual: rel,
        tail: history.iter().rev().take(8).copied().collect(),
    })
}
