//! Periodic nodal fields on the unit cell and the lattice calculus used for
//! the flux-potential construction.
//!
//! Forward/backward differences on the torus are circulant and commute, so
//! `div+ . grad-` equals the 5-point Laplacian exactly. The flux machinery
//! leans on these identities to satisfy its divergence relations at solver
//! precision rather than at discretization order.

use crate::error::Result;
use crate::solver::{pcg, CgOutcome, LinearOp};

/// Multi-component nodal field on an n x n periodic lattice of spacing 1/n.
/// Layout: `data[(iy * n + ix) * comps + c]`.
#[derive(Debug, Clone)]
pub struct CellField {
    pub n: usize,
    pub comps: usize,
    pub data: Vec<f64>,
}

impl CellField {
    pub fn zeros(n: usize, comps: usize) -> Self {
        CellField {
            n,
            comps,
            data: vec![0.0; n * n * comps],
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize, c: usize) -> f64 {
        self.data[(iy * self.n + ix) * self.comps + c]
    }

    #[inline]
    pub fn at_mut(&mut self, ix: usize, iy: usize, c: usize) -> &mut f64 {
        &mut self.data[(iy * self.n + ix) * self.comps + c]
    }

    /// Lattice mean of one component.
    pub fn mean(&self, c: usize) -> f64 {
        let mut s = 0.0;
        for node in 0..self.n * self.n {
            s += self.data[node * self.comps + c];
        }
        s / (self.n * self.n) as f64
    }

    /// Removes the lattice mean of every component.
    pub fn remove_means(&mut self) {
        for c in 0..self.comps {
            let m = self.mean(c);
            for node in 0..self.n * self.n {
                self.data[node * self.comps + c] -= m;
            }
        }
    }

    /// L2(Y) norm of one component (lattice quadrature, cell area 1).
    pub fn l2(&self, c: usize) -> f64 {
        let mut s = 0.0;
        for node in 0..self.n * self.n {
            let v = self.data[node * self.comps + c];
            s += v * v;
        }
        (s / (self.n * self.n) as f64).sqrt()
    }

    pub fn max_abs(&self, c: usize) -> f64 {
        let mut m = 0.0f64;
        for node in 0..self.n * self.n {
            m = m.max(self.data[node * self.comps + c].abs());
        }
        m
    }

    /// Periodic bilinear interpolation of component `c` at `(y1, y2)`
    /// (coordinates taken mod 1).
    pub fn interp(&self, y1: f64, y2: f64, c: usize) -> f64 {
        let n = self.n as f64;
        let fx = (y1.rem_euclid(1.0)) * n;
        let fy = (y2.rem_euclid(1.0)) * n;
        let ix = fx.floor() as usize % self.n;
        let iy = fy.floor() as usize % self.n;
        let tx = fx - fx.floor();
        let ty = fy - fy.floor();
        let ix1 = (ix + 1) % self.n;
        let iy1 = (iy + 1) % self.n;
        let v00 = self.at(ix, iy, c);
        let v10 = self.at(ix1, iy, c);
        let v01 = self.at(ix, iy1, c);
        let v11 = self.at(ix1, iy1, c);
        v00 * (1.0 - tx) * (1.0 - ty) + v10 * tx * (1.0 - ty) + v01 * (1.0 - tx) * ty + v11 * tx * ty
    }
}

/// Forward difference along axis `axis` (0 = x, 1 = y) of a scalar slice,
/// scaled by 1/h with h = 1/n.
pub fn diff_forward(n: usize, data: &[f64], axis: usize) -> Vec<f64> {
    let h_inv = n as f64;
    let mut out = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let here = iy * n + ix;
            let next = match axis {
                0 => iy * n + (ix + 1) % n,
                _ => ((iy + 1) % n) * n + ix,
            };
            out[here] = (data[next] - data[here]) * h_inv;
        }
    }
    out
}

/// Backward difference along `axis`, scaled by 1/h.
pub fn diff_backward(n: usize, data: &[f64], axis: usize) -> Vec<f64> {
    let h_inv = n as f64;
    let mut out = vec![0.0; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let here = iy * n + ix;
            let prev = match axis {
                0 => iy * n + (ix + n - 1) % n,
                _ => ((iy + n - 1) % n) * n + ix,
            };
            out[here] = (data[here] - data[prev]) * h_inv;
        }
    }
    out
}

/// Negative 5-point lattice Laplacian (positive semidefinite, kernel = constants).
struct MinusLaplacian {
    n: usize,
}

impl LinearOp for MinusLaplacian {
    fn size(&self) -> usize {
        self.n * self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let h2_inv = (n * n) as f64;
        for iy in 0..n {
            let up = ((iy + 1) % n) * n;
            let dn = ((iy + n - 1) % n) * n;
            let row = iy * n;
            for ix in 0..n {
                let xr = row + (ix + 1) % n;
                let xl = row + (ix + n - 1) % n;
                y[row + ix] =
                    h2_inv * (4.0 * x[row + ix] - x[xr] - x[xl] - x[up + ix] - x[dn + ix]);
            }
        }
    }
}

/// Solves `-lap_h u = rhs` on the periodic lattice with mean-zero `u`.
/// The right-hand side must be (numerically) mean-zero for consistency.
pub fn lattice_poisson(n: usize, rhs: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgOutcome)> {
    assert_eq!(rhs.len(), n * n);
    let op = MinusLaplacian { n };
    let mut b = rhs.to_vec();
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    for v in &mut b {
        *v -= mean;
    }
    let mut x = vec![0.0; n * n];
    let nn = n * n;
    let mut project = move |v: &mut [f64]| {
        let m = v.iter().sum::<f64>() / nn as f64;
        for q in v.iter_mut() {
            *q -= m;
        }
    };
    let out = pcg(&op, &b, &mut x, None, rel_tol, max_iter, &mut project)?;
    Ok((x, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_backward_compose_to_five_point_laplacian() {
        let n = 16;
        let mut f = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                f[iy * n + ix] = ((ix * 3 + iy * 7) % 11) as f64;
            }
        }
        // div+ grad- = grad- then forward-diff sum = 5-point Laplacian.
        let gx = diff_backward(n, &f, 0);
        let gy = diff_backward(n, &f, 1);
        let lap: Vec<f64> = diff_forward(n, &gx, 0)
            .iter()
            .zip(diff_forward(n, &gy, 1))
            .map(|(a, b)| a + b)
            .collect();
        let op = MinusLaplacian { n };
        let mut expect = vec![0.0; n * n];
        op.apply(&f, &mut expect);
        for i in 0..n * n {
            assert!((lap[i] + expect[i]).abs() < 1e-9 * (n * n) as f64);
        }
    }

    #[test]
    fn lattice_poisson_inverts_laplacian_of_smooth_field() {
        let n = 32;
        let tau = std::f64::consts::TAU;
        let mut truth = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                truth[iy * n + ix] = (tau * ix as f64 / n as f64).cos() * (tau * iy as f64 / n as f64).sin();
            }
        }
        let op = MinusLaplacian { n };
        let mut rhs = vec![0.0; n * n];
        op.apply(&truth, &mut rhs);
        let (sol, out) = lattice_poisson(n, &rhs, 1e-12, 10_000).unwrap();
        assert!(out.rel_residual <= 1e-12);
        for i in 0..n * n {
            assert!((sol[i] - truth[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn interpolation_reproduces_nodal_values_and_wraps() {
        let n = 8;
        let mut f = CellField::zeros(n, 1);
        for iy in 0..n {
            for ix in 0..n {
                *f.at_mut(ix, iy, 0) = (ix + 10 * iy) as f64;
            }
        }
        assert_eq!(f.interp(3.0 / 8.0, 5.0 / 8.0, 0), 53.0);
        // Periodic wrap: the same point shifted by whole periods.
        assert_eq!(f.interp(3.0 / 8.0 + 2.0, 5.0 / 8.0 - 1.0, 0), 53.0);
    }
}
