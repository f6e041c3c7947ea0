//! Pointwise rank-4 elasticity tensors in two dimensions.
//!
//! A tensor `a[i][j][alpha][beta]` acts on gradients by
//! `(A g)_i^alpha = a[i][j][alpha][beta] g[j][beta]`, and the associated
//! quadratic form on matrices is `a[i][j][alpha][beta] x[i][alpha] x[j][beta]`.
//! The elasticity structure conditions are the index symmetries
//! `a[i][j][alpha][beta] = a[j][i][beta][alpha] = a[alpha][j][i][beta]`
//! together with two-sided bounds of the form on symmetric matrices.

use serde::{Deserialize, Serialize};

/// Rank-4 tensor at a single point, `a[i][j][alpha][beta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticityTensor(pub [[[[f64; 2]; 2]; 2]; 2]);

/// Orthonormal basis of symmetric 2x2 matrices:
/// `e1(x)e1`, `e2(x)e2`, `(e1(x)e2 + e2(x)e1)/sqrt(2)`.
pub const SYM_BASIS: [[[f64; 2]; 2]; 3] = [
    [[1.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 1.0]],
    [
        [0.0, std::f64::consts::FRAC_1_SQRT_2],
        [std::f64::consts::FRAC_1_SQRT_2, 0.0],
    ],
];

impl ElasticityTensor {
    pub const ZERO: Self = ElasticityTensor([[[[0.0; 2]; 2]; 2]; 2]);

    /// Isotropic tensor
    /// `a[i][j][alpha][beta] = lambda d_{i alpha} d_{j beta}
    ///   + mu (d_{ij} d_{alpha beta} + d_{i beta} d_{j alpha})`.
    pub fn isotropic(lambda: f64, mu: f64) -> Self {
        let d = |p: usize, q: usize| if p == q { 1.0 } else { 0.0 };
        let mut a = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        a[i][j][al][be] =
                            lambda * d(i, al) * d(j, be) + mu * (d(i, j) * d(al, be) + d(i, be) * d(j, al));
                    }
                }
            }
        }
        ElasticityTensor(a)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, al: usize, be: usize) -> f64 {
        self.0[i][j][al][be]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, al: usize, be: usize, v: f64) {
        self.0[i][j][al][be] = v;
    }

    /// Applies the tensor to a matrix `g[j][beta]`, producing `(A g)[i][alpha]`.
    #[inline]
    pub fn apply(&self, g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for al in 0..2 {
                let mut s = 0.0;
                for j in 0..2 {
                    for be in 0..2 {
                        s += self.0[i][j][al][be] * g[j][be];
                    }
                }
                out[i][al] = s;
            }
        }
        out
    }

    /// Quadratic form `a[i][j][alpha][beta] x[i][alpha] y[j][beta]`.
    #[inline]
    pub fn form(&self, x: &[[f64; 2]; 2], y: &[[f64; 2]; 2]) -> f64 {
        let ay = self.apply(y);
        let mut s = 0.0;
        for i in 0..2 {
            for al in 0..2 {
                s += x[i][al] * ay[i][al];
            }
        }
        s
    }

    /// The 3x3 matrix of the quadratic form restricted to symmetric matrices,
    /// in the `SYM_BASIS` basis.
    pub fn symmetric_form_matrix(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for (p, bp) in SYM_BASIS.iter().enumerate() {
            for (q, bq) in SYM_BASIS.iter().enumerate() {
                m[p][q] = self.form(bp, bq);
            }
        }
        m
    }

    /// Extreme eigenvalues (min, max) of the symmetric-matrix quadratic form.
    pub fn symmetric_eigen_bounds(&self) -> (f64, f64) {
        let ev = sym3_eigenvalues(&self.symmetric_form_matrix());
        (ev[0], ev[2])
    }

    /// Max deviation from the transpose symmetry `a_{ij}^{ab} = a_{ji}^{ba}`
    /// and from the minor symmetry `a_{ij}^{ab} = a_{aj}^{ib}`.
    pub fn symmetry_deviation(&self) -> (f64, f64) {
        let mut major = 0.0f64;
        let mut minor = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        let v = self.0[i][j][al][be];
                        major = major.max((v - self.0[j][i][be][al]).abs());
                        minor = minor.max((v - self.0[al][j][i][be]).abs());
                    }
                }
            }
        }
        (major, minor)
    }

    /// Entrywise max-norm distance to another tensor.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        m = m.max((self.0[i][j][al][be] - other.0[i][j][al][be]).abs());
                    }
                }
            }
        }
        m
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut a = self.0;
        for v in a.iter_mut().flatten().flatten().flatten() {
            *v *= c;
        }
        ElasticityTensor(a)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut a = self.0;
        for i in 0..2 {
            for j in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        a[i][j][al][be] += other.0[i][j][al][be];
                    }
                }
            }
        }
        ElasticityTensor(a)
    }
}

/// Eigenvalues of a symmetric 3x3 matrix in ascending order, by cyclic Jacobi
/// sweeps. Plenty for the small audit matrices used here.
pub fn sym3_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut a = *m;
    for _ in 0..64 {
        let off = a[0][1].abs().max(a[0][2].abs()).max(a[1][2].abs());
        if off < 1e-15 * (1.0 + a[0][0].abs() + a[1][1].abs() + a[2][2].abs()) {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let (app, aqq, apq) = (a[p][p], a[q][q], a[p][q]);
            a[p][p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
            a[q][q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
            for r in 0..3 {
                if r != p && r != q {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[p][r] = a[r][p];
                    a[r][q] = s * arp + c * arq;
                    a[q][r] = a[r][q];
                }
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
