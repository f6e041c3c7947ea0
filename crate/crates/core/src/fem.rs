//! Shared Q1 finite-element machinery: CSR matrices, bilinear shape
//! functions with 2x2 Gauss quadrature, and element-level kernels used by
//! both the periodic cell assembly and the bounded-domain assembly.

use crate::coeff::gauss_offsets;
use crate::tensor::ElasticityTensor;

/// Compressed sparse row matrix (square, f64).
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from unsorted triplets, merging duplicate entries.
    /// Two passes: counting sort by row, then per-row sort + compaction.
    pub fn from_triplets(n: usize, rows: &[u32], cols: &[u32], vals: &[f64]) -> Csr {
        assert_eq!(rows.len(), cols.len());
        assert_eq!(rows.len(), vals.len());
        let mut counts = vec![0usize; n + 1];
        for &r in rows {
            counts[r as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut cur = counts[..n].to_vec();
        let mut c_tmp = vec![0u32; rows.len()];
        let mut v_tmp = vec![0f64; rows.len()];
        for k in 0..rows.len() {
            let r = rows[k] as usize;
            let p = cur[r];
            c_tmp[p] = cols[k];
            v_tmp[p] = vals[k];
            cur[r] += 1;
        }
        // Sort each row slice by column and merge duplicates in place.
        let mut row_ptr = vec![0usize; n + 1];
        let mut write = 0usize;
        let mut scratch: Vec<(u32, f64)> = Vec::with_capacity(32);
        for r in 0..n {
            let (lo, hi) = (counts[r], counts[r + 1]);
            scratch.clear();
            scratch.extend(c_tmp[lo..hi].iter().copied().zip(v_tmp[lo..hi].iter().copied()));
            scratch.sort_unstable_by_key(|&(c, _)| c);
            row_ptr[r] = write;
            let mut i = 0;
            while i < scratch.len() {
                let c = scratch[i].0;
                let mut v = scratch[i].1;
                i += 1;
                while i < scratch.len() && scratch[i].0 == c {
                    v += scratch[i].1;
                    i += 1;
                }
                c_tmp[write] = c;
                v_tmp[write] = v;
                write += 1;
            }
        }
        row_ptr[n] = write;
        c_tmp.truncate(write);
        v_tmp.truncate(write);
        Csr {
            n,
            row_ptr,
            cols: c_tmp,
            vals: v_tmp,
        }
    }

    #[inline]
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for r in 0..self.n {
            let lo = self.row_ptr[r];
            let hi = self.row_ptr[r + 1];
            let mut s = 0.0;
            for (&c, &v) in self.cols[lo..hi].iter().zip(&self.vals[lo..hi]) {
                s += v * x[c as usize];
            }
            y[r] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[k] as usize == r {
                    d[r] = self.vals[k];
                }
            }
        }
        d
    }

    /// Extracts the square submatrix on `keep` (true = kept), renumbering
    /// rows/cols by the order of kept indices.
    pub fn restrict(&self, keep: &[bool]) -> (Csr, Vec<usize>) {
        assert_eq!(keep.len(), self.n);
        let mut new_id = vec![usize::MAX; self.n];
        let mut kept = Vec::new();
        for (i, &k) in keep.iter().enumerate() {
            if k {
                new_id[i] = kept.len();
                kept.push(i);
            }
        }
        let m = kept.len();
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for &r in &kept {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                if keep[c] {
                    cols.push(new_id[c] as u32);
                    vals.push(self.vals[k]);
                }
            }
            row_ptr.push(cols.len());
        }
        (
            Csr {
                n: m,
                row_ptr,
                cols,
                vals,
            },
            kept,
        )
    }
}

/// Q1 shape data at the four Gauss points of the reference element
/// `[0,1]^2`, with gradients in reference units (divide by h for physical).
///
/// Node order within an element: (0,0), (1,0), (1,1), (0,1).
/// Quadrature order matches `coeff::gauss_offsets`.
#[derive(Debug, Clone)]
pub struct Q1 {
    /// `value[q][a]`: shape a at Gauss point q.
    pub value: [[f64; 4]; 4],
    /// `grad[q][a]`: (d/dxi, d/deta) of shape a at Gauss point q.
    pub grad: [[[f64; 2]; 4]; 4],
}

pub fn q1() -> Q1 {
    let offs = gauss_offsets();
    let mut value = [[0.0; 4]; 4];
    let mut grad = [[[0.0; 2]; 4]; 4];
    for (q, &(x, y)) in offs.iter().enumerate() {
        value[q] = [
            (1.0 - x) * (1.0 - y),
            x * (1.0 - y),
            x * y,
            (1.0 - x) * y,
        ];
        grad[q] = [
            [-(1.0 - y), -(1.0 - x)],
            [1.0 - y, -x],
            [y, x],
            [-y, 1.0 - x],
        ];
    }
    Q1 { value, grad }
}

/// Element stiffness for the elasticity form
/// `sum_q w_q a_{ij}^{ab}(q) dN_b/dx_j dN_a/dx_i`, with one tensor per
/// Gauss point. Local DOF order is node-major: dof = 2*node + component.
///
/// `h` is the element edge length; the quadrature weight per point is
/// `h^2/4` and reference gradients are scaled by `1/h`.
#[inline]
pub fn element_stiffness(q1: &Q1, tensors: &[ElasticityTensor; 4], h: f64) -> [[f64; 8]; 8] {
    let w = h * h / 4.0;
    let inv_h = 1.0 / h;
    let mut ke = [[0.0; 8]; 8];
    for q in 0..4 {
        let a = &tensors[q];
        // Physical gradients of the four shapes at this point.
        let mut g = [[0.0; 2]; 4];
        for n in 0..4 {
            g[n] = [q1.grad[q][n][0] * inv_h, q1.grad[q][n][1] * inv_h];
        }
        for bn in 0..4 {
            for be in 0..2 {
                // Flux column (A grad)_i^al for the (bn, be) basis gradient.
                let mut flux = [[0.0; 2]; 2];
                for i in 0..2 {
                    for al in 0..2 {
                        let mut s = 0.0;
                        for j in 0..2 {
                            s += a.get(i, j, al, be) * g[bn][j];
                        }
                        flux[i][al] = s;
                    }
                }
                for an in 0..4 {
                    for al in 0..2 {
                        let v = w * (flux[0][al] * g[an][0] + flux[1][al] * g[an][1]);
                        ke[2 * an + al][2 * bn + be] += v;
                    }
                }
            }
        }
    }
    ke
}

/// Element load contribution for the corrector problem with unit macroscopic
/// gradient `E_{k}^{g} = delta_{k,j} delta_{g,beta}`:
/// `r[(a,al)] = -sum_q w_q a_{i j}^{al beta}(q) dN_a/dx_i`.
#[inline]
pub fn element_corrector_load(
    q1: &Q1,
    tensors: &[ElasticityTensor; 4],
    h: f64,
    j: usize,
    beta: usize,
) -> [f64; 8] {
    let w = h * h / 4.0;
    let inv_h = 1.0 / h;
    let mut re = [0.0; 8];
    for q in 0..4 {
        let a = &tensors[q];
        for an in 0..4 {
            let ga = [q1.grad[q][an][0] * inv_h, q1.grad[q][an][1] * inv_h];
            for al in 0..2 {
                let mut s = 0.0;
                for i in 0..2 {
                    s += a.get(i, j, al, beta) * ga[i];
                }
                re[2 * an + al] -= w * s;
            }
        }
    }
    re
}

/// Element mass matrix (scalar; identical per component): `m[a][b] = int N_a N_b`.
#[inline]
pub fn element_mass(q1: &Q1, h: f64) -> [[f64; 4]; 4] {
    let w = h * h / 4.0;
    let mut me = [[0.0; 4]; 4];
    for q in 0..4 {
        for a in 0..4 {
            for b in 0..4 {
                me[a][b] += w * q1.value[q][a] * q1.value[q][b];
            }
        }
    }
    me
}
