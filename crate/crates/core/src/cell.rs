//! Periodic cell problems: correctors, the effective tensor, the mean-zero
//! divergence-free flux fluctuation, and its antisymmetric potential.
//!
//! Discretization: Q1 elements on a uniform N x N periodic grid with 2x2
//! Gauss quadrature. The constant kernel is handled by removing component
//! means after every CG iteration. The flux potential uses the scalar
//! stream-function gauge, built from lattice Poisson solves so that the
//! discrete identities hold at solver precision (see `FluxCorrectorSet`).

use crate::coeff::PeriodicTensorField;
use crate::error::{Error, Result};
use crate::fem::{element_corrector_load, element_stiffness, q1, Csr, Q1};
use crate::grid::{diff_backward, diff_forward, lattice_poisson, CellField};
use crate::solver::{pcg, CgOutcome};
use crate::tensor::{sym3_eigenvalues, ElasticityTensor};
use rayon::prelude::*;
use serde::Serialize;

/// Relative CG tolerance for all cell solves.
pub const CELL_CG_TOL: f64 = 1e-10;
/// Corrector mean-zero tolerance.
pub const CHI_MEAN_TOL: f64 = 1e-10;
/// Corrector weak-residual tolerance (relative).
pub const CHI_RESIDUAL_TOL: f64 = 1e-10;
/// Effective-tensor symmetry / ellipticity slack (discretization-limited).
pub const AHAT_SYM_TOL: f64 = 1e-8;
/// Mean of the flux fluctuation.
pub const B_MEAN_TOL: f64 = 1e-8;
/// Discrete divergence of the flux fluctuation.
pub const B_DIV_TOL: f64 = 1e-6;
/// Residual of the potential's divergence identity.
pub const PHI_DIV_TOL: f64 = 1e-6;

/// The d x d matrix of vector correctors plus solve diagnostics.
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    pub n: usize,
    /// `chi[j][beta]` is the 2-component nodal field for the (j, beta) cell problem.
    pub chi: Vec<CellField>,
    pub solves: Vec<CgOutcome>,
    /// Max over problems/components of |cell mean of chi|.
    pub mean_abs_max: f64,
    /// Max over problems of the recomputed relative weak residual.
    pub weak_residual_max: f64,
}

impl CorrectorSet {
    #[inline]
    pub fn field(&self, j: usize, beta: usize) -> &CellField {
        &self.chi[2 * j + beta]
    }
}

/// Constant effective tensor with its audit context.
#[derive(Debug, Clone)]
pub struct EffectiveTensor {
    pub tensor: ElasticityTensor,
    /// Plain cell average of the coefficients (the Voigt upper bound).
    pub voigt: ElasticityTensor,
    /// Ellipticity bounds of the input field.
    pub input_kappa: (f64, f64),
    pub n: usize,
}

impl EffectiveTensor {
    /// (transpose deviation, minor-index deviation) of the assembled tensor.
    pub fn symmetry_deviation(&self) -> (f64, f64) {
        self.tensor.symmetry_deviation()
    }

    /// Smallest eigenvalue of the symmetric quadratic form of `tensor`.
    pub fn min_symmetric_eigenvalue(&self) -> f64 {
        self.tensor.symmetric_eigen_bounds().0
    }

    /// Smallest eigenvalue of the form of `voigt - tensor`; nonnegative means
    /// the Voigt bound holds for every symmetric direction.
    pub fn voigt_gap_min(&self) -> f64 {
        let diff = self.voigt.add(&self.tensor.scale(-1.0));
        sym3_eigenvalues(&diff.symmetric_form_matrix())[0]
    }
}

/// Nodal flux fluctuation `b[i][j][alpha][beta]`, lattice mean-zero and
/// discretely divergence-free in the forward-difference stencil.
#[derive(Debug, Clone)]
pub struct BField {
    pub n: usize,
    /// 16 components per node, index `((i*2+j)*2+alpha)*2+beta`.
    pub nodal: CellField,
    /// Max |cell mean| over components before and after the projection.
    pub mean_abs_max: f64,
    /// L2 size of the solenoidal correction applied to the recovered field.
    pub projection_l2_max: f64,
    /// Max over (j,a,b) of the forward-difference divergence L2 norm.
    pub div_l2_max: f64,
    pub solves: Vec<CgOutcome>,
}

#[inline]
pub fn b_comp(i: usize, j: usize, al: usize, be: usize) -> usize {
    ((i * 2 + j) * 2 + al) * 2 + be
}

/// Antisymmetric flux potential in the stream-function gauge:
/// `phi[1][0][j]^{ab} = psi[j]^{ab}`, `phi[0][1][j]^{ab} = -psi[j]^{ab}`,
/// diagonal (k = i) entries zero. Antisymmetry is structural.
#[derive(Debug, Clone)]
pub struct FluxCorrectorSet {
    pub n: usize,
    /// 8 stream functions, index `(j*2+alpha)*2+beta`.
    pub psi: CellField,
    /// Max over (j,a,b) of || D+_k phi_kij - b_ij ||_{L2(Y)}.
    pub div_residual_max: f64,
    pub solves: Vec<CgOutcome>,
}

impl FluxCorrectorSet {
    /// Materializes the nodal value of `phi_{k i j}^{alpha beta}`.
    #[inline]
    pub fn phi(&self, k: usize, i: usize, j: usize, al: usize, be: usize, ix: usize, iy: usize) -> f64 {
        if k == i {
            return 0.0;
        }
        let v = self.psi.at(ix, iy, (j * 2 + al) * 2 + be);
        if k == 1 {
            v
        } else {
            -v
        }
    }
}

fn corner_nodes_periodic(n: usize, ex: usize, ey: usize) -> [usize; 4] {
    let xp = (ex + 1) % n;
    let yp = (ey + 1) % n;
    [
        ey * n + ex,
        ey * n + xp,
        yp * n + xp,
        yp * n + ex,
    ]
}

/// Assembles the periodic cell stiffness (2 N^2 unknowns).
pub fn assemble_cell_stiffness(field: &PeriodicTensorField) -> Csr {
    let n = field.n;
    let h = 1.0 / n as f64;
    let q = q1();
    let ndof = 2 * n * n;
    let cap = n * n * 64;
    let mut rows = Vec::with_capacity(cap);
    let mut cols = Vec::with_capacity(cap);
    let mut vals = Vec::with_capacity(cap);
    for ey in 0..n {
        for ex in 0..n {
            let tensors = [
                *field.sample(ex, ey, 0),
                *field.sample(ex, ey, 1),
                *field.sample(ex, ey, 2),
                *field.sample(ex, ey, 3),
            ];
            let ke = element_stiffness(&q, &tensors, h);
            let nodes = corner_nodes_periodic(n, ex, ey);
            for a in 0..4 {
                for al in 0..2 {
                    let ra = (2 * nodes[a] + al) as u32;
                    for b in 0..4 {
                        for be in 0..2 {
                            rows.push(ra);
                            cols.push((2 * nodes[b] + be) as u32);
                            vals.push(ke[2 * a + al][2 * b + be]);
                        }
                    }
                }
            }
        }
    }
    Csr::from_triplets(ndof, &rows, &cols, &vals)
}

fn corrector_rhs(field: &PeriodicTensorField, q: &Q1, j: usize, beta: usize) -> Vec<f64> {
    let n = field.n;
    let h = 1.0 / n as f64;
    let mut rhs = vec![0.0; 2 * n * n];
    for ey in 0..n {
        for ex in 0..n {
            let tensors = [
                *field.sample(ex, ey, 0),
                *field.sample(ex, ey, 1),
                *field.sample(ex, ey, 2),
                *field.sample(ex, ey, 3),
            ];
            let re = element_corrector_load(q, &tensors, h, j, beta);
            let nodes = corner_nodes_periodic(n, ex, ey);
            for a in 0..4 {
                for al in 0..2 {
                    rhs[2 * nodes[a] + al] += re[2 * a + al];
                }
            }
        }
    }
    rhs
}

fn remove_component_means(x: &mut [f64]) {
    let m = x.len() / 2;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for node in 0..m {
        s0 += x[2 * node];
        s1 += x[2 * node + 1];
    }
    s0 /= m as f64;
    s1 /= m as f64;
    for node in 0..m {
        x[2 * node] -= s0;
        x[2 * node + 1] -= s1;
    }
}

/// Solves the four periodic cell problems on the field's own grid.
///
/// Requires the resolution to be a power of two >= 16 and the field to be
/// elliptic (guaranteed by construction via `make_preset`).
pub fn solve_correctors(field: &PeriodicTensorField) -> Result<CorrectorSet> {
    let n = field.n;
    if !n.is_power_of_two() || n < 16 {
        return Err(Error::InvalidConfig {
            field: "cell_n".into(),
            message: format!("cell resolution must be a power of two >= 16, got {n}"),
        });
    }
    let k = assemble_cell_stiffness(field);
    let inv_diag: Vec<f64> = k.diagonal().iter().map(|d| 1.0 / d).collect();
    let q = q1();
    let cap = 50 * n;

    let problems: Vec<(usize, usize)> = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
    let solved: Result<Vec<(CellField, CgOutcome, f64)>> = problems
        .par_iter()
        .map(|&(j, beta)| {
            let rhs = corrector_rhs(field, &q, j, beta);
            let mut x = vec![0.0; 2 * n * n];
            let out = pcg(
                &k,
                &rhs,
                &mut x,
                Some(&inv_diag),
                CELL_CG_TOL,
                cap,
                &mut remove_component_means,
            )?;
            // Recompute the weak residual from scratch. A load that is zero
            // at machine precision (constant coefficients) is judged on the
            // absolute residual; the per-DOF threshold is far below any
            // genuine corrector load, which scales like h * |grad A|.
            let mut kx = vec![0.0; 2 * n * n];
            k.matvec(&x, &mut kx);
            let mut rr = 0.0;
            let mut bb = 0.0;
            for i in 0..x.len() {
                let d = rhs[i] - kx[i];
                rr += d * d;
                bb += rhs[i] * rhs[i];
            }
            let dof = x.len() as f64;
            let weak = if (bb / dof).sqrt() > 1e-13 {
                (rr / bb).sqrt()
            } else {
                rr.sqrt()
            };
            let mut f = CellField::zeros(n, 2);
            f.data.copy_from_slice(&x);
            Ok((f, out, weak))
        })
        .collect();
    let solved = solved?;

    let mut chi = Vec::with_capacity(4);
    let mut solves = Vec::with_capacity(4);
    let mut mean_abs_max = 0.0f64;
    let mut weak_residual_max = 0.0f64;
    for (f, out, weak) in solved {
        mean_abs_max = mean_abs_max.max(f.mean(0).abs()).max(f.mean(1).abs());
        weak_residual_max = weak_residual_max.max(weak);
        chi.push(f);
        solves.push(out);
    }
    Ok(CorrectorSet {
        n,
        chi,
        solves,
        mean_abs_max,
        weak_residual_max,
    })
}

/// Physical gradient `grad[k][gamma] = d chi^gamma / d y_k` of a 2-component
/// nodal field, at quadrature point `qp` of element `(ex, ey)`.
#[inline]
fn qp_gradient(q: &Q1, f: &CellField, n: usize, ex: usize, ey: usize, qp: usize) -> [[f64; 2]; 2] {
    let h_inv = n as f64;
    let nodes = corner_nodes_periodic(n, ex, ey);
    let mut g = [[0.0; 2]; 2];
    for (a, &node) in nodes.iter().enumerate() {
        let gx = q.grad[qp][a][0] * h_inv;
        let gy = q.grad[qp][a][1] * h_inv;
        for gamma in 0..2 {
            let v = f.data[node * 2 + gamma];
            g[0][gamma] += gx * v;
            g[1][gamma] += gy * v;
        }
    }
    g
}

/// Effective tensor from the corrected fluxes, evaluated with the assembly
/// quadrature. Fails if the correctors were solved on a different grid.
pub fn effective_tensor(
    field: &PeriodicTensorField,
    correctors: &CorrectorSet,
) -> Result<EffectiveTensor> {
    if field.n != correctors.n {
        return Err(Error::MeshMismatch(format!(
            "field sampled at N={} but correctors solved at N={}",
            field.n, correctors.n
        )));
    }
    let n = field.n;
    let q = q1();
    let mut acc = [[[[0.0f64; 2]; 2]; 2]; 2];
    for ey in 0..n {
        for ex in 0..n {
            for qp in 0..4 {
                let a = field.sample(ex, ey, qp);
                for j in 0..2 {
                    for be in 0..2 {
                        let g = qp_gradient(&q, correctors.field(j, be), n, ex, ey, qp);
                        for i in 0..2 {
                            for al in 0..2 {
                                let mut v = a.get(i, j, al, be);
                                for kk in 0..2 {
                                    for ga in 0..2 {
                                        v += a.get(i, kk, al, ga) * g[kk][ga];
                                    }
                                }
                                acc[i][j][al][be] += v;
                            }
                        }
                    }
                }
            }
        }
    }
    let m = (n * n * 4) as f64;
    let mut t = ElasticityTensor::ZERO;
    for i in 0..2 {
        for j in 0..2 {
            for al in 0..2 {
                for be in 0..2 {
                    t.set(i, j, al, be, acc[i][j][al][be] / m);
                }
            }
        }
    }
    Ok(EffectiveTensor {
        tensor: t,
        voigt: field.cell_average(),
        input_kappa: field.kappa(),
        n,
    })
}

/// Builds the nodal flux fluctuation.
///
/// Quadrature-point values are recovered to nodes (each node averages the
/// nearest Gauss point of its four adjacent elements), the lattice mean is
/// removed exactly, and the small non-solenoidal residue of the recovery is
/// projected out so the forward-difference divergence vanishes at solver
/// precision. The projection moves the field by O(h^2), the same order as
/// the recovery error itself.
pub fn b_field(
    field: &PeriodicTensorField,
    correctors: &CorrectorSet,
    ahat: &EffectiveTensor,
) -> Result<BField> {
    if field.n != correctors.n || field.n != ahat.n {
        return Err(Error::MeshMismatch(
            "field, correctors, and effective tensor must share one grid".into(),
        ));
    }
    let n = field.n;
    let q = q1();

    // Quadrature-point values of b, element-major.
    let mut qp_vals = vec![[0.0f64; 16]; n * n * 4];
    for ey in 0..n {
        for ex in 0..n {
            for qp in 0..4 {
                let a = field.sample(ex, ey, qp);
                let slot = &mut qp_vals[(ey * n + ex) * 4 + qp];
                for j in 0..2 {
                    for be in 0..2 {
                        let g = qp_gradient(&q, correctors.field(j, be), n, ex, ey, qp);
                        for i in 0..2 {
                            for al in 0..2 {
                                let mut v = a.get(i, j, al, be) - ahat.tensor.get(i, j, al, be);
                                for kk in 0..2 {
                                    for ga in 0..2 {
                                        v += a.get(i, kk, al, ga) * g[kk][ga];
                                    }
                                }
                                slot[b_comp(i, j, al, be)] = v;
                            }
                        }
                    }
                }
            }
        }
    }

    // Nearest-Gauss-point recovery: node corner c of an element maps to
    // quadrature point {0 -> 0, 1 -> 1, 2 -> 3, 3 -> 2}.
    let mut nodal = CellField::zeros(n, 16);
    for iy in 0..n {
        for ix in 0..n {
            let xm = (ix + n - 1) % n;
            let ym = (iy + n - 1) % n;
            // (element, corner-as-qp) pairs adjacent to this node.
            let adj = [
                ((iy * n + ix), 0usize),
                ((iy * n + xm), 1),
                ((ym * n + xm), 3),
                ((ym * n + ix), 2),
            ];
            for c in 0..16 {
                let mut s = 0.0;
                for &(e, qp) in &adj {
                    s += qp_vals[e * 4 + qp][c];
                }
                *nodal.at_mut(ix, iy, c) = 0.25 * s;
            }
        }
    }

    let mut raw_mean = 0.0f64;
    for c in 0..16 {
        raw_mean = raw_mean.max(nodal.mean(c).abs());
    }
    nodal.remove_means();

    // Solenoidal projection per (j, alpha, beta): subtract the backward
    // gradient of the lattice potential of the forward divergence.
    let mut projection_l2_max = 0.0f64;
    let mut solves = Vec::new();
    let nn = n * n;
    for j in 0..2 {
        for al in 0..2 {
            for be in 0..2 {
                let c1 = b_comp(0, j, al, be);
                let c2 = b_comp(1, j, al, be);
                let mut v1 = vec![0.0; nn];
                let mut v2 = vec![0.0; nn];
                for node in 0..nn {
                    v1[node] = nodal.data[node * 16 + c1];
                    v2[node] = nodal.data[node * 16 + c2];
                }
                let mut div = diff_forward(n, &v1, 0);
                let d2 = diff_forward(n, &v2, 1);
                for i in 0..nn {
                    div[i] += d2[i];
                }
                // -lap p = -div  =>  div+ (v - grad- p) = 0.
                let neg_div: Vec<f64> = div.iter().map(|d| -d).collect();
                let (p, out) = lattice_poisson(n, &neg_div, CELL_CG_TOL, 50 * n * n)?;
                solves.push(out);
                let g1 = diff_backward(n, &p, 0);
                let g2 = diff_backward(n, &p, 1);
                let mut corr2 = 0.0;
                for node in 0..nn {
                    nodal.data[node * 16 + c1] -= g1[node];
                    nodal.data[node * 16 + c2] -= g2[node];
                    corr2 += g1[node] * g1[node] + g2[node] * g2[node];
                }
                projection_l2_max = projection_l2_max.max((corr2 / nn as f64).sqrt());
            }
        }
    }

    let mut mean_abs_max = raw_mean;
    for c in 0..16 {
        mean_abs_max = mean_abs_max.max(nodal.mean(c).abs());
    }
    let div_l2_max = b_divergence_norm(n, &nodal);

    Ok(BField {
        n,
        nodal,
        mean_abs_max,
        projection_l2_max,
        div_l2_max,
        solves,
    })
}

/// Independent check: forward-difference divergence of the nodal flux
/// fluctuation, max over (j, alpha, beta) of the L2(Y) norm.
pub fn b_divergence_norm(n: usize, nodal: &CellField) -> f64 {
    let nn = n * n;
    let mut worst = 0.0f64;
    for j in 0..2 {
        for al in 0..2 {
            for be in 0..2 {
                let c1 = b_comp(0, j, al, be);
                let c2 = b_comp(1, j, al, be);
                let mut v1 = vec![0.0; nn];
                let mut v2 = vec![0.0; nn];
                for node in 0..nn {
                    v1[node] = nodal.data[node * 16 + c1];
                    v2[node] = nodal.data[node * 16 + c2];
                }
                let d1 = diff_forward(n, &v1, 0);
                let d2 = diff_forward(n, &v2, 1);
                let mut s = 0.0;
                for i in 0..nn {
                    let d = d1[i] + d2[i];
                    s += d * d;
                }
                worst = worst.max((s / nn as f64).sqrt());
            }
        }
    }
    worst
}

/// Solves for the stream functions of the divergence-free flux fluctuation.
///
/// For each (j, alpha, beta) the potential psi satisfies `D+_y psi = b_1`
/// and `D+_x psi = -b_2` up to solver tolerance; with `b` exactly
/// divergence-free in the forward stencil, the two first-order equations are
/// compatible and the Poisson solve recovers them both.
pub fn flux_correctors(b: &BField) -> Result<FluxCorrectorSet> {
    if b.mean_abs_max > B_MEAN_TOL || b.div_l2_max > B_DIV_TOL {
        return Err(Error::MeshMismatch(format!(
            "flux fluctuation violates preconditions: |mean| = {:.3e}, |div| = {:.3e}",
            b.mean_abs_max, b.div_l2_max
        )));
    }
    let n = b.n;
    let nn = n * n;
    let mut psi = CellField::zeros(n, 8);
    let mut div_residual_max = 0.0f64;
    let mut solves = Vec::new();
    for j in 0..2 {
        for al in 0..2 {
            for be in 0..2 {
                let c1 = b_comp(0, j, al, be);
                let c2 = b_comp(1, j, al, be);
                let mut v1 = vec![0.0; nn];
                let mut v2 = vec![0.0; nn];
                for node in 0..nn {
                    v1[node] = b.nodal.data[node * 16 + c1];
                    v2[node] = b.nodal.data[node * 16 + c2];
                }
                // lap psi = D-_y b1 - D-_x b2, solved as -lap psi = -(rhs).
                let r1 = diff_backward(n, &v1, 1);
                let r2 = diff_backward(n, &v2, 0);
                let rhs: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| -(a - b)).collect();
                let (s, out) = lattice_poisson(n, &rhs, CELL_CG_TOL, 50 * n * n)?;
                solves.push(out);
                // Residual of the first-order system.
                let e1 = diff_forward(n, &s, 1);
                let e2 = diff_forward(n, &s, 0);
                let mut acc = 0.0;
                for node in 0..nn {
                    let a = e1[node] - v1[node];
                    let bb = e2[node] + v2[node];
                    acc += a * a + bb * bb;
                }
                div_residual_max = div_residual_max.max((acc / nn as f64).sqrt());
                let pc = (j * 2 + al) * 2 + be;
                for node in 0..nn {
                    psi.data[node * 8 + pc] = s[node];
                }
            }
        }
    }
    Ok(FluxCorrectorSet {
        n,
        psi,
        div_residual_max,
        solves,
    })
}

/// One aggregated residual record over the cell artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct CellDiagnostics {
    pub n: usize,
    pub corrector_mean_abs_max: f64,
    pub corrector_weak_residual_max: f64,
    pub corrector_iterations: Vec<usize>,
    pub ahat_transpose_deviation: f64,
    pub ahat_minor_deviation: f64,
    /// min eig of the symmetric form of Ahat minus kappa1 of the input field.
    pub ahat_ellipticity_margin: f64,
    /// min eig of the form of (cell-average - Ahat); >= -tol means Voigt holds.
    pub voigt_gap_min: f64,
    pub b_mean_abs_max: f64,
    pub b_div_l2_max: f64,
    pub phi_antisymmetry_max: f64,
    pub phi_div_residual_max: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// Aggregates the structural invariants of the cell artifacts into one
/// pass/fail record.
pub fn cell_residuals(
    field: &PeriodicTensorField,
    correctors: &CorrectorSet,
    ahat: &EffectiveTensor,
    b: &BField,
    phi: &FluxCorrectorSet,
) -> CellDiagnostics {
    let (tr_dev, minor_dev) = ahat.symmetry_deviation();
    let ellipticity_margin = ahat.min_symmetric_eigenvalue() - field.kappa().0;
    let voigt_gap = ahat.voigt_gap_min();

    // Antisymmetry of the materialized potential; structural in this gauge,
    // checked anyway against the accessor.
    let mut antisym = 0.0f64;
    let n = phi.n;
    for iy in (0..n).step_by((n / 8).max(1)) {
        for ix in (0..n).step_by((n / 8).max(1)) {
            for j in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        for k in 0..2 {
                            for i in 0..2 {
                                let v = phi.phi(k, i, j, al, be, ix, iy)
                                    + phi.phi(i, k, j, al, be, ix, iy);
                                antisym = antisym.max(v.abs());
                            }
                        }
                    }
                }
            }
        }
    }

    let mut failures = Vec::new();
    let mut check = |name: &str, value: f64, tol: f64| {
        if value > tol {
            failures.push(format!("{name}: {value:.3e} > {tol:.1e}"));
        }
    };
    check("corrector mean", correctors.mean_abs_max, CHI_MEAN_TOL);
    check(
        "corrector weak residual",
        correctors.weak_residual_max,
        CHI_RESIDUAL_TOL,
    );
    check("Ahat transpose symmetry", tr_dev, AHAT_SYM_TOL);
    check("Ahat minor symmetry", minor_dev, AHAT_SYM_TOL);
    check("Ahat ellipticity", -ellipticity_margin, AHAT_SYM_TOL);
    check("Voigt bound", -voigt_gap, AHAT_SYM_TOL);
    check("b mean", b.mean_abs_max, B_MEAN_TOL);
    check("b divergence", b.div_l2_max, B_DIV_TOL);
    check("phi antisymmetry", antisym, 0.0);
    check("phi divergence identity", phi.div_residual_max, PHI_DIV_TOL);

    CellDiagnostics {
        n: field.n,
        corrector_mean_abs_max: correctors.mean_abs_max,
        corrector_weak_residual_max: correctors.weak_residual_max,
        corrector_iterations: correctors.solves.iter().map(|s| s.iterations).collect(),
        ahat_transpose_deviation: tr_dev,
        ahat_minor_deviation: minor_dev,
        ahat_ellipticity_margin: ellipticity_margin,
        voigt_gap_min: voigt_gap,
        b_mean_abs_max: b.mean_abs_max,
        b_div_l2_max: b.div_l2_max,
        phi_antisymmetry_max: antisym,
        phi_div_residual_max: phi.div_residual_max,
        pass: failures.is_empty(),
        failures,
    }
}

/// Convenience bundle of all cell artifacts for one field.
#[derive(Debug, Clone)]
pub struct CellArtifacts {
    pub correctors: CorrectorSet,
    pub ahat: EffectiveTensor,
    pub b: BField,
    pub phi: FluxCorrectorSet,
    pub diagnostics: CellDiagnostics,
}

/// Runs the full cell pipeline.
pub fn solve_cell(field: &PeriodicTensorField) -> Result<CellArtifacts> {
    let correctors = solve_correctors(field)?;
    let ahat = effective_tensor(field, &correctors)?;
    let b = b_field(field, &correctors, &ahat)?;
    let phi = flux_correctors(&b)?;
    let diagnostics = cell_residuals(field, &correctors, &ahat, &b, &phi);
    Ok(CellArtifacts {
        correctors,
        ahat,
        b,
        phi,
        diagnostics,
    })
}

/// L2(Y) norm of the corrector gradient of cell problem (j, beta), by the
/// assembly quadrature.
pub fn corrector_gradient_l2(correctors: &CorrectorSet, j: usize, beta: usize) -> f64 {
    let n = correctors.n;
    let q = q1();
    let f = correctors.field(j, beta);
    let mut acc = 0.0;
    for ey in 0..n {
        for ex in 0..n {
            for qp in 0..4 {
                let g = qp_gradient(&q, f, n, ex, ey, qp);
                for row in g {
                    for v in row {
                        acc += v * v;
                    }
                }
            }
        }
    }
    (acc / (n * n * 4) as f64).sqrt()
}

/// Energy identity evaluation: `int_Y (xi + grad chi_xi) . A (xi + grad chi_xi)`
/// for the combination `chi_xi = xi_j^beta chi_j^beta`, by assembly quadrature.
pub fn corrected_energy(
    field: &PeriodicTensorField,
    correctors: &CorrectorSet,
    xi: &[[f64; 2]; 2],
) -> f64 {
    let n = field.n;
    let q = q1();
    let mut acc = 0.0;
    for ey in 0..n {
        for ex in 0..n {
            for qp in 0..4 {
                let a = field.sample(ex, ey, qp);
                // Total gradient xi + sum_{j,be} xi[j][be] * grad chi_{j be}.
                let mut g = *xi;
                for j in 0..2 {
                    for be in 0..2 {
                        let c = xi[j][be];
                        if c != 0.0 {
                            let gc = qp_gradient(&q, correctors.field(j, be), n, ex, ey, qp);
                            for kk in 0..2 {
                                for ga in 0..2 {
                                    g[kk][ga] += c * gc[kk][ga];
                                }
                            }
                        }
                    }
                }
                acc += a.form(&g, &g);
            }
        }
    }
    acc / (n * n * 4) as f64
}
