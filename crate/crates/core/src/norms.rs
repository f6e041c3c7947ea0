//! Quadrature evaluation of field norms on domain meshes, including the
//! boundary-layer and sub-region averages used by the uniformity studies.

use crate::error::{Error, Result};
use crate::fem::{q1, Q1};
use crate::mesh::{DomainKind, DomainMesh};

/// Norm selector for [`norms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    L4,
    H1Semi,
    H1,
    /// `((1/r) int_{Omega_r} |grad u|^2)^{1/2}` over the boundary layer of
    /// width `r` (element membership by center distance).
    Layer(f64),
    /// `(avg_{D_r} |grad u|^2)^{1/2}` over the corner sub-box of the half
    /// domain: `{|x1| < r, 0 < x2 < r}`.
    SubAvg(f64),
    /// `(avg_{B_r} |grad u|^2)^{1/2}` over the concentric square of
    /// half-side `r`.
    BallAvg(f64),
}

#[inline]
fn value_and_gradient(
    q: &Q1,
    mesh: &DomainMesh,
    u: &[f64],
    nodes: &[usize; 4],
    qp: usize,
) -> ([f64; 2], [[f64; 2]; 2]) {
    let inv_h = 1.0 / mesh.h;
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for (a, &node) in nodes.iter().enumerate() {
        let nv = q.value[qp][a];
        let gx = q.grad[qp][a][0] * inv_h;
        let gy = q.grad[qp][a][1] * inv_h;
        for c in 0..2 {
            let v = u[2 * node + c];
            val[c] += nv * v;
            grad[0][c] += gx * v;
            grad[1][c] += gy * v;
        }
    }
    (val, grad)
}

/// Membership test for sub-region kinds, by element center.
fn element_included(mesh: &DomainMesh, kind: &NormKind, cx: f64, cy: f64) -> bool {
    match *kind {
        NormKind::Layer(r) => mesh.boundary_distance(cx, cy) < r,
        NormKind::SubAvg(r) => {
            debug_assert_eq!(mesh.kind, DomainKind::HalfDomain);
            cx.abs() < r && cy > 0.0 && cy < r
        }
        NormKind::BallAvg(r) => {
            let (mx, my) = mesh.centroid();
            (cx - mx).abs() < r && (cy - my).abs() < r
        }
        _ => true,
    }
}

/// Evaluates the requested norm of a 2-component nodal field by element
/// quadrature. Layer and sub-region kinds refuse `r < 2h`.
pub fn norms(mesh: &DomainMesh, u: &[f64], kind: NormKind) -> Result<f64> {
    assert_eq!(u.len(), 2 * mesh.node_count());
    if let NormKind::Layer(r) | NormKind::SubAvg(r) | NormKind::BallAvg(r) = kind {
        if r < 2.0 * mesh.h {
            return Err(Error::LayerUnderResolved { r, h: mesh.h });
        }
    }
    let q = q1();
    let w = mesh.h * mesh.h / 4.0;
    let mut acc = 0.0;
    let mut measure = 0.0;
    for ey in 0..mesh.ny {
        for ex in 0..mesh.nx {
            let (cx, cy) = mesh.element_center(ex, ey);
            if !element_included(mesh, &kind, cx, cy) {
                continue;
            }
            let nodes = mesh.element_nodes(ex, ey);
            for qp in 0..4 {
                let (val, grad) = value_and_gradient(&q, mesh, u, &nodes, qp);
                let v2 = val[0] * val[0] + val[1] * val[1];
                let g2 = grad[0][0] * grad[0][0]
                    + grad[0][1] * grad[0][1]
                    + grad[1][0] * grad[1][0]
                    + grad[1][1] * grad[1][1];
                match kind {
                    NormKind::L2 => acc += w * v2,
                    NormKind::L4 => acc += w * v2 * v2,
                    NormKind::H1Semi => acc += w * g2,
                    NormKind::H1 => acc += w * (v2 + g2),
                    NormKind::Layer(_) | NormKind::SubAvg(_) | NormKind::BallAvg(_) => {
                        acc += w * g2;
                        measure += w;
                    }
                }
            }
        }
    }
    let out = match kind {
        NormKind::L2 => acc.sqrt(),
        NormKind::L4 => acc.powf(0.25),
        NormKind::H1Semi | NormKind::H1 => acc.sqrt(),
        NormKind::Layer(r) => (acc / r).sqrt(),
        NormKind::SubAvg(_) | NormKind::BallAvg(_) => {
            if measure == 0.0 {
                0.0
            } else {
                (acc / measure).sqrt()
            }
        }
    };
    Ok(out)
}

/// `(avg_E |grad u|^p)^{1/p}` over a sub-region (`Ball` or `Sub` membership),
/// used by the higher-integrability checks.
pub fn sub_avg_grad_p(mesh: &DomainMesh, u: &[f64], kind: NormKind, p: f64) -> Result<f64> {
    let r = match kind {
        NormKind::SubAvg(r) | NormKind::BallAvg(r) => r,
        _ => panic!("sub_avg_grad_p expects a sub-region kind"),
    };
    if r < 2.0 * mesh.h {
        return Err(Error::LayerUnderResolved { r, h: mesh.h });
    }
    let q = q1();
    let w = mesh.h * mesh.h / 4.0;
    let mut acc = 0.0;
    let mut measure = 0.0;
    for ey in 0..mesh.ny {
        for ex in 0..mesh.nx {
            let (cx, cy) = mesh.element_center(ex, ey);
            if !element_included(mesh, &kind, cx, cy) {
                continue;
            }
            let nodes = mesh.element_nodes(ex, ey);
            for qp in 0..4 {
                let (_, grad) = value_and_gradient(&q, mesh, u, &nodes, qp);
                let g2 = grad[0][0] * grad[0][0]
                    + grad[0][1] * grad[0][1]
                    + grad[1][0] * grad[1][0]
                    + grad[1][1] * grad[1][1];
                acc += w * g2.powf(p / 2.0);
                measure += w;
            }
        }
    }
    if measure == 0.0 {
        return Ok(0.0);
    }
    Ok((acc / measure).powf(1.0 / p))
}

/// `(avg_E |F|^p)^{1/p}` of a closed-form field over a sub-region; used to
/// normalize the interior/local verdicts.
pub fn sub_avg_value_p(
    mesh: &DomainMesh,
    f: &dyn Fn(f64, f64) -> [f64; 2],
    kind: NormKind,
    p: f64,
) -> f64 {
    let q = crate::coeff::gauss_offsets();
    let w = mesh.h * mesh.h / 4.0;
    let mut acc = 0.0;
    let mut measure = 0.0;
    for ey in 0..mesh.ny {
        for ex in 0..mesh.nx {
            let (cx, cy) = mesh.element_center(ex, ey);
            if !element_included(mesh, &kind, cx, cy) {
                continue;
            }
            for (ox, oy) in q {
                let x = mesh.x0 + (ex as f64 + ox) * mesh.h;
                let y = mesh.y0 + (ey as f64 + oy) * mesh.h;
                let v = f(x, y);
                let v2 = v[0] * v[0] + v[1] * v[1];
                acc += w * v2.powf(p / 2.0);
                measure += w;
            }
        }
    }
    if measure == 0.0 {
        0.0
    } else {
        (acc / measure).powf(1.0 / p)
    }
}

/// Recovers nodal gradients of a 2-component field: each node averages the
/// nearest Gauss-point gradient of its adjacent elements.
/// Returns `g[node][j][beta] = d u^beta / d x_j` flattened as
/// `[node * 4 + j * 2 + beta]`.
pub fn gradient_recovery(mesh: &DomainMesh, u: &[f64]) -> Vec<f64> {
    let q = q1();
    let nxn = mesh.nx + 1;
    let nyn = mesh.ny + 1;
    let mut out = vec![0.0; nxn * nyn * 4];
    let mut counts = vec![0u8; nxn * nyn];
    // Corner -> nearest quadrature point: (0,0)->0, (1,0)->1, (1,1)->3, (0,1)->2.
    const CORNER_QP: [usize; 4] = [0, 1, 3, 2];
    for ey in 0..mesh.ny {
        for ex in 0..mesh.nx {
            let nodes = mesh.element_nodes(ex, ey);
            for (corner, &node) in nodes.iter().enumerate() {
                let qp = CORNER_QP[corner];
                let (_, grad) = value_and_gradient(&q, mesh, u, &nodes, qp);
                for j in 0..2 {
                    for be in 0..2 {
                        out[node * 4 + j * 2 + be] += grad[j][be];
                    }
                }
                counts[node] += 1;
            }
        }
    }
    for node in 0..nxn * nyn {
        let c = counts[node] as f64;
        if c > 0.0 {
            for k in 0..4 {
                out[node * 4 + k] /= c;
            }
        }
    }
    out
}
