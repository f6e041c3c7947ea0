//! The two-scale discrepancy: the oscillating solution minus the homogenized
//! one minus the scaled, smoothed, cut-off corrector term.

use crate::bvp::{rigid_project, DisplacementField, RigidBasis};
use crate::cell::CorrectorSet;
use crate::error::{Error, Result};
use crate::mesh::DomainMesh;
use crate::norms::{gradient_recovery, norms, NormKind};
use crate::smoothing::{cutoff, mollifier, mollify_twice};

/// Output of one two-scale comparison.
#[derive(Debug, Clone)]
pub struct TwoScaleResult {
    /// The discrepancy field w.
    pub w: Vec<f64>,
    /// The corrector term alone: `eps * chi(x/eps) K^2((grad u0) eta)`.
    pub corrector_term: Vec<f64>,
    pub w_h1: f64,
    pub w_h1_semi: f64,
    /// `||u_eps - u0||` norms without the corrector.
    pub err_l2: f64,
    pub err_l4: f64,
    pub err_h1: f64,
    /// Max |w| over boundary nodes.
    pub boundary_trace_max: f64,
}

/// Builds the discrepancy `w = u_eps - u0 - eps chi(x/eps) K_eps^2((grad u0) eta_eps)`.
///
/// Both fields must live on `mesh`; the correctors are interpolated
/// periodically at `x / eps`. For traction (Neumann) problems, pass
/// `project_rigid = true`: both inputs are rigid-orthogonal by convention
/// and the returned w is normalized the same way.
pub fn two_scale_discrepancy(
    mesh: &DomainMesh,
    u_eps: &DisplacementField,
    u0: &DisplacementField,
    correctors: &CorrectorSet,
    eps: f64,
    project_rigid: bool,
) -> Result<TwoScaleResult> {
    let n = mesh.node_count();
    if u_eps.values.len() != 2 * n || u0.values.len() != 2 * n {
        return Err(Error::MeshMismatch(
            "two-scale comparison requires both solutions on the shared mesh".into(),
        ));
    }
    if u_eps.eps != Some(eps) {
        return Err(Error::MeshMismatch(format!(
            "oscillating solution was computed at eps={:?}, comparison requested at eps={eps}",
            u_eps.eps
        )));
    }

    // (grad u0) eta, then the squared smoothing.
    let grads = gradient_recovery(mesh, &u0.values);
    let eta = cutoff(mesh, eps)?;
    let mut damped = grads.clone();
    for node in 0..n {
        for k in 0..4 {
            damped[node * 4 + k] *= eta.values[node];
        }
    }
    let m = mollifier(eps, mesh.h)?;
    let smoothed = mollify_twice(&m, mesh, &damped, 4);

    // Corrector term: c^al = eps * chi_{j beta}^{al}(x/eps) * S_{j beta}.
    let mut corrector_term = vec![0.0; 2 * n];
    for node in 0..n {
        let (x, y) = mesh.node_xy(node);
        let (y1, y2) = (x / eps, y / eps);
        for j in 0..2 {
            for be in 0..2 {
                let s = smoothed[node * 4 + j * 2 + be];
                if s == 0.0 {
                    continue;
                }
                let chi = correctors.field(j, be);
                for al in 0..2 {
                    corrector_term[2 * node + al] += eps * chi.interp(y1, y2, al) * s;
                }
            }
        }
    }

    let mut w = vec![0.0; 2 * n];
    let mut diff = vec![0.0; 2 * n];
    for i in 0..2 * n {
        diff[i] = u_eps.values[i] - u0.values[i];
        w[i] = diff[i] - corrector_term[i];
    }
    if project_rigid {
        let basis = RigidBasis::new(mesh);
        w = rigid_project(mesh, &basis, &w);
    }

    let mut boundary_trace_max = 0.0f64;
    for id in 0..n {
        if mesh.is_boundary(id) {
            boundary_trace_max = boundary_trace_max
                .max(w[2 * id].abs())
                .max(w[2 * id + 1].abs());
        }
    }

    Ok(TwoScaleResult {
        w_h1: norms(mesh, &w, NormKind::H1)?,
        w_h1_semi: norms(mesh, &w, NormKind::H1Semi)?,
        err_l2: norms(mesh, &diff, NormKind::L2)?,
        err_l4: norms(mesh, &diff, NormKind::L4)?,
        err_h1: norms(mesh, &diff, NormKind::H1)?,
        boundary_trace_max,
        w,
        corrector_term,
    })
}
