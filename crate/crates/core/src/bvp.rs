//! Dirichlet, Neumann, and mixed solves for the oscillating and homogenized
//! operators on domain meshes, with rigid-displacement handling for pure
//! traction problems.

use crate::coeff::PeriodicTensorField;
use crate::error::{Error, Result};
use crate::fem::{element_mass, element_stiffness, q1, Csr};
use crate::mesh::{BoundaryTag, DomainMesh};
use crate::solver::pcg;
use crate::tensor::ElasticityTensor;

/// Relative CG tolerance for domain solves.
pub const BVP_CG_TOL: f64 = 1e-10;

/// Coefficient selection for one solve: the oscillating field `A(x/eps)` or
/// a constant (homogenized) tensor.
#[derive(Clone, Copy)]
pub enum Coefficients<'a> {
    Oscillating {
        field: &'a PeriodicTensorField,
        eps: f64,
    },
    Constant(ElasticityTensor),
}

impl Coefficients<'_> {
    #[inline]
    pub fn at(&self, x: f64, y: f64) -> ElasticityTensor {
        match self {
            Coefficients::Oscillating { field, eps } => field.eval(x / eps, y / eps),
            Coefficients::Constant(t) => *t,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match self {
            Coefficients::Oscillating { eps, .. } => Some(*eps),
            Coefficients::Constant(_) => None,
        }
    }
}

/// Vector-valued data callback.
pub type VectorField<'a> = &'a dyn Fn(f64, f64) -> [f64; 2];
/// Boundary flux callback; receives the outward unit normal.
pub type FluxField<'a> = &'a dyn Fn(f64, f64, [f64; 2]) -> [f64; 2];

/// Nodal displacement field with its solve annotation.
#[derive(Debug, Clone)]
pub struct DisplacementField {
    pub values: Vec<f64>,
    /// `Some(eps)` for the oscillating operator, `None` for the homogenized one.
    pub eps: Option<f64>,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub rel_residual: f64,
    /// `u . K u` over the assembled operator.
    pub energy: f64,
    /// `u . b` against the assembled load (body + boundary flux).
    pub load_work: f64,
    /// Max relative Galerkin residual against 5 pseudo-random interior fields.
    pub galerkin_residual: f64,
    /// Rigid load components removed before a traction solve.
    pub removed_rigid: Option<[f64; 3]>,
    /// Final rigid inner products of a traction solution.
    pub rigid_products: Option<[f64; 3]>,
}

/// Assembles the domain stiffness. For constant coefficients the element
/// matrix is computed once.
pub fn assemble_stiffness(mesh: &DomainMesh, coeffs: &Coefficients) -> Csr {
    let q = q1();
    let h = mesh.h;
    let offs = crate::coeff::gauss_offsets();
    let ndof = 2 * mesh.node_count();
    let cap = mesh.nx * mesh.ny * 64;
    let mut rows = Vec::with_capacity(cap);
    let mut cols = Vec::with_capacity(cap);
    let mut vals = Vec::with_capacity(cap);

    let constant_ke = match coeffs {
        Coefficients::Constant(t) => Some(element_stiffness(&q, &[*t, *t, *t, *t], h)),
        Coefficients::Oscillating { .. } => None,
    };

    for ey in 0..mesh.ny {
        for ex in 0..mesh.nx {
            let ke = match &constant_ke {
                Some(ke) => *ke,
                None => {
                    let mut tensors = [ElasticityTensor::ZERO; 4];
                    for (qp, &(ox, oy)) in offs.iter().enumerate() {
                        let x = mesh.x0 + (ex as f64 + ox) * h;
                        let y = mesh.y0 + (ey as f64 + oy) * h;
                        tensors[qp] = coeffs.at(x, y);
                    }
                    element_stiffness(&q, &tensors, h)
                }
            };
            let nodes = mesh.element_nodes(ex, ey);
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

/// Assembles the body load `int F . v`.
pub fn assemble_body_load(mesh: &DomainMesh, f: VectorField) -> Vec<f64> {
    let q = q1();
    let offs = crate::coeff::gauss_offsets();
    let w = mesh.h * mesh.h / 4.0;
    let mut b = vec![0.0; 2 * mesh.node_count()];
    for ey in 0..mesh.ny {
        for ex in 0..mesh.nx {
            let nodes = mesh.element_nodes(ex, ey);
            for (qp, &(ox, oy)) in offs.iter().enumerate() {
                let x = mesh.x0 + (ex as f64 + ox) * mesh.h;
                let y = mesh.y0 + (ey as f64 + oy) * mesh.h;
                let fv = f(x, y);
                for (a, &node) in nodes.iter().enumerate() {
                    let nv = q.value[qp][a];
                    b[2 * node] += w * nv * fv[0];
                    b[2 * node + 1] += w * nv * fv[1];
                }
            }
        }
    }
    b
}

/// Adds the boundary flux load `int_bdry g . v` by 2-point Gauss quadrature
/// per edge. `only_delta` restricts to the distinguished flat piece.
pub fn add_boundary_flux(mesh: &DomainMesh, g: FluxField, only_delta: bool, b: &mut [f64]) {
    let gp = 0.5 / 3.0f64.sqrt();
    let ts = [0.5 - gp, 0.5 + gp];
    let we = mesh.h / 2.0;
    let nx = mesh.nx;
    let ny = mesh.ny;
    let mut edge = |n0: usize, n1: usize, normal: [f64; 2], on_delta: bool| {
        if only_delta && !on_delta {
            return;
        }
        let (x0, y0) = mesh.node_xy(n0);
        let (x1, y1) = mesh.node_xy(n1);
        for &t in &ts {
            let x = x0 + t * (x1 - x0);
            let y = y0 + t * (y1 - y0);
            let gv = g(x, y, normal);
            for c in 0..2 {
                b[2 * n0 + c] += we * (1.0 - t) * gv[c];
                b[2 * n1 + c] += we * t * gv[c];
            }
        }
    };
    let delta_bottom = matches!(mesh.kind, crate::mesh::DomainKind::HalfDomain);
    for ix in 0..nx {
        edge(
            mesh.node_id(ix, 0),
            mesh.node_id(ix + 1, 0),
            [0.0, -1.0],
            delta_bottom,
        );
        edge(
            mesh.node_id(ix, ny),
            mesh.node_id(ix + 1, ny),
            [0.0, 1.0],
            false,
        );
    }
    for iy in 0..ny {
        edge(
            mesh.node_id(0, iy),
            mesh.node_id(0, iy + 1),
            [-1.0, 0.0],
            false,
        );
        edge(
            mesh.node_id(nx, iy),
            mesh.node_id(nx, iy + 1),
            [1.0, 0.0],
            false,
        );
    }
}

/// Applies the consistent mass matrix to a nodal field (2 components).
pub fn mass_apply(mesh: &DomainMesh, z: &[f64]) -> Vec<f64> {
    let q = q1();
    let me = element_mass(&q, mesh.h);
    let mut out = vec![0.0; z.len()];
    for ey in 0..mesh.ny {
        for ex in 0..mesh.nx {
            let nodes = mesh.element_nodes(ex, ey);
            for (a, &na) in nodes.iter().enumerate() {
                for (b, &nb) in nodes.iter().enumerate() {
                    let m = me[a][b];
                    out[2 * na] += m * z[2 * nb];
                    out[2 * na + 1] += m * z[2 * nb + 1];
                }
            }
        }
    }
    out
}

/// L2-orthonormal basis of the rigid displacements on a mesh: the two
/// normalized translations and the normalized rotation about the centroid.
#[derive(Debug, Clone)]
pub struct RigidBasis {
    /// Nodal values of the three basis fields.
    pub fields: [Vec<f64>; 3],
    /// Mass-matrix images, so `<u, phi_j>_{L2} = u . mass_fields[j]`.
    pub mass_fields: [Vec<f64>; 3],
    /// Euclidean-orthonormalized copies for Krylov-space deflation.
    euclid: [Vec<f64>; 3],
}

impl RigidBasis {
    pub fn new(mesh: &DomainMesh) -> Self {
        let n = mesh.node_count();
        let area = mesh.area();
        let (cx, cy) = mesh.centroid();
        let lx = mesh.nx as f64 * mesh.h;
        let ly = mesh.ny as f64 * mesh.h;
        // int |x - c|^2 over the rectangle.
        let inertia = area * (lx * lx + ly * ly) / 12.0;
        let t_norm = 1.0 / area.sqrt();
        let r_norm = 1.0 / inertia.sqrt();
        let mut fields = [vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]];
        for id in 0..n {
            let (x, y) = mesh.node_xy(id);
            fields[0][2 * id] = t_norm;
            fields[1][2 * id + 1] = t_norm;
            fields[2][2 * id] = -r_norm * (y - cy);
            fields[2][2 * id + 1] = r_norm * (x - cx);
        }
        let mass_fields = [
            mass_apply(mesh, &fields[0]),
            mass_apply(mesh, &fields[1]),
            mass_apply(mesh, &fields[2]),
        ];
        // Euclidean Gram-Schmidt for the deflation copies.
        let mut euclid = fields.clone();
        for j in 0..3 {
            for k in 0..j {
                let prev = euclid[k].clone();
                let d = dot(&euclid[j], &prev);
                for (v, p) in euclid[j].iter_mut().zip(&prev) {
                    *v -= d * p;
                }
            }
            let nj = dot(&euclid[j], &euclid[j]).sqrt();
            for v in euclid[j].iter_mut() {
                *v /= nj;
            }
        }
        RigidBasis {
            fields,
            mass_fields,
            euclid,
        }
    }

    /// L2 inner products `<u, phi_j>`.
    pub fn products(&self, u: &[f64]) -> [f64; 3] {
        [
            dot(u, &self.mass_fields[0]),
            dot(u, &self.mass_fields[1]),
            dot(u, &self.mass_fields[2]),
        ]
    }

    /// Gram matrix of the basis in the L2 inner product.
    pub fn gram(&self) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = dot(&self.fields[i], &self.mass_fields[j]);
            }
        }
        g
    }

    fn deflate(&self, v: &mut [f64]) {
        for e in &self.euclid {
            let d = dot(v, e);
            for (x, y) in v.iter_mut().zip(e) {
                *x -= d * y;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Removes the L2 projection onto the rigid space. Idempotent.
pub fn rigid_project(mesh: &DomainMesh, basis: &RigidBasis, u: &[f64]) -> Vec<f64> {
    let _ = mesh;
    let p = basis.products(u);
    let mut out = u.to_vec();
    for j in 0..3 {
        for (v, z) in out.iter_mut().zip(&basis.fields[j]) {
            *v -= p[j] * z;
        }
    }
    out
}

fn cg_cap(mesh: &DomainMesh) -> usize {
    50 * mesh.nx.max(mesh.ny).max(64)
}

/// Deterministic pseudo-random interior test fields for the Galerkin check.
fn galerkin_residual(mesh: &DomainMesh, k: &Csr, u: &[f64], b: &[f64]) -> f64 {
    let n = mesh.node_count();
    let mut ku = vec![0.0; 2 * n];
    k.matvec(u, &mut ku);
    let bnorm = dot(b, b).sqrt().max(1e-300);
    let mut state = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let mut v = vec![0.0; 2 * n];
        for id in 0..n {
            if !mesh.is_boundary(id) {
                v[2 * id] = next();
                v[2 * id + 1] = next();
            }
        }
        let vnorm = dot(&v, &v).sqrt().max(1e-300);
        let mut s = 0.0;
        for i in 0..2 * n {
            s += v[i] * (ku[i] - b[i]);
        }
        worst = worst.max(s.abs() / (vnorm * bnorm));
    }
    worst
}

fn check_resolution(mesh: &DomainMesh, coeffs: &Coefficients) -> Result<()> {
    if let Some(eps) = coeffs.eps() {
        if mesh.h > eps / 8.0 + 1e-15 {
            return Err(Error::UnderResolved { h: mesh.h, eps });
        }
    }
    Ok(())
}

/// Set of constrained DOFs for a Dirichlet-type solve.
#[derive(Clone, Copy, PartialEq)]
pub enum Constraint {
    /// Every boundary node.
    AllBoundary,
    /// Outer nodes only (mixed problems on the half domain).
    OuterOnly,
}

fn solve_constrained(
    mesh: &DomainMesh,
    coeffs: &Coefficients,
    body: VectorField,
    dirichlet: VectorField,
    flux: Option<FluxField>,
    which: Constraint,
) -> Result<DisplacementField> {
    check_resolution(mesh, coeffs)?;
    let k = assemble_stiffness(mesh, coeffs);
    let mut b = assemble_body_load(mesh, body);
    if let Some(g) = flux {
        add_boundary_flux(mesh, g, true, &mut b);
    }
    let n = mesh.node_count();
    let mut keep = vec![true; 2 * n];
    let mut u = vec![0.0; 2 * n];
    for id in 0..n {
        let constrained = match which {
            Constraint::AllBoundary => mesh.is_boundary(id),
            Constraint::OuterOnly => mesh.tags[id] == BoundaryTag::Outer,
        };
        if constrained {
            let (x, y) = mesh.node_xy(id);
            let f = dirichlet(x, y);
            u[2 * id] = f[0];
            u[2 * id + 1] = f[1];
            keep[2 * id] = false;
            keep[2 * id + 1] = false;
        }
    }
    // Move boundary data to the right-hand side.
    let mut ku = vec![0.0; 2 * n];
    k.matvec(&u, &mut ku);
    let (kff, kept) = k.restrict(&keep);
    let bf: Vec<f64> = kept.iter().map(|&i| b[i] - ku[i]).collect();
    let inv_diag: Vec<f64> = kff.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut xf = vec![0.0; kept.len()];
    let out = pcg(
        &kff,
        &bf,
        &mut xf,
        Some(&inv_diag),
        BVP_CG_TOL,
        cg_cap(mesh),
        &mut |_| {},
    )?;
    for (slot, &i) in xf.iter().zip(&kept) {
        u[i] = *slot;
    }
    // Diagnostics on the full system.
    let mut ku = vec![0.0; 2 * n];
    k.matvec(&u, &mut ku);
    let energy = dot(&u, &ku);
    let load_work = dot(&u, &b);
    // The full residual carries reaction forces on constrained rows; the
    // Galerkin check uses interior test fields, so overwrite those rows.
    let mut bb = b.clone();
    for id in 0..n {
        if !keep[2 * id] {
            bb[2 * id] = ku[2 * id];
            bb[2 * id + 1] = ku[2 * id + 1];
        }
    }
    let g_res = galerkin_residual(mesh, &k, &u, &bb);
    Ok(DisplacementField {
        values: u,
        eps: coeffs.eps(),
        diagnostics: SolveDiagnostics {
            iterations: out.iterations,
            rel_residual: out.rel_residual,
            energy,
            load_work,
            galerkin_residual: g_res,
            removed_rigid: None,
            rigid_products: None,
        },
    })
}

/// Dirichlet problem on the whole boundary: `u = f` on the boundary nodes.
pub fn solve_dirichlet(
    mesh: &DomainMesh,
    coeffs: &Coefficients,
    body: VectorField,
    boundary: VectorField,
) -> Result<DisplacementField> {
    solve_constrained(mesh, coeffs, body, boundary, None, Constraint::AllBoundary)
}

/// Mixed problem on the half domain: homogeneous Dirichlet on the outer
/// boundary, and either Dirichlet data or a conormal flux on the flat piece.
pub enum DeltaCondition<'a> {
    Dirichlet(VectorField<'a>),
    Neumann(FluxField<'a>),
}

pub fn solve_local(
    mesh: &DomainMesh,
    coeffs: &Coefficients,
    body: VectorField,
    delta: DeltaCondition,
) -> Result<DisplacementField> {
    match delta {
        DeltaCondition::Dirichlet(f) => {
            // f on Delta, zero on the outer boundary.
            let tags = mesh.tags.clone();
            let nx = mesh.nx + 1;
            let f_all = move |x: f64, y: f64| {
                let ix = ((x - mesh.x0) / mesh.h).round() as usize;
                let iy = ((y - mesh.y0) / mesh.h).round() as usize;
                if tags[iy * nx + ix] == BoundaryTag::Delta {
                    f(x, y)
                } else {
                    [0.0, 0.0]
                }
            };
            solve_constrained(mesh, coeffs, body, &f_all, None, Constraint::AllBoundary)
        }
        DeltaCondition::Neumann(g) => solve_constrained(
            mesh,
            coeffs,
            body,
            &|_, _| [0.0, 0.0],
            Some(g),
            Constraint::OuterOnly,
        ),
    }
}

/// Neumann (pure traction) problem: conormal flux `g` on the whole boundary,
/// data projected onto the rigid-compatible complement, solution returned
/// with zero rigid components.
pub fn solve_neumann(
    mesh: &DomainMesh,
    coeffs: &Coefficients,
    body: VectorField,
    flux: FluxField,
) -> Result<DisplacementField> {
    check_resolution(mesh, coeffs)?;
    let basis = RigidBasis::new(mesh);
    let k = assemble_stiffness(mesh, coeffs);
    let mut b = assemble_body_load(mesh, body);
    add_boundary_flux(mesh, flux, false, &mut b);

    // Compatibility: remove the rigid components of the load functional.
    let raw_norm = dot(&b, &b).sqrt();
    let mut removed = [0.0f64; 3];
    for j in 0..3 {
        removed[j] = dot(&b, &basis.fields[j]);
        for (v, m) in b.iter_mut().zip(&basis.mass_fields[j]) {
            *v -= removed[j] * m;
        }
    }
    // Exact Euclidean consistency: b must be orthogonal to the nodal rigid
    // vectors (the range condition for the symmetric singular operator).
    for j in 0..3 {
        let resid = dot(&b, &basis.fields[j]);
        for (v, m) in b.iter_mut().zip(&basis.mass_fields[j]) {
            *v -= resid * m;
        }
    }
    let new_norm = dot(&b, &b).sqrt();
    if raw_norm > 0.0 && new_norm <= 1e-14 * raw_norm {
        let (mode, mag) = removed
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        return Err(Error::IncompatibleData {
            mode,
            magnitude: mag,
        });
    }

    let inv_diag: Vec<f64> = k.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut u = vec![0.0; b.len()];
    let mut deflate = |v: &mut [f64]| basis.deflate(v);
    let out = pcg(
        &k,
        &b,
        &mut u,
        Some(&inv_diag),
        BVP_CG_TOL,
        cg_cap(mesh),
        &mut deflate,
    )?;
    // Final normalization in the L2 inner product.
    let u = rigid_project(mesh, &basis, &u);
    let rigid_products = basis.products(&u);

    let mut ku = vec![0.0; u.len()];
    k.matvec(&u, &mut ku);
    let energy = dot(&u, &ku);
    let load_work = dot(&u, &b);
    let g_res = galerkin_residual(mesh, &k, &u, &b);
    Ok(DisplacementField {
        values: u,
        eps: coeffs.eps(),
        diagnostics: SolveDiagnostics {
            iterations: out.iterations,
            rel_residual: out.rel_residual,
            energy,
            load_work,
            galerkin_residual: g_res,
            removed_rigid: Some(removed),
            rigid_products: Some(rigid_products),
        },
    })
}

pub use crate::solver::CgOutcome as SolveOutcome;

/// Writes a displacement field as CSV (`node,x,y,u1,u2`).
pub fn displacement_to_csv<W: std::io::Write>(
    mesh: &DomainMesh,
    u: &DisplacementField,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "node,x,y,u1,u2")?;
    for id in 0..mesh.node_count() {
        let (x, y) = mesh.node_xy(id);
        writeln!(
            w,
            "{},{:.12e},{:.12e},{:.12e},{:.12e}",
            id,
            x,
            y,
            u.values[2 * id],
            u.values[2 * id + 1]
        )?;
    }
    Ok(())
}
