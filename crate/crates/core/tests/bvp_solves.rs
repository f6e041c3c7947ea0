//! Boundary-value solver checks: manufactured-solution convergence for both
//! boundary conditions, rigid-displacement handling, operator symmetry and
//! coercivity, and the mixed half-domain solve.

use homlab_core::bvp::{
    assemble_stiffness, rigid_project, solve_dirichlet, solve_local, solve_neumann, Coefficients,
    DeltaCondition, RigidBasis,
};
use homlab_core::coeff::{make_preset, Preset};
use homlab_core::error::Error;
use homlab_core::mesh::{build_domain, DomainKind};
use homlab_core::norms::{norms, NormKind};
use homlab_core::reference::{
    manufactured_body_force, manufactured_conormal, manufactured_dirichlet, manufactured_neumann,
};
use homlab_core::study::fit_slope;
use homlab_core::tensor::ElasticityTensor;

fn presets() -> Vec<Preset> {
    vec![
        Preset::ConstantIsotropic { lambda: 1.0, mu: 1.0 },
        Preset::OscillatoryIsotropic {
            lambda0: 2.0,
            lambda_amp: 1.0,
            mu0: 2.0,
            mu_amp: 1.0,
        },
        Preset::Laminate {
            lambda0: 0.0,
            lambda_amp: 0.0,
            mu0: 2.0,
            mu_amp: 1.0,
        },
        Preset::SmoothedCheckerboard {
            lambda0: 1.0,
            mu0: 2.0,
            mu_amp: 1.0,
            width: 0.25,
        },
    ]
}

fn l2_error_against(mesh: &homlab_core::DomainMesh, u: &[f64], exact: impl Fn(f64, f64) -> [f64; 2]) -> f64 {
    let mut diff = vec![0.0; u.len()];
    for id in 0..mesh.node_count() {
        let (x, y) = mesh.node_xy(id);
        let e = exact(x, y);
        diff[2 * id] = u[2 * id] - e[0];
        diff[2 * id + 1] = u[2 * id + 1] - e[1];
    }
    norms(mesh, &diff, NormKind::L2).unwrap()
}

#[test]
fn zero_data_gives_zero_solutions() {
    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 16.0).unwrap();
    let ahat = Coefficients::Constant(ElasticityTensor::isotropic(1.0, 1.0));
    let ud = solve_dirichlet(&mesh, &ahat, &|_, _| [0.0, 0.0], &|_, _| [0.0, 0.0]).unwrap();
    assert!(ud.values.iter().all(|&v| v == 0.0));
    let un = solve_neumann(&mesh, &ahat, &|_, _| [0.0, 0.0], &|_, _, _| [0.0, 0.0]).unwrap();
    assert!(un.values.iter().all(|&v| v == 0.0));
}

#[test]
fn dirichlet_manufactured_convergence_is_second_order() {
    let ahat = ElasticityTensor::isotropic(1.0, 1.0);
    let ms = manufactured_dirichlet();
    let mut pairs = Vec::new();
    for k in 4..=7 {
        let h = 0.5f64.powi(k);
        let mesh = build_domain(DomainKind::UnitSquare, h).unwrap();
        let u = solve_dirichlet(
            &mesh,
            &Coefficients::Constant(ahat),
            &|x, y| manufactured_body_force(&ahat, &manufactured_dirichlet(), x, y),
            &|_, _| [0.0, 0.0],
        )
        .unwrap();
        assert!(u.diagnostics.galerkin_residual <= 1e-8);
        pairs.push((h, l2_error_against(&mesh, &u.values, ms.u)));
    }
    let (slope, _) = fit_slope(&pairs).unwrap();
    assert!(
        (1.8..=2.2).contains(&slope),
        "Dirichlet L2 slope {slope}; pairs {pairs:?}"
    );
}

#[test]
fn neumann_manufactured_convergence_is_second_order() {
    let ahat = ElasticityTensor::isotropic(1.0, 1.0);
    let ms = manufactured_neumann();
    let mut pairs = Vec::new();
    for k in 4..=7 {
        let h = 0.5f64.powi(k);
        let mesh = build_domain(DomainKind::UnitSquare, h).unwrap();
        let u = solve_neumann(
            &mesh,
            &Coefficients::Constant(ahat),
            &|x, y| manufactured_body_force(&ahat, &manufactured_neumann(), x, y),
            &|x, y, n| manufactured_conormal(&ahat, &manufactured_neumann(), x, y, n),
        )
        .unwrap();
        let rp = u.diagnostics.rigid_products.unwrap();
        assert!(rp.iter().all(|p| p.abs() <= 1e-10), "rigid products {rp:?}");
        pairs.push((h, l2_error_against(&mesh, &u.values, ms.u)));
    }
    let (slope, _) = fit_slope(&pairs).unwrap();
    assert!(
        (1.5..=2.2).contains(&slope),
        "Neumann L2 slope {slope}; pairs {pairs:?}"
    );
}

#[test]
fn rigid_dirichlet_data_is_reproduced_for_every_preset() {
    // Rigid fields solve the homogeneous system exactly for any coefficient
    // field, so the discrete solution must reproduce the boundary data.
    for preset in presets() {
        let field = make_preset(preset.clone(), 64).unwrap();
        let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 32.0).unwrap();
        let coeffs = Coefficients::Oscillating {
            field: &field,
            eps: 0.25,
        };
        let u = solve_dirichlet(&mesh, &coeffs, &|_, _| [0.0, 0.0], &|x, y| [-y, x]).unwrap();
        let mut worst = 0.0f64;
        for id in 0..mesh.node_count() {
            let (x, y) = mesh.node_xy(id);
            worst = worst
                .max((u.values[2 * id] + y).abs())
                .max((u.values[2 * id + 1] - x).abs());
        }
        assert!(
            worst <= 1e-9,
            "{}: rigid data deviation {worst:.3e}",
            preset.name()
        );
    }
}

#[test]
fn neumann_energy_identity_for_oscillating_coefficients() {
    let field = make_preset(
        Preset::OscillatoryIsotropic {
            lambda0: 2.0,
            lambda_amp: 1.0,
            mu0: 2.0,
            mu_amp: 1.0,
        },
        64,
    )
    .unwrap();
    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 64.0).unwrap();
    let coeffs = Coefficients::Oscillating {
        field: &field,
        eps: 0.125,
    };
    let tau = std::f64::consts::TAU;
    let u = solve_neumann(
        &mesh,
        &coeffs,
        &|x, y| [(tau * x).sin() * (tau * y).sin(), (tau * x).cos() * (tau * y).cos()],
        &|_, _, _| [0.0, 0.0],
    )
    .unwrap();
    let d = &u.diagnostics;
    let rel = (d.energy - d.load_work).abs() / d.energy.abs();
    assert!(rel <= 1e-8, "energy {} vs work {}", d.energy, d.load_work);
}

#[test]
fn stiffness_is_symmetric_and_coercive_on_constrained_fields() {
    let field = make_preset(
        Preset::SmoothedCheckerboard {
            lambda0: 1.0,
            mu0: 2.0,
            mu_amp: 1.0,
            width: 0.25,
        },
        32,
    )
    .unwrap();
    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 16.0).unwrap();
    let k = assemble_stiffness(
        &mesh,
        &Coefficients::Oscillating {
            field: &field,
            eps: 0.125,
        },
    );
    let n = 2 * mesh.node_count();
    let mut state = 777u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let basis = RigidBasis::new(&mesh);
    for _ in 0..20 {
        let u: Vec<f64> = (0..n).map(|_| next()).collect();
        let v: Vec<f64> = (0..n).map(|_| next()).collect();
        let mut ku = vec![0.0; n];
        let mut kv = vec![0.0; n];
        k.matvec(&u, &mut ku);
        k.matvec(&v, &mut kv);
        let kuv: f64 = ku.iter().zip(&v).map(|(a, b)| a * b).sum();
        let ukv: f64 = u.iter().zip(&kv).map(|(a, b)| a * b).sum();
        let scale = kuv.abs().max(1.0);
        assert!(
            (kuv - ukv).abs() <= 1e-12 * scale,
            "symmetry violated: {kuv} vs {ukv}"
        );

        // Coercivity with the rigid kernel removed.
        let w = rigid_project(&mesh, &basis, &u);
        let mut kw = vec![0.0; n];
        k.matvec(&w, &mut kw);
        let e: f64 = w.iter().zip(&kw).map(|(a, b)| a * b).sum();
        assert!(e > 0.0, "projected random field must carry energy");
    }
}

#[test]
fn rigid_projection_is_exact_and_idempotent() {
    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 32.0).unwrap();
    let basis = RigidBasis::new(&mesh);

    // Gram matrix of the basis is the identity.
    let g = basis.gram();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g[i][j] - want).abs() <= 1e-12, "gram[{i}][{j}] = {}", g[i][j]);
        }
    }

    // Projection of a basis field vanishes.
    let p = rigid_project(&mesh, &basis, &basis.fields[0]);
    assert!(p.iter().all(|&v| v.abs() <= 1e-12));

    // Projection is idempotent and kills all rigid products, checked with an
    // independent 3x3 Gram-solve on the linear field (x1, x2).
    let mut u = vec![0.0; 2 * mesh.node_count()];
    for id in 0..mesh.node_count() {
        let (x, y) = mesh.node_xy(id);
        u[2 * id] = x;
        u[2 * id + 1] = y;
    }
    let once = rigid_project(&mesh, &basis, &u);
    let twice = rigid_project(&mesh, &basis, &once);
    let drift = once
        .iter()
        .zip(&twice)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(drift <= 1e-12, "projection must be idempotent: {drift:.3e}");
    let products = basis.products(&once);
    assert!(products.iter().all(|p| p.abs() <= 1e-12), "{products:?}");
}

#[test]
fn pure_rigid_load_is_refused() {
    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 16.0).unwrap();
    let ahat = Coefficients::Constant(ElasticityTensor::isotropic(1.0, 1.0));
    let err = solve_neumann(&mesh, &ahat, &|_, _| [1.0, 1.0], &|_, _, _| [0.0, 0.0]).unwrap_err();
    assert!(matches!(err, Error::IncompatibleData { .. }), "{err}");
}

#[test]
fn under_resolved_oscillation_is_refused() {
    let field = make_preset(Preset::ConstantIsotropic { lambda: 1.0, mu: 1.0 }, 16).unwrap();
    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 16.0).unwrap();
    let coeffs = Coefficients::Oscillating {
        field: &field,
        eps: 1.0 / 16.0,
    };
    assert!(matches!(
        solve_dirichlet(&mesh, &coeffs, &|_, _| [0.0, 0.0], &|_, _| [0.0, 0.0]),
        Err(Error::UnderResolved { .. })
    ));
}

#[test]
fn half_domain_mixed_solves_behave() {
    let mesh = build_domain(DomainKind::HalfDomain, 1.0 / 32.0).unwrap();
    let ahat = Coefficients::Constant(ElasticityTensor::isotropic(1.0, 1.0));

    // Zero data, zero solution.
    let u = solve_local(
        &mesh,
        &ahat,
        &|_, _| [0.0, 0.0],
        DeltaCondition::Dirichlet(&|_, _| [0.0, 0.0]),
    )
    .unwrap();
    assert!(u.values.iter().all(|&v| v == 0.0));

    // Constant body force with the flat piece pinned: sub-box averages
    // converge as r -> 0 to a finite limit. Use a finer run as the oracle.
    let coarse = solve_local(
        &mesh,
        &ahat,
        &|_, _| [1.0, 0.0],
        DeltaCondition::Dirichlet(&|_, _| [0.0, 0.0]),
    )
    .unwrap();
    let fine_mesh = build_domain(DomainKind::HalfDomain, 1.0 / 64.0).unwrap();
    let fine = solve_local(
        &fine_mesh,
        &ahat,
        &|_, _| [1.0, 0.0],
        DeltaCondition::Dirichlet(&|_, _| [0.0, 0.0]),
    )
    .unwrap();
    for r in [0.125, 0.25, 0.5] {
        let vc = norms(&mesh, &coarse.values, NormKind::SubAvg(r)).unwrap();
        let vf = norms(&fine_mesh, &fine.values, NormKind::SubAvg(r)).unwrap();
        assert!(
            (vc - vf).abs() <= 0.05 * vf.abs().max(1e-12),
            "sub-box average at r={r}: {vc} vs fine-mesh oracle {vf}"
        );
    }
    // Values settle toward a finite limit as r shrinks (no blow-up).
    let v1 = norms(&fine_mesh, &fine.values, NormKind::SubAvg(0.5)).unwrap();
    let v2 = norms(&fine_mesh, &fine.values, NormKind::SubAvg(0.0625)).unwrap();
    assert!(v2 <= 4.0 * v1.max(1e-12), "near-corner averages stay bounded");

    // Neumann variant on the flat piece also solves.
    let un = solve_local(
        &mesh,
        &ahat,
        &|_, _| [1.0, 0.0],
        DeltaCondition::Neumann(&|_, _, _| [0.0, 0.0]),
    )
    .unwrap();
    assert!(un.diagnostics.rel_residual <= 1e-10);
}
