//! Quantitative bounds of the smoothing operator: the periodic-weight
//! inequality with corrector samples, and the eps-scaling of the smoothing
//! gain on a fixed rough field.

use homlab_core::cell::solve_cell;
use homlab_core::coeff::{make_preset, Preset};
use homlab_core::mesh::{build_domain, DomainKind};
use homlab_core::smoothing::{mollifier, mollify};
use homlab_core::study::fit_slope;
use rand::{Rng, SeedableRng};

/// Discrete Lp norm of a nodal scalar field (lattice quadrature).
fn lp_norm(mesh: &homlab_core::DomainMesh, data: &[f64], p: f64) -> f64 {
    let w = mesh.h * mesh.h;
    let s: f64 = data.iter().map(|v| v.abs().powf(p) * w).sum();
    s.powf(1.0 / p)
}

#[test]
fn periodic_weight_bound_with_corrector_samples() {
    // || g(x/eps) K_eps(f) ||_L2 <= C * cellnorm(g) * ||f||_L2 with C <= 4.
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
    let cell = solve_cell(&field).unwrap();
    let chi = cell.correctors.field(0, 0);
    let cellnorm = chi.l2(0).max(chi.l2(1));
    assert!(cellnorm > 0.0);

    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 128.0).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for &eps in &[1.0 / 8.0, 1.0 / 16.0] {
        let m = mollifier(eps, mesh.h).unwrap();
        for _ in 0..10 {
            let f: Vec<f64> = (0..mesh.node_count())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let kf = mollify(&m, &mesh, &f, 1);
            let mut weighted = vec![0.0; kf.len()];
            for id in 0..mesh.node_count() {
                let (x, y) = mesh.node_xy(id);
                weighted[id] = chi.interp(x / eps, y / eps, 0) * kf[id];
            }
            let c = lp_norm(&mesh, &weighted, 2.0) / (cellnorm * lp_norm(&mesh, &f, 2.0));
            assert!(c <= 4.0, "measured constant {c} exceeds 4");
        }
    }
}

#[test]
fn smoothing_gain_scales_like_inverse_sqrt_eps() {
    // ||K_eps f||_L2 / ||f||_L{4/3} on a fixed rough field f = |x - c|^{-3/2}
    // (truncated at the mesh scale, the borderline L^{4/3} profile): the
    // fitted exponent over eps octaves must sit in [-0.7, -0.3].
    // Kernel support is eps/4, so the smallest eps keeps a well-resolved
    // bump (8 nodes across the support radius).
    let mesh = build_domain(DomainKind::UnitSquare, 1.0 / 256.0).unwrap();
    let c = (0.5, 0.5);
    let f: Vec<f64> = (0..mesh.node_count())
        .map(|id| {
            let (x, y) = mesh.node_xy(id);
            let r = ((x - c.0).powi(2) + (y - c.1).powi(2)).sqrt().max(mesh.h);
            r.powf(-1.5)
        })
        .collect();
    let f43 = lp_norm(&mesh, &f, 4.0 / 3.0);

    let mut pairs = Vec::new();
    for &eps in &[1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0] {
        let m = mollifier(eps, mesh.h).unwrap();
        let kf = mollify(&m, &mesh, &f, 1);
        pairs.push((eps, lp_norm(&mesh, &kf, 2.0) / f43));
    }
    let (slope, _) = fit_slope(&pairs).unwrap();
    assert!(
        (-0.7..=-0.3).contains(&slope),
        "smoothing-gain exponent {slope}; pairs {pairs:?}"
    );
}
