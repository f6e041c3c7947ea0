//! Independent reference computations used only by the test suites.
//!
//! Nothing here touches the FEM/lattice implementation paths: the laminate
//! quantities come from 1D quadrature of closed-form expressions, and the
//! manufactured solutions carry hand-written derivatives. Keeping these
//! routes separate is what makes the comparisons in the tests meaningful.

use crate::coeff::Preset;
use crate::tensor::ElasticityTensor;

fn inv2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ]
}

fn matvec2(m: &[[f64; 2]; 2], v: &[f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// 1D reference for laminates (coefficients depending on y1 only).
///
/// For each unit cell problem the corrector depends on y1 alone and solves a
/// two-point periodic ODE: `a11(y1) chi'(y1) + a_{1j}^{.beta}(y1) = const`,
/// with the constant fixed by periodicity of chi. All integrals are midpoint
/// sums over `m` panels; on the torus with smooth profiles these converge
/// spectrally, so `m = 8192` is far below the comparison tolerances.
pub struct LaminateReference {
    pub ahat: ElasticityTensor,
    m: usize,
    preset: Preset,
    /// `c[j][beta]`: the flux constants of each cell problem.
    c: [[[f64; 2]; 2]; 2],
    /// Mean-zero cumulative corrector values at panel midpoints: `chi[j][beta][gamma][panel]`.
    chi_mid: Vec<f64>,
}

fn a11_matrix(a: &ElasticityTensor) -> [[f64; 2]; 2] {
    [
        [a.get(0, 0, 0, 0), a.get(0, 0, 0, 1)],
        [a.get(0, 0, 1, 0), a.get(0, 0, 1, 1)],
    ]
}

fn a1j_column(a: &ElasticityTensor, j: usize, beta: usize) -> [f64; 2] {
    [a.get(0, j, 0, beta), a.get(0, j, 1, beta)]
}

impl LaminateReference {
    pub fn new(preset: &Preset, m: usize) -> Self {
        let mids: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) / m as f64).collect();
        let tensors: Vec<ElasticityTensor> = mids.iter().map(|&t| preset.eval(t, 0.0)).collect();
        let invs: Vec<[[f64; 2]; 2]> = tensors.iter().map(|a| inv2(a11_matrix(a))).collect();

        // S = mean of a11^-1.
        let mut s = [[0.0f64; 2]; 2];
        for inv in &invs {
            for r in 0..2 {
                for cc in 0..2 {
                    s[r][cc] += inv[r][cc];
                }
            }
        }
        for r in 0..2 {
            for cc in 0..2 {
                s[r][cc] /= m as f64;
            }
        }
        let s_inv = inv2(s);

        let mut c = [[[0.0f64; 2]; 2]; 2];
        let mut chi_mid = vec![0.0; 2 * 2 * 2 * m];
        let mut ahat = ElasticityTensor::ZERO;

        for j in 0..2 {
            for be in 0..2 {
                // c = S^-1 * mean(a11^-1 a_{1j}^{.beta}).
                let mut v = [0.0f64; 2];
                for (inv, a) in invs.iter().zip(&tensors) {
                    let col = a1j_column(a, j, be);
                    let iv = matvec2(inv, &col);
                    v[0] += iv[0];
                    v[1] += iv[1];
                }
                v[0] /= m as f64;
                v[1] /= m as f64;
                let cj = matvec2(&s_inv, &v);
                c[j][be] = cj;

                // slope(t) = a11(t)^-1 (c - a_{1j}^{.beta}(t)), cumulative
                // midpoint integral, then mean removed.
                let mut cum = [0.0f64; 2];
                let mut vals = vec![[0.0f64; 2]; m];
                for (k, (inv, a)) in invs.iter().zip(&tensors).enumerate() {
                    let col = a1j_column(a, j, be);
                    let rhs = [cj[0] - col[0], cj[1] - col[1]];
                    let slope = matvec2(inv, &rhs);
                    // Midpoint value of the antiderivative over panel k.
                    vals[k] = [
                        cum[0] + 0.5 * slope[0] / m as f64,
                        cum[1] + 0.5 * slope[1] / m as f64,
                    ];
                    cum[0] += slope[0] / m as f64;
                    cum[1] += slope[1] / m as f64;

                    // Effective tensor accumulation: a_{ij}^{ab} + a_{i1}^{ag} slope^g.
                    for i in 0..2 {
                        for al in 0..2 {
                            let mut t = a.get(i, j, al, be);
                            for ga in 0..2 {
                                t += a.get(i, 0, al, ga) * slope[ga];
                            }
                            let cur = ahat.get(i, j, al, be);
                            ahat.set(i, j, al, be, cur + t / m as f64);
                        }
                    }
                }
                let mean = [
                    vals.iter().map(|v| v[0]).sum::<f64>() / m as f64,
                    vals.iter().map(|v| v[1]).sum::<f64>() / m as f64,
                ];
                for (k, val) in vals.iter().enumerate() {
                    for ga in 0..2 {
                        chi_mid[(((j * 2 + be) * 2 + ga) * m) + k] = val[ga] - mean[ga];
                    }
                }
            }
        }

        LaminateReference {
            ahat,
            m,
            preset: preset.clone(),
            c,
            chi_mid,
        }
    }

    /// chi'(y1) of cell problem (j, beta) from the closed-form flux balance.
    pub fn corrector_slope(&self, j: usize, beta: usize, y1: f64) -> [f64; 2] {
        let a = self.preset.eval(y1, 0.0);
        let inv = inv2(a11_matrix(&a));
        let col = a1j_column(&a, j, beta);
        let cj = self.c[j][beta];
        matvec2(&inv, &[cj[0] - col[0], cj[1] - col[1]])
    }

    /// Mean-zero corrector of cell problem (j, beta) at y1, linear
    /// interpolation between panel midpoints (periodic).
    pub fn corrector(&self, j: usize, beta: usize, y1: f64) -> [f64; 2] {
        let m = self.m as f64;
        let t = y1.rem_euclid(1.0) * m - 0.5;
        let k0 = t.floor();
        let frac = t - k0;
        let ka = ((k0 as i64).rem_euclid(self.m as i64)) as usize;
        let kb = (ka + 1) % self.m;
        let mut out = [0.0; 2];
        for ga in 0..2 {
            let base = ((j * 2 + beta) * 2 + ga) * self.m;
            out[ga] = self.chi_mid[base + ka] * (1.0 - frac) + self.chi_mid[base + kb] * frac;
        }
        out
    }

    /// Flux fluctuation `b_{ij}^{ab}(y1) = a + a grad chi - ahat` along y1.
    pub fn b_tensor(&self, y1: f64) -> ElasticityTensor {
        let a = self.preset.eval(y1, 0.0);
        let mut out = ElasticityTensor::ZERO;
        for j in 0..2 {
            for be in 0..2 {
                let slope = self.corrector_slope(j, be, y1);
                for i in 0..2 {
                    for al in 0..2 {
                        let mut v = a.get(i, j, al, be) - self.ahat.get(i, j, al, be);
                        for ga in 0..2 {
                            v += a.get(i, 0, al, ga) * slope[ga];
                        }
                        out.set(i, j, al, be, v);
                    }
                }
            }
        }
        out
    }
}

/// Closed-form displacement fields with hand-written derivatives, for
/// manufactured-solution convergence studies.
pub struct ManufacturedSolution {
    pub name: &'static str,
    pub u: fn(f64, f64) -> [f64; 2],
    /// `grad(x)[j][beta] = d u^beta / d x_j`.
    pub grad: fn(f64, f64) -> [[f64; 2]; 2],
    /// `hess(x)[i][j][beta] = d^2 u^beta / d x_i d x_j`.
    pub hess: fn(f64, f64) -> [[[f64; 2]; 2]; 2],
}

/// `u = (sin(pi x1) sin(pi x2), 0)`: vanishes on the unit-square boundary.
pub fn manufactured_dirichlet() -> ManufacturedSolution {
    use std::f64::consts::PI;
    ManufacturedSolution {
        name: "sine_bubble",
        u: |x, y| [(PI * x).sin() * (PI * y).sin(), 0.0],
        grad: |x, y| {
            let (sx, cx) = ((PI * x).sin(), (PI * x).cos());
            let (sy, cy) = ((PI * y).sin(), (PI * y).cos());
            [[PI * cx * sy, 0.0], [PI * sx * cy, 0.0]]
        },
        hess: |x, y| {
            let (sx, cx) = ((PI * x).sin(), (PI * x).cos());
            let (sy, cy) = ((PI * y).sin(), (PI * y).cos());
            let p2 = PI * PI;
            [
                [[-p2 * sx * sy, 0.0], [p2 * cx * cy, 0.0]],
                [[p2 * cx * cy, 0.0], [-p2 * sx * sy, 0.0]],
            ]
        },
    }
}

/// `u = (sin(2 pi x1) sin(2 pi x2), cos(2 pi x1) cos(2 pi x2))`:
/// orthogonal to translations and to the centered rotation on the unit
/// square, so it is admissible as a traction-problem reference.
pub fn manufactured_neumann() -> ManufacturedSolution {
    use std::f64::consts::TAU;
    ManufacturedSolution {
        name: "trig_orthogonal",
        u: |x, y| {
            [
                (TAU * x).sin() * (TAU * y).sin(),
                (TAU * x).cos() * (TAU * y).cos(),
            ]
        },
        grad: |x, y| {
            let (sx, cx) = ((TAU * x).sin(), (TAU * x).cos());
            let (sy, cy) = ((TAU * y).sin(), (TAU * y).cos());
            [
                [TAU * cx * sy, -TAU * sx * cy],
                [TAU * sx * cy, -TAU * cx * sy],
            ]
        },
        hess: |x, y| {
            let (sx, cx) = ((TAU * x).sin(), (TAU * x).cos());
            let (sy, cy) = ((TAU * y).sin(), (TAU * y).cos());
            let t2 = TAU * TAU;
            [
                [
                    [-t2 * sx * sy, -t2 * cx * cy],
                    [t2 * cx * cy, t2 * sx * sy],
                ],
                [
                    [t2 * cx * cy, t2 * sx * sy],
                    [-t2 * sx * sy, -t2 * cx * cy],
                ],
            ]
        },
    }
}

/// Body force of the constant-coefficient operator on a manufactured field:
/// `F^alpha = -ahat_{ij}^{alpha beta} d^2 u^beta / dx_i dx_j`.
pub fn manufactured_body_force(
    ahat: &ElasticityTensor,
    ms: &ManufacturedSolution,
    x: f64,
    y: f64,
) -> [f64; 2] {
    let h = (ms.hess)(x, y);
    let mut f = [0.0; 2];
    for al in 0..2 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for be in 0..2 {
                    s += ahat.get(i, j, al, be) * h[i][j][be];
                }
            }
        }
        f[al] = -s;
    }
    f
}

/// Conormal flux `n_i ahat_{ij}^{alpha beta} d u^beta / dx_j`.
pub fn manufactured_conormal(
    ahat: &ElasticityTensor,
    ms: &ManufacturedSolution,
    x: f64,
    y: f64,
    normal: [f64; 2],
) -> [f64; 2] {
    let g = (ms.grad)(x, y);
    let mut out = [0.0; 2];
    for al in 0..2 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for be in 0..2 {
                    s += normal[i] * ahat.get(i, j, al, be) * g[j][be];
                }
            }
        }
        out[al] = s;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::Preset;

    fn harmonic_mean_mu(m: usize) -> f64 {
        // mu(t) = 2 + cos(2 pi t).
        let tau = std::f64::consts::TAU;
        let s: f64 = (0..m)
            .map(|k| 1.0 / (2.0 + (tau * (k as f64 + 0.5) / m as f64).cos()))
            .sum();
        (m as f64) / s
    }

    #[test]
    fn laminate_shear_is_harmonic_mean_and_transverse_is_arithmetic() {
        let p = Preset::Laminate {
            lambda0: 0.0,
            lambda_amp: 0.0,
            mu0: 2.0,
            mu_amp: 1.0,
        };
        let r = LaminateReference::new(&p, 8192);
        let harm = harmonic_mean_mu(1 << 16);
        // Shear flux through the layering direction homogenizes harmonically.
        assert!(
            (r.ahat.get(0, 1, 1, 0) - harm).abs() < 1e-8,
            "shear {} vs harmonic {}",
            r.ahat.get(0, 1, 1, 0),
            harm
        );
        assert!((r.ahat.get(1, 0, 0, 1) - harm).abs() < 1e-8);
        // Transverse normal response averages arithmetically: 2 * mean(mu) = 4.
        assert!((r.ahat.get(1, 1, 1, 1) - 4.0).abs() < 1e-10);
    }

    #[test]
    fn laminate_reference_degenerates_to_input_for_constant_profile() {
        let p = Preset::Laminate {
            lambda0: 1.0,
            lambda_amp: 0.0,
            mu0: 1.5,
            mu_amp: 0.0,
        };
        let r = LaminateReference::new(&p, 512);
        let expect = p.eval(0.3, 0.9);
        assert!(r.ahat.max_diff(&expect) < 1e-12);
        let chi = r.corrector(0, 0, 0.37);
        assert!(chi[0].abs() < 1e-12 && chi[1].abs() < 1e-12);
    }

    #[test]
    fn laminate_corrector_is_periodic_and_mean_zero() {
        let p = Preset::Laminate {
            lambda0: 0.5,
            lambda_amp: 0.25,
            mu0: 2.0,
            mu_amp: 1.0,
        };
        let m = 8192;
        let r = LaminateReference::new(&p, m);
        for j in 0..2 {
            for be in 0..2 {
                let mean: [f64; 2] = {
                    let mut acc = [0.0; 2];
                    for k in 0..m {
                        let v = r.corrector(j, be, (k as f64 + 0.5) / m as f64);
                        acc[0] += v[0];
                        acc[1] += v[1];
                    }
                    [acc[0] / m as f64, acc[1] / m as f64]
                };
                assert!(mean[0].abs() < 1e-10 && mean[1].abs() < 1e-10);
                let a = r.corrector(j, be, 0.0);
                let b = r.corrector(j, be, 1.0);
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laminate_b_field_is_mean_zero_with_constant_first_row() {
        // d/dy1 b_{1j} = 0 for a laminate, so b_{1j} must be constant (= 0).
        let p = Preset::Laminate {
            lambda0: 0.0,
            lambda_amp: 0.0,
            mu0: 2.0,
            mu_amp: 1.0,
        };
        let m = 8192;
        let r = LaminateReference::new(&p, m);
        let mut mean = ElasticityTensor::ZERO;
        for k in 0..m {
            let b = r.b_tensor((k as f64 + 0.5) / m as f64);
            mean = mean.add(&b);
            for j in 0..2 {
                for al in 0..2 {
                    for be in 0..2 {
                        assert!(
                            b.get(0, j, al, be).abs() < 1e-9,
                            "b_1j component {:.3e} should vanish",
                            b.get(0, j, al, be)
                        );
                    }
                }
            }
        }
        mean = mean.scale(1.0 / m as f64);
        assert!(mean.max_diff(&ElasticityTensor::ZERO) < 1e-9);
    }

    #[test]
    fn manufactured_hessians_match_finite_differences() {
        let eps = 1e-5;
        for ms in [manufactured_dirichlet(), manufactured_neumann()] {
            for &(x, y) in &[(0.31, 0.47), (0.72, 0.11), (0.5, 0.9)] {
                let h = (ms.hess)(x, y);
                for be in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            let shift = |s: f64, t: f64| {
                                let mut p = [x, y];
                                p[i] += s * eps;
                                p[j] += t * eps;
                                (ms.u)(p[0], p[1])[be]
                            };
                            let fd = (shift(1.0, 1.0) - shift(1.0, -1.0) - shift(-1.0, 1.0)
                                + shift(-1.0, -1.0))
                                / (4.0 * eps * eps);
                            assert!(
                                (fd - h[i][j][be]).abs() < 1e-4,
                                "{}: hess[{i}][{j}][{be}] fd={fd} hand={}",
                                ms.name,
                                h[i][j][be]
                            );
                        }
                    }
                }
                let g = (ms.grad)(x, y);
                for be in 0..2 {
                    for j in 0..2 {
                        let mut pp = [x, y];
                        pp[j] += eps;
                        let mut pm = [x, y];
                        pm[j] -= eps;
                        let fd = ((ms.u)(pp[0], pp[1])[be] - (ms.u)(pm[0], pm[1])[be]) / (2.0 * eps);
                        assert!((fd - g[j][be]).abs() < 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn neumann_reference_is_orthogonal_to_rigid_fields() {
        let ms = manufactured_neumann();
        let m = 512;
        let mut t = [0.0f64; 2];
        let mut rot = 0.0f64;
        for ky in 0..m {
            for kx in 0..m {
                let x = (kx as f64 + 0.5) / m as f64;
                let y = (ky as f64 + 0.5) / m as f64;
                let u = (ms.u)(x, y);
                t[0] += u[0];
                t[1] += u[1];
                rot += -(y - 0.5) * u[0] + (x - 0.5) * u[1];
            }
        }
        let scale = (m * m) as f64;
        assert!(t[0].abs() / scale < 1e-12);
        assert!(t[1].abs() / scale < 1e-12);
        assert!(rot.abs() / scale < 1e-12);
    }
}
