//! The scale-eps smoothing operator and the boundary cutoff.
//!
//! The mollifier profile is the standard bump supported in the ball of
//! radius 1/4, discretized on the solve mesh and normalized to unit mass.
//! Near the boundary the integrand is extended by even reflection; the
//! cutoff keeps the two-scale machinery away from the boundary, so the
//! extension choice never feeds the estimates (it is still exercised by the
//! contraction tests).

use crate::error::{Error, Result};
use crate::mesh::DomainMesh;

/// Discrete convolution kernel at scale `eps` on a mesh of spacing `h`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub eps: f64,
    pub h: f64,
    /// Offsets run over `[-radius, radius]^2`.
    pub radius: usize,
    /// `(2 radius + 1)^2` weights summing to one.
    pub weights: Vec<f64>,
}

/// `exp(-1 / (1 - (4 s)^2))` for `s < 1/4`, else zero.
fn bump(s: f64) -> f64 {
    let t = 4.0 * s;
    if t * t >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

/// Builds the kernel. Refuses when `h > eps / 8` (under-resolved support).
pub fn mollifier(eps: f64, h: f64) -> Result<Mollifier> {
    if h > eps / 8.0 + 1e-15 {
        return Err(Error::UnderResolved { h, eps });
    }
    let radius = (eps / (4.0 * h)).ceil() as usize;
    let side = 2 * radius + 1;
    let mut weights = vec![0.0; side * side];
    let mut sum = 0.0;
    for dy in 0..side {
        for dx in 0..side {
            let ox = dx as f64 - radius as f64;
            let oy = dy as f64 - radius as f64;
            let s = (ox * ox + oy * oy).sqrt() * h / eps;
            let w = bump(s);
            weights[dy * side + dx] = w;
            sum += w;
        }
    }
    for w in &mut weights {
        *w /= sum;
    }
    // Push residual rounding into the center weight so the sum is exactly 1.
    let resid: f64 = weights.iter().sum::<f64>() - 1.0;
    weights[radius * side + radius] -= resid;
    Ok(Mollifier {
        eps,
        h,
        radius,
        weights,
    })
}

impl Mollifier {
    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dx,dy,weight")?;
        let side = 2 * self.radius + 1;
        for dy in 0..side {
            for dx in 0..side {
                writeln!(
                    w,
                    "{},{},{:.12e}",
                    dx as i64 - self.radius as i64,
                    dy as i64 - self.radius as i64,
                    self.weights[dy * side + dx]
                )?;
            }
        }
        Ok(())
    }
}

#[inline]
fn reflect(i: i64, n: i64) -> usize {
    // Even reflection across the boundary nodes 0 and n-1.
    let mut k = i;
    if k < 0 {
        k = -k;
    }
    if k >= n {
        k = 2 * (n - 1) - k;
    }
    debug_assert!(k >= 0 && k < n);
    k as usize
}

/// Applies the kernel to a multi-component nodal field on `mesh`, extending
/// by even reflection across the boundary.
pub fn mollify(m: &Mollifier, mesh: &DomainMesh, data: &[f64], comps: usize) -> Vec<f64> {
    let nx = (mesh.nx + 1) as i64;
    let ny = (mesh.ny + 1) as i64;
    assert_eq!(data.len(), (nx * ny) as usize * comps);
    let r = m.radius as i64;
    let side = (2 * r + 1) as usize;
    let mut out = vec![0.0; data.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let mut acc = vec![0.0f64; comps];
            for dy in -r..=r {
                let sy = reflect(iy + dy, ny);
                let wrow = ((dy + r) as usize) * side;
                for dx in -r..=r {
                    let w = m.weights[wrow + (dx + r) as usize];
                    if w == 0.0 {
                        continue;
                    }
                    let sx = reflect(ix + dx, nx);
                    let src = (sy * nx as usize + sx) * comps;
                    for c in 0..comps {
                        acc[c] += w * data[src + c];
                    }
                }
            }
            let dst = ((iy * nx + ix) as usize) * comps;
            out[dst..dst + comps].copy_from_slice(&acc);
        }
    }
    out
}

/// Applies the kernel twice (the squared smoothing operator).
pub fn mollify_twice(m: &Mollifier, mesh: &DomainMesh, data: &[f64], comps: usize) -> Vec<f64> {
    let once = mollify(m, mesh, data, comps);
    mollify(m, mesh, &once, comps)
}

/// Scalar cutoff that vanishes within distance `3 eps` of the boundary and
/// equals one beyond `4 eps`, ramping linearly in the boundary distance.
#[derive(Debug, Clone)]
pub struct CutoffField {
    pub eps: f64,
    pub values: Vec<f64>,
}

/// Builds the cutoff. Refuses when the band start `3 eps` reaches the
/// inradius (the cutoff would vanish identically).
pub fn cutoff(mesh: &DomainMesh, eps: f64) -> Result<CutoffField> {
    if mesh.h > eps / 8.0 + 1e-15 {
        return Err(Error::UnderResolved { h: mesh.h, eps });
    }
    let inradius = mesh.inradius();
    if 3.0 * eps >= inradius {
        return Err(Error::CutoffTooLarge { eps, inradius });
    }
    let values = mesh
        .delta
        .iter()
        .map(|&d| ((d - 3.0 * eps) / eps).clamp(0.0, 1.0))
        .collect();
    Ok(CutoffField { eps, values })
}

impl CutoffField {
    /// Max discrete gradient magnitude by one-sided differences on the mesh.
    pub fn max_gradient(&self, mesh: &DomainMesh) -> f64 {
        let nx = mesh.nx + 1;
        let ny = mesh.ny + 1;
        let mut max_g: f64 = 0.0;
        for iy in 0..ny {
            for ix in 0..nx {
                let id = iy * nx + ix;
                if ix + 1 < nx {
                    max_g = max_g.max(((self.values[id + 1] - self.values[id]) / mesh.h).abs());
                }
                if iy + 1 < ny {
                    max_g = max_g.max(((self.values[id + nx] - self.values[id]) / mesh.h).abs());
                }
            }
        }
        max_g
    }
}
