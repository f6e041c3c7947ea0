//! 1-periodic elasticity coefficient fields and their structure audits.
//!
//! Fields are isotropic with Lame profiles `lambda(y) >= 0`, `mu(y) >= mu_min > 0`
//! sampled on the unit cell at the 2x2 Gauss points of an N x N element grid,
//! matching the quadrature used by the cell assembly. The closed-form profile
//! stays available for pointwise evaluation, e.g. at `x / eps` on a domain mesh.

use crate::error::{Error, Result};
use crate::tensor::ElasticityTensor;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Max allowed deviation in the symmetry audit.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Hard floor for the shear profile `mu(y)`.
pub const MU_MIN: f64 = 1e-6;

/// Closed-form Lame-profile presets on the unit cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Preset {
    ConstantIsotropic {
        lambda: f64,
        mu: f64,
    },
    /// `lambda(y) = lambda0 + lambda_amp*sin(2 pi y1) sin(2 pi y2)`, same shape for mu.
    OscillatoryIsotropic {
        lambda0: f64,
        lambda_amp: f64,
        mu0: f64,
        mu_amp: f64,
    },
    /// Depends on y1 only: `mu(y1) = mu0 + mu_amp*cos(2 pi y1)`, same shape for lambda.
    Laminate {
        lambda0: f64,
        lambda_amp: f64,
        mu0: f64,
        mu_amp: f64,
    },
    /// `mu(y) = mu0 + mu_amp * s(y1) s(y2)` with `s(t) = tanh(sin(2 pi t)/width)`:
    /// a checkerboard contrast smoothed over bands of relative width `width`.
    SmoothedCheckerboard {
        lambda0: f64,
        mu0: f64,
        mu_amp: f64,
        width: f64,
    },
}

impl Preset {
    /// Lame moduli at a point of the unit cell (arguments taken mod 1).
    pub fn lame(&self, y1: f64, y2: f64) -> (f64, f64) {
        let tau = std::f64::consts::TAU;
        match *self {
            Preset::ConstantIsotropic { lambda, mu } => (lambda, mu),
            Preset::OscillatoryIsotropic {
                lambda0,
                lambda_amp,
                mu0,
                mu_amp,
            } => {
                let s = (tau * y1).sin() * (tau * y2).sin();
                (lambda0 + lambda_amp * s, mu0 + mu_amp * s)
            }
            Preset::Laminate {
                lambda0,
                lambda_amp,
                mu0,
                mu_amp,
            } => {
                let c = (tau * y1).cos();
                (lambda0 + lambda_amp * c, mu0 + mu_amp * c)
            }
            Preset::SmoothedCheckerboard {
                lambda0,
                mu0,
                mu_amp,
                width,
            } => {
                let s = |t: f64| ((tau * t).sin() / width).tanh();
                (lambda0, mu0 + mu_amp * s(y1) * s(y2))
            }
        }
    }

    /// Tensor value at a point (periodic in both arguments).
    pub fn eval(&self, y1: f64, y2: f64) -> ElasticityTensor {
        let (lambda, mu) = self.lame(y1, y2);
        ElasticityTensor::isotropic(lambda, mu)
    }

    /// Preset from a name and a parameter map, with defaults per preset.
    pub fn from_params(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        match name {
            "constant_isotropic" => Ok(Preset::ConstantIsotropic {
                lambda: get("lambda", 1.0),
                mu: get("mu", 1.0),
            }),
            "oscillatory_isotropic" => Ok(Preset::OscillatoryIsotropic {
                lambda0: get("lambda0", 2.0),
                lambda_amp: get("lambda_amp", 1.0),
                mu0: get("mu0", 2.0),
                mu_amp: get("mu_amp", 1.0),
            }),
            "laminate" => Ok(Preset::Laminate {
                lambda0: get("lambda0", 0.0),
                lambda_amp: get("lambda_amp", 0.0),
                mu0: get("mu0", 2.0),
                mu_amp: get("mu_amp", 1.0),
            }),
            "smoothed_checkerboard" => {
                let width = get("width", 0.25);
                if width <= 0.0 {
                    return Err(Error::InvalidConfig {
                        field: "preset.params.width".into(),
                        message: format!("smoothing width must be positive, got {width}"),
                    });
                }
                Ok(Preset::SmoothedCheckerboard {
                    lambda0: get("lambda0", 1.0),
                    mu0: get("mu0", 2.0),
                    mu_amp: get("mu_amp", 1.0),
                    width,
                })
            }
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::ConstantIsotropic { .. } => "constant_isotropic",
            Preset::OscillatoryIsotropic { .. } => "oscillatory_isotropic",
            Preset::Laminate { .. } => "laminate",
            Preset::SmoothedCheckerboard { .. } => "smoothed_checkerboard",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Preset::ConstantIsotropic { .. })
    }
}

/// Sampled 1-periodic elasticity tensor on the unit cell.
///
/// `samples` holds the tensor at the four Gauss points of each of the N x N
/// cell elements, ordered element-major (ey, ex) then quadrature point.
#[derive(Debug, Clone)]
pub struct PeriodicTensorField {
    pub preset: Preset,
    pub n: usize,
    pub samples: Vec<ElasticityTensor>,
    /// Coordinates of the quadrature points, same ordering as `samples`.
    pub sample_points: Vec<(f64, f64)>,
    kappa: (f64, f64),
}

/// Locations of the 2x2 Gauss points inside an element `[0,h] x [0,h]`,
/// as offsets in units of h.
pub fn gauss_offsets() -> [(f64, f64); 4] {
    let g = 0.5 / 3.0f64.sqrt();
    [
        (0.5 - g, 0.5 - g),
        (0.5 + g, 0.5 - g),
        (0.5 - g, 0.5 + g),
        (0.5 + g, 0.5 + g),
    ]
}

/// Builds a field from a preset at cell resolution `n`, running both the
/// profile validation and the symmetry/ellipticity audits.
pub fn make_preset(preset: Preset, n: usize) -> Result<PeriodicTensorField> {
    assert!(n >= 2, "cell resolution must be at least 2");
    let h = 1.0 / n as f64;
    let offs = gauss_offsets();
    let mut samples = Vec::with_capacity(n * n * 4);
    let mut sample_points = Vec::with_capacity(n * n * 4);
    for ey in 0..n {
        for ex in 0..n {
            for (ox, oy) in offs {
                let y1 = (ex as f64 + ox) * h;
                let y2 = (ey as f64 + oy) * h;
                let (lambda, mu) = preset.lame(y1, y2);
                if mu < MU_MIN {
                    return Err(Error::InvalidProfile {
                        reason: format!("mu below floor {MU_MIN}"),
                        y1,
                        y2,
                        value: mu,
                    });
                }
                if lambda < 0.0 {
                    return Err(Error::InvalidProfile {
                        reason: "lambda negative".to_string(),
                        y1,
                        y2,
                        value: lambda,
                    });
                }
                samples.push(ElasticityTensor::isotropic(lambda, mu));
                sample_points.push((y1, y2));
            }
        }
    }
    let mut field = PeriodicTensorField {
        preset,
        n,
        samples,
        sample_points,
        kappa: (0.0, 0.0),
    };
    let report = verify_symmetries(&field);
    if !report.pass {
        return Err(Error::SymmetryAudit {
            deviation: report.max_major.max(report.max_minor),
            tolerance: SYMMETRY_TOL,
        });
    }
    field.kappa = ellipticity_bounds(&field)?;
    Ok(field)
}

/// Builds a field directly from raw samples, skipping the audits.
/// Intended for audit tests that inject defects.
pub fn from_raw_samples(
    preset: Preset,
    n: usize,
    samples: Vec<ElasticityTensor>,
) -> PeriodicTensorField {
    let h = 1.0 / n as f64;
    let offs = gauss_offsets();
    let mut sample_points = Vec::with_capacity(n * n * 4);
    for ey in 0..n {
        for ex in 0..n {
            for (ox, oy) in offs {
                sample_points.push(((ex as f64 + ox) * h, (ey as f64 + oy) * h));
            }
        }
    }
    assert_eq!(samples.len(), sample_points.len());
    PeriodicTensorField {
        preset,
        n,
        samples,
        sample_points,
        kappa: (0.0, 0.0),
    }
}

impl PeriodicTensorField {
    /// Tensor at an arbitrary point, from the closed-form profile.
    #[inline]
    pub fn eval(&self, y1: f64, y2: f64) -> ElasticityTensor {
        self.preset.eval(y1, y2)
    }

    /// Ellipticity bounds computed at construction.
    pub fn kappa(&self) -> (f64, f64) {
        self.kappa
    }

    /// Sample index for element `(ex, ey)` and quadrature point `q`.
    #[inline]
    pub fn sample(&self, ex: usize, ey: usize, q: usize) -> &ElasticityTensor {
        &self.samples[(ey * self.n + ex) * 4 + q]
    }

    /// Average of the samples: the Voigt (arithmetic-mean) tensor.
    pub fn cell_average(&self) -> ElasticityTensor {
        let mut acc = ElasticityTensor::ZERO;
        for s in &self.samples {
            acc = acc.add(s);
        }
        acc.scale(1.0 / self.samples.len() as f64)
    }

    /// Writes the flattened samples as CSV (`i,j,alpha,beta,y1,y2,value`).
    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,alpha,beta,y1,y2,value")?;
        for (s, &(y1, y2)) in self.samples.iter().zip(&self.sample_points) {
            for i in 0..2 {
                for j in 0..2 {
                    for al in 0..2 {
                        for be in 0..2 {
                            writeln!(
                                w,
                                "{},{},{},{},{:.12e},{:.12e},{:.12e}",
                                i + 1,
                                j + 1,
                                al + 1,
                                be + 1,
                                y1,
                                y2,
                                s.get(i, j, al, be)
                            )?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Min/max eigenvalues of the symmetric quadratic form over all sample points.
/// Fails if the field is not elliptic (`kappa1 <= 0`).
pub fn ellipticity_bounds(field: &PeriodicTensorField) -> Result<(f64, f64)> {
    let mut k1 = f64::INFINITY;
    let mut k2 = f64::NEG_INFINITY;
    for s in &field.samples {
        let (lo, hi) = s.symmetric_eigen_bounds();
        k1 = k1.min(lo);
        k2 = k2.max(hi);
    }
    if k1 <= 0.0 {
        return Err(Error::NonElliptic { kappa1: k1 });
    }
    Ok((k1, k2))
}

/// Result of the pointwise symmetry audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// Max over samples of `|a_{ij}^{ab} - a_{ji}^{ba}|`.
    pub max_major: f64,
    /// Max over samples of `|a_{ij}^{ab} - a_{aj}^{ib}|`.
    pub max_minor: f64,
    pub pass: bool,
}

pub fn verify_symmetries(field: &PeriodicTensorField) -> SymmetryReport {
    let mut max_major = 0.0f64;
    let mut max_minor = 0.0f64;
    for s in &field.samples {
        let (major, minor) = s.symmetry_deviation();
        max_major = max_major.max(major);
        max_minor = max_minor.max(minor);
    }
    SymmetryReport {
        max_major,
        max_minor,
        pass: max_major <= SYMMETRY_TOL && max_minor <= SYMMETRY_TOL,
    }
}
