//! Structured quadrilateral meshes of the computational domains, with exact
//! boundary distances and boundary tagging.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The three domain geometries used by the studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// Omega = (0,1)^2.
    UnitSquare,
    /// Flat-boundary half domain (-1,1) x (0,1); the bottom edge is the
    /// distinguished flat piece.
    HalfDomain,
    /// Unit-square geometry reserved for interior sub-region studies.
    InteriorBallProxy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Interior,
    /// The distinguished flat boundary piece of the half domain.
    Delta,
    /// Every other boundary node.
    Outer,
}

/// Uniform quadrilateral mesh with spacing `h` on a rectangle.
#[derive(Debug, Clone)]
pub struct DomainMesh {
    pub kind: DomainKind,
    pub h: f64,
    /// Elements per axis.
    pub nx: usize,
    pub ny: usize,
    /// Lower-left corner.
    pub x0: f64,
    pub y0: f64,
    pub tags: Vec<BoundaryTag>,
    /// Exact distance to the domain boundary, per node.
    pub delta: Vec<f64>,
}

fn is_power_of_two_reciprocal(h: f64) -> bool {
    if h <= 0.0 || h > 0.5 {
        return false;
    }
    let k = (1.0 / h).round();
    (1.0 / h - k).abs() < 1e-12 && (k as u64).is_power_of_two()
}

/// Builds a mesh of the given kind. `h` must be a reciprocal power of two.
pub fn build_domain(kind: DomainKind, h: f64) -> Result<DomainMesh> {
    if !is_power_of_two_reciprocal(h) {
        return Err(Error::InvalidConfig {
            field: "h".into(),
            message: format!("mesh spacing must be 2^-k, got {h}"),
        });
    }
    let per_unit = (1.0 / h).round() as usize;
    let (nx, ny, x0, y0) = match kind {
        DomainKind::UnitSquare | DomainKind::InteriorBallProxy => (per_unit, per_unit, 0.0, 0.0),
        DomainKind::HalfDomain => (2 * per_unit, per_unit, -1.0, 0.0),
    };
    let nodes = (nx + 1) * (ny + 1);
    let mut tags = vec![BoundaryTag::Interior; nodes];
    let mut delta = vec![0.0; nodes];
    let width = nx as f64 * h;
    let height = ny as f64 * h;
    for iy in 0..=ny {
        for ix in 0..=nx {
            let id = iy * (nx + 1) + ix;
            let x = x0 + ix as f64 * h;
            let y = y0 + iy as f64 * h;
            let dx = (x - x0).min(x0 + width - x);
            let dy = (y - y0).min(y0 + height - y);
            delta[id] = dx.min(dy);
            let on_boundary = ix == 0 || ix == nx || iy == 0 || iy == ny;
            if on_boundary {
                tags[id] = match kind {
                    DomainKind::HalfDomain if iy == 0 => BoundaryTag::Delta,
                    _ => BoundaryTag::Outer,
                };
            }
        }
    }
    Ok(DomainMesh {
        kind,
        h,
        nx,
        ny,
        x0,
        y0,
        tags,
        delta,
    })
}

impl DomainMesh {
    #[inline]
    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn node_id(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    #[inline]
    pub fn node_xy(&self, id: usize) -> (f64, f64) {
        let ix = id % (self.nx + 1);
        let iy = id / (self.nx + 1);
        (self.x0 + ix as f64 * self.h, self.y0 + iy as f64 * self.h)
    }

    /// Corner node ids of element `(ex, ey)` in the local Q1 order.
    #[inline]
    pub fn element_nodes(&self, ex: usize, ey: usize) -> [usize; 4] {
        let a = self.node_id(ex, ey);
        let b = self.node_id(ex + 1, ey);
        let c = self.node_id(ex + 1, ey + 1);
        let d = self.node_id(ex, ey + 1);
        [a, b, c, d]
    }

    #[inline]
    pub fn element_center(&self, ex: usize, ey: usize) -> (f64, f64) {
        (
            self.x0 + (ex as f64 + 0.5) * self.h,
            self.y0 + (ey as f64 + 0.5) * self.h,
        )
    }

    /// Exact distance from a point to the domain boundary.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        let width = self.nx as f64 * self.h;
        let height = self.ny as f64 * self.h;
        let dx = (x - self.x0).min(self.x0 + width - x);
        let dy = (y - self.y0).min(self.y0 + height - y);
        dx.min(dy)
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        0.5 * (self.nx as f64 * self.h).min(self.ny as f64 * self.h)
    }

    pub fn diameter(&self) -> f64 {
        let w = self.nx as f64 * self.h;
        let hgt = self.ny as f64 * self.h;
        (w * w + hgt * hgt).sqrt()
    }

    pub fn area(&self) -> f64 {
        (self.nx as f64 * self.h) * (self.ny as f64 * self.h)
    }

    pub fn centroid(&self) -> (f64, f64) {
        (
            self.x0 + 0.5 * self.nx as f64 * self.h,
            self.y0 + 0.5 * self.ny as f64 * self.h,
        )
    }

    pub fn is_boundary(&self, id: usize) -> bool {
        self.tags[id] != BoundaryTag::Interior
    }
}
