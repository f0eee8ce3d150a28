use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mesh;
use crate::{Error, Result, Vec2};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Domain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Domain {
        Domain { x0, x1, y0, y1 }
    }

    pub fn unit() -> Domain {
        Domain::new(0.0, 1.0, 0.0, 1.0)
    }

    fn check(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite();
        if !(ok(self.x0) && ok(self.x1) && ok(self.y0) && ok(self.y1)) || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(Error::InvalidGeometry(format!("degenerate domain {self:?}")));
        }
        Ok(())
    }
}

fn grid_vertices(nx: usize, ny: usize, d: Domain) -> Vec<Vec2> {
    let hx = (d.x1 - d.x0) / nx as f64;
    let hy = (d.y1 - d.y0) / ny as f64;
    let mut v = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Pin the far sides to the exact domain bounds.
            let x = if i == nx { d.x1 } else { d.x0 + i as f64 * hx };
            let y = if j == ny { d.y1 } else { d.y0 + j as f64 * hy };
            v.push(Vec2::new(x, y));
        }
    }
    v
}

fn grid_cells(nx: usize, ny: usize) -> Vec<Vec<usize>> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    cells
}

/// `nx × ny` rectangles covering `domain`, cell points at centroids.
pub fn build_cartesian(nx: usize, ny: usize, domain: Domain) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidGeometry(format!("grid size {nx}x{ny}")));
    }
    domain.check()?;
    Mesh::new(grid_vertices(nx, ny, domain), grid_cells(nx, ny), None)
}

/// A cartesian grid whose interior vertices are moved by at most
/// `amplitude * min(hx, hy)`, deterministically from `seed`.
///
/// If some cell fails to be star-shaped with respect to its centroid the
/// whole displacement field is halved and the mesh rebuilt.
pub fn build_perturbed_quads(nx: usize, ny: usize, domain: Domain, amplitude: f64, seed: u64) -> Result<Mesh> {
    if !(0.0..0.3).contains(&amplitude) {
        return Err(Error::Parameter(format!("perturbation amplitude {amplitude} not in [0, 0.3)")));
    }
    let base = build_cartesian(nx, ny, domain)?;
    if amplitude == 0.0 {
        return Ok(base);
    }
    let h = ((domain.x1 - domain.x0) / nx as f64).min((domain.y1 - domain.y0) / ny as f64);
    let radius = amplitude * h / 2f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift = vec![Vec2::zeros(); (nx + 1) * (ny + 1)];
    for j in 1..ny {
        for i in 1..nx {
            let dx: f64 = rng.gen_range(-1.0..=1.0);
            let dy: f64 = rng.gen_range(-1.0..=1.0);
            shift[j * (nx + 1) + i] = Vec2::new(dx, dy) * radius;
        }
    }
    let grid = grid_vertices(nx, ny, domain);
    let mut damping = 1.0;
    for _ in 0..30 {
        let verts = grid.iter().zip(&shift).map(|(v, s)| v + s * damping).collect();
        if let Ok(m) = Mesh::new(verts, grid_cells(nx, ny), None) {
            return Ok(m);
        }
        damping *= 0.5;
    }
    Ok(base)
}
