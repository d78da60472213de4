//! Node roles and closure rules for the elliptic solves.

use crate::error::{GlueError, Result};
use crate::geometry::inversion;
use crate::grid::ChartGrid;
use crate::linalg::{mat_vec, Mat3, Vec3};
use crate::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    /// Discretized equation.
    Active,
    /// Value fixed by the boundary data.
    Dirichlet,
    /// Value slaved to the reflection across `r = 1`.
    Ghost,
    /// Not referenced by any stencil; held at zero.
    Unused,
}

/// How the two solves close the truncated domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPolicy {
    /// Decay order of the vector potential at `y -> 0`; the truncated
    /// boundary row is set to zero, the exponent is informational.
    pub vector_decay: f64,
    /// Decay order of the conformal factor perturbation.
    pub scalar_decay: f64,
    /// Use the inversion reflection across `r = 1` instead of an inner truncation.
    pub symmetric: bool,
}

impl Default for BoundaryPolicy {
    fn default() -> Self {
        BoundaryPolicy { vector_decay: 2.0, scalar_decay: 1.0, symmetric: false }
    }
}

/// A ghost node and the trilinear stencil at its mirror image.
#[derive(Clone, Debug, PartialEq)]
pub struct GhostClosure {
    pub node: usize,
    pub stencil: [(usize, f64); 8],
    /// Differential of the inversion at the mirror point, mapping vectors back.
    pub jacobian: Mat3,
}

/// Role of every grid node plus the ghost closures.
#[derive(Clone, Debug)]
pub struct SolveDomain {
    grid: ChartGrid,
    roles: Vec<NodeRole>,
    ghosts: Vec<GhostClosure>,
    active: Vec<usize>,
}

/// Offsets reached by the composite vector stencil (and the compact scalar one).
fn stencil_offsets() -> Vec<[isize; 3]> {
    let mut v = Vec::new();
    for a in -2isize..=2 {
        for b in -2isize..=2 {
            for c in -2isize..=2 {
                let l1 = a.abs() + b.abs() + c.abs();
                if l1 > 0 && l1 <= 2 {
                    v.push([a, b, c]);
                }
            }
        }
    }
    v
}

impl SolveDomain {
    /// All interior nodes active, box faces Dirichlet.
    pub fn box_interior(grid: ChartGrid) -> Self {
        let roles = (0..grid.len())
            .map(|n| if grid.is_face(grid.ijk(n)) { NodeRole::Dirichlet } else { NodeRole::Active })
            .collect();
        SolveDomain::from_roles(grid, roles, Vec::new())
    }

    /// Half-annulus `r_in <= r <= r_out`; with `symmetric` the inner edge is
    /// `r = 1` and nodes below it are reflected through the inversion.
    pub fn annulus(grid: ChartGrid, r_in: f64, r_out: f64, symmetric: bool) -> Result<Self> {
        let inner = if symmetric { 1.0 } else { r_in };
        let mut roles: Vec<NodeRole> = (0..grid.len())
            .map(|n| {
                let i = grid.ijk(n);
                let p = grid.point_ijk(i);
                let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                if grid.is_face(i) || r > r_out {
                    NodeRole::Dirichlet
                } else if r >= inner {
                    NodeRole::Active
                } else if symmetric {
                    NodeRole::Unused
                } else {
                    NodeRole::Dirichlet
                }
            })
            .collect();
        let mut ghosts = Vec::new();
        if symmetric {
            let offs = stencil_offsets();
            let mut queue: Vec<usize> = Vec::new();
            for n in 0..grid.len() {
                if roles[n] != NodeRole::Active {
                    continue;
                }
                let i = grid.ijk(n);
                for o in &offs {
                    if let Some(m) = grid.offset(i, *o) {
                        if roles[m] == NodeRole::Unused {
                            roles[m] = NodeRole::Ghost;
                            queue.push(m);
                        }
                    }
                }
            }
            while let Some(m) = queue.pop() {
                let p = grid.point(m);
                let (q, _) = inversion(&p)?;
                let stencil = grid.trilinear_weights(&q).map_err(|_| {
                    GlueError::Parameter(format!("mirror of ghost node {m} leaves the grid"))
                })?;
                let (_, jacobian) = inversion(&q)?;
                for (k, _) in stencil.iter() {
                    if roles[*k] == NodeRole::Unused {
                        roles[*k] = NodeRole::Ghost;
                        queue.push(*k);
                    }
                }
                ghosts.push(GhostClosure { node: m, stencil, jacobian });
            }
            ghosts.sort_by_key(|g| g.node);
        }
        Ok(SolveDomain::from_roles(grid, roles, ghosts))
    }

    fn from_roles(grid: ChartGrid, roles: Vec<NodeRole>, ghosts: Vec<GhostClosure>) -> Self {
        let active = (0..grid.len()).filter(|&n| roles[n] == NodeRole::Active).collect();
        SolveDomain { grid, roles, ghosts, active }
    }

    #[inline]
    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    #[inline]
    pub fn role(&self, n: usize) -> NodeRole {
        self.roles[n]
    }

    pub fn roles(&self) -> &[NodeRole] {
        &self.roles
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn ghosts(&self) -> &[GhostClosure] {
        &self.ghosts
    }

    pub fn active_mask(&self) -> Vec<bool> {
        self.roles.iter().map(|r| *r == NodeRole::Active).collect()
    }

    /// Overwrite ghost values of a scalar array from their mirror images.
    ///
    /// Ghost stencils may reference other ghosts, so this sweeps until the
    /// values settle; the reflection is a contraction toward `r = 1`.
    pub fn fill_scalar_ghosts(&self, u: &mut [f64]) {
        for _ in 0..50 {
            let mut change = 0.0f64;
            for g in &self.ghosts {
                let v: f64 = g.stencil.iter().map(|(k, w)| w * u[*k]).sum();
                change = change.max((v - u[g.node]).abs());
                u[g.node] = v;
            }
            if change <= 1e-15 * (1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
                break;
            }
        }
    }

    /// Vector counterpart of [`fill_scalar_ghosts`](Self::fill_scalar_ghosts).
    pub fn fill_vector_ghosts(&self, x: &mut [Vec3]) {
        for _ in 0..50 {
            let mut change = 0.0f64;
            for g in &self.ghosts {
                let mut v = [0.0; 3];
                for (k, w) in g.stencil.iter() {
                    for c in 0..3 {
                        v[c] += w * x[*k][c];
                    }
                }
                let v = mat_vec(&g.jacobian, &v);
                for c in 0..3 {
                    change = change.max((v[c] - x[g.node][c]).abs());
                }
                x[g.node] = v;
            }
            if change <= 1e-15 {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_roles() {
        let grid = ChartGrid::covering(0.5, 4.0, 4.0, 0.25).unwrap();
        let full = SolveDomain::annulus(grid, 0.3, 3.5, false).unwrap();
        let sym = SolveDomain::annulus(grid, 0.3, 3.5, true).unwrap();
        for n in 0..grid.len() {
            let p = grid.point(n);
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            if r < 0.3 {
                assert_eq!(full.role(n), NodeRole::Dirichlet);
            }
            if r < 1.0 {
                assert_ne!(sym.role(n), NodeRole::Active);
            }
        }
        assert!(!sym.ghosts().is_empty());
        assert!(sym.ghosts().iter().all(|g| sym.role(g.node) == NodeRole::Ghost));
    }

    #[test]
    fn ghost_fill_reproduces_invariant_function() {
        let grid = ChartGrid::covering(0.25, 3.0, 3.0, 0.125).unwrap();
        let dom = SolveDomain::annulus(grid, 0.1, 2.8, true).unwrap();
        // y / r is inversion invariant; trilinear error only.
        let f = |p: Vec3| p[0] / (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let mut u: Vec<f64> = (0..grid.len()).map(|n| if dom.role(n) == NodeRole::Ghost { 0.0 } else { f(grid.point(n)) }).collect();
        dom.fill_scalar_ghosts(&mut u);
        for g in dom.ghosts() {
            assert!((u[g.node] - f(grid.point(g.node))).abs() < 2e-2);
        }
    }
}
