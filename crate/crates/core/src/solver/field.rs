use super::{Mesh, Side};
use crate::error::{Error, Result};
use crate::physics::{prim_to_cons, EosParams, PrimitiveState, StateVec, NCOMP};
use crate::sbp::QuadratureOperator;

/// Nodal DG unknowns on a structured mesh.
///
/// Storage is cell-major: node `n` of cell `c` lives at `c * nodes_per_cell + n`.
/// In 2D the node index is `l + (r + 1) * m` with `l` along `x`, `m` along `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct DGField {
    dim: usize,
    nx: usize,
    ny: usize,
    np: usize,
    data: Vec<StateVec>,
}

impl DGField {
    pub fn zeros(mesh: &Mesh, op: &QuadratureOperator) -> Self {
        let np = op.num_nodes();
        let npc = if mesh.dim() == 1 { np } else { np * np };
        Self {
            dim: mesh.dim(),
            nx: mesh.nx(),
            ny: mesh.ny(),
            np,
            data: vec![[0.0; NCOMP]; mesh.num_cells() * npc],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            dim: self.dim,
            nx: self.nx,
            ny: self.ny,
            np: self.np,
            data: vec![[0.0; NCOMP]; self.data.len()],
        }
    }

    /// Nodal interpolation of conserved data given as a function of `(x, y)`.
    pub fn from_fn(
        mesh: &Mesh,
        op: &QuadratureOperator,
        mut f: impl FnMut(f64, f64) -> Result<StateVec>,
    ) -> Result<Self> {
        let mut out = Self::zeros(mesh, op);
        let npc = out.nodes_per_cell();
        for c in 0..mesh.num_cells() {
            for n in 0..npc {
                let (x, y) = node_position(mesh, op, c, n);
                out.data[c * npc + n] = f(x, y)?;
            }
        }
        Ok(out)
    }

    /// Nodal interpolation of piecewise data: every node is sampled after
    /// pulling it toward its cell centre by the relative amount `inset`, so
    /// face nodes see the one-sided limit from inside their own cell and a
    /// discontinuity on a face shows up as a trace jump.
    pub fn from_primitive_inset(
        mesh: &Mesh,
        op: &QuadratureOperator,
        eos: &EosParams,
        inset: f64,
        mut f: impl FnMut(f64, f64) -> PrimitiveState,
    ) -> Result<Self> {
        let mut out = Self::zeros(mesh, op);
        let npc = out.nodes_per_cell();
        let keep = 1.0 - inset;
        for c in 0..mesh.num_cells() {
            let (xc, yc) = mesh.cell_center(c);
            for n in 0..npc {
                let (x, y) = node_position(mesh, op, c, n);
                let p = f(xc + keep * (x - xc), yc + keep * (y - yc));
                out.data[c * npc + n] = prim_to_cons(&p, eos)?.0;
            }
        }
        Ok(out)
    }

    /// Nodal interpolation of primitive data.
    pub fn from_primitive(
        mesh: &Mesh,
        op: &QuadratureOperator,
        eos: &EosParams,
        mut f: impl FnMut(f64, f64) -> PrimitiveState,
    ) -> Result<Self> {
        Self::from_fn(mesh, op, |x, y| Ok(prim_to_cons(&f(x, y), eos)?.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Nodes per direction, `r + 1`.
    pub fn np(&self) -> usize {
        self.np
    }

    pub fn nodes_per_cell(&self) -> usize {
        if self.dim == 1 {
            self.np
        } else {
            self.np * self.np
        }
    }

    pub fn data(&self) -> &[StateVec] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [StateVec] {
        &mut self.data
    }

    pub fn cell(&self, c: usize) -> &[StateVec] {
        let npc = self.nodes_per_cell();
        &self.data[c * npc..(c + 1) * npc]
    }

    pub fn cell_mut(&mut self, c: usize) -> &mut [StateVec] {
        let npc = self.nodes_per_cell();
        &mut self.data[c * npc..(c + 1) * npc]
    }

    pub fn node(&self, c: usize, n: usize) -> &StateVec {
        &self.data[c * self.nodes_per_cell() + n]
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.nx == other.nx && self.ny == other.ny && self.np == other.np
    }

    /// Quadrature weight of node `n` on the reference cell, normalised so
    /// that the weights of a cell sum to one.
    #[inline]
    pub fn unit_weight(&self, op: &QuadratureOperator, n: usize) -> f64 {
        let w = op.weights();
        if self.dim == 1 {
            0.5 * w[n]
        } else {
            0.25 * w[n % self.np] * w[n / self.np]
        }
    }

    /// Quadrature cell average of every component.
    pub fn cell_mean(&self, op: &QuadratureOperator, c: usize) -> StateVec {
        let mut mean = [0.0; NCOMP];
        for (n, u) in self.cell(c).iter().enumerate() {
            let w = self.unit_weight(op, n);
            for k in 0..NCOMP {
                mean[k] += w * u[k];
            }
        }
        mean
    }

    /// Quadrature integral of every component over the domain.
    pub fn integral(&self, mesh: &Mesh, op: &QuadratureOperator) -> StateVec {
        let vol = mesh.measure() / mesh.num_cells() as f64;
        let mut total = [0.0; NCOMP];
        for c in 0..self.num_cells() {
            let m = self.cell_mean(op, c);
            for k in 0..NCOMP {
                total[k] += vol * m[k];
            }
        }
        total
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|u| u.iter().all(|x| x.is_finite()))
    }

    pub fn check_shape(&self, mesh: &Mesh, op: &QuadratureOperator) -> Result<()> {
        if self.dim != mesh.dim()
            || self.nx != mesh.nx()
            || self.ny != mesh.ny()
            || self.np != op.num_nodes()
        {
            return Err(Error::InvalidConfig(format!(
                "field shape {}D {}x{} np={} does not match mesh {}D {}x{} np={}",
                self.dim,
                self.nx,
                self.ny,
                self.np,
                mesh.dim(),
                mesh.nx(),
                mesh.ny(),
                op.num_nodes()
            )));
        }
        Ok(())
    }
}

/// Cell-local index of trace node `k` on `side` (`k` runs along the face;
/// it is ignored in 1D).
#[inline]
pub fn trace_node(dim: usize, np: usize, side: Side, k: usize) -> usize {
    let r = np - 1;
    if dim == 1 {
        return if side == Side::Left { 0 } else { r };
    }
    match side {
        Side::Left => np * k,
        Side::Right => r + np * k,
        Side::Bottom => k,
        Side::Top => k + np * r,
    }
}

/// Physical coordinates of node `n` in cell `c`.
pub fn node_position(mesh: &Mesh, op: &QuadratureOperator, c: usize, n: usize) -> (f64, f64) {
    let (xc, yc) = mesh.cell_center(c);
    let np = op.num_nodes();
    let xi = op.nodes();
    if mesh.dim() == 1 {
        (xc + 0.5 * mesh.dx() * xi[n], 0.0)
    } else {
        (
            xc + 0.5 * mesh.dx() * xi[n % np],
            yc + 0.5 * mesh.dy() * xi[n / np],
        )
    }
}
