//! Semi-discrete entropy stable nodal DG operator.
//!
//! Per direction, node `l` of a line of `r + 1` nodes with spacing `dx` gets
//!
//! ```text
//! -(4/dx) sum_p D_lp F#(U_p, U_l) - (2/dx) (sum_p D_lp B^p) Phi'_l
//!   + (2/dx) (tau_l / w_l) [(F_l - F*_l) + s_l]
//! ```
//!
//! with `F#` the entropy conservative flux, `F*` the interface flux on the two
//! end nodes, `s_0 = Phi'_0 (B_0 - B_ext) / 2`, `s_r = -Phi'_r (B_ext - B_r) / 2`
//! and `tau = diag(-1, 0, ..., 0, 1)`. 2D applies this along every `x` row and
//! every `y` column of a cell.

use rayon::prelude::*;

use super::{trace_node, BoundaryCondition, DGField, Mesh, Side};
use crate::error::{Error, Result};
use crate::fluxes::{ec_flux_param, lax_friedrichs, ParameterVector};
use crate::physics::{
    auxiliaries_unchecked, cons_to_prim, entropy_variables_prim, fast_speed_bound_aux,
    phi_prime_aux, physical_flux_aux, ConservedState, Direction, EosParams, PrimitiveState,
    StateVec, IDX_B, NCOMP,
};
use crate::sbp::{QuadratureOperator, MAX_DEGREE};

const MAX_NP: usize = MAX_DEGREE + 1;

/// Numerical flux used on cell interfaces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InterfaceFlux {
    /// Entropy stable Lax-Friedrichs flux.
    #[default]
    LaxFriedrichs,
    /// Entropy conservative flux; for smooth diagnostics only.
    EntropyConservative,
}

/// Everything the operator needs from one nodal state, computed once per
/// evaluation.
#[derive(Clone, Copy, Debug)]
pub struct NodeData {
    pub u: StateVec,
    pub prim: PrimitiveState,
    pub pv: ParameterVector,
    /// Physical fluxes in `x` and `y` (the `y` flux is zero in 1D).
    pub f: [StateVec; 2],
    pub phi_p: StateVec,
    /// Fast-speed bounds along `x` and `y`.
    pub speed: [f64; 2],
}

impl NodeData {
    pub fn new(u: &StateVec, eos: &EosParams, dim: usize) -> Result<Self> {
        let prim = cons_to_prim(&ConservedState(*u), eos)?;
        let aux = auxiliaries_unchecked(&prim, eos);
        let fx = physical_flux_aux(&prim, &aux, eos, Direction::X);
        let fy = if dim == 2 {
            physical_flux_aux(&prim, &aux, eos, Direction::Y)
        } else {
            [0.0; NCOMP]
        };
        Ok(Self {
            u: *u,
            prim,
            pv: ParameterVector::from_prim(&prim),
            f: [fx, fy],
            phi_p: phi_prime_aux(&prim, &aux),
            speed: [
                fast_speed_bound_aux(&prim, &aux, eos, Direction::X),
                if dim == 2 {
                    fast_speed_bound_aux(&prim, &aux, eos, Direction::Y)
                } else {
                    0.0
                },
            ],
        })
    }
}

#[derive(Clone, Debug, Default)]
struct GhostStore {
    left: Vec<NodeData>,
    right: Vec<NodeData>,
    bottom: Vec<NodeData>,
    top: Vec<NodeData>,
}

impl GhostStore {
    fn side(&self, side: Side) -> &[NodeData] {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
            Side::Bottom => &self.bottom,
            Side::Top => &self.top,
        }
    }
}

/// Spatial discretisation bound to a mesh, an operator and boundary data.
#[derive(Clone, Debug)]
pub struct SpatialOperator {
    mesh: Mesh,
    op: QuadratureOperator,
    eos: EosParams,
    interface: InterfaceFlux,
    ghosts: GhostStore,
}

impl SpatialOperator {
    /// `initial` supplies the frozen traces of Dirichlet boundaries.
    pub fn new(
        mesh: Mesh,
        op: QuadratureOperator,
        eos: EosParams,
        interface: InterfaceFlux,
        initial: &DGField,
    ) -> Result<Self> {
        initial.check_shape(&mesh, &op)?;
        let mut s = Self {
            mesh,
            op,
            eos,
            interface,
            ghosts: GhostStore::default(),
        };
        let nd = s.node_data(initial)?;
        for &side in Side::for_dim(s.mesh.dim()) {
            if s.mesh.boundaries().get(side) != BoundaryCondition::Dirichlet {
                continue;
            }
            let (faces, per_face) = s.face_layout(side);
            let mut store = Vec::with_capacity(faces * per_face);
            for f in 0..faces {
                let c = s.boundary_cell(side, f);
                for k in 0..per_face {
                    store.push(nd[s.trace_index(c, side, k)]);
                }
            }
            match side {
                Side::Left => s.ghosts.left = store,
                Side::Right => s.ghosts.right = store,
                Side::Bottom => s.ghosts.bottom = store,
                Side::Top => s.ghosts.top = store,
            }
        }
        Ok(s)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn op(&self) -> &QuadratureOperator {
        &self.op
    }

    pub fn eos(&self) -> &EosParams {
        &self.eos
    }

    pub fn interface_flux_kind(&self) -> InterfaceFlux {
        self.interface
    }

    fn npc(&self) -> usize {
        let np = self.op.num_nodes();
        if self.mesh.dim() == 1 {
            np
        } else {
            np * np
        }
    }

    /// Number of boundary cells on `side` and trace nodes per face.
    fn face_layout(&self, side: Side) -> (usize, usize) {
        let per_face = if self.mesh.dim() == 1 {
            1
        } else {
            self.op.num_nodes()
        };
        let faces = match side {
            Side::Left | Side::Right => self.mesh.ny(),
            Side::Bottom | Side::Top => self.mesh.nx(),
        };
        (faces, per_face)
    }

    fn boundary_cell(&self, side: Side, f: usize) -> usize {
        let (nx, ny) = (self.mesh.nx(), self.mesh.ny());
        match side {
            Side::Left => self.mesh.cell_index(0, f),
            Side::Right => self.mesh.cell_index(nx - 1, f),
            Side::Bottom => self.mesh.cell_index(f, 0),
            Side::Top => self.mesh.cell_index(f, ny - 1),
        }
    }

    /// Global index of trace node `k` of cell `c` on `side`.
    #[inline]
    fn trace_index(&self, c: usize, side: Side, k: usize) -> usize {
        c * self.npc() + trace_node(self.mesh.dim(), self.op.num_nodes(), side, k)
    }

    /// State seen across `side` of cell `c` at trace node `k`.
    #[inline]
    fn exterior<'a>(&'a self, nd: &'a [NodeData], c: usize, side: Side, k: usize) -> &'a NodeData {
        if let Some(nb) = self.mesh.neighbor(c, side) {
            return &nd[self.trace_index(nb, side.opposite(), k)];
        }
        match self.mesh.boundaries().get(side) {
            BoundaryCondition::Dirichlet => {
                let (_, per_face) = self.face_layout(side);
                let (i, j) = self.mesh.cell_ij(c);
                let f = match side {
                    Side::Left | Side::Right => j,
                    Side::Bottom | Side::Top => i,
                };
                &self.ghosts.side(side)[f * per_face + k]
            }
            _ => &nd[self.trace_index(c, side, k)],
        }
    }

    pub fn node_data(&self, field: &DGField) -> Result<Vec<NodeData>> {
        field.check_shape(&self.mesh, &self.op)?;
        let npc = self.npc();
        let dim = self.mesh.dim();
        field
            .data()
            .par_iter()
            .enumerate()
            .map(|(g, u)| {
                NodeData::new(u, &self.eos, dim).map_err(|e| match e {
                    Error::RecoveryFailed(m) => {
                        Error::RecoveryFailed(format!("cell {} node {}: {m}", g / npc, g % npc))
                    }
                    other => other,
                })
            })
            .collect()
    }

    #[inline]
    fn interface_flux(&self, dir: Direction, l: &NodeData, r: &NodeData) -> StateVec {
        match self.interface {
            InterfaceFlux::LaxFriedrichs => {
                let d = dir.index();
                let alpha = l.speed[d].max(r.speed[d]);
                lax_friedrichs(&l.f[d], &r.f[d], &l.u, &r.u, alpha)
            }
            InterfaceFlux::EntropyConservative => ec_flux_param(dir, &l.pv, &r.pv, &self.eos),
        }
    }

    /// Adds the contribution of one line of nodes to `out`.
    ///
    /// `idx[l]` indexes `nd`, `out_idx[l]` indexes `out`.
    #[allow(clippy::too_many_arguments)]
    fn line_update(
        &self,
        dir: Direction,
        nd: &[NodeData],
        idx: &[usize],
        ext_l: &NodeData,
        ext_r: &NodeData,
        scale: f64,
        out: &mut [StateVec],
        out_idx: &[usize],
    ) {
        let np = idx.len();
        let d = dir.index();
        let bk = IDX_B + d;
        // Two-point fluxes are symmetric: each pair is evaluated once and
        // scattered to both rows.
        let mut acc = [[0.0; NCOMP]; MAX_NP];
        for l in 0..np {
            let fl = &nd[idx[l]].f[d];
            let dll = self.op.d(l, l);
            for k in 0..NCOMP {
                acc[l][k] += dll * fl[k];
            }
            for p in l + 1..np {
                let f = ec_flux_param(dir, &nd[idx[l]].pv, &nd[idx[p]].pv, &self.eos);
                let (dlp, dpl) = (self.op.d(l, p), self.op.d(p, l));
                for k in 0..NCOMP {
                    acc[l][k] += dlp * f[k];
                    acc[p][k] += dpl * f[k];
                }
            }
        }
        for l in 0..np {
            let mut db = 0.0;
            for p in 0..np {
                db += self.op.d(l, p) * nd[idx[p]].u[bk];
            }
            let node = &nd[idx[l]];
            let o = &mut out[out_idx[l]];
            for k in 0..NCOMP {
                o[k] -= scale * (2.0 * acc[l][k] + db * node.phi_p[k]);
            }
        }
        let w = self.op.weights();
        let n0 = &nd[idx[0]];
        let f_left = self.interface_flux(dir, ext_l, n0);
        let jump_l = n0.u[bk] - ext_l.u[bk];
        let c0 = -scale / w[0];
        let o = &mut out[out_idx[0]];
        for k in 0..NCOMP {
            o[k] += c0 * ((n0.f[d][k] - f_left[k]) + 0.5 * n0.phi_p[k] * jump_l);
        }
        let nr = &nd[idx[np - 1]];
        let f_right = self.interface_flux(dir, nr, ext_r);
        let jump_r = ext_r.u[bk] - nr.u[bk];
        let cr = scale / w[np - 1];
        let o = &mut out[out_idx[np - 1]];
        for k in 0..NCOMP {
            o[k] += cr * ((nr.f[d][k] - f_right[k]) - 0.5 * nr.phi_p[k] * jump_r);
        }
    }

    /// Time derivative of the nodal unknowns.
    pub fn rhs(&self, field: &DGField) -> Result<DGField> {
        let nd = self.node_data(field)?;
        Ok(self.rhs_from_node_data(field, &nd))
    }

    pub fn rhs_from_node_data(&self, field: &DGField, nd: &[NodeData]) -> DGField {
        if self.mesh.dim() == 1 {
            self.rhs_1d(field, nd)
        } else {
            self.rhs_2d(field, nd)
        }
    }

    fn rhs_1d(&self, field: &DGField, nd: &[NodeData]) -> DGField {
        let np = self.op.num_nodes();
        let scale = 2.0 / self.mesh.dx();
        let mut out = field.zeros_like();
        let local: Vec<usize> = (0..np).collect();
        out.data_mut()
            .par_chunks_mut(np)
            .enumerate()
            .for_each(|(c, cell)| {
                let idx: Vec<usize> = (0..np).map(|l| c * np + l).collect();
                let ext_l = self.exterior(nd, c, Side::Left, 0);
                let ext_r = self.exterior(nd, c, Side::Right, 0);
                self.line_update(Direction::X, nd, &idx, ext_l, ext_r, scale, cell, &local);
            });
        out
    }

    fn rhs_2d(&self, field: &DGField, nd: &[NodeData]) -> DGField {
        let np = self.op.num_nodes();
        let npc = np * np;
        let sx = 2.0 / self.mesh.dx();
        let sy = 2.0 / self.mesh.dy();
        let mut out = field.zeros_like();
        out.data_mut()
            .par_chunks_mut(npc)
            .enumerate()
            .for_each(|(c, cell)| {
                let mut idx = [0usize; MAX_NP];
                let mut loc = [0usize; MAX_NP];
                for m in 0..np {
                    for l in 0..np {
                        loc[l] = l + np * m;
                        idx[l] = c * npc + loc[l];
                    }
                    let ext_l = self.exterior(nd, c, Side::Left, m);
                    let ext_r = self.exterior(nd, c, Side::Right, m);
                    self.line_update(
                        Direction::X,
                        nd,
                        &idx[..np],
                        ext_l,
                        ext_r,
                        sx,
                        cell,
                        &loc[..np],
                    );
                }
                for l in 0..np {
                    for m in 0..np {
                        loc[m] = l + np * m;
                        idx[m] = c * npc + loc[m];
                    }
                    let ext_b = self.exterior(nd, c, Side::Bottom, l);
                    let ext_t = self.exterior(nd, c, Side::Top, l);
                    self.line_update(
                        Direction::Y,
                        nd,
                        &idx[..np],
                        ext_b,
                        ext_t,
                        sy,
                        cell,
                        &loc[..np],
                    );
                }
            });
        out
    }

    /// Quadrature rate of change of total entropy, `sum vol w_n V_n . dU_n/dt`.
    pub fn entropy_rate(&self, field: &DGField, tendency: &DGField) -> Result<f64> {
        if !field.same_shape(tendency) {
            return Err(Error::InvalidConfig(
                "tendency shape does not match field".into(),
            ));
        }
        let nd = self.node_data(field)?;
        let vol = self.mesh.measure() / self.mesh.num_cells() as f64;
        let npc = self.npc();
        let per_cell: Vec<f64> = (0..field.num_cells())
            .into_par_iter()
            .map(|c| {
                let mut s = 0.0;
                for n in 0..npc {
                    let v = entropy_variables_prim(&nd[c * npc + n].prim, &self.eos);
                    let t = tendency.node(c, n);
                    let dot: f64 = (0..NCOMP).map(|k| v.0[k] * t[k]).sum();
                    s += field.unit_weight(&self.op, n) * dot;
                }
                vol * s
            })
            .collect();
        Ok(per_cell.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{sample_primitive, SampleRanges};
    use crate::physics::prim_to_cons;
    use crate::sbp::build_operator;
    use crate::solver::Boundaries;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use BoundaryCondition::*;

    fn eos() -> EosParams {
        EosParams::new(5.0 / 3.0).unwrap()
    }

    fn max_abs(f: &DGField) -> f64 {
        f.data()
            .iter()
            .flat_map(|u| u.iter())
            .fold(0.0f64, |a, x| a.max(x.abs()))
    }

    #[test]
    fn free_stream_preservation_1d_and_2d() {
        let e = eos();
        let prim = PrimitiveState::new(1.3, [0.4, -0.3, 0.2], 0.8, [1.0, -2.0, 0.5]);
        for r in [1, 2, 3] {
            let op = build_operator(r).unwrap();
            let m1 = Mesh::new_1d(7, (0.0, 1.0), Periodic, Periodic).unwrap();
            let f1 = DGField::from_primitive(&m1, &op, &e, |_, _| prim).unwrap();
            let s1 =
                SpatialOperator::new(m1, op.clone(), e, InterfaceFlux::LaxFriedrichs, &f1).unwrap();
            // Round-off of the volume term grows like (2 / h) * |f| * |D|.
            let tol =
                |m: &Mesh, f: &DGField| 1e-15 * (2.0 / m.h_min()) * max_abs(f) * (r * r) as f64;
            let v = max_abs(&s1.rhs(&f1).unwrap());
            assert!(v < tol(s1.mesh(), &f1), "r={r} {v:e}");

            let m2 =
                Mesh::new_2d(5, 4, (0.0, 1.0), (0.0, 2.0), Boundaries::uniform(Periodic)).unwrap();
            let f2 = DGField::from_primitive(&m2, &op, &e, |_, _| prim).unwrap();
            let s2 =
                SpatialOperator::new(m2, op.clone(), e, InterfaceFlux::LaxFriedrichs, &f2).unwrap();
            assert!(max_abs(&s2.rhs(&f2).unwrap()) < tol(s2.mesh(), &f2));

            // Dirichlet and outflow ghosts see the same constant.
            let bc = Boundaries {
                left: Dirichlet,
                right: Outflow,
                bottom: Outflow,
                top: Dirichlet,
            };
            let m3 = Mesh::new_2d(3, 3, (0.0, 1.0), (0.0, 1.0), bc).unwrap();
            let f3 = DGField::from_primitive(&m3, &op, &e, |_, _| prim).unwrap();
            let s3 = SpatialOperator::new(m3, op, e, InterfaceFlux::LaxFriedrichs, &f3).unwrap();
            assert!(max_abs(&s3.rhs(&f3).unwrap()) < tol(s3.mesh(), &f3));
        }
    }

    fn smooth_prim(x: f64, y: f64) -> PrimitiveState {
        let t = std::f64::consts::TAU;
        PrimitiveState::new(
            1.0 + 0.3 * (t * x).sin() * (t * y).cos(),
            [
                0.3 * (t * y).sin(),
                0.2 * (t * x).cos(),
                0.1 * (t * (x + y)).sin(),
            ],
            1.0 + 0.2 * (t * x).cos(),
            [0.7 + 0.2 * (t * y).sin(), 0.5 * (t * x).cos(), 0.3],
        )
    }

    #[test]
    fn entropy_conservative_mode_has_zero_entropy_rate() {
        let e = eos();
        let op = build_operator(2).unwrap();
        let m1 = Mesh::new_1d(16, (0.0, 1.0), Periodic, Periodic).unwrap();
        let f1 = DGField::from_primitive(&m1, &op, &e, |x, _| smooth_prim(x, 0.3)).unwrap();
        let s1 = SpatialOperator::new(m1, op.clone(), e, InterfaceFlux::EntropyConservative, &f1)
            .unwrap();
        let t1 = s1.rhs(&f1).unwrap();
        assert!(s1.entropy_rate(&f1, &t1).unwrap().abs() < 1e-12);

        let m2 = Mesh::new_2d(6, 5, (0.0, 1.0), (0.0, 1.0), Boundaries::uniform(Periodic)).unwrap();
        let f2 = DGField::from_primitive(&m2, &op, &e, smooth_prim).unwrap();
        let s2 = SpatialOperator::new(m2, op, e, InterfaceFlux::EntropyConservative, &f2).unwrap();
        let t2 = s2.rhs(&f2).unwrap();
        assert!(s2.entropy_rate(&f2, &t2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn entropy_stable_mode_dissipates_on_random_fields() {
        let e = eos();
        let op = build_operator(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let ranges = SampleRanges {
            max_speed: 0.9,
            max_field: 3.0,
            ..SampleRanges::default()
        };
        for _ in 0..5 {
            let m =
                Mesh::new_2d(4, 3, (0.0, 1.0), (0.0, 1.0), Boundaries::uniform(Periodic)).unwrap();
            let f = DGField::from_fn(&m, &op, |_, _| {
                Ok(prim_to_cons(&sample_primitive(&mut rng, &ranges), &e)?.0)
            })
            .unwrap();
            let s =
                SpatialOperator::new(m, op.clone(), e, InterfaceFlux::LaxFriedrichs, &f).unwrap();
            let t = s.rhs(&f).unwrap();
            let rate = s.entropy_rate(&f, &t).unwrap();
            assert!(rate <= 1e-12, "entropy rate {rate}");
        }
    }

    #[test]
    fn extruded_2d_matches_1d() {
        let e = EosParams::new(2.0).unwrap();
        let op = build_operator(2).unwrap();
        let left = PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.5, 1.0, 0.0]);
        let right = PrimitiveState::new(0.125, [0.0; 3], 0.1, [0.5, -1.0, 0.0]);
        let prim = |x: f64| if x < 0.5 { left } else { right };
        let m1 = Mesh::new_1d(10, (0.0, 1.0), Dirichlet, Dirichlet).unwrap();
        let f1 = DGField::from_primitive(&m1, &op, &e, |x, _| prim(x)).unwrap();
        let s1 =
            SpatialOperator::new(m1, op.clone(), e, InterfaceFlux::LaxFriedrichs, &f1).unwrap();
        let t1 = s1.rhs(&f1).unwrap();
        let bc = Boundaries {
            left: Dirichlet,
            right: Dirichlet,
            bottom: Periodic,
            top: Periodic,
        };
        let m2 = Mesh::new_2d(10, 3, (0.0, 1.0), (0.0, 0.3), bc).unwrap();
        let f2 = DGField::from_primitive(&m2, &op, &e, |x, _| prim(x)).unwrap();
        let s2 =
            SpatialOperator::new(m2.clone(), op, e, InterfaceFlux::LaxFriedrichs, &f2).unwrap();
        let t2 = s2.rhs(&f2).unwrap();
        for j in 0..3 {
            for i in 0..10 {
                let c2 = m2.cell_index(i, j);
                for m in 0..3 {
                    for l in 0..3 {
                        let a = t2.node(c2, l + 3 * m);
                        let b = t1.node(i, l);
                        for k in 0..NCOMP {
                            assert!(
                                (a[k] - b[k]).abs() < 1e-13 * b[k].abs().max(1.0),
                                "{a:?} vs {b:?}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_periodic_partner_cells() {
        let e = eos();
        let op = build_operator(1).unwrap();
        let bc = Boundaries {
            left: Dirichlet,
            right: Dirichlet,
            bottom: ShiftedPeriodic { offset: 2 },
            top: ShiftedPeriodic { offset: 2 },
        };
        let m = Mesh::new_2d(6, 2, (0.0, 1.0), (0.0, 1.0 / 3.0), bc).unwrap();
        let f = DGField::from_fn(&m, &op, |x, y| {
            Ok(prim_to_cons(
                &PrimitiveState::new(1.0 + x + 10.0 * y, [0.0; 3], 1.0, [0.0; 3]),
                &e,
            )?
            .0)
        })
        .unwrap();
        let s = SpatialOperator::new(m.clone(), op, e, InterfaceFlux::LaxFriedrichs, &f).unwrap();
        let nd = s.node_data(&f).unwrap();
        let top = s.exterior(&nd, m.cell_index(1, 1), Side::Top, 0);
        assert_eq!(top.u, *f.node(m.cell_index(3, 0), 0));
        let bottom = s.exterior(&nd, m.cell_index(3, 0), Side::Bottom, 1);
        assert_eq!(bottom.u, *f.node(m.cell_index(1, 1), 1 + 2));
        let clamped = s.exterior(&nd, m.cell_index(5, 1), Side::Top, 0);
        assert_eq!(clamped.u, *f.node(m.cell_index(5, 0), 0));
    }

    #[test]
    fn periodic_conservation_of_mass_and_energy() {
        let e = eos();
        let op = build_operator(2).unwrap();
        let m = Mesh::new_2d(6, 6, (0.0, 1.0), (0.0, 1.0), Boundaries::uniform(Periodic)).unwrap();
        let f = DGField::from_primitive(&m, &op, &e, smooth_prim).unwrap();
        let s = SpatialOperator::new(m.clone(), op.clone(), e, InterfaceFlux::LaxFriedrichs, &f)
            .unwrap();
        let t = s.rhs(&f).unwrap();
        let total = t.integral(&m, &op);
        // D carries no Powell source.
        assert!(total[0].abs() < 1e-12, "{total:?}");
    }
}
