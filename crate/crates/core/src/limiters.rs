//! Shock capturing and admissibility limiters applied after every RK stage:
//! a KXRCF trouble-cell indicator on the mass density, a TVB-modified
//! minmod slope limiter on flagged cells, and a scaling limiter that pulls
//! nodal values toward the cell average until they are physically
//! admissible.

use std::collections::HashMap;

use nalgebra::{DMatrix, SMatrix};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::{
    cons_to_prim, entropy_pair, norm2, physical_flux_prim, ConservedState, Direction, EosParams,
    PrimitiveState, StateVec, NCOMP,
};
use crate::sbp::QuadratureOperator;
use crate::solver::{trace_node, BoundaryCondition, DGField, Mesh, Side};

type Mat8 = SMatrix<f64, NCOMP, NCOMP>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimiterConfig {
    /// TVB constant; slopes below `tvb_m * h^2` are left alone.
    pub tvb_m: f64,
    pub kxrcf_threshold: f64,
    /// Limit local characteristic fields instead of conserved components.
    pub characteristic: bool,
    pub pcp_epsilon: f64,
    /// Pull a slope-limited cell back toward its mean until its quadrature
    /// entropy is no larger than before limiting.
    pub entropy_guard: bool,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        Self {
            tvb_m: 10.0,
            kxrcf_threshold: 1.0,
            characteristic: false,
            pcp_epsilon: 1e-10,
            entropy_guard: true,
        }
    }
}

impl LimiterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tvb_m >= 0.0) || !self.tvb_m.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "tvb M = {} must be finite and >= 0",
                self.tvb_m
            )));
        }
        if !(self.kxrcf_threshold > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kxrcf threshold {} must be > 0",
                self.kxrcf_threshold
            )));
        }
        if !(self.pcp_epsilon > 0.0 && self.pcp_epsilon <= 1e-8) {
            return Err(Error::InvalidConfig(format!(
                "pcp epsilon {} outside (0, 1e-8]",
                self.pcp_epsilon
            )));
        }
        Ok(())
    }
}

/// What one application of the pipeline did.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LimiterStats {
    pub troubled: usize,
    /// Troubled cells whose slopes were actually changed.
    pub modified: usize,
    /// Cells scaled by the positivity limiter.
    pub scaled: usize,
    pub min_theta: f64,
    /// Characteristic decompositions that fell back to componentwise limiting.
    pub char_fallbacks: usize,
}

/// TVB-modified minmod. Returns `a` unchanged when `|a| <= mh2`.
#[inline]
pub fn minmod_tvb(a: f64, b: f64, c: f64, mh2: f64) -> f64 {
    if a.abs() <= mh2 {
        return a;
    }
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Admissibility with margins: `D >= eps`, recovered `p >= eps`,
/// `|v|^2 <= 1 - eps`. Returns the reason on failure.
pub fn check_admissible(
    u: &StateVec,
    eos: &EosParams,
    eps: f64,
) -> std::result::Result<PrimitiveState, String> {
    if !(u[0] >= eps) {
        return Err(format!("D = {:e} below floor", u[0]));
    }
    let prim = cons_to_prim(&ConservedState(*u), eos).map_err(|e| e.to_string())?;
    if !(prim.p >= eps) {
        return Err(format!("p = {:e} below floor", prim.p));
    }
    let v2 = norm2(&prim.v);
    if !(v2 <= 1.0 - eps) {
        return Err(format!("|v|^2 = {v2} too close to light speed"));
    }
    Ok(prim)
}

/// Limiter pipeline bound to a mesh and an operator.
#[derive(Clone, Debug)]
pub struct Limiter {
    config: LimiterConfig,
    /// Run the indicator and slope limiter (the positivity limiter always runs).
    slope_limiting: bool,
    mesh: Mesh,
    op: QuadratureOperator,
    eos: EosParams,
    /// Rows 0 and 1 of the inverse Legendre Vandermonde matrix: nodal values
    /// to the mean and linear modal coefficients.
    modal: [Vec<f64>; 2],
    /// Initial data of cells on Dirichlet sides; their frozen traces and
    /// means act as the exterior state.
    frozen: HashMap<usize, Vec<StateVec>>,
}

impl Limiter {
    pub fn new(
        config: LimiterConfig,
        slope_limiting: bool,
        mesh: Mesh,
        op: QuadratureOperator,
        eos: EosParams,
        initial: &DGField,
    ) -> Result<Self> {
        config.validate()?;
        initial.check_shape(&mesh, &op)?;
        let np = op.num_nodes();
        let v = op.legendre_vandermonde();
        let vm = DMatrix::from_fn(np, np, |j, m| v[j][m]);
        let vinv = vm
            .try_inverse()
            .ok_or_else(|| Error::InvalidConfig("singular Legendre Vandermonde matrix".into()))?;
        let modal = [
            (0..np).map(|n| vinv[(0, n)]).collect(),
            (0..np).map(|n| vinv[(1, n)]).collect(),
        ];
        let mut frozen = HashMap::new();
        for c in 0..mesh.num_cells() {
            let on_dirichlet = Side::for_dim(mesh.dim()).iter().any(|&s| {
                mesh.neighbor(c, s).is_none()
                    && mesh.boundaries().get(s) == BoundaryCondition::Dirichlet
            });
            if on_dirichlet {
                frozen.insert(c, initial.cell(c).to_vec());
            }
        }
        Ok(Self {
            config,
            slope_limiting,
            mesh,
            op,
            eos,
            modal,
            frozen,
        })
    }

    pub fn config(&self) -> &LimiterConfig {
        &self.config
    }

    /// Runs indicator, slope limiter and positivity limiter in that order.
    pub fn apply(&self, field: &mut DGField) -> Result<LimiterStats> {
        let mut stats = LimiterStats {
            min_theta: 1.0,
            ..Default::default()
        };
        if self.slope_limiting {
            let troubled = self.troubled_cells(field)?;
            stats.troubled = troubled.iter().filter(|&&t| t).count();
            if stats.troubled > 0 {
                let (modified, fallbacks) = self.tvb_limit(field, &troubled);
                stats.modified = modified;
                stats.char_fallbacks = fallbacks;
                if fallbacks > 0 {
                    log::warn!("characteristic decomposition failed in {fallbacks} cells; limited componentwise");
                }
            }
        }
        let (scaled, min_theta) = self.pcp_limit(field)?;
        stats.scaled = scaled;
        stats.min_theta = min_theta;
        Ok(stats)
    }

    fn means(&self, field: &DGField) -> Vec<StateVec> {
        (0..field.num_cells())
            .into_par_iter()
            .map(|c| field.cell_mean(&self.op, c))
            .collect()
    }

    /// Radius of the circumscribed circle of a cell.
    fn circumradius(&self) -> f64 {
        if self.mesh.dim() == 1 {
            0.5 * self.mesh.dx()
        } else {
            0.5 * self.mesh.dx().hypot(self.mesh.dy())
        }
    }

    /// Exterior nodal values across `side` of `c`, or `None` when the ghost
    /// is the cell's own trace (outflow).
    fn exterior_cell<'a>(
        &'a self,
        field: &'a DGField,
        c: usize,
        side: Side,
    ) -> Option<(&'a [StateVec], Side)> {
        if let Some(nb) = self.mesh.neighbor(c, side) {
            return Some((field.cell(nb), side.opposite()));
        }
        self.frozen
            .get(&c)
            .filter(|_| self.mesh.boundaries().get(side) == BoundaryCondition::Dirichlet)
            .map(|cell| (cell.as_slice(), side))
    }

    /// KXRCF indicator on `D`: a cell is troubled when the jump across its
    /// inflow faces (those with `v_mean . n <= 0`) exceeds
    /// `threshold * h^((r+1)/2) * |inflow boundary| * max |D|`.
    pub fn kxrcf_indicator(&self, field: &DGField, c: usize, mean_v: &[f64; 3]) -> bool {
        let dim = self.mesh.dim();
        let np = self.op.num_nodes();
        let w = self.op.weights();
        let own = field.cell(c);
        let mut jump = 0.0;
        let mut measure = 0.0;
        for &side in Side::for_dim(dim) {
            let vn = match side {
                Side::Left => -mean_v[0],
                Side::Right => mean_v[0],
                Side::Bottom => -mean_v[1],
                Side::Top => mean_v[1],
            };
            if vn > 0.0 {
                continue;
            }
            let (len, per_face) = match (dim, side) {
                (1, _) => (1.0, 1),
                (_, Side::Left | Side::Right) => (self.mesh.dy(), np),
                _ => (self.mesh.dx(), np),
            };
            measure += len;
            let ext = self.exterior_cell(field, c, side);
            for k in 0..per_face {
                let wk = if per_face == 1 { 1.0 } else { 0.5 * w[k] * len };
                let d_in = own[trace_node(dim, np, side, k)][0];
                let d_out = match ext {
                    Some((cell, ext_side)) => cell[trace_node(dim, np, ext_side, k)][0],
                    None => d_in,
                };
                jump += wk * (d_in - d_out);
            }
        }
        if measure == 0.0 {
            return false;
        }
        let norm = own.iter().fold(0.0f64, |a, u| a.max(u[0].abs()));
        let r = self.op.degree() as f64;
        let bound = self.config.kxrcf_threshold
            * self.circumradius().powf(0.5 * (r + 1.0))
            * measure
            * norm;
        jump.abs() > bound
    }

    pub fn troubled_cells(&self, field: &DGField) -> Result<Vec<bool>> {
        field.check_shape(&self.mesh, &self.op)?;
        (0..field.num_cells())
            .into_par_iter()
            .map(|c| {
                let mean = field.cell_mean(&self.op, c);
                let prim = cons_to_prim(&ConservedState(mean), &self.eos).map_err(|e| {
                    Error::InadmissibleCellAverage {
                        cell: c,
                        reason: e.to_string(),
                    }
                })?;
                Ok(self.kxrcf_indicator(field, c, &prim.v))
            })
            .collect()
    }

    /// Linear modal coefficients along `x` (index 0) and `y` (index 1).
    fn linear_moments(&self, cell: &[StateVec]) -> [StateVec; 2] {
        let np = self.op.num_nodes();
        let [m0, m1] = &self.modal;
        let mut out = [[0.0; NCOMP]; 2];
        if self.mesh.dim() == 1 {
            for (n, u) in cell.iter().enumerate() {
                for k in 0..NCOMP {
                    out[0][k] += m1[n] * u[k];
                }
            }
        } else {
            for (n, u) in cell.iter().enumerate() {
                let (l, m) = (n % np, n / np);
                let (ax, ay) = (m1[l] * m0[m], m0[l] * m1[m]);
                for k in 0..NCOMP {
                    out[0][k] += ax * u[k];
                    out[1][k] += ay * u[k];
                }
            }
        }
        out
    }

    fn neighbor_mean(&self, means: &[StateVec], c: usize, side: Side) -> StateVec {
        if let Some(nb) = self.mesh.neighbor(c, side) {
            return means[nb];
        }
        match self.frozen.get(&c) {
            Some(cell) if self.mesh.boundaries().get(side) == BoundaryCondition::Dirichlet => {
                let mut m = [0.0; NCOMP];
                for (n, u) in cell.iter().enumerate() {
                    let w = self.unit_weight(n);
                    for k in 0..NCOMP {
                        m[k] += w * u[k];
                    }
                }
                m
            }
            _ => means[c],
        }
    }

    fn unit_weight(&self, n: usize) -> f64 {
        let w = self.op.weights();
        let np = self.op.num_nodes();
        if self.mesh.dim() == 1 {
            0.5 * w[n]
        } else {
            0.25 * w[n % np] * w[n / np]
        }
    }

    /// TVB slope limiting of the flagged cells. Returns the number of cells
    /// changed and the number of characteristic fallbacks.
    pub fn tvb_limit(&self, field: &mut DGField, troubled: &[bool]) -> (usize, usize) {
        let means = self.means(field);
        let dim = self.mesh.dim();
        let np = self.op.num_nodes();
        let npc = field.nodes_per_cell();
        let h = [self.mesh.dx(), self.mesh.dy()];
        let nodes = self.op.nodes().to_vec();
        let source = field.clone();
        let counts: Vec<(bool, bool)> = field
            .data_mut()
            .par_chunks_mut(npc)
            .enumerate()
            .map(|(c, cell)| {
                if !troubled[c] {
                    return (false, false);
                }
                let moments = self.linear_moments(source.cell(c));
                let mean = means[c];
                let mut slopes = moments;
                let mut changed = [false; NCOMP];
                let mut fallback = false;
                for d in 0..dim {
                    let (lo, hi) = if d == 0 {
                        (Side::Left, Side::Right)
                    } else {
                        (Side::Bottom, Side::Top)
                    };
                    let back = self.neighbor_mean(&means, c, lo);
                    let fwd = self.neighbor_mean(&means, c, hi);
                    let mut dp = [0.0; NCOMP];
                    let mut dm = [0.0; NCOMP];
                    for k in 0..NCOMP {
                        dp[k] = fwd[k] - mean[k];
                        dm[k] = mean[k] - back[k];
                    }
                    let mh2 = self.config.tvb_m * h[d] * h[d];
                    let eig = if self.config.characteristic {
                        let dir = if d == 0 { Direction::X } else { Direction::Y };
                        let e = characteristic_basis(&mean, &self.eos, dir);
                        fallback |= e.is_none();
                        e
                    } else {
                        None
                    };
                    match eig {
                        Some((r, l)) => {
                            let to =
                                |x: &StateVec| l * SMatrix::<f64, NCOMP, 1>::from_column_slice(x);
                            let (a, b, cc) = (to(&moments[d]), to(&dp), to(&dm));
                            let mut lim = a;
                            let mut any = false;
                            for k in 0..NCOMP {
                                lim[k] = minmod_tvb(a[k], b[k], cc[k], mh2);
                                any |= lim[k] != a[k];
                            }
                            if any {
                                let back = r * lim;
                                for k in 0..NCOMP {
                                    slopes[d][k] = back[k];
                                    changed[k] = true;
                                }
                            }
                        }
                        None => {
                            for k in 0..NCOMP {
                                let m = minmod_tvb(moments[d][k], dp[k], dm[k], mh2);
                                if m != moments[d][k] {
                                    slopes[d][k] = m;
                                    changed[k] = true;
                                }
                            }
                        }
                    }
                }
                if !changed.iter().any(|&x| x) {
                    return (false, fallback);
                }
                for (n, u) in cell.iter_mut().enumerate() {
                    let (xi, eta) = if dim == 1 {
                        (nodes[n], 0.0)
                    } else {
                        (nodes[n % np], nodes[n / np])
                    };
                    for k in 0..NCOMP {
                        if changed[k] {
                            u[k] = mean[k]
                                + slopes[0][k] * xi
                                + if dim == 2 { slopes[1][k] * eta } else { 0.0 };
                        }
                    }
                }
                if self.config.entropy_guard {
                    self.entropy_guard(source.cell(c), &mean, cell);
                }
                (true, fallback)
            })
            .collect();
        let modified = counts.iter().filter(|c| c.0).count();
        let fallbacks = counts.iter().filter(|c| c.1).count();
        (modified, fallbacks)
    }

    /// Quadrature cell entropy (per unit measure), or `None` if a node is
    /// not a physical state.
    fn cell_entropy(&self, cell: &[StateVec]) -> Option<f64> {
        let mut s = 0.0;
        for (n, u) in cell.iter().enumerate() {
            s += self.unit_weight(n) * entropy_pair(&ConservedState(*u), &self.eos).ok()?.0;
        }
        Some(s)
    }

    /// Replaces `limited` by `mean + theta (limited - mean)` with the largest
    /// `theta` in `[0, 1]` keeping the cell entropy at or below that of
    /// `original`. The cell entropy is convex in `theta` and, by Jensen's
    /// inequality, not above the original at `theta = 0`, so the admissible
    /// `theta` form an interval found by bisection. Limited data that left
    /// the physical set count as a violation; cells whose original data are
    /// not physical are left to the positivity stage.
    fn entropy_guard(&self, original: &[StateVec], mean: &StateVec, limited: &mut [StateVec]) {
        let Some(s0) = self.cell_entropy(original) else {
            return;
        };
        if matches!(self.cell_entropy(limited), Some(s1) if s1 <= s0) {
            return;
        }
        let target: Vec<StateVec> = limited.to_vec();
        let blend = |theta: f64, out: &mut [StateVec]| {
            for (o, t) in out.iter_mut().zip(&target) {
                for k in 0..NCOMP {
                    o[k] = mean[k] + theta * (t[k] - mean[k]);
                }
            }
        };
        let mut trial = target.clone();
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            blend(mid, &mut trial);
            match self.cell_entropy(&trial) {
                Some(s) if s <= s0 => lo = mid,
                _ => hi = mid,
            }
        }
        blend(lo, limited);
    }

    /// Positivity limiter. Returns the number of scaled cells and the
    /// smallest scaling factor used.
    pub fn pcp_limit(&self, field: &mut DGField) -> Result<(usize, f64)> {
        field.check_shape(&self.mesh, &self.op)?;
        let eps = self.config.pcp_epsilon;
        let npc = field.nodes_per_cell();
        let eos = self.eos;
        let weights: Vec<f64> = (0..npc).map(|n| self.unit_weight(n)).collect();
        let thetas: Vec<f64> = field
            .data_mut()
            .par_chunks_mut(npc)
            .enumerate()
            .map(|(c, cell)| {
                if cell.iter().all(|u| check_admissible(u, &eos, eps).is_ok()) {
                    return Ok(1.0);
                }
                let mut mean = [0.0; NCOMP];
                for (u, w) in cell.iter().zip(&weights) {
                    for k in 0..NCOMP {
                        mean[k] += w * u[k];
                    }
                }
                check_admissible(&mean, &eos, eps)
                    .map_err(|reason| Error::InadmissibleCellAverage { cell: c, reason })?;
                let scaled = |theta: f64, u: &StateVec| {
                    let mut s = [0.0; NCOMP];
                    for k in 0..NCOMP {
                        s[k] = theta * (u[k] - mean[k]) + mean[k];
                    }
                    s
                };
                let ok = |theta: f64| {
                    cell.iter()
                        .all(|u| check_admissible(&scaled(theta, u), &eos, eps).is_ok())
                };
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..40 {
                    let mid = 0.5 * (lo + hi);
                    if ok(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                for u in cell.iter_mut() {
                    *u = scaled(lo, u);
                }
                Ok(lo)
            })
            .collect::<Result<_>>()?;
        let scaled = thetas.iter().filter(|&&t| t < 1.0).count();
        Ok((scaled, thetas.iter().copied().fold(1.0, f64::min)))
    }
}

/// Right and left eigenvectors of a finite-difference Jacobian of the flux
/// in direction `dir` at `u`, ordered by eigenvalue. `None` when the state
/// cannot be differentiated, the spectrum is not real, or the eigenvector
/// matrix is ill conditioned.
pub fn characteristic_basis(u: &StateVec, eos: &EosParams, dir: Direction) -> Option<(Mat8, Mat8)> {
    let a = flux_jacobian(u, eos, dir)?;
    let scale = 1.0 + a.amax();
    let eig = a.complex_eigenvalues();
    if eig.iter().any(|z| z.im.abs() > 1e-6 * scale) {
        return None;
    }
    let mut lams: Vec<f64> = eig.iter().map(|z| z.re).collect();
    lams.sort_by(|x, y| x.total_cmp(y));
    let tol = 1e-6 * scale;
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for lam in lams {
        match clusters.last_mut() {
            Some(cl) if lam - cl[cl.len() - 1] <= tol => cl.push(lam),
            _ => clusters.push(vec![lam]),
        }
    }
    let mut r = Mat8::zeros();
    let mut col = 0;
    for cl in &clusters {
        let lam = cl.iter().sum::<f64>() / cl.len() as f64;
        let shifted = a - Mat8::identity() * lam;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t?;
        let mut order: Vec<usize> = (0..NCOMP).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        for &i in order.iter().take(cl.len()) {
            r.set_column(col, &vt.row(i).transpose());
            col += 1;
        }
    }
    let l = r.try_inverse()?;
    if r.norm() * l.norm() > 1e10 {
        return None;
    }
    Some((r, l))
}

fn flux_jacobian(u: &StateVec, eos: &EosParams, dir: Direction) -> Option<Mat8> {
    let flux = |x: &StateVec| -> Option<StateVec> {
        let p = cons_to_prim(&ConservedState(*x), eos).ok()?;
        Some(physical_flux_prim(&p, eos, dir))
    };
    let umax = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut jac = Mat8::zeros();
    for j in 0..NCOMP {
        let h = 1e-7 * u[j].abs().max(1e-3 * umax);
        let (mut up, mut um) = (*u, *u);
        up[j] += h;
        um[j] -= h;
        let (fp, fm) = (flux(&up)?, flux(&um)?);
        for i in 0..NCOMP {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Some(jac)
}
