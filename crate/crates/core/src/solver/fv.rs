//! First-order local Lax-Friedrichs finite-volume solver in 1D, used to build
//! fine-mesh reference profiles for shock problems.

use rayon::prelude::*;

use super::BoundaryCondition;
use crate::error::{Error, Result};
use crate::fluxes::lax_friedrichs;
use crate::physics::{
    cons_to_prim_with_guess, fast_speed_bound, physical_flux_prim, prim_to_cons, ConservedState,
    Direction, EosParams, PrimitiveState, StateVec, NCOMP,
};

/// A 1D initial-boundary value problem for the reference solver.
pub struct FvSetup<'a> {
    pub eos: EosParams,
    pub x_range: (f64, f64),
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub initial: &'a (dyn Fn(f64) -> PrimitiveState + Sync),
}

/// Cell-centre positions and primitive cell averages.
#[derive(Clone, Debug, PartialEq)]
pub struct FvProfile {
    pub x: Vec<f64>,
    pub prim: Vec<PrimitiveState>,
}

impl FvProfile {
    /// Piecewise-constant evaluation (the cell containing `x`, clamped).
    pub fn sample(&self, x: f64) -> PrimitiveState {
        let n = self.x.len();
        let x0 = self.x[0];
        let dx = if n > 1 { self.x[1] - self.x[0] } else { 1.0 };
        let i = ((x - x0) / dx + 0.5).floor();
        self.prim[(i.max(0.0) as usize).min(n - 1)]
    }
}

pub const FV_DEFAULT_CFL: f64 = 0.8;

pub fn fv_reference_solve(
    setup: &FvSetup<'_>,
    cells: usize,
    t_end: f64,
    cfl: f64,
) -> Result<FvProfile> {
    if cells < 2 {
        return Err(Error::InvalidConfig(format!(
            "reference solver needs at least 2 cells, got {cells}"
        )));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "reference cfl {cfl} outside (0, 1]"
        )));
    }
    if matches!(setup.left, BoundaryCondition::ShiftedPeriodic { .. })
        || matches!(setup.right, BoundaryCondition::ShiftedPeriodic { .. })
        || (setup.left == BoundaryCondition::Periodic)
            != (setup.right == BoundaryCondition::Periodic)
    {
        return Err(Error::InvalidConfig(
            "unsupported reference boundaries".into(),
        ));
    }
    let eos = setup.eos;
    let (x0, x1) = setup.x_range;
    let dx = (x1 - x0) / cells as f64;
    let x: Vec<f64> = (0..cells).map(|i| x0 + (i as f64 + 0.5) * dx).collect();
    let mut u: Vec<StateVec> = x
        .iter()
        .map(|&xi| prim_to_cons(&(setup.initial)(xi), &eos).map(|c| c.0))
        .collect::<Result<_>>()?;
    let ghost_l = u[0];
    let ghost_r = u[cells - 1];
    let mut z: Vec<f64> = vec![f64::NAN; cells];
    let mut prim: Vec<PrimitiveState> =
        vec![PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.0; 3]); cells];
    let mut t = 0.0;
    let dt_max = cfl * dx;
    loop {
        prim.par_iter_mut()
            .zip(z.par_iter_mut())
            .zip(u.par_iter())
            .try_for_each(|((p, zi), ui)| {
                let guess = if zi.is_finite() { Some(*zi) } else { None };
                let rec = cons_to_prim_with_guess(&ConservedState(*ui), &eos, guess)?;
                *p = rec.prim;
                *zi = rec.z;
                Ok::<(), Error>(())
            })?;
        if t >= t_end {
            break;
        }
        let dt = dt_max.min(t_end - t);
        let f: Vec<StateVec> = prim
            .par_iter()
            .map(|p| physical_flux_prim(p, &eos, Direction::X))
            .collect();
        let speed: Vec<f64> = prim
            .par_iter()
            .map(|p| fast_speed_bound(p, &eos, Direction::X))
            .collect();
        let ghost = |bc: BoundaryCondition,
                     own: usize,
                     wrap: usize,
                     frozen: &StateVec|
         -> Result<(StateVec, StateVec, f64)> {
            match bc {
                BoundaryCondition::Periodic => Ok((u[wrap], f[wrap], speed[wrap])),
                BoundaryCondition::Outflow => Ok((u[own], f[own], speed[own])),
                BoundaryCondition::Dirichlet => {
                    let p = cons_to_prim_with_guess(&ConservedState(*frozen), &eos, None)?.prim;
                    Ok((
                        *frozen,
                        physical_flux_prim(&p, &eos, Direction::X),
                        fast_speed_bound(&p, &eos, Direction::X),
                    ))
                }
                BoundaryCondition::ShiftedPeriodic { .. } => unreachable!("rejected above"),
            }
        };
        let (ul, fl, sl) = ghost(setup.left, 0, cells - 1, &ghost_l)?;
        let (ur, fr, sr) = ghost(setup.right, cells - 1, 0, &ghost_r)?;
        // Interface k sits between cells k-1 and k.
        let fluxes: Vec<StateVec> = (0..=cells)
            .into_par_iter()
            .map(|k| {
                let (a_u, a_f, a_s) = if k == 0 {
                    (&ul, &fl, sl)
                } else {
                    (&u[k - 1], &f[k - 1], speed[k - 1])
                };
                let (b_u, b_f, b_s) = if k == cells {
                    (&ur, &fr, sr)
                } else {
                    (&u[k], &f[k], speed[k])
                };
                lax_friedrichs(a_f, b_f, a_u, b_u, a_s.max(b_s))
            })
            .collect();
        let lambda = dt / dx;
        u.par_iter_mut().enumerate().for_each(|(i, ui)| {
            for c in 0..NCOMP {
                ui[c] -= lambda * (fluxes[i + 1][c] - fluxes[i][c]);
            }
        });
        t += dt;
        if t_end - t < 1e-14 * t_end.max(1.0) {
            t = t_end;
        }
    }
    Ok(FvProfile { x, prim })
}
