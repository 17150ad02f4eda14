//! Physical fluxes and the signal-speed bound.

use super::{
    auxiliaries_unchecked, cons_to_prim, norm2, AuxiliaryState, ConservedState, Direction,
    EosParams, PrimitiveState, StateVec, IDX_B, NCOMP,
};
use crate::error::Result;

pub(crate) fn physical_flux_aux(
    prim: &PrimitiveState,
    aux: &AuxiliaryState,
    eos: &EosParams,
    dir: Direction,
) -> StateVec {
    let k = dir.index();
    let v = &prim.v;
    let b = &prim.b;
    let iw2 = 1.0 / (aux.w * aux.w);
    let vb = aux.v_dot_b;
    let rhohw2 = prim.rho * eos.specific_enthalpy(prim.rho, prim.p) * aux.w * aux.w;
    let b2 = norm2(b);
    let mut f = [0.0; NCOMP];
    f[0] = prim.rho * aux.w * v[k];
    for j in 0..3 {
        let mj = (rhohw2 + b2) * v[j] - vb * b[j];
        f[1 + j] = mj * v[k] - b[k] * (b[j] * iw2 + vb * v[j]);
        f[IDX_B + j] = v[k] * b[j] - b[k] * v[j];
    }
    f[1 + k] += aux.pt;
    f[4] = (rhohw2 + b2) * v[k] - vb * b[k];
    // Exact zero for the parallel field, independent of rounding.
    f[IDX_B + k] = 0.0;
    f
}

/// `F_k = (D v_k, m v_k - B_k (B / W^2 + (v.B) v) + p_t e_k, m_k, v_k B - B_k v)`.
pub fn physical_flux_prim(prim: &PrimitiveState, eos: &EosParams, dir: Direction) -> StateVec {
    physical_flux_aux(prim, &auxiliaries_unchecked(prim, eos), eos, dir)
}

pub fn physical_flux(u: &ConservedState, eos: &EosParams, dir: Direction) -> Result<StateVec> {
    Ok(physical_flux_prim(&cons_to_prim(u, eos)?, eos, dir))
}

/// Direction-free upper bound on the spectral radius of
/// `dF_k/dU + Phi' dB_k/dU`: the speed of light. Sets the time step; the
/// interface dissipation uses the sharper [`fast_speed_bound`].
pub fn max_signal_speed(_u: &ConservedState, _eos: &EosParams) -> f64 {
    1.0
}

/// Upper bound on the characteristic speeds along `dir` from the comoving
/// speed `a^2 = c_s^2 + c_A^2 - c_s^2 c_A^2` boosted by the flow, in the
/// closed form used for relativistic hydrodynamics. Never exceeds one.
pub fn fast_speed_bound_aux(
    prim: &PrimitiveState,
    aux: &AuxiliaryState,
    eos: &EosParams,
    dir: Direction,
) -> f64 {
    let rho_h = prim.rho * aux.h;
    let cs2 = eos.gamma() * prim.p / rho_h;
    let ca2 = aux.bsq / (rho_h + aux.bsq);
    let a2 = (cs2 + ca2 - cs2 * ca2).min(1.0);
    let v2 = norm2(&prim.v);
    let vn = prim.v[dir.index()];
    let den = 1.0 - v2 * a2;
    let disc = (a2 * (1.0 - v2) * (den - vn * vn * (1.0 - a2))).max(0.0);
    let root = disc.sqrt();
    let lp = (vn * (1.0 - a2) + root) / den;
    let lm = (vn * (1.0 - a2) - root) / den;
    lp.abs().max(lm.abs()).min(1.0)
}

pub fn fast_speed_bound(prim: &PrimitiveState, eos: &EosParams, dir: Direction) -> f64 {
    fast_speed_bound_aux(prim, &auxiliaries_unchecked(prim, eos), eos, dir)
}
