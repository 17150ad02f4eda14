//! State algebra for ideal special relativistic MHD in the laboratory frame.
//!
//! Units with `c = 1`. The evolved vector is `U = (D, m, E, B)` with
//! `D = rho W`, `m = (rho h W^2 + |B|^2) v - (v.B) B` and
//! `E = rho h W - p_t + |B|^2`; `p_t = p + b^2 / 2` is the total pressure.

mod entropy;
mod flux;
mod recovery;

pub use entropy::{
    entropy_pair, entropy_pair_prim, entropy_potential, entropy_potential_prim, entropy_variables,
    entropy_variables_prim, phi, phi_prim, phi_prime, phi_prime_prim, EntropyVars,
};
pub use flux::{fast_speed_bound, max_signal_speed, physical_flux, physical_flux_prim};
pub use recovery::{cons_to_prim, cons_to_prim_with_guess, Recovered};

pub(crate) use entropy::phi_prime_aux;
pub(crate) use flux::{fast_speed_bound_aux, physical_flux_aux};

use crate::error::{Error, Result};

/// Number of evolved components.
pub const NCOMP: usize = 8;

/// Raw 8-component vector in the ordering `(D, m_x, m_y, m_z, E, B_x, B_y, B_z)`.
pub type StateVec = [f64; NCOMP];

/// Index of the first magnetic component inside a [`StateVec`].
pub const IDX_B: usize = 5;

/// Ideal-gas equation of state `p = (Gamma - 1) rho eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EosParams {
    gamma: f64,
}

impl EosParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 2.0) {
            return Err(Error::InvalidGamma(gamma));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Gamma / (Gamma - 1)`, the factor in `rho h = rho + Gamma / (Gamma - 1) p`.
    pub fn enthalpy_factor(&self) -> f64 {
        self.gamma / (self.gamma - 1.0)
    }

    pub fn specific_enthalpy(&self, rho: f64, p: f64) -> f64 {
        1.0 + self.enthalpy_factor() * p / rho
    }
}

/// Spatial direction of a flux or a mesh axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    X,
    Y,
    Z,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X, Direction::Y, Direction::Z];

    pub fn index(self) -> usize {
        match self {
            Direction::X => 0,
            Direction::Y => 1,
            Direction::Z => 2,
        }
    }

    /// Cyclic relabelling that moves this direction into the `x` slot:
    /// `permuted[k] = original[perm[k]]`.
    pub(crate) fn cyclic_permutation(self) -> [usize; 3] {
        match self {
            Direction::X => [0, 1, 2],
            Direction::Y => [1, 2, 0],
            Direction::Z => [2, 0, 1],
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm2(a: &[f64; 3]) -> f64 {
    dot(a, a)
}

/// Lorentz factor `W = 1 / sqrt(1 - |v|^2)`.
pub fn lorentz_factor(v: &[f64; 3]) -> Result<f64> {
    let v2 = norm2(v);
    if !(v2 < 1.0) {
        return Err(Error::InadmissibleVelocity(v2));
    }
    Ok(1.0 / (1.0 - v2).sqrt())
}

/// Rest-frame description of a fluid element and the laboratory magnetic field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub v: [f64; 3],
    pub p: f64,
    pub b: [f64; 3],
}

impl PrimitiveState {
    pub fn new(rho: f64, v: [f64; 3], p: f64, b: [f64; 3]) -> Self {
        Self { rho, v, p, b }
    }

    pub fn check_admissible(&self) -> Result<()> {
        let finite = self.rho.is_finite()
            && self.p.is_finite()
            && self.v.iter().chain(self.b.iter()).all(|x| x.is_finite());
        if !finite {
            return Err(Error::InadmissiblePrimitive(format!(
                "non-finite entry in {self:?}"
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::InadmissiblePrimitive(format!("rho = {}", self.rho)));
        }
        if !(self.p > 0.0) {
            return Err(Error::InadmissiblePrimitive(format!("p = {}", self.p)));
        }
        let v2 = norm2(&self.v);
        if !(v2 < 1.0) {
            return Err(Error::InadmissibleVelocity(v2));
        }
        Ok(())
    }

    /// Same state with vector components relabelled so that `dir` becomes `x`.
    pub fn permuted(&self, dir: Direction) -> Self {
        let perm = dir.cyclic_permutation();
        Self {
            rho: self.rho,
            v: [self.v[perm[0]], self.v[perm[1]], self.v[perm[2]]],
            p: self.p,
            b: [self.b[perm[0]], self.b[perm[1]], self.b[perm[2]]],
        }
    }
}

/// Conserved laboratory-frame vector `(D, m, E, B)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedState(pub StateVec);

impl ConservedState {
    pub fn d(&self) -> f64 {
        self.0[0]
    }

    pub fn m(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    pub fn e(&self) -> f64 {
        self.0[4]
    }

    pub fn b(&self) -> [f64; 3] {
        [self.0[5], self.0[6], self.0[7]]
    }

    pub fn as_array(&self) -> &StateVec {
        &self.0
    }
}

impl From<StateVec> for ConservedState {
    fn from(a: StateVec) -> Self {
        Self(a)
    }
}

/// Derived four-vector and thermodynamic quantities of a primitive state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxiliaryState {
    /// Lorentz factor.
    pub w: f64,
    /// Spatial four-velocity `u^k = W v^k`.
    pub u: [f64; 3],
    /// `b^0 = W (v.B)`.
    pub b0: f64,
    /// Spatial covariant field `b^k = B^k / W + u^k (v.B)`.
    pub b: [f64; 3],
    /// `b^alpha b_alpha = |B|^2 / W^2 + (v.B)^2`.
    pub bsq: f64,
    pub h: f64,
    /// Thermodynamic entropy `ln p - Gamma ln rho`.
    pub s: f64,
    /// Total pressure `p + b^2 / 2`.
    pub pt: f64,
    pub v_dot_b: f64,
}

pub fn auxiliaries(prim: &PrimitiveState, eos: &EosParams) -> Result<AuxiliaryState> {
    prim.check_admissible()?;
    Ok(auxiliaries_unchecked(prim, eos))
}

pub(crate) fn auxiliaries_unchecked(prim: &PrimitiveState, eos: &EosParams) -> AuxiliaryState {
    let v = &prim.v;
    let bb = &prim.b;
    let w = 1.0 / (1.0 - norm2(v)).sqrt();
    let vb = dot(v, bb);
    let u = [w * v[0], w * v[1], w * v[2]];
    let b = [
        bb[0] / w + u[0] * vb,
        bb[1] / w + u[1] * vb,
        bb[2] / w + u[2] * vb,
    ];
    let bsq = norm2(bb) / (w * w) + vb * vb;
    let h = eos.specific_enthalpy(prim.rho, prim.p);
    AuxiliaryState {
        w,
        u,
        b0: w * vb,
        b,
        bsq,
        h,
        s: prim.p.ln() - eos.gamma() * prim.rho.ln(),
        pt: prim.p + 0.5 * bsq,
        v_dot_b: vb,
    }
}

pub fn prim_to_cons(prim: &PrimitiveState, eos: &EosParams) -> Result<ConservedState> {
    prim.check_admissible()?;
    Ok(prim_to_cons_unchecked(prim, eos))
}

pub(crate) fn prim_to_cons_unchecked(prim: &PrimitiveState, eos: &EosParams) -> ConservedState {
    let aux = auxiliaries_unchecked(prim, eos);
    let b2 = norm2(&prim.b);
    let rhohw2 = prim.rho * aux.h * aux.w * aux.w;
    let d = prim.rho * aux.w;
    let mut out = [0.0; NCOMP];
    out[0] = d;
    for k in 0..3 {
        out[1 + k] = (rhohw2 + b2) * prim.v[k] - aux.v_dot_b * prim.b[k];
        out[IDX_B + k] = prim.b[k];
    }
    out[4] = rhohw2 - aux.pt + b2;
    ConservedState(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eos(g: f64) -> EosParams {
        EosParams::new(g).unwrap()
    }

    #[test]
    fn gamma_range_is_enforced() {
        assert!(EosParams::new(1.0).is_err());
        assert!(EosParams::new(2.0).is_ok());
        assert!(EosParams::new(2.01).is_err());
        assert!(EosParams::new(f64::NAN).is_err());
    }

    #[test]
    fn lorentz_factor_examples() {
        assert_eq!(lorentz_factor(&[0.0; 3]).unwrap(), 1.0);
        assert!((lorentz_factor(&[0.6, 0.0, 0.0]).unwrap() - 1.25).abs() < 1e-15);
        let c = 0.5 * 2f64.sqrt() * (-1.0 / 2f64.sqrt());
        let w = lorentz_factor(&[c, c, 0.0]).unwrap();
        assert!((w - 2f64.sqrt()).abs() < 1e-14);
        assert!(matches!(
            lorentz_factor(&[1.0, 0.0, 0.0]),
            Err(Error::InadmissibleVelocity(_))
        ));
        assert!(lorentz_factor(&[0.8, 0.7, 0.0]).is_err());
    }

    #[test]
    fn prim_to_cons_static_states() {
        let u = prim_to_cons(
            &PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.5, 1.0, 0.0]),
            &eos(2.0),
        )
        .unwrap();
        assert_eq!(u.d(), 1.0);
        assert_eq!(u.m(), [0.0; 3]);
        assert!((u.e() - 2.625).abs() < 1e-15);
        assert_eq!(u.b(), [0.5, 1.0, 0.0]);

        let u = prim_to_cons(
            &PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.0; 3]),
            &eos(5.0 / 3.0),
        )
        .unwrap();
        assert_eq!(u.0, [1.0, 0.0, 0.0, 0.0, 2.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn prim_to_cons_rejects_bad_states() {
        let e = eos(5.0 / 3.0);
        assert!(prim_to_cons(&PrimitiveState::new(-1.0, [0.0; 3], 1.0, [0.0; 3]), &e).is_err());
        assert!(prim_to_cons(&PrimitiveState::new(1.0, [0.0; 3], 0.0, [0.0; 3]), &e).is_err());
        assert!(prim_to_cons(
            &PrimitiveState::new(1.0, [1.0, 0.0, 0.0], 1.0, [0.0; 3]),
            &e
        )
        .is_err());
    }

    #[test]
    fn auxiliaries_at_rest() {
        let aux = auxiliaries(
            &PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.5, 1.0, 0.0]),
            &eos(2.0),
        )
        .unwrap();
        assert_eq!(aux.w, 1.0);
        assert_eq!(aux.b0, 0.0);
        assert_eq!(aux.b, [0.5, 1.0, 0.0]);
        assert!((aux.bsq - 1.25).abs() < 1e-15);
        assert_eq!(aux.s, 0.0);
    }

    #[test]
    fn four_vector_identities() {
        // Riemann III left state.
        let prim = PrimitiveState::new(1.0, [0.0, 0.3, 0.4], 5.0, [1.0, 6.0, 2.0]);
        let aux = auxiliaries(&prim, &eos(5.0 / 3.0)).unwrap();
        let u_u = -aux.w * aux.w + norm2(&aux.u);
        assert!((u_u + 1.0).abs() < 1e-13);
        let u_b = -aux.w * aux.b0 + dot(&aux.u, &aux.b);
        assert!(u_b.abs() < 1e-13);
        let b_b = -aux.b0 * aux.b0 + norm2(&aux.b);
        assert!((b_b - aux.bsq).abs() < 1e-12);
    }

    #[test]
    fn permutation_moves_direction_into_x() {
        let p = PrimitiveState::new(1.0, [0.1, 0.2, 0.3], 1.0, [1.0, 2.0, 3.0]);
        let py = p.permuted(Direction::Y);
        assert_eq!(py.v, [0.2, 0.3, 0.1]);
        let pz = p.permuted(Direction::Z);
        assert_eq!(pz.b, [3.0, 1.0, 2.0]);
    }
}
