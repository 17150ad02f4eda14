//! Entropy pair, entropy variables, the Godunov-Powell potential `Phi` and the
//! entropy potentials `psi_k`.
//!
//! The `_prim` variants assume an admissible primitive state and never fail;
//! the conserved-state variants run the primitive recovery first.

use super::{
    auxiliaries_unchecked, cons_to_prim, AuxiliaryState, ConservedState, Direction, EosParams,
    PrimitiveState, StateVec,
};
use crate::error::Result;

/// `V = eta'(U)^T`. For admissible states `V[4] = -rho W / p < 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyVars(pub StateVec);

impl EntropyVars {
    /// `Phi(V) = -(V2 V6 + V3 V7 + V4 V8) / V5`, homogeneous of degree one.
    pub fn phi(&self) -> f64 {
        let v = &self.0;
        -(v[1] * v[5] + v[2] * v[6] + v[3] * v[7]) / v[4]
    }

    /// Gradient of [`EntropyVars::phi`] with respect to `V`.
    pub fn phi_prime(&self) -> StateVec {
        let v = &self.0;
        let inv = 1.0 / v[4];
        let num = v[1] * v[5] + v[2] * v[6] + v[3] * v[7];
        [
            0.0,
            -v[5] * inv,
            -v[6] * inv,
            -v[7] * inv,
            num * inv * inv,
            -v[1] * inv,
            -v[2] * inv,
            -v[3] * inv,
        ]
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.0;
        out.iter_mut().for_each(|x| *x *= c);
        Self(out)
    }
}

pub fn phi(v: &EntropyVars) -> f64 {
    v.phi()
}

pub fn phi_prime(v: &EntropyVars) -> StateVec {
    v.phi_prime()
}

/// `eta = -rho W s / (Gamma - 1)` and `q = v eta`.
pub fn entropy_pair_prim(prim: &PrimitiveState, eos: &EosParams) -> (f64, [f64; 3]) {
    let aux = auxiliaries_unchecked(prim, eos);
    let eta = -prim.rho * aux.w * aux.s / (eos.gamma() - 1.0);
    (eta, [prim.v[0] * eta, prim.v[1] * eta, prim.v[2] * eta])
}

pub fn entropy_pair(u: &ConservedState, eos: &EosParams) -> Result<(f64, [f64; 3])> {
    Ok(entropy_pair_prim(&cons_to_prim(u, eos)?, eos))
}

pub(crate) fn entropy_variables_aux(
    prim: &PrimitiveState,
    aux: &AuxiliaryState,
    eos: &EosParams,
) -> EntropyVars {
    let g = eos.gamma();
    let beta = prim.rho / prim.p;
    EntropyVars([
        (g - aux.s) / (g - 1.0) + beta,
        beta * aux.u[0],
        beta * aux.u[1],
        beta * aux.u[2],
        -beta * aux.w,
        beta * aux.b[0],
        beta * aux.b[1],
        beta * aux.b[2],
    ])
}

pub fn entropy_variables_prim(prim: &PrimitiveState, eos: &EosParams) -> EntropyVars {
    entropy_variables_aux(prim, &auxiliaries_unchecked(prim, eos), eos)
}

pub fn entropy_variables(u: &ConservedState, eos: &EosParams) -> Result<EntropyVars> {
    Ok(entropy_variables_prim(&cons_to_prim(u, eos)?, eos))
}

/// `Phi = rho W (v.B) / p` evaluated from primitives.
pub fn phi_prim(prim: &PrimitiveState, eos: &EosParams) -> f64 {
    let aux = auxiliaries_unchecked(prim, eos);
    prim.rho * aux.w * aux.v_dot_b / prim.p
}

pub(crate) fn phi_prime_aux(prim: &PrimitiveState, aux: &AuxiliaryState) -> StateVec {
    let iw = 1.0 / aux.w;
    [
        0.0,
        aux.b[0] * iw,
        aux.b[1] * iw,
        aux.b[2] * iw,
        aux.v_dot_b,
        prim.v[0],
        prim.v[1],
        prim.v[2],
    ]
}

/// `Phi'(V) = (0, b/W, v.B, v)` evaluated from primitives.
pub fn phi_prime_prim(prim: &PrimitiveState, eos: &EosParams) -> StateVec {
    phi_prime_aux(prim, &auxiliaries_unchecked(prim, eos))
}

pub(crate) fn entropy_potential_aux(
    prim: &PrimitiveState,
    aux: &AuxiliaryState,
    dir: Direction,
) -> f64 {
    let uk = aux.u[dir.index()];
    prim.rho * uk * (1.0 + 0.5 * aux.bsq / prim.p)
}

/// `psi_k = rho u^k + beta u^k b^2 / 2`.
pub fn entropy_potential_prim(prim: &PrimitiveState, eos: &EosParams, dir: Direction) -> f64 {
    entropy_potential_aux(prim, &auxiliaries_unchecked(prim, eos), dir)
}

pub fn entropy_potential(u: &ConservedState, eos: &EosParams, dir: Direction) -> Result<f64> {
    Ok(entropy_potential_prim(&cons_to_prim(u, eos)?, eos, dir))
}

/// `V^T F_k + Phi B_k - q_k`, the defining combination of `psi_k`.
#[cfg(test)]
pub(crate) fn potential_identity_rhs(
    prim: &PrimitiveState,
    eos: &EosParams,
    dir: Direction,
) -> f64 {
    let v = entropy_variables_prim(prim, eos);
    let f = super::physical_flux_prim(prim, eos, dir);
    let (_, q) = entropy_pair_prim(prim, eos);
    let vf: f64 = (0..super::NCOMP).map(|i| v.0[i] * f[i]).sum();
    vf + v.phi() * prim.b[dir.index()] - q[dir.index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{sample_primitive, SampleRanges};
    use crate::physics::{physical_flux, prim_to_cons, IDX_B, NCOMP};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eos(g: f64) -> EosParams {
        EosParams::new(g).unwrap()
    }

    #[test]
    fn entropy_pair_examples() {
        let e = eos(2.0);
        let (eta, q) = entropy_pair_prim(
            &PrimitiveState::new(1.0, [0.3, 0.1, -0.2], 1.0, [1.0; 3]),
            &e,
        );
        assert!(eta.abs() < 1e-15);
        assert!(q.iter().all(|x| x.abs() < 1e-15));
        let (eta, _) = entropy_pair_prim(
            &PrimitiveState::new(0.125, [0.0; 3], 0.1, [0.5, -1.0, 0.0]),
            &e,
        );
        let expected = -0.125 * (0.1f64.ln() - 2.0 * 0.125f64.ln());
        assert!((eta - expected).abs() < 1e-15);
    }

    #[test]
    fn entropy_variables_examples() {
        let v = entropy_variables_prim(
            &PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.5, 1.0, 0.0]),
            &eos(2.0),
        );
        let expected = [3.0, 0.0, 0.0, 0.0, -1.0, 0.5, 1.0, 0.0];
        for k in 0..NCOMP {
            assert!((v.0[k] - expected[k]).abs() < 1e-15);
        }
        let v = entropy_variables_prim(
            &PrimitiveState::new(2.0, [0.4, 0.1, 0.0], 0.3, [0.0; 3]),
            &eos(5.0 / 3.0),
        );
        assert_eq!(&v.0[IDX_B..], &[0.0; 3]);
        assert!(v.0[4] < 0.0);
    }

    /// Fourth-order central difference of `f(u + t e_j)` at `t = 0`.
    fn fd_derivative(f: impl Fn(&StateVec) -> f64, u: &StateVec, j: usize) -> f64 {
        let h = 1e-4 * u[j].abs().max(1e-2);
        let at = |t: f64| {
            let mut x = *u;
            x[j] += t;
            f(&x)
        };
        (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h)
    }

    fn fd_gradient(f: impl Fn(&StateVec) -> f64, u: &StateVec) -> StateVec {
        let mut g = [0.0; NCOMP];
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = fd_derivative(&f, u, j);
        }
        g
    }

    #[test]
    fn entropy_variables_are_gradient_of_eta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ranges = SampleRanges {
            max_speed: 0.9,
            ..SampleRanges::default()
        };
        for _ in 0..200 {
            let g = if rand::Rng::gen_bool(&mut rng, 0.5) {
                2.0
            } else {
                5.0 / 3.0
            };
            let e = eos(g);
            let prim = sample_primitive(&mut rng, &ranges);
            let u = prim_to_cons(&prim, &e).unwrap();
            let v = entropy_variables_prim(&prim, &e);
            let grad = fd_gradient(|x| entropy_pair(&ConservedState(*x), &e).unwrap().0, &u.0);
            let scale = v.0.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            for k in 0..NCOMP {
                assert!(
                    (grad[k] - v.0[k]).abs() < 1e-5 * scale,
                    "component {k}: fd {} vs {} for {prim:?}",
                    grad[k],
                    v.0[k]
                );
            }
        }
    }

    #[test]
    fn entropy_flux_relation_with_powell_term() {
        // q_1'(U) = V^T F_1'(U) + Phi dB_x/dU
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ranges = SampleRanges {
            max_speed: 0.9,
            ..SampleRanges::default()
        };
        for _ in 0..100 {
            let e = eos(5.0 / 3.0);
            let prim = sample_primitive(&mut rng, &ranges);
            let u = prim_to_cons(&prim, &e).unwrap();
            let v = entropy_variables_prim(&prim, &e);
            let phi = v.phi();
            let dq = fd_gradient(
                |x| entropy_pair(&ConservedState(*x), &e).unwrap().1[0],
                &u.0,
            );
            let mut max_res = 0.0f64;
            let mut scale = 1.0f64;
            for j in 0..NCOMP {
                let dfj: Vec<f64> = (0..NCOMP)
                    .map(|i| {
                        fd_derivative(
                            |x| physical_flux(&ConservedState(*x), &e, Direction::X).unwrap()[i],
                            &u.0,
                            j,
                        )
                    })
                    .collect();
                let vdf: f64 = (0..NCOMP).map(|i| v.0[i] * dfj[i]).sum();
                let src = if j == IDX_B { phi } else { 0.0 };
                max_res = max_res.max((dq[j] - vdf - src).abs());
                let terms: f64 = (0..NCOMP).map(|i| (v.0[i] * dfj[i]).abs()).sum();
                scale = scale.max(dq[j].abs() + terms + src.abs());
            }
            assert!(
                max_res < 1e-6 * scale,
                "residual {max_res} (scale {scale}) at {prim:?}"
            );
        }
    }

    #[test]
    fn phi_two_formulas_agree() {
        let e = eos(5.0 / 3.0);
        let prim = PrimitiveState::new(1.0, [0.0, 0.3, 0.4], 5.0, [1.0, 6.0, 2.0]);
        let v = entropy_variables_prim(&prim, &e);
        assert!((v.phi() - phi_prim(&prim, &e)).abs() < 1e-13);
        let pp = phi_prime_prim(&prim, &e);
        let pv = v.phi_prime();
        for k in 0..NCOMP {
            assert!((pp[k] - pv[k]).abs() < 1e-13);
        }
        let orth = PrimitiveState::new(1.0, [0.0, 0.3, 0.0], 1.0, [1.0, 0.0, 2.0]);
        assert_eq!(phi_prim(&orth, &e), 0.0);
    }

    #[test]
    fn phi_is_homogeneous_of_degree_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let e = eos(2.0);
        for _ in 0..500 {
            let v =
                entropy_variables_prim(&sample_primitive(&mut rng, &SampleRanges::default()), &e);
            let p = v.phi();
            let euler: f64 = (0..NCOMP).map(|k| v.phi_prime()[k] * v.0[k]).sum();
            assert!((euler - p).abs() <= 1e-12 * p.abs().max(1.0));
            // Powers of two scale without rounding.
            for c in [0.5, 2.0] {
                assert_eq!(v.scaled(c).phi(), c * p);
            }
            let terms = (v.0[1] * v.0[5]).abs() + (v.0[2] * v.0[6]).abs() + (v.0[3] * v.0[7]).abs();
            let scaled = v.scaled(10.0).phi();
            assert!((scaled - 10.0 * p).abs() <= 1e-14 * 10.0 * terms / v.0[4].abs());
        }
    }

    #[test]
    fn potential_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for i in 0..2000 {
            let e = eos(if i % 2 == 0 { 2.0 } else { 5.0 / 3.0 });
            let prim = sample_primitive(&mut rng, &SampleRanges::default());
            for dir in Direction::ALL {
                let psi = entropy_potential_prim(&prim, &e, dir);
                let rhs = potential_identity_rhs(&prim, &e, dir);
                let v = entropy_variables_prim(&prim, &e);
                let f = crate::physics::physical_flux_prim(&prim, &e, dir);
                let scale = (0..NCOMP)
                    .map(|k| (v.0[k] * f[k]).abs())
                    .sum::<f64>()
                    .max(1.0);
                assert!(
                    (psi - rhs).abs() < 1e-12 * scale,
                    "{psi} vs {rhs} ({prim:?}, {dir:?})"
                );
            }
        }
    }

    #[test]
    fn potential_limits() {
        let e = eos(5.0 / 3.0);
        let rest = PrimitiveState::new(1.3, [0.0; 3], 0.7, [1.0, 2.0, 3.0]);
        for dir in Direction::ALL {
            assert_eq!(entropy_potential_prim(&rest, &e, dir), 0.0);
        }
        let hydro = PrimitiveState::new(1.3, [0.3, -0.2, 0.5], 0.7, [0.0; 3]);
        let aux = auxiliaries_unchecked(&hydro, &e);
        for dir in Direction::ALL {
            let k = dir.index();
            assert!(
                (entropy_potential_prim(&hydro, &e, dir) - hydro.rho * aux.w * hydro.v[k]).abs()
                    < 1e-15
            );
        }
    }
}
