//! Two-point numerical fluxes.
//!
//! Jumps are `[a] = a_R - a_L` and means are arithmetic unless marked `ln`.
//! A flux `F` is entropy conservative in direction `k` when
//! `[V].F = [psi_k] - [Phi] <B_k>`, and entropy stable when
//! `[V].F + [Phi] <B_k> - [psi_k] <= 0`.

use crate::error::{Error, Result};
use crate::physics::{
    cons_to_prim, entropy_potential_prim, entropy_variables_prim, fast_speed_bound,
    physical_flux_prim, ConservedState, Direction, EosParams, PrimitiveState, StateVec, IDX_B,
    NCOMP,
};

const LOG_MEAN_SERIES_CUTOFF: f64 = 1e-4;

/// Logarithmic mean `(a - b) / (ln a - ln b)`, continuous at `a = b`.
pub fn log_mean(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::LogMeanDomain(a, b));
    }
    Ok(log_mean_unchecked(a, b))
}

#[inline]
pub(crate) fn log_mean_unchecked(a: f64, b: f64) -> f64 {
    // Fixed argument order keeps the result bitwise symmetric.
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let sum = lo + hi;
    let zeta = (hi - lo) / sum;
    let u = zeta * zeta;
    let f = if u < LOG_MEAN_SERIES_CUTOFF {
        1.0 + u * (1.0 / 3.0 + u * (1.0 / 5.0 + u / 7.0))
    } else {
        (hi / lo).ln() / (2.0 * zeta)
    };
    sum / (2.0 * f)
}

/// Per-state parameters `(rho, beta, u, b)` from which every term of the
/// entropy conservative flux is built; `w = sqrt(1 + |u|^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterVector {
    pub rho: f64,
    pub beta: f64,
    pub u: [f64; 3],
    pub b: [f64; 3],
    pub w: f64,
}

impl ParameterVector {
    pub fn from_prim(prim: &PrimitiveState) -> Self {
        let v = &prim.v;
        let bb = &prim.b;
        let w = 1.0 / (1.0 - (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).sqrt();
        let vb = v[0] * bb[0] + v[1] * bb[1] + v[2] * bb[2];
        let u = [w * v[0], w * v[1], w * v[2]];
        Self {
            rho: prim.rho,
            beta: prim.rho / prim.p,
            u,
            b: [
                bb[0] / w + u[0] * vb,
                bb[1] / w + u[1] * vb,
                bb[2] / w + u[2] * vb,
            ],
            w,
        }
    }

    pub fn permuted(&self, dir: Direction) -> Self {
        let p = dir.cyclic_permutation();
        Self {
            u: [self.u[p[0]], self.u[p[1]], self.u[p[2]]],
            b: [self.b[p[0]], self.b[p[1]], self.b[p[2]]],
            ..*self
        }
    }

    fn u_dot_b(&self) -> f64 {
        self.u[0] * self.b[0] + self.u[1] * self.b[1] + self.u[2] * self.b[2]
    }
}

/// Means and coefficients entering the `x`-direction entropy conservative
/// flux for one pair of states.
#[derive(Clone, Copy, Debug)]
pub struct FluxPairMeans {
    pub rho_ln: f64,
    pub beta_ln: f64,
    pub rho: f64,
    pub beta: f64,
    pub u: [f64; 3],
    pub b: [f64; 3],
    pub w: f64,
    /// Mean of `W^2` (not the square of the mean).
    pub w_sq: f64,
    pub beta_ux_over_w2: f64,
    pub beta_u: [f64; 3],
    /// `<beta u^y b^y / W> + <beta u^z b^z / W>`.
    pub beta_ub_over_w: f64,
    pub w_bx: f64,
    pub ux_over_beta: f64,
    /// `<(b^y)^2> + <(b^z)^2>`.
    pub bt_sq: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub tau: f64,
    pub dcal: f64,
}

#[inline]
fn avg(a: f64, b: f64) -> f64 {
    0.5 * (a + b)
}

impl FluxPairMeans {
    pub fn new(l: &ParameterVector, r: &ParameterVector, eos: &EosParams) -> Self {
        let rho_ln = log_mean_unchecked(l.rho, r.rho);
        let beta_ln = log_mean_unchecked(l.beta, r.beta);
        let beta = avg(l.beta, r.beta);
        let u = [
            avg(l.u[0], r.u[0]),
            avg(l.u[1], r.u[1]),
            avg(l.u[2], r.u[2]),
        ];
        let w = avg(l.w, r.w);
        let w_sq = avg(l.w * l.w, r.w * r.w);
        let ubl = l.u_dot_b();
        let ubr = r.u_dot_b();
        let gl = l.beta * (l.u[1] * l.b[1] + l.u[2] * l.b[2]) / l.w;
        let gr = r.beta * (r.u[1] * r.b[1] + r.u[2] * r.b[2]) / r.w;
        Self {
            rho_ln,
            beta_ln,
            rho: avg(l.rho, r.rho),
            beta,
            u,
            b: [
                avg(l.b[0], r.b[0]),
                avg(l.b[1], r.b[1]),
                avg(l.b[2], r.b[2]),
            ],
            w,
            w_sq,
            beta_ux_over_w2: avg(l.beta * l.u[0] / (l.w * l.w), r.beta * r.u[0] / (r.w * r.w)),
            beta_u: [
                avg(l.beta * l.u[0], r.beta * r.u[0]),
                avg(l.beta * l.u[1], r.beta * r.u[1]),
                avg(l.beta * l.u[2], r.beta * r.u[2]),
            ],
            beta_ub_over_w: avg(gl, gr),
            w_bx: avg(l.w * l.b[0], r.w * r.b[0]),
            ux_over_beta: avg(l.u[0] / l.beta, r.u[0] / r.beta),
            bt_sq: avg(l.b[1] * l.b[1], r.b[1] * r.b[1]) + avg(l.b[2] * l.b[2], r.b[2] * r.b[2]),
            alpha0: 1.0 / ((eos.gamma() - 1.0) * beta_ln) + 1.0,
            alpha1: l.b[0] * r.b[0] * l.w * r.w / (2.0 * w_sq),
            tau: ubl * ubr * l.beta * r.beta / (2.0 * l.w * r.w * beta),
            dcal: beta * (w * w - (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])) / w,
        }
    }

    /// Right-hand side of the linear system for `(F_2, F_3, F_4, F_5)`.
    pub fn system_rhs(&self, f1: f64, f7: f64, f8: f64) -> [f64; 4] {
        let c = self.w_bx / self.w;
        let [ux, uy, uz] = self.u;
        let [_, by, bz] = self.b;
        let g = self.beta_ub_over_w;
        let a1 = self.alpha1;
        let two_a1_m = 2.0 * a1 * self.beta_ux_over_w2;
        [
            -self.alpha0 * f1 - a1 * ux + 0.5 * self.bt_sq * ux - c * (by * uy + bz * uz)
                + self.tau * self.ux_over_beta
                - by * f7
                - bz * f8,
            self.rho - a1 * self.beta
                + two_a1_m * ux
                + 0.5 * self.bt_sq * self.beta
                + c * g * ux / self.w
                - self.tau,
            two_a1_m * uy - c * (self.beta * by - g * uy / self.w),
            two_a1_m * uz - c * (self.beta * bz - g * uz / self.w),
        ]
    }

    /// Closed-form entropy conservative flux in the `x` direction.
    pub fn flux(&self) -> StateVec {
        let mut f = [0.0; NCOMP];
        let c = self.w_bx / self.w;
        f[0] = self.rho_ln * self.u[0];
        f[IDX_B] = 0.0;
        f[IDX_B + 1] = (self.beta_u[0] * self.b[1] - c * self.beta_u[1]) / self.beta;
        f[IDX_B + 2] = (self.beta_u[0] * self.b[2] - c * self.beta_u[2]) / self.beta;
        let rhs = self.system_rhs(f[0], f[IDX_B + 1], f[IDX_B + 2]);
        let f5 = (self.u[0] * rhs[1] + self.u[1] * rhs[2] + self.u[2] * rhs[3]
            - self.beta * rhs[0])
            / self.dcal;
        f[4] = f5;
        for k in 0..3 {
            f[1 + k] = self.u[k] * f5 / self.w + rhs[1 + k] / self.beta;
        }
        f
    }

    /// Max-norm residual of `F_2..F_5` substituted into the 4x4 system,
    /// relative to the largest term on either side.
    pub fn system_residual(&self, f: &StateVec) -> f64 {
        let rhs = self.system_rhs(f[0], f[IDX_B + 1], f[IDX_B + 2]);
        let [ux, uy, uz] = self.u;
        let bw = self.beta / self.w;
        let rows = [
            [ux * f[1], uy * f[2], uz * f[3], -self.w * f[4]],
            [self.beta * f[1], 0.0, 0.0, -bw * ux * f[4]],
            [0.0, self.beta * f[2], 0.0, -bw * uy * f[4]],
            [0.0, 0.0, self.beta * f[3], -bw * uz * f[4]],
        ];
        let mut res = 0.0f64;
        let mut scale = f64::MIN_POSITIVE;
        for (row, r) in rows.iter().zip(rhs.iter()) {
            let lhs: f64 = row.iter().sum();
            res = res.max((lhs - r).abs());
            scale = row.iter().fold(scale.max(r.abs()), |s, t| s.max(t.abs()));
        }
        res / scale
    }
}

/// Entropy conservative flux from precomputed parameter vectors.
pub fn ec_flux_param(
    dir: Direction,
    l: &ParameterVector,
    r: &ParameterVector,
    eos: &EosParams,
) -> StateVec {
    if dir == Direction::X {
        return FluxPairMeans::new(l, r, eos).flux();
    }
    let fx = FluxPairMeans::new(&l.permuted(dir), &r.permuted(dir), eos).flux();
    unpermute(dir, &fx)
}

/// Maps a flux computed on relabelled states back to the original axes.
pub(crate) fn unpermute(dir: Direction, fx: &StateVec) -> StateVec {
    let p = dir.cyclic_permutation();
    let mut out = *fx;
    for k in 0..3 {
        out[1 + p[k]] = fx[1 + k];
        out[IDX_B + p[k]] = fx[IDX_B + k];
    }
    out
}

pub fn ec_flux_prim(
    dir: Direction,
    pl: &PrimitiveState,
    pr: &PrimitiveState,
    eos: &EosParams,
) -> StateVec {
    ec_flux_param(
        dir,
        &ParameterVector::from_prim(pl),
        &ParameterVector::from_prim(pr),
        eos,
    )
}

pub fn ec_flux(
    dir: Direction,
    ul: &ConservedState,
    ur: &ConservedState,
    eos: &EosParams,
) -> Result<StateVec> {
    let pl = cons_to_prim(ul, eos)?;
    let pr = cons_to_prim(ur, eos)?;
    Ok(ec_flux_prim(dir, &pl, &pr, eos))
}

/// `[V].F + [Phi] <B_k> - [psi_k]`: zero for entropy conservative fluxes,
/// non-positive for entropy stable ones.
pub fn entropy_production(
    dir: Direction,
    pl: &PrimitiveState,
    pr: &PrimitiveState,
    flux: &StateVec,
    eos: &EosParams,
) -> f64 {
    let vl = entropy_variables_prim(pl, eos);
    let vr = entropy_variables_prim(pr, eos);
    let k = dir.index();
    let vf: f64 = (0..NCOMP).map(|i| (vr.0[i] - vl.0[i]) * flux[i]).sum();
    let dphi = vr.phi() - vl.phi();
    let dpsi = entropy_potential_prim(pr, eos, dir) - entropy_potential_prim(pl, eos, dir);
    vf + dphi * avg(pl.b[k], pr.b[k]) - dpsi
}

/// Natural magnitude of the terms in [`entropy_production`], used to judge
/// round-off in its value.
pub fn entropy_production_scale(
    dir: Direction,
    pl: &PrimitiveState,
    pr: &PrimitiveState,
    flux: &StateVec,
    eos: &EosParams,
) -> f64 {
    let vl = entropy_variables_prim(pl, eos);
    let vr = entropy_variables_prim(pr, eos);
    let k = dir.index();
    let vf: f64 = (0..NCOMP)
        .map(|i| (vr.0[i].abs() + vl.0[i].abs()) * flux[i].abs())
        .sum();
    let phi = (vr.phi().abs() + vl.phi().abs()) * avg(pl.b[k].abs(), pr.b[k].abs());
    let psi =
        entropy_potential_prim(pr, eos, dir).abs() + entropy_potential_prim(pl, eos, dir).abs();
    1.0 + vf + phi + psi
}

pub fn ec_condition_residual(
    dir: Direction,
    ul: &ConservedState,
    ur: &ConservedState,
    eos: &EosParams,
) -> Result<f64> {
    let pl = cons_to_prim(ul, eos)?;
    let pr = cons_to_prim(ur, eos)?;
    let f = ec_flux_prim(dir, &pl, &pr, eos);
    Ok(entropy_production(dir, &pl, &pr, &f, eos))
}

/// `(F_L + F_R) / 2 - alpha (U_R - U_L) / 2`.
#[inline]
pub fn lax_friedrichs(
    fl: &StateVec,
    fr: &StateVec,
    ul: &StateVec,
    ur: &StateVec,
    alpha: f64,
) -> StateVec {
    let mut out = [0.0; NCOMP];
    for i in 0..NCOMP {
        out[i] = 0.5 * (fl[i] + fr[i]) - 0.5 * alpha * (ur[i] - ul[i]);
    }
    out
}

/// Lax-Friedrichs entropy stable flux; `alpha` is the larger of the two
/// fast-speed bounds along `dir`.
pub fn es_flux(
    dir: Direction,
    ul: &ConservedState,
    ur: &ConservedState,
    eos: &EosParams,
) -> Result<StateVec> {
    let pl = cons_to_prim(ul, eos)?;
    let pr = cons_to_prim(ur, eos)?;
    let alpha = fast_speed_bound(&pl, eos, dir).max(fast_speed_bound(&pr, eos, dir));
    Ok(lax_friedrichs(
        &physical_flux_prim(&pl, eos, dir),
        &physical_flux_prim(&pr, eos, dir),
        &ul.0,
        &ur.0,
        alpha,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{sample_primitive, SampleRanges};
    use crate::physics::prim_to_cons;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eos(g: f64) -> EosParams {
        EosParams::new(g).unwrap()
    }

    #[test]
    fn log_mean_examples() {
        assert_eq!(log_mean(1.0, 1.0).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert!((log_mean(1.0, e).unwrap() - (e - 1.0)).abs() < 1e-14);
        assert!((log_mean(2.0, 2.0 + 1e-12).unwrap() - 2.0).abs() < 1e-11);
        assert!(matches!(log_mean(0.0, 1.0), Err(Error::LogMeanDomain(..))));
        assert!(log_mean(-1.0, 1.0).is_err());
        assert!(log_mean(1.0, f64::NAN).is_err());
    }

    #[test]
    fn log_mean_branches_agree_at_seam() {
        // zeta^2 = 1e-4 exactly at a/b = 1.01/0.99
        for &(a, b) in &[(0.99f64, 1.01), (0.98999999, 1.01), (0.99000001, 1.01)] {
            let exact = (b - a) / (b / a).ln();
            let m = log_mean(a, b).unwrap();
            assert!((m - exact).abs() < 1e-13 * exact, "{m} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn log_mean_is_bounded_and_symmetric(a in 1e-6f64..1e6, b in 1e-6f64..1e6) {
            let m = log_mean(a, b).unwrap();
            prop_assert_eq!(m.to_bits(), log_mean(b, a).unwrap().to_bits());
            prop_assert!(m >= a.min(b) * (1.0 - 1e-15) && m <= a.max(b) * (1.0 + 1e-15));
        }

        #[test]
        fn dcal_is_positive_near_light_speed(
            seed in any::<u64>(),
            speed in 0.9f64..0.99,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ranges = SampleRanges { max_speed: speed, min_speed: speed, ..SampleRanges::default() };
            let l = ParameterVector::from_prim(&sample_primitive(&mut rng, &ranges));
            let r = ParameterVector::from_prim(&sample_primitive(&mut rng, &ranges));
            prop_assert!(FluxPairMeans::new(&l, &r, &eos(5.0 / 3.0)).dcal > 0.0);
        }
    }

    fn random_pair(rng: &mut ChaCha8Rng) -> (PrimitiveState, PrimitiveState, EosParams) {
        let ranges = SampleRanges::default();
        let e = eos(if rng.gen_bool(0.5) { 2.0 } else { 5.0 / 3.0 });
        (
            sample_primitive(rng, &ranges),
            sample_primitive(rng, &ranges),
            e,
        )
    }

    #[test]
    fn consistency_with_physical_flux() {
        let pl = PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.5, 1.0, 0.0]);
        let e = eos(2.0);
        for dir in Direction::ALL {
            let f = ec_flux_prim(dir, &pl, &pl, &e);
            let g = physical_flux_prim(&pl, &e, dir);
            for k in 0..NCOMP {
                assert!(
                    (f[k] - g[k]).abs() < 1e-12,
                    "{dir:?} {k}: {} vs {}",
                    f[k],
                    g[k]
                );
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let (p, _, e) = random_pair(&mut rng);
            for dir in Direction::ALL {
                let f = ec_flux_prim(dir, &p, &p, &e);
                let g = physical_flux_prim(&p, &e, dir);
                let scale = g.iter().fold(1.0f64, |a, x| a.max(x.abs()));
                for k in 0..NCOMP {
                    assert!(
                        (f[k] - g[k]).abs() < 1e-11 * scale,
                        "{dir:?} {k}: {} vs {} at {p:?}",
                        f[k],
                        g[k]
                    );
                }
            }
        }
    }

    #[test]
    fn symmetry_and_zero_parallel_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..2000 {
            let (pl, pr, e) = random_pair(&mut rng);
            for dir in Direction::ALL {
                let a = ec_flux_prim(dir, &pl, &pr, &e);
                let b = ec_flux_prim(dir, &pr, &pl, &e);
                assert_eq!(a[IDX_B + dir.index()].to_bits(), 0.0f64.to_bits());
                for k in 0..NCOMP {
                    assert!((a[k] - b[k]).abs() <= 1e-13 * a[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn entropy_conservation_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let (pl, pr, e) = random_pair(&mut rng);
            for dir in Direction::ALL {
                let f = ec_flux_prim(dir, &pl, &pr, &e);
                let res = entropy_production(dir, &pl, &pr, &f, &e);
                let psi = entropy_potential_prim(&pl, &e, dir)
                    .abs()
                    .max(entropy_potential_prim(&pr, &e, dir).abs());
                worst = worst.max(res.abs() / (1.0 + psi));
            }
        }
        assert!(worst < 1e-11, "worst scaled EC residual {worst}");
    }

    #[test]
    fn closed_form_solves_linear_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..2000 {
            let (pl, pr, e) = random_pair(&mut rng);
            let m = FluxPairMeans::new(
                &ParameterVector::from_prim(&pl),
                &ParameterVector::from_prim(&pr),
                &e,
            );
            let f = m.flux();
            assert!(
                m.system_residual(&f) < 1e-12,
                "residual {}",
                m.system_residual(&f)
            );
        }
    }

    #[test]
    fn rotated_directions_are_permuted_x_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..500 {
            let (pl, pr, e) = random_pair(&mut rng);
            for dir in [Direction::Y, Direction::Z] {
                let l = ParameterVector::from_prim(&pl);
                let r = ParameterVector::from_prim(&pr);
                let fx = ec_flux_param(Direction::X, &l.permuted(dir), &r.permuted(dir), &e);
                let back = unpermute(dir, &fx);
                let fd = ec_flux_prim(dir, &pl, &pr, &e);
                for k in 0..NCOMP {
                    assert!((back[k] - fd[k]).abs() <= 1e-14 * fd[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn residual_helper_is_linear_in_flux() {
        let e = eos(5.0 / 3.0);
        let pl = PrimitiveState::new(1.0, [0.1, 0.2, 0.0], 1.0, [0.5, 1.0, 0.3]);
        let pr = PrimitiveState::new(0.5, [-0.2, 0.0, 0.1], 0.3, [0.5, -1.0, 0.2]);
        let f = ec_flux_prim(Direction::X, &pl, &pr, &e);
        let base = entropy_production(Direction::X, &pl, &pr, &f, &e);
        let vl = entropy_variables_prim(&pl, &e);
        let vr = entropy_variables_prim(&pr, &e);
        let eps = 1e-3;
        for slot in 0..NCOMP {
            let mut g = f;
            g[slot] += eps;
            let shifted = entropy_production(Direction::X, &pl, &pr, &g, &e);
            let expected = eps * (vr.0[slot] - vl.0[slot]);
            assert!((shifted - base - expected).abs() < 1e-12);
        }
        let ul = prim_to_cons(&pl, &e).unwrap();
        assert_eq!(
            ec_condition_residual(Direction::X, &ul, &ul, &e).unwrap(),
            0.0
        );
    }

    #[test]
    fn lax_friedrichs_is_entropy_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..10_000 {
            let (pl, pr, e) = random_pair(&mut rng);
            let ul = prim_to_cons(&pl, &e).unwrap();
            let ur = prim_to_cons(&pr, &e).unwrap();
            for dir in Direction::ALL {
                let f = es_flux(dir, &ul, &ur, &e).unwrap();
                let prod = entropy_production(dir, &pl, &pr, &f, &e);
                assert!(
                    prod <= 1e-12 * entropy_production_scale(dir, &pl, &pr, &f, &e),
                    "production {prod} for {pl:?} | {pr:?}"
                );
            }
        }
    }

    #[test]
    fn lax_friedrichs_riemann_one_dissipates() {
        let e = eos(2.0);
        let pl = PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.5, 1.0, 0.0]);
        let pr = PrimitiveState::new(0.125, [0.0; 3], 0.1, [0.5, -1.0, 0.0]);
        let ul = prim_to_cons(&pl, &e).unwrap();
        let ur = prim_to_cons(&pr, &e).unwrap();
        let f = es_flux(Direction::X, &ul, &ur, &e).unwrap();
        let central = lax_friedrichs(
            &physical_flux_prim(&pl, &e, Direction::X),
            &physical_flux_prim(&pr, &e, Direction::X),
            &ul.0,
            &ur.0,
            0.0,
        );
        assert!(f.iter().zip(central.iter()).any(|(a, b)| a != b));
        assert!(entropy_production(Direction::X, &pl, &pr, &f, &e) < 0.0);
        assert_eq!(
            es_flux(Direction::X, &ul, &ul, &e).unwrap(),
            physical_flux_prim(&pl, &e, Direction::X)
        );
    }
}
