//! Conserved-to-primitive recovery.
//!
//! The unknown is `z = rho h W^2`. With `S = m.B` one has `v.B = S / z` and
//! `v = (m + (S / z) B) / (z + |B|^2)`, so the energy equation becomes a
//! scalar equation `f(z) = 0`. The physical root lies in `(D, Gamma E]`:
//! at `z = D` the implied pressure is non-positive, while
//! `f(Gamma E) >= Gamma E / Gamma + |B|^2 / 2 - E >= 0`.
//! Newton steps are kept inside a shrinking bracket and replaced by
//! bisection whenever they leave it.

use super::{norm2, ConservedState, EosParams, PrimitiveState};
use crate::error::{Error, Result};

const MAX_ITER: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;

/// Output of the recovery: the primitive state and the converged `rho h W^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Recovered {
    pub prim: PrimitiveState,
    pub z: f64,
}

pub fn cons_to_prim(u: &ConservedState, eos: &EosParams) -> Result<PrimitiveState> {
    cons_to_prim_with_guess(u, eos, None).map(|r| r.prim)
}

struct Coefficients {
    d: f64,
    e: f64,
    m2: f64,
    s2: f64,
    b2: f64,
    k: f64,
}

struct Eval {
    f: f64,
    df: f64,
    v2: f64,
    p: f64,
}

impl Coefficients {
    #[inline]
    fn v2(&self, z: f64) -> f64 {
        let zb = z + self.b2;
        (self.m2 * z * z + self.s2 * (2.0 * z + self.b2)) / (z * z * zb * zb)
    }

    #[inline]
    fn eval(&self, z: f64) -> Eval {
        let zb = z + self.b2;
        let z2 = z * z;
        let zb2 = zb * zb;
        let v2 = (self.m2 * z2 + self.s2 * (2.0 * z + self.b2)) / (z2 * zb2);
        let dv2 = -2.0 * self.m2 / (zb2 * zb)
            - 2.0 * self.s2 * (3.0 * z2 + 3.0 * z * self.b2 + self.b2 * self.b2)
                / (z2 * z * zb2 * zb);
        let lor = (1.0 - v2).max(0.0);
        let sq = lor.sqrt();
        let p = self.k * (z * lor - self.d * sq);
        let dp = if sq > 0.0 {
            self.k * (lor - z * dv2 + 0.5 * self.d * dv2 / sq)
        } else {
            self.k * (lor - z * dv2)
        };
        let f = z - p + 0.5 * self.b2 * (1.0 + v2) - 0.5 * self.s2 / z2 - self.e;
        let df = 1.0 - dp + 0.5 * self.b2 * dv2 + self.s2 / (z2 * z);
        Eval { f, df, v2, p }
    }
}

/// Recovery with an optional initial guess for `z` (e.g. from the previous
/// stage). The guess only affects the iteration count, not the root.
pub fn cons_to_prim_with_guess(
    u: &ConservedState,
    eos: &EosParams,
    guess: Option<f64>,
) -> Result<Recovered> {
    if !u.0.iter().all(|x| x.is_finite()) {
        return Err(Error::RecoveryFailed(format!(
            "non-finite conserved state {:?}",
            u.0
        )));
    }
    let d = u.d();
    let e = u.e();
    if !(d > 0.0) {
        return Err(Error::RecoveryFailed(format!("D = {d}")));
    }
    let m = u.m();
    let b = u.b();
    let s = m[0] * b[0] + m[1] * b[1] + m[2] * b[2];
    let c = Coefficients {
        d,
        e,
        m2: norm2(&m),
        s2: s * s,
        b2: norm2(&b),
        k: 1.0 / eos.enthalpy_factor(),
    };
    let scale = e.abs().max(d);

    let mut lo = d;
    let mut hi = eos.gamma() * e;
    if !(hi > lo) {
        return Err(Error::RecoveryFailed(format!(
            "empty bracket: D = {d}, E = {e}"
        )));
    }

    let mut z = match guess {
        Some(g) if g > lo && g < hi => g,
        _ => hi,
    };
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let ev = c.eval(z);
        let physical = ev.v2 < 1.0 && ev.p > 0.0;
        if physical && ev.f == 0.0 {
            converged = true;
            break;
        }
        if !physical || ev.f < 0.0 {
            lo = lo.max(z);
        } else {
            hi = hi.min(z);
        }
        let newton = if physical && ev.df.is_finite() && ev.df != 0.0 {
            z - ev.f / ev.df
        } else {
            f64::NAN
        };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - z).abs();
        z = next;
        if step <= 4.0 * f64::EPSILON * z || hi - lo <= 4.0 * f64::EPSILON * hi {
            converged = true;
            break;
        }
    }

    let ev = c.eval(z);
    if !converged || !(ev.f.abs() <= RESIDUAL_TOL * scale) {
        return Err(Error::RecoveryFailed(format!(
            "no root for D = {d}, E = {e}, |m|^2 = {}, |B|^2 = {} (residual {})",
            c.m2, c.b2, ev.f
        )));
    }
    let v2 = c.v2(z);
    if !(v2 < 1.0) {
        return Err(Error::RecoveryFailed(format!("recovered |v|^2 = {v2}")));
    }
    let lor = 1.0 - v2;
    let w = 1.0 / lor.sqrt();
    let p = c.k * (z * lor - d * lor.sqrt());
    let rho = d / w;
    if !(p > 0.0) || !(rho > 0.0) {
        return Err(Error::RecoveryFailed(format!(
            "recovered rho = {rho}, p = {p}"
        )));
    }
    let vb = s / z;
    let denom = z + c.b2;
    let v = [
        (m[0] + vb * b[0]) / denom,
        (m[1] + vb * b[1]) / denom,
        (m[2] + vb * b[2]) / denom,
    ];
    Ok(Recovered {
        prim: PrimitiveState { rho, v, p, b },
        z,
    })
}
