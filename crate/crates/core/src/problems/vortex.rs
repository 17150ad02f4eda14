//! Isentropic magnetised vortex: the steady radial profile in its rest frame
//! and the Lorentz boost that makes it move.

use crate::error::{Error, Result};
use crate::physics::{dot, EosParams, PrimitiveState};

/// Peak azimuthal speed and field strength (both reached at `r = 1`).
pub const VORTEX_AMPLITUDE: f64 = 0.7;
pub const VORTEX_R_MAX: f64 = 12.0;
pub const VORTEX_STEP: f64 = 1e-4;

/// How the total-pressure ODE is closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PressureAnchor {
    /// Total pressure at the vortex centre.
    Center(f64),
    /// Gas pressure of the ambient state; the ODE is integrated inward.
    FarField(f64),
}

/// Tabulated total pressure `p_t(r)` on `[0, VORTEX_R_MAX]` with cubic
/// Hermite interpolation between nodes; constant beyond the table.
#[derive(Clone, Debug)]
pub struct VortexProfile {
    gamma: f64,
    step: f64,
    pt: Vec<f64>,
    dpt: Vec<f64>,
}

/// `|v|^2` in the rest frame. The field has the same shape and amplitude, so
/// this is also `|B|^2` and, as `v` is parallel to `B`, `b^2`.
#[inline]
fn speed_sq(r: f64) -> f64 {
    let a = VORTEX_AMPLITUDE;
    a * a * r * r * (1.0 - r * r).exp()
}

impl VortexProfile {
    pub fn new(eos: &EosParams, anchor: PressureAnchor) -> Result<Self> {
        Self::with_step(eos, anchor, VORTEX_STEP)
    }

    /// Classical RK4 on a uniform grid of spacing `step`.
    pub fn with_step(eos: &EosParams, anchor: PressureAnchor, step: f64) -> Result<Self> {
        let gamma = eos.gamma();
        let n = (VORTEX_R_MAX / step).round() as usize;
        if n < 2 || ((n as f64) * step - VORTEX_R_MAX).abs() > 1e-9 {
            return Err(Error::VortexOde(format!(
                "step {step} does not divide the radial range"
            )));
        }
        let f = |r: f64, pt: f64| -> Result<f64> { total_pressure_slope(gamma, r, pt) };
        let mut pt = vec![0.0; n + 1];
        let (start, dir): (usize, f64) = match anchor {
            PressureAnchor::Center(p0) => {
                pt[0] = p0;
                (0, 1.0)
            }
            PressureAnchor::FarField(p) => {
                pt[n] = p + 0.5 * speed_sq(VORTEX_R_MAX);
                (n, -1.0)
            }
        };
        let h = dir * step;
        for k in 0..n {
            let i = if dir > 0.0 { start + k } else { start - k };
            let r = i as f64 * step;
            let y = pt[i];
            let k1 = f(r, y)?;
            let k2 = f(r + 0.5 * h, y + 0.5 * h * k1)?;
            let k3 = f(r + 0.5 * h, y + 0.5 * h * k2)?;
            let k4 = f(r + h, y + h * k3)?;
            let next = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let j = if dir > 0.0 { i + 1 } else { i - 1 };
            pt[j] = next;
        }
        let dpt = pt
            .iter()
            .enumerate()
            .map(|(i, &y)| f(i as f64 * step, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gamma,
            step,
            pt,
            dpt,
        })
    }

    pub fn total_pressure(&self, r: f64) -> f64 {
        let n = self.pt.len() - 1;
        let s = r / self.step;
        if s >= n as f64 {
            return self.pt[n];
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        let h = self.step;
        let (y0, y1, d0, d1) = (
            self.pt[i],
            self.pt[i + 1],
            self.dpt[i] * h,
            self.dpt[i + 1] * h,
        );
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }

    /// Ambient gas pressure (the value at the end of the table).
    pub fn far_field_pressure(&self) -> f64 {
        self.pt[self.pt.len() - 1] - 0.5 * speed_sq(VORTEX_R_MAX)
    }

    /// Steady vortex centred at the origin of its rest frame.
    pub fn state(&self, x: f64, y: f64) -> PrimitiveState {
        let r = x.hypot(y);
        let amp = VORTEX_AMPLITUDE * (0.5 * (1.0 - r * r)).exp();
        let v = [-amp * y, amp * x, 0.0];
        let p = self.total_pressure(r) - 0.5 * speed_sq(r);
        PrimitiveState::new(p.powf(1.0 / self.gamma), v, p, v)
    }
}

/// `d p_t / d r` from the radial balance `r p_t' = (rho h + b^2) W^2 |v|^2 - (b^phi)^2`
/// with the isentropic closure `p = rho^Gamma`. The hoop term is the squared
/// azimuthal component of the spatial `b`, which is `W^2 |B|^2` here (not the
/// invariant `b^2 = |B|^2`); only this reading makes the vortex steady. The
/// factor `r` cancels analytically.
fn total_pressure_slope(gamma: f64, r: f64, pt: f64) -> Result<f64> {
    let x = speed_sq(r);
    let p = pt - 0.5 * x;
    if !(p > 0.0) {
        return Err(Error::VortexOde(format!(
            "gas pressure {p} not positive at r = {r}"
        )));
    }
    let rho = p.powf(1.0 / gamma);
    let rho_h = rho + gamma / (gamma - 1.0) * p;
    let a = VORTEX_AMPLITUDE;
    let x_over_r = a * a * r * (1.0 - r * r).exp();
    Ok(x_over_r * (rho_h + x - 1.0) / (1.0 - x))
}

/// Lorentz boost between a frame `S` and a frame `S'` moving relative to it
/// with speed `w` along `(1, 1) / sqrt 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Boost {
    w: f64,
    gamma: f64,
}

const DIAG: [f64; 3] = [
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
    0.0,
];

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

impl Boost {
    pub fn new(w: f64) -> Result<Self> {
        if !(w.abs() < 1.0) {
            return Err(Error::InvalidBoost(w));
        }
        Ok(Self {
            w,
            gamma: 1.0 / (1.0 - w * w).sqrt(),
        })
    }

    pub fn speed(&self) -> f64 {
        self.w
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn inverse(&self) -> Self {
        Self {
            w: -self.w,
            gamma: self.gamma,
        }
    }

    /// `S` coordinates `(t, x, y)` of the event `(t', x', y')` in `S'`.
    pub fn coordinates(&self, tp: f64, xp: f64, yp: f64) -> (f64, f64, f64) {
        let (g, w) = (self.gamma, self.w);
        let s = xp + yp;
        let shift = 0.5 * (g - 1.0) * s + g * tp * w * DIAG[0];
        (g * (tp + w * DIAG[0] * s), xp + shift, yp + shift)
    }

    /// State measured in `S'` given the state in `S`. Velocity follows the
    /// relativistic addition law; the fields transform together with the
    /// ideal-MHD electric field `E = -v x B` (which vanishes for the vortex,
    /// where `v` is parallel to `B`). Density and pressure are rest-frame
    /// scalars.
    pub fn transform_state(&self, s: &PrimitiveState) -> PrimitiveState {
        let (g, w) = (self.gamma, self.w);
        let n = DIAG;
        let vn = dot(&s.v, &n);
        let denom = 1.0 - w * vn;
        let mut v = [0.0; 3];
        for k in 0..3 {
            v[k] = (s.v[k] / g - w * n[k] + g * w * w / (g + 1.0) * vn * n[k]) / denom;
        }
        let e = {
            let vb = cross(&s.v, &s.b);
            [-vb[0], -vb[1], -vb[2]]
        };
        let wv = [w * n[0], w * n[1], w * n[2]];
        let w_cross_e = cross(&wv, &e);
        let bn = dot(&s.b, &n);
        let mut b = [0.0; 3];
        for k in 0..3 {
            let par = bn * n[k];
            b[k] = par + g * (s.b[k] - par - w_cross_e[k]);
        }
        PrimitiveState::new(s.rho, v, s.p, b)
    }
}

/// Steady vortex seen from a frame moving with speed `w` along `(1, 1)`; in
/// that frame the vortex drifts along `(-1, -1)` with speed `w`.
#[derive(Clone, Debug)]
pub struct BoostedVortex {
    profile: VortexProfile,
    boost: Boost,
}

impl BoostedVortex {
    pub fn new(profile: VortexProfile, w: f64) -> Result<Self> {
        Ok(Self {
            profile,
            boost: Boost::new(w)?,
        })
    }

    pub fn profile(&self) -> &VortexProfile {
        &self.profile
    }

    pub fn boost(&self) -> &Boost {
        &self.boost
    }

    /// Solution at `(x', y', t')` relative to the initial vortex centre.
    pub fn state(&self, xp: f64, yp: f64, tp: f64) -> PrimitiveState {
        let (_, x, y) = self.boost.coordinates(tp, xp, yp);
        self.boost.transform_state(&self.profile.state(x, y))
    }

    /// Drift velocity of the vortex centre in `S'`.
    pub fn drift(&self) -> [f64; 2] {
        let d = -self.boost.speed() * DIAG[0];
        [d, d]
    }
}
