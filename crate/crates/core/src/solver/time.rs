use super::{DGField, Mesh};
use crate::error::{Error, Result};
use crate::physics::{max_signal_speed, ConservedState, EosParams};

/// Vector-space operations needed by the Runge-Kutta stages.
pub trait RkState: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    /// `self *= a`
    fn scale(&mut self, a: f64);
}

impl RkState for f64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }

    fn scale(&mut self, a: f64) {
        *self *= a;
    }
}

impl RkState for DGField {
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert!(self.same_shape(x));
        for (u, v) in self.data_mut().iter_mut().zip(x.data()) {
            for k in 0..u.len() {
                u[k] += a * v[k];
            }
        }
    }

    fn scale(&mut self, a: f64) {
        for u in self.data_mut() {
            u.iter_mut().for_each(|x| *x *= a);
        }
    }
}

/// Three-stage third-order SSP Runge-Kutta step. `limit` runs after every
/// stage and may modify the stage value in place.
pub fn ssp_rk3_step<S: RkState>(
    u: &S,
    dt: f64,
    mut rhs: impl FnMut(&S) -> Result<S>,
    mut limit: impl FnMut(&mut S) -> Result<()>,
) -> Result<S> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("time step {dt}")));
    }
    let mut u1 = u.clone();
    u1.axpy(dt, &rhs(u)?);
    limit(&mut u1)?;

    let mut u2 = u1.clone();
    u2.axpy(dt, &rhs(&u1)?);
    u2.scale(0.25);
    u2.axpy(0.75, u);
    limit(&mut u2)?;

    let mut u3 = u2.clone();
    u3.axpy(dt, &rhs(&u2)?);
    u3.scale(2.0 / 3.0);
    u3.axpy(1.0 / 3.0, u);
    limit(&mut u3)?;
    Ok(u3)
}

/// `cfl * h_min / alpha_max` with `alpha_max` the largest signal-speed bound
/// over all nodes.
pub fn compute_dt(field: &DGField, mesh: &Mesh, eos: &EosParams, cfl: f64) -> Result<f64> {
    if field.is_empty() {
        return Err(Error::EmptyField);
    }
    if !(cfl > 0.0) {
        return Err(Error::InvalidConfig(format!("cfl {cfl}")));
    }
    let alpha = field
        .data()
        .iter()
        .map(|u| max_signal_speed(&ConservedState(*u), eos))
        .fold(0.0f64, f64::max);
    Ok(cfl * mesh.h_min() / alpha)
}
