//! Named test problems: initial data, boundary setup, end times, limiter
//! defaults and exact solutions where they exist.

mod vortex;

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use vortex::{
    Boost, BoostedVortex, PressureAnchor, VortexProfile, VORTEX_AMPLITUDE, VORTEX_R_MAX,
    VORTEX_STEP,
};

use crate::error::{Error, Result};
use crate::limiters::LimiterConfig;
use crate::physics::{lorentz_factor, EosParams, PrimitiveState};
use crate::sbp::QuadratureOperator;
use crate::solver::{Boundaries, BoundaryCondition, DGField, Mesh};

pub type Initializer = Arc<dyn Fn(f64, f64) -> PrimitiveState + Send + Sync>;
pub type ExactSolution = Arc<dyn Fn(f64, f64, f64) -> PrimitiveState + Send + Sync>;

/// Relative pull toward the cell centre used when sampling discontinuous
/// data, so that a discontinuity on a face is a jump between cells.
pub const DISCONTINUITY_INSET: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Alfven1d,
    Alfven2d,
    Riemann1,
    Riemann2,
    Riemann3,
    Vortex,
    OrszagTang,
    Blast,
    BlastBx05,
    ShockVortex,
    RotatedShockTube,
}

impl Preset {
    pub const ALL: [Preset; 11] = [
        Preset::Alfven1d,
        Preset::Alfven2d,
        Preset::Riemann1,
        Preset::Riemann2,
        Preset::Riemann3,
        Preset::Vortex,
        Preset::OrszagTang,
        Preset::Blast,
        Preset::BlastBx05,
        Preset::ShockVortex,
        Preset::RotatedShockTube,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Alfven1d => "alfven1d",
            Preset::Alfven2d => "alfven2d",
            Preset::Riemann1 => "riemann1",
            Preset::Riemann2 => "riemann2",
            Preset::Riemann3 => "riemann3",
            Preset::Vortex => "vortex",
            Preset::OrszagTang => "orszag_tang",
            Preset::Blast => "blast",
            Preset::BlastBx05 => "blast_bx05",
            Preset::ShockVortex => "shock_vortex",
            Preset::RotatedShockTube => "rotated_shock_tube",
        }
    }

    pub fn spec(self) -> Result<ProblemSpec> {
        match self {
            Preset::Alfven1d => Ok(alfven_1d_spec()),
            Preset::Alfven2d => Ok(alfven_2d_spec()),
            Preset::Riemann1 => riemann("I"),
            Preset::Riemann2 => riemann("II"),
            Preset::Riemann3 => riemann("III"),
            Preset::Vortex => vortex_spec(),
            Preset::OrszagTang => Ok(orszag_tang_spec()),
            Preset::Blast => Ok(blast_spec("blast", 0.1)),
            Preset::BlastBx05 => Ok(blast_spec("blast_bx05", 0.5)),
            Preset::ShockVortex => shock_vortex_spec(),
            Preset::RotatedShockTube => Ok(rotated_shock_tube_spec()),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownProblem(s.to_string()))
    }
}

/// How the mesh is derived from the requested resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
enum MeshRule {
    Fixed,
    /// Square cells `dy = dx` with `ny` rows and a top/bottom shift of `ny`
    /// cells, i.e. translation invariance along `(-1, 1)`.
    DiagonalStrip,
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub dim: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub boundaries: Boundaries,
    pub gamma: f64,
    pub t_end: f64,
    pub limiter: LimiterConfig,
    /// Whether the slope limiter is on unless overridden.
    pub limit_by_default: bool,
    /// Default resolution `(nx, ny)`.
    pub default_cells: (usize, usize),
    pub discontinuous: bool,
    pub initial: Initializer,
    pub exact: Option<ExactSolution>,
    mesh_rule: MeshRule,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("x_range", &self.x_range)
            .field("y_range", &self.y_range)
            .field("boundaries", &self.boundaries)
            .field("gamma", &self.gamma)
            .field("t_end", &self.t_end)
            .field("limiter", &self.limiter)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn eos(&self) -> EosParams {
        EosParams::new(self.gamma).expect("preset adiabatic index is valid")
    }

    pub fn mesh(&self, nx: usize, ny: usize) -> Result<Mesh> {
        match (self.dim, self.mesh_rule) {
            (1, _) => Mesh::new_1d(
                nx,
                self.x_range,
                self.boundaries.left,
                self.boundaries.right,
            ),
            (_, MeshRule::Fixed) => {
                Mesh::new_2d(nx, ny, self.x_range, self.y_range, self.boundaries)
            }
            (_, MeshRule::DiagonalStrip) => {
                let dx = (self.x_range.1 - self.x_range.0) / nx as f64;
                let half = 0.5 * dx * ny as f64;
                let shift = BoundaryCondition::ShiftedPeriodic {
                    offset: ny as isize,
                };
                let bc = Boundaries {
                    bottom: shift,
                    top: shift,
                    ..self.boundaries
                };
                Mesh::new_2d(nx, ny, self.x_range, (-half, half), bc)
            }
        }
    }

    pub fn initial_field(&self, mesh: &Mesh, op: &QuadratureOperator) -> Result<DGField> {
        let eos = self.eos();
        let f = |x: f64, y: f64| (self.initial)(x, y);
        let inset = if self.discontinuous {
            DISCONTINUITY_INSET
        } else {
            0.0
        };
        DGField::from_primitive_inset(mesh, op, &eos, inset, f)
    }
}

fn uniform(bc: BoundaryCondition) -> Boundaries {
    Boundaries::uniform(bc)
}

fn base_spec(name: &'static str, dim: usize, initial: Initializer) -> ProblemSpec {
    ProblemSpec {
        name,
        dim,
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        boundaries: uniform(BoundaryCondition::Periodic),
        gamma: 5.0 / 3.0,
        t_end: 1.0,
        limiter: LimiterConfig::default(),
        limit_by_default: false,
        default_cells: (40, if dim == 1 { 1 } else { 40 }),
        discontinuous: false,
        initial,
        exact: None,
        mesh_rule: MeshRule::Fixed,
    }
}

// ---------------------------------------------------------------- Alfven

pub const ALFVEN_AMPLITUDE: f64 = 0.1;
pub const ALFVEN_PRESSURE: f64 = 0.1;
pub const ALFVEN_ANGLE: f64 = PI / 6.0;

/// Wave constant `kappa = sqrt(1 + rho h W^2)`. The speed is the constant
/// amplitude, so `W` and `kappa` are closed-form.
pub fn alfven_kappa(eos: &EosParams) -> f64 {
    let w2 = 1.0 / (1.0 - ALFVEN_AMPLITUDE * ALFVEN_AMPLITUDE);
    (1.0 + eos.specific_enthalpy(1.0, ALFVEN_PRESSURE) * w2).sqrt()
}

/// Exact circularly polarised Alfven wave on `[0, 1]`.
pub fn alfven_1d(eos: &EosParams, x: f64, t: f64) -> PrimitiveState {
    let k = alfven_kappa(eos);
    let phase = TAU * (x + t / k);
    let (vy, vz) = (
        ALFVEN_AMPLITUDE * phase.sin(),
        ALFVEN_AMPLITUDE * phase.cos(),
    );
    PrimitiveState::new(1.0, [0.0, vy, vz], ALFVEN_PRESSURE, [1.0, k * vy, k * vz])
}

/// The same wave travelling along `(cos a, sin a)`, `a = pi / 6`.
pub fn alfven_2d(eos: &EosParams, x: f64, y: f64, t: f64) -> PrimitiveState {
    let k = alfven_kappa(eos);
    let (sa, ca) = ALFVEN_ANGLE.sin_cos();
    let xi = x * ca + y * sa;
    let phase = TAU * (xi + t / k);
    let s = ALFVEN_AMPLITUDE * phase.sin();
    let v = [-s * sa, s * ca, ALFVEN_AMPLITUDE * phase.cos()];
    PrimitiveState::new(
        1.0,
        v,
        ALFVEN_PRESSURE,
        [ca + k * v[0], sa + k * v[1], k * v[2]],
    )
}

fn alfven_1d_spec() -> ProblemSpec {
    let eos = EosParams::new(5.0 / 3.0).unwrap();
    let mut s = base_spec("alfven1d", 1, Arc::new(move |x, _| alfven_1d(&eos, x, 0.0)));
    s.default_cells = (20, 1);
    s.exact = Some(Arc::new(move |x, _, t| alfven_1d(&eos, x, t)));
    s
}

fn alfven_2d_spec() -> ProblemSpec {
    let eos = EosParams::new(5.0 / 3.0).unwrap();
    let mut s = base_spec(
        "alfven2d",
        2,
        Arc::new(move |x, y| alfven_2d(&eos, x, y, 0.0)),
    );
    s.x_range = (0.0, 2.0 / 3f64.sqrt());
    s.y_range = (0.0, 2.0);
    s.default_cells = (20, 20);
    s.exact = Some(Arc::new(move |x, y, t| alfven_2d(&eos, x, y, t)));
    s
}

// ---------------------------------------------------------------- Riemann

/// `(rho, vx, vy, vz, Bx, By, Bz, p)` to a primitive state.
fn from_tuple(a: [f64; 8]) -> PrimitiveState {
    PrimitiveState::new(a[0], [a[1], a[2], a[3]], a[7], [a[4], a[5], a[6]])
}

/// Left and right states and adiabatic index of the 1D Riemann problems.
pub fn riemann_states(name: &str) -> Result<(PrimitiveState, PrimitiveState, f64)> {
    match name {
        "I" | "1" => Ok((
            from_tuple([1.0, 0.0, 0.0, 0.0, 0.5, 1.0, 0.0, 1.0]),
            from_tuple([0.125, 0.0, 0.0, 0.0, 0.5, -1.0, 0.0, 0.1]),
            2.0,
        )),
        "II" | "2" => Ok((
            from_tuple([1.0, 0.0, 0.0, 0.0, 5.0, 6.0, 6.0, 30.0]),
            from_tuple([1.0, 0.0, 0.0, 0.0, 5.0, 0.7, 0.7, 1.0]),
            5.0 / 3.0,
        )),
        "III" | "3" => Ok((
            from_tuple([1.0, 0.0, 0.3, 0.4, 1.0, 6.0, 2.0, 5.0]),
            from_tuple([0.9, 0.0, 0.0, 0.0, 1.0, 5.0, 2.0, 5.3]),
            5.0 / 3.0,
        )),
        other => Err(Error::UnknownRiemann(other.to_string())),
    }
}

pub const RIEMANN_INTERFACE: f64 = 0.5;

pub fn riemann(name: &str) -> Result<ProblemSpec> {
    let (l, r, gamma) = riemann_states(name)?;
    let label = match name {
        "I" | "1" => "riemann1",
        "II" | "2" => "riemann2",
        _ => "riemann3",
    };
    let mut s = base_spec(
        label,
        1,
        Arc::new(move |x, _| if x < RIEMANN_INTERFACE { l } else { r }),
    );
    s.gamma = gamma;
    s.t_end = 0.4;
    s.boundaries = uniform(BoundaryCondition::Dirichlet);
    s.limiter = LimiterConfig {
        tvb_m: 10.0,
        ..Default::default()
    };
    s.limit_by_default = true;
    s.default_cells = (800, 1);
    s.discontinuous = true;
    Ok(s)
}

// ---------------------------------------------------------------- vortex

pub const VORTEX_BOOST: f64 = 0.5 * SQRT_2;
pub const VORTEX_HALF_WIDTH: f64 = 5.0;

fn wrap(x: f64, lo: f64, len: f64) -> f64 {
    lo + (x - lo).rem_euclid(len)
}

fn vortex_spec() -> Result<ProblemSpec> {
    let eos = EosParams::new(5.0 / 3.0)?;
    let profile = VortexProfile::new(&eos, PressureAnchor::Center(1.0))?;
    let bv = Arc::new(BoostedVortex::new(profile, VORTEX_BOOST)?);
    let (lo, len) = (-VORTEX_HALF_WIDTH, 2.0 * VORTEX_HALF_WIDTH);
    let drift = bv.drift();
    let exact = {
        let bv = bv.clone();
        // The drift is a pure translation; fold the point back to the
        // periodic image nearest the moving centre and evaluate at t' = 0.
        move |x: f64, y: f64, t: f64| {
            bv.state(
                wrap(x - drift[0] * t, lo, len),
                wrap(y - drift[1] * t, lo, len),
                0.0,
            )
        }
    };
    let init = {
        let bv = bv.clone();
        move |x: f64, y: f64| bv.state(x, y, 0.0)
    };
    let mut s = base_spec("vortex", 2, Arc::new(init));
    s.x_range = (lo, lo + len);
    s.y_range = (lo, lo + len);
    s.t_end = 20.0;
    s.default_cells = (40, 40);
    s.exact = Some(Arc::new(exact));
    Ok(s)
}

// ---------------------------------------------------------------- 2D shocks

fn orszag_tang_spec() -> ProblemSpec {
    let init = |x: f64, y: f64| {
        let b0 = 1.0 / (4.0 * PI).sqrt();
        PrimitiveState::new(
            25.0 / (36.0 * PI),
            [0.5 * (TAU * y).sin(), 0.5 * (TAU * x).sin(), 0.0],
            5.0 / (12.0 * PI),
            [-b0 * (TAU * y).sin(), b0 * (2.0 * TAU * x).sin(), 0.0],
        )
    };
    let mut s = base_spec("orszag_tang", 2, Arc::new(init));
    s.limiter = LimiterConfig {
        tvb_m: 10.0,
        ..Default::default()
    };
    s.limit_by_default = true;
    s.default_cells = (100, 100);
    s
}

pub const BLAST_INNER: (f64, f64) = (0.01, 1.0);
pub const BLAST_AMBIENT: (f64, f64) = (1e-4, 5e-4);
pub const BLAST_RADII: (f64, f64) = (0.8, 1.0);

/// Density and pressure of the blast at radius `r`, linear in `r` between
/// the explosion zone and the ambient medium.
pub fn blast_density_pressure(r: f64) -> (f64, f64) {
    let (r0, r1) = BLAST_RADII;
    if r <= r0 {
        return BLAST_INNER;
    }
    if r >= r1 {
        return BLAST_AMBIENT;
    }
    let t = (r - r0) / (r1 - r0);
    (
        BLAST_INNER.0 + t * (BLAST_AMBIENT.0 - BLAST_INNER.0),
        BLAST_INNER.1 + t * (BLAST_AMBIENT.1 - BLAST_INNER.1),
    )
}

fn blast_spec(name: &'static str, bx: f64) -> ProblemSpec {
    let init = move |x: f64, y: f64| {
        let (rho, p) = blast_density_pressure(x.hypot(y));
        PrimitiveState::new(rho, [0.0; 3], p, [bx, 0.0, 0.0])
    };
    let mut s = base_spec(name, 2, Arc::new(init));
    s.x_range = (-6.0, 6.0);
    s.y_range = (-6.0, 6.0);
    s.boundaries = uniform(BoundaryCondition::Outflow);
    s.gamma = 4.0 / 3.0;
    s.t_end = 4.0;
    s.limiter = LimiterConfig {
        tvb_m: 0.01,
        ..Default::default()
    };
    s.limit_by_default = true;
    s.default_cells = (100, 100);
    s
}

pub const SHOCK_VORTEX_PRE: [f64; 6] = [6.73586072, 0.6 * SQRT_2, 0.0, 0.0, 0.0, 24.02454458];
pub const SHOCK_VORTEX_POST: [f64; 6] = [
    10.47090373,
    0.507707117 * SQRT_2,
    0.0,
    0.0,
    0.0,
    50.44557978,
];
pub const SHOCK_VORTEX_BOOST: f64 = -0.6 * SQRT_2;
pub const SHOCK_VORTEX_CENTRE: (f64, f64) = (-3.0, 0.0);

pub fn shock_vortex_position() -> f64 {
    2.0 * SQRT_2 - 3.0
}

/// Rotate a planar vector clockwise by `pi / 4`.
fn rotate_cw(v: [f64; 3]) -> [f64; 3] {
    [
        FRAC_1_SQRT_2 * (v[0] + v[1]),
        FRAC_1_SQRT_2 * (v[1] - v[0]),
        v[2],
    ]
}

fn rotate_ccw(x: f64, y: f64) -> (f64, f64) {
    (FRAC_1_SQRT_2 * (x - y), FRAC_1_SQRT_2 * (x + y))
}

fn six(a: [f64; 6]) -> PrimitiveState {
    PrimitiveState::new(a[0], [a[1], a[2], 0.0], a[5], [a[3], a[4], 0.0])
}

fn shock_vortex_spec() -> Result<ProblemSpec> {
    let eos = EosParams::new(5.0 / 3.0)?;
    // The pre-shock gas pressure is the vortex's ambient pressure.
    let profile = VortexProfile::new(&eos, PressureAnchor::FarField(SHOCK_VORTEX_PRE[5]))?;
    let bv = BoostedVortex::new(profile, SHOCK_VORTEX_BOOST)?;
    let shock = shock_vortex_position();
    let post = six(SHOCK_VORTEX_POST);
    let init = move |x: f64, y: f64| {
        if x >= shock {
            return post;
        }
        let (xp, yp) = rotate_ccw(x - SHOCK_VORTEX_CENTRE.0, y - SHOCK_VORTEX_CENTRE.1);
        let s = bv.state(xp, yp, 0.0);
        PrimitiveState::new(s.rho, rotate_cw(s.v), s.p, rotate_cw(s.b))
    };
    let mut s = base_spec("shock_vortex", 2, Arc::new(init));
    s.x_range = (-9.0, 9.0);
    s.y_range = (-9.0, 9.0);
    s.boundaries = Boundaries {
        left: BoundaryCondition::Dirichlet,
        right: BoundaryCondition::Outflow,
        bottom: BoundaryCondition::Outflow,
        top: BoundaryCondition::Outflow,
    };
    s.t_end = 10.0;
    s.limiter = LimiterConfig {
        tvb_m: 10.0,
        ..Default::default()
    };
    s.limit_by_default = true;
    s.default_cells = (600, 600);
    s.discontinuous = true;
    Ok(s)
}

/// `(rho, v_par, v_perp, B_par, B_perp, p)` on each side of the rotated tube.
pub const RST_LEFT: [f64; 6] = [1.0, 0.5, 0.0, 0.5, 0.5, 1.0];
pub const RST_RIGHT: [f64; 6] = [1.0, -0.5, 0.0, 0.5, 0.5, 0.1];

/// Rotated shock tube state at signed distance `xi` from the interface
/// along the normal `(1, 1) / sqrt 2`, in the 1D frame
/// `(v_x, v_y) = (v_par, v_perp)`.
pub fn rst_normal_state(xi: f64) -> PrimitiveState {
    let a = if xi < 0.0 { RST_LEFT } else { RST_RIGHT };
    PrimitiveState::new(a[0], [a[1], a[2], 0.0], a[5], [a[3], a[4], 0.0])
}

/// Maps a 1D normal-frame state to the Cartesian frame of the rotated tube.
pub fn rst_rotate(s: &PrimitiveState) -> PrimitiveState {
    let r = |par: f64, perp: f64| [FRAC_1_SQRT_2 * (par - perp), FRAC_1_SQRT_2 * (par + perp)];
    let v = r(s.v[0], s.v[1]);
    let b = r(s.b[0], s.b[1]);
    PrimitiveState::new(s.rho, [v[0], v[1], s.v[2]], s.p, [b[0], b[1], s.b[2]])
}

/// Normal and tangential components `(par, perp)` of a Cartesian vector.
pub fn rst_components(v: &[f64; 3]) -> (f64, f64) {
    (FRAC_1_SQRT_2 * (v[0] + v[1]), FRAC_1_SQRT_2 * (v[1] - v[0]))
}

fn rotated_shock_tube_spec() -> ProblemSpec {
    let init = |x: f64, y: f64| rst_rotate(&rst_normal_state(FRAC_1_SQRT_2 * (x + y)));
    let mut s = base_spec("rotated_shock_tube", 2, Arc::new(init));
    s.x_range = (-0.5, 0.5);
    s.y_range = (-1.0 / 800.0, 1.0 / 800.0);
    s.boundaries = Boundaries {
        left: BoundaryCondition::Dirichlet,
        right: BoundaryCondition::Dirichlet,
        bottom: BoundaryCondition::ShiftedPeriodic { offset: 2 },
        top: BoundaryCondition::ShiftedPeriodic { offset: 2 },
    };
    s.t_end = 0.4;
    s.limiter = LimiterConfig {
        tvb_m: 10.0,
        characteristic: true,
        ..Default::default()
    };
    s.limit_by_default = true;
    s.default_cells = (800, 2);
    s.discontinuous = true;
    s.mesh_rule = MeshRule::DiagonalStrip;
    s
}

/// Lorentz factor of a primitive state (`NaN` when superluminal).
pub fn lorentz(p: &PrimitiveState) -> f64 {
    lorentz_factor(&p.v).unwrap_or(f64::NAN)
}
