//! Mesh, nodal field storage, the split-form DG spatial operator and the
//! SSP Runge-Kutta integrator, plus a first-order finite-volume reference.

mod field;
mod fv;
mod mesh;
mod rhs;
mod time;

pub use field::{node_position, trace_node, DGField};
pub use fv::{fv_reference_solve, FvProfile, FvSetup, FV_DEFAULT_CFL};
pub use mesh::{Boundaries, BoundaryCondition, Mesh, Side};
pub use rhs::{InterfaceFlux, NodeData, SpatialOperator};
pub use time::{compute_dt, ssp_rk3_step, RkState};
