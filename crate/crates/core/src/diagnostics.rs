//! Total entropy, error norms with convergence orders and the broken
//! magnetic divergence.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::physics::{
    cons_to_prim, entropy_pair_prim, lorentz_factor, prim_to_cons, ConservedState, EosParams,
    PrimitiveState, StateVec, IDX_B,
};
use crate::sbp::QuadratureOperator;
use crate::solver::{node_position, DGField, Mesh};

/// Quadrature total entropy `sum_cells |cell| sum_nodes w_n eta(U_n)`, with
/// `w_n` the cell-normalised weights. Summed in cell order for
/// reproducibility.
pub fn total_entropy(
    field: &DGField,
    mesh: &Mesh,
    op: &QuadratureOperator,
    eos: &EosParams,
) -> Result<f64> {
    field.check_shape(mesh, op)?;
    let vol = mesh.measure() / mesh.num_cells() as f64;
    let per_cell: Vec<f64> = (0..field.num_cells())
        .into_par_iter()
        .map(|c| {
            let mut s = 0.0;
            for (n, u) in field.cell(c).iter().enumerate() {
                let prim = cons_to_prim(&ConservedState(*u), eos)?;
                s += field.unit_weight(op, n) * entropy_pair_prim(&prim, eos).0;
            }
            Ok(vol * s)
        })
        .collect::<Result<_>>()?;
    Ok(per_cell.iter().sum())
}

/// Scalar extracted from a nodal state for error measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    Rho,
    Vx,
    Vy,
    Vz,
    P,
    Bx,
    By,
    Bz,
    /// Conserved mass density `D = rho W`.
    D,
    W,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Rho => "rho",
            Variable::Vx => "vx",
            Variable::Vy => "vy",
            Variable::Vz => "vz",
            Variable::P => "p",
            Variable::Bx => "Bx",
            Variable::By => "By",
            Variable::Bz => "Bz",
            Variable::D => "D",
            Variable::W => "W",
        }
    }

    pub fn eval(self, prim: &PrimitiveState, u: &StateVec) -> f64 {
        match self {
            Variable::Rho => prim.rho,
            Variable::Vx => prim.v[0],
            Variable::Vy => prim.v[1],
            Variable::Vz => prim.v[2],
            Variable::P => prim.p,
            Variable::Bx => u[IDX_B],
            Variable::By => u[IDX_B + 1],
            Variable::Bz => u[IDX_B + 2],
            Variable::D => u[0],
            Variable::W => lorentz_factor(&prim.v).unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use Variable::*;
        [Rho, Vx, Vy, Vz, P, Bx, By, Bz, D, W]
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown variable `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Nodal errors against `exact`. `l1` and `l2` use the nodal quadrature and
/// are normalised by the domain measure; `linf` is the nodal maximum.
pub fn error_norms(
    field: &DGField,
    mesh: &Mesh,
    op: &QuadratureOperator,
    eos: &EosParams,
    exact: &(dyn Fn(f64, f64) -> PrimitiveState + Sync),
    var: Variable,
) -> Result<ErrorNorms> {
    field.check_shape(mesh, op)?;
    let vol = mesh.measure() / mesh.num_cells() as f64;
    let per_cell: Vec<ErrorNorms> = (0..field.num_cells())
        .into_par_iter()
        .map(|c| {
            let mut acc = ErrorNorms::default();
            for (n, u) in field.cell(c).iter().enumerate() {
                let prim = cons_to_prim(&ConservedState(*u), eos)?;
                let (x, y) = node_position(mesh, op, c, n);
                let ex = exact(x, y);
                let ue = prim_to_cons(&ex, eos)?.0;
                let e = (var.eval(&prim, u) - var.eval(&ex, &ue)).abs();
                let w = vol * field.unit_weight(op, n);
                acc.l1 += w * e;
                acc.l2 += w * e * e;
                acc.linf = acc.linf.max(e);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut out = ErrorNorms::default();
    for a in &per_cell {
        out.l1 += a.l1;
        out.l2 += a.l2;
        out.linf = out.linf.max(a.linf);
    }
    let m = mesh.measure();
    out.l1 /= m;
    out.l2 = (out.l2 / m).sqrt();
    Ok(out)
}

/// Observed order `log(e_coarse / e_fine) / log(refinement)`.
pub fn observed_order(coarse: f64, fine: f64, refinement: f64) -> f64 {
    (coarse / fine).ln() / refinement.ln()
}

/// Errors on a refinement ladder and the orders between consecutive levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub variable: Variable,
    pub cells: Vec<usize>,
    pub errors: Vec<ErrorNorms>,
}

impl ErrorReport {
    pub fn new(variable: Variable) -> Self {
        Self {
            variable,
            cells: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: usize, e: ErrorNorms) {
        self.cells.push(cells);
        self.errors.push(e);
    }

    /// `(l1, l2, linf)` orders for level `k >= 1`.
    pub fn order(&self, k: usize) -> ErrorNorms {
        let ratio = self.cells[k] as f64 / self.cells[k - 1] as f64;
        let (c, f) = (self.errors[k - 1], self.errors[k]);
        ErrorNorms {
            l1: observed_order(c.l1, f.l1, ratio),
            l2: observed_order(c.l2, f.l2, ratio),
            linf: observed_order(c.linf, f.linf, ratio),
        }
    }

    /// CSV with header `n,l1,l1_order,l2,l2_order,linf,linf_order`; the
    /// first row has empty order fields.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,l1,l1_order,l2,l2_order,linf,linf_order\n");
        for k in 0..self.cells.len() {
            let e = self.errors[k];
            if k == 0 {
                s.push_str(&format!(
                    "{},{:.6e},,{:.6e},,{:.6e},\n",
                    self.cells[k], e.l1, e.l2, e.linf
                ));
            } else {
                let o = self.order(k);
                s.push_str(&format!(
                    "{},{:.6e},{:.4},{:.6e},{:.4},{:.6e},{:.4}\n",
                    self.cells[k], e.l1, o.l1, e.l2, o.l2, e.linf, o.linf
                ));
            }
        }
        s
    }
}

/// Broken divergence of `B` at every node: the nodal derivative of `B_x`
/// along `x` plus that of `B_y` along `y` inside each cell (only `B_x` in
/// 1D). Same layout as the field.
pub fn discrete_div_b(field: &DGField, mesh: &Mesh, op: &QuadratureOperator) -> Vec<f64> {
    let np = op.num_nodes();
    let npc = field.nodes_per_cell();
    let (sx, sy) = (2.0 / mesh.dx(), 2.0 / mesh.dy());
    let mut out = vec![0.0; field.data().len()];
    out.par_chunks_mut(npc)
        .enumerate()
        .for_each(|(c, cell_out)| {
            let cell = field.cell(c);
            for (n, o) in cell_out.iter_mut().enumerate() {
                let (l, m) = (n % np, n / np);
                let mut d = 0.0;
                for p in 0..np {
                    let along_x = if field.dim() == 1 { p } else { p + np * m };
                    d += sx * op.d(l, p) * cell[along_x][IDX_B];
                    if field.dim() == 2 {
                        d += sy * op.d(m, p) * cell[l + np * p][IDX_B + 1];
                    }
                }
                *o = d;
            }
        });
    out
}

/// Largest nodal `|div B|` in each cell.
pub fn div_b_cell_max(field: &DGField, mesh: &Mesh, op: &QuadratureOperator) -> Vec<f64> {
    let npc = field.nodes_per_cell();
    discrete_div_b(field, mesh, op)
        .chunks(npc)
        .map(|c| c.iter().fold(0.0f64, |a, x| a.max(x.abs())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::entropy_pair;
    use crate::problems::{alfven_2d, Preset};
    use crate::sbp::build_operator;
    use crate::solver::{Boundaries, BoundaryCondition};

    #[test]
    fn entropy_of_uniform_states() {
        let op = build_operator(3).unwrap();
        let mesh = Mesh::new_2d(
            4,
            3,
            (0.0, 2.0),
            (0.0, 1.5),
            Boundaries::uniform(BoundaryCondition::Periodic),
        )
        .unwrap();
        let e = EosParams::new(5.0 / 3.0).unwrap();
        let s = PrimitiveState::new(1.3, [0.2, 0.1, 0.0], 0.4, [0.3, 0.0, 1.0]);
        let f = DGField::from_primitive(&mesh, &op, &e, |_, _| s).unwrap();
        let eta = entropy_pair(&prim_to_cons(&s, &e).unwrap(), &e).unwrap().0;
        let total = total_entropy(&f, &mesh, &op, &e).unwrap();
        assert!((total - 3.0 * eta).abs() < 1e-13 * (1.0 + total.abs()));

        let g2 = EosParams::new(2.0).unwrap();
        let one = PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.0; 3]);
        let f = DGField::from_primitive(&mesh, &op, &g2, |_, _| one).unwrap();
        assert_eq!(total_entropy(&f, &mesh, &op, &g2).unwrap(), 0.0);
    }

    #[test]
    fn norms_vanish_on_exact_samples() {
        let spec = Preset::Alfven1d.spec().unwrap();
        let op = build_operator(2).unwrap();
        let mesh = spec.mesh(20, 1).unwrap();
        let eos = spec.eos();
        let f = spec.initial_field(&mesh, &op).unwrap();
        let ex = spec.exact.clone().unwrap();
        let n = error_norms(&f, &mesh, &op, &eos, &|x, y| ex(x, y, 0.0), Variable::By).unwrap();
        assert_eq!(n, ErrorNorms::default());
    }

    #[test]
    fn norms_of_a_constant_offset() {
        let op = build_operator(2).unwrap();
        let mesh = Mesh::new_1d(
            8,
            (0.0, 2.0),
            BoundaryCondition::Outflow,
            BoundaryCondition::Outflow,
        )
        .unwrap();
        let e = EosParams::new(5.0 / 3.0).unwrap();
        let s = PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.0, 0.25, 0.0]);
        let f = DGField::from_primitive(&mesh, &op, &e, |_, _| s).unwrap();
        let shifted = PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.0, 0.5, 0.0]);
        let n = error_norms(&f, &mesh, &op, &e, &|_, _| shifted, Variable::By).unwrap();
        assert!((n.l1 - 0.25).abs() < 1e-15 && (n.l2 - 0.25).abs() < 1e-15 && n.linf == 0.25);
    }

    #[test]
    fn orders_and_csv() {
        assert!((observed_order(8.0, 1.0, 2.0) - 3.0).abs() < 1e-15);
        let mut r = ErrorReport::new(Variable::By);
        r.push(
            20,
            ErrorNorms {
                l1: 8e-3,
                l2: 8e-3,
                linf: 1.6e-2,
            },
        );
        r.push(
            40,
            ErrorNorms {
                l1: 1e-3,
                l2: 2e-3,
                linf: 2e-3,
            },
        );
        let o = r.order(1);
        assert!((o.l1 - 3.0).abs() < 1e-12 && (o.l2 - 2.0).abs() < 1e-12);
        let csv = r.to_csv();
        assert!(csv.starts_with("n,l1,l1_order,l2,l2_order,linf,linf_order\n20,8.000000e-3,,"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn divergence_examples() {
        let op = build_operator(3).unwrap();
        let e = EosParams::new(5.0 / 3.0).unwrap();
        let mesh = Mesh::new_2d(
            5,
            5,
            (0.0, 1.0),
            (0.0, 1.0),
            Boundaries::uniform(BoundaryCondition::Periodic),
        )
        .unwrap();
        let f = DGField::from_primitive(&mesh, &op, &e, |_, _| {
            PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.3, -0.2, 1.0])
        })
        .unwrap();
        assert!(discrete_div_b(&f, &mesh, &op)
            .iter()
            .all(|d| d.abs() < 1e-14));

        let m1 = Mesh::new_1d(
            6,
            (0.0, 1.0),
            BoundaryCondition::Periodic,
            BoundaryCondition::Periodic,
        )
        .unwrap();
        let f1 = DGField::from_primitive(&m1, &op, &e, |x, _| {
            PrimitiveState::new(1.0, [0.0; 3], 1.0, [0.7, x.sin(), x.cos()])
        })
        .unwrap();
        assert!(discrete_div_b(&f1, &m1, &op)
            .iter()
            .all(|d| d.abs() < 1e-13));

        // Linear B_x = 2x, B_y = -3y is differentiated exactly.
        let f2 = DGField::from_primitive(&mesh, &op, &e, |x, y| {
            PrimitiveState::new(1.0, [0.0; 3], 1.0, [2.0 * x, -3.0 * y, 0.0])
        })
        .unwrap();
        assert!(discrete_div_b(&f2, &mesh, &op)
            .iter()
            .all(|d| (d + 1.0).abs() < 1e-12));
    }

    #[test]
    fn alfven_2d_divergence_converges() {
        // Interpolating a solenoidal field leaves an O(h^r) divergence.
        let spec = Preset::Alfven2d.spec().unwrap();
        let op = build_operator(2).unwrap();
        let eos = spec.eos();
        let worst = |n: usize| {
            let mesh = spec.mesh(n, n).unwrap();
            let f = DGField::from_primitive(&mesh, &op, &eos, |x, y| alfven_2d(&eos, x, y, 0.0))
                .unwrap();
            div_b_cell_max(&f, &mesh, &op)
                .into_iter()
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (worst(20), worst(40));
        assert!(observed_order(coarse, fine, 2.0) > 1.8, "{coarse} {fine}");
    }
}
