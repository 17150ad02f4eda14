use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryCondition {
    Periodic,
    /// Zero-gradient: the ghost is the interior trace itself.
    Outflow,
    /// Ghost traces frozen at their initial values.
    Dirichlet,
    /// Periodic in `y` with the partner cell shifted by `offset` cells in `x`
    /// (top ghost of column `i` is row 0 of column `i + offset`).
    ShiftedPeriodic {
        offset: isize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn opposite(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Bottom => Side::Top,
            Side::Top => Side::Bottom,
        }
    }

    /// Sides that exist in a mesh of dimension `dim`.
    pub fn for_dim(dim: usize) -> &'static [Side] {
        if dim == 1 {
            &Self::ALL[..2]
        } else {
            &Self::ALL
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Boundaries {
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub bottom: BoundaryCondition,
    pub top: BoundaryCondition,
}

impl Boundaries {
    pub fn uniform(bc: BoundaryCondition) -> Self {
        Self {
            left: bc,
            right: bc,
            bottom: bc,
            top: bc,
        }
    }

    pub fn get(&self, side: Side) -> BoundaryCondition {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }
}

/// Uniform Cartesian mesh in one or two dimensions. In 1D `ny == 1` and the
/// `y` range and bottom/top boundaries are unused.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    bc: Boundaries,
}

impl Mesh {
    pub fn new_1d(
        nx: usize,
        x_range: (f64, f64),
        left: BoundaryCondition,
        right: BoundaryCondition,
    ) -> Result<Self> {
        let bc = Boundaries {
            left,
            right,
            bottom: BoundaryCondition::Outflow,
            top: BoundaryCondition::Outflow,
        };
        let mesh = Self {
            dim: 1,
            nx,
            ny: 1,
            x_range,
            y_range: (0.0, 1.0),
            bc,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn new_2d(
        nx: usize,
        ny: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
        bc: Boundaries,
    ) -> Result<Self> {
        let mesh = Self {
            dim: 2,
            nx,
            ny,
            x_range,
            y_range,
            bc,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.nx == 0 || self.ny == 0 {
            return bad(format!("empty mesh {}x{}", self.nx, self.ny));
        }
        if !(self.x_range.1 > self.x_range.0) || !(self.y_range.1 > self.y_range.0) {
            return bad(format!(
                "degenerate domain {:?} x {:?}",
                self.x_range, self.y_range
            ));
        }
        let periodic = |b: BoundaryCondition| matches!(b, BoundaryCondition::Periodic);
        let shifted = |b: BoundaryCondition| matches!(b, BoundaryCondition::ShiftedPeriodic { .. });
        if periodic(self.bc.left) != periodic(self.bc.right) {
            return bad("periodic boundaries must pair left with right".into());
        }
        if shifted(self.bc.left) || shifted(self.bc.right) {
            return bad("shifted-periodic boundaries are only supported in y".into());
        }
        if self.dim == 2 {
            if periodic(self.bc.bottom) != periodic(self.bc.top) {
                return bad("periodic boundaries must pair bottom with top".into());
            }
            match (self.bc.bottom, self.bc.top) {
                (
                    BoundaryCondition::ShiftedPeriodic { offset: a },
                    BoundaryCondition::ShiftedPeriodic { offset: b },
                ) if a == b => {}
                (b, t) if shifted(b) || shifted(t) => {
                    return bad(
                        "shifted-periodic boundaries need equal offsets on bottom and top".into(),
                    )
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn boundaries(&self) -> &Boundaries {
        &self.bc
    }

    pub fn dx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / self.ny as f64
    }

    /// Smallest cell extent.
    pub fn h_min(&self) -> f64 {
        if self.dim == 1 {
            self.dx()
        } else {
            self.dx().min(self.dy())
        }
    }

    /// Domain measure (length in 1D, area in 2D).
    pub fn measure(&self) -> f64 {
        let lx = self.x_range.1 - self.x_range.0;
        if self.dim == 1 {
            lx
        } else {
            lx * (self.y_range.1 - self.y_range.0)
        }
    }

    /// Cell index `i + nx * j`.
    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn cell_center(&self, c: usize) -> (f64, f64) {
        let (i, j) = self.cell_ij(c);
        let x = self.x_range.0 + (i as f64 + 0.5) * self.dx();
        let y = if self.dim == 1 {
            0.0
        } else {
            self.y_range.0 + (j as f64 + 0.5) * self.dy()
        };
        (x, y)
    }

    /// Cell across `side` of cell `c`, following periodic and shifted-periodic
    /// wrap-around. `None` on outflow and Dirichlet boundaries.
    pub fn neighbor(&self, c: usize, side: Side) -> Option<usize> {
        let (nx, ny) = (self.nx, self.ny);
        let (i, j) = self.cell_ij(c);
        match side {
            Side::Left if i > 0 => return Some(self.cell_index(i - 1, j)),
            Side::Right if i + 1 < nx => return Some(self.cell_index(i + 1, j)),
            Side::Bottom if j > 0 => return Some(self.cell_index(i, j - 1)),
            Side::Top if j + 1 < ny => return Some(self.cell_index(i, j + 1)),
            _ => {}
        }
        let clamp = |x: isize| x.clamp(0, nx as isize - 1) as usize;
        match self.bc.get(side) {
            BoundaryCondition::Periodic => Some(match side {
                Side::Left => self.cell_index(nx - 1, j),
                Side::Right => self.cell_index(0, j),
                Side::Bottom => self.cell_index(i, ny - 1),
                Side::Top => self.cell_index(i, 0),
            }),
            BoundaryCondition::ShiftedPeriodic { offset } => Some(match side {
                Side::Bottom => self.cell_index(clamp(i as isize - offset), ny - 1),
                _ => self.cell_index(clamp(i as isize + offset), 0),
            }),
            BoundaryCondition::Outflow | BoundaryCondition::Dirichlet => None,
        }
    }

    /// Same geometry and boundaries with a different resolution.
    pub fn refined(&self, nx: usize, ny: usize) -> Result<Self> {
        let mesh = Self {
            nx,
            ny: if self.dim == 1 { 1 } else { ny },
            ..self.clone()
        };
        mesh.validate()?;
        Ok(mesh)
    }
}
