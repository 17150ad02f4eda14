//! CSV profiles, `key=value` metadata sidecars and entropy time series.
//!
//! Numbers are written with 17 significant digits so that reading a file
//! back reproduces the nodal values bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::physics::{cons_to_prim, entropy_pair_prim, lorentz_factor, ConservedState, EosParams};
use crate::sbp::QuadratureOperator;
use crate::solver::{node_position, DGField, Mesh};

pub const PROFILE_HEADER_1D: &str = "x,rho,vx,vy,vz,p,Bx,By,Bz,W,entropy";
pub const PROFILE_HEADER_2D: &str = "x,y,rho,vx,vy,vz,p,Bx,By,Bz,W,entropy";
pub const ENTROPY_HEADER: &str = "step,time,entropy";

/// Build identifier baked in at compile time.
pub fn git_describe() -> &'static str {
    option_env!("RMHD_GIT_DESCRIBE").unwrap_or("unknown")
}

/// Run metadata written next to every profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileMeta {
    pub problem: String,
    pub nx: usize,
    pub ny: usize,
    pub r: usize,
    pub time: f64,
    pub gamma: f64,
    pub flux: String,
    pub limiter: bool,
}

impl ProfileMeta {
    fn entries(&self, dim: usize) -> Vec<(&'static str, String)> {
        let mesh = if dim == 1 {
            format!("{}", self.nx)
        } else {
            format!("{}x{}", self.nx, self.ny)
        };
        vec![
            ("problem", self.problem.clone()),
            ("dim", dim.to_string()),
            ("mesh", mesh),
            ("r", self.r.to_string()),
            ("time", format!("{:.16e}", self.time)),
            ("gamma", format!("{:.16e}", self.gamma)),
            ("flux", self.flux.clone()),
            (
                "limiter",
                if self.limiter { "on" } else { "off" }.to_string(),
            ),
            ("git", git_describe().to_string()),
        ]
    }
}

/// Sidecar path: the profile path with `.meta` appended.
pub fn meta_path(profile: &Path) -> PathBuf {
    let mut s = profile.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Global node order for output: increasing `x` in 1D; rows of nodes from
/// bottom to top with `x` increasing inside a row in 2D.
pub fn output_order(mesh: &Mesh, op: &QuadratureOperator) -> Vec<(usize, usize)> {
    let np = op.num_nodes();
    let mut out = Vec::with_capacity(mesh.num_cells() * np.pow(mesh.dim() as u32));
    if mesh.dim() == 1 {
        for c in 0..mesh.nx() {
            out.extend((0..np).map(|n| (c, n)));
        }
        return out;
    }
    for j in 0..mesh.ny() {
        for m in 0..np {
            for i in 0..mesh.nx() {
                let c = mesh.cell_index(i, j);
                out.extend((0..np).map(|l| (c, l + np * m)));
            }
        }
    }
    out
}

/// Writes the nodal profile CSV to `path` and the metadata to
/// [`meta_path`]`(path)`.
pub fn write_profile(
    path: &Path,
    field: &DGField,
    mesh: &Mesh,
    op: &QuadratureOperator,
    eos: &EosParams,
    meta: &ProfileMeta,
) -> Result<()> {
    field.check_shape(mesh, op)?;
    let dim = mesh.dim();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "{}",
        if dim == 1 {
            PROFILE_HEADER_1D
        } else {
            PROFILE_HEADER_2D
        }
    )?;
    for (c, n) in output_order(mesh, op) {
        let u = field.node(c, n);
        let prim = cons_to_prim(&ConservedState(*u), eos)?;
        let (x, y) = node_position(mesh, op, c, n);
        let eta = entropy_pair_prim(&prim, eos).0;
        let mut row: Vec<f64> = Vec::with_capacity(12);
        row.push(x);
        if dim == 2 {
            row.push(y);
        }
        row.extend([prim.rho, prim.v[0], prim.v[1], prim.v[2], prim.p]);
        row.extend(prim.b);
        row.push(lorentz_factor(&prim.v)?);
        row.push(eta);
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    write_meta(&meta_path(path), &meta.entries(dim))
}

pub fn write_meta(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in entries {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a flat `key=value` file; blank lines and `#` comments are skipped.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    parse_key_values(&text)
}

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// A numeric CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header: Vec<String> = match lines.next() {
        Some(h) => h?.split(',').map(str::to_string).collect(),
        None => return Err(Error::Parse(format!("{} is empty", path.display()))),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!(
                "row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// One accepted step of the total entropy history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropySample {
    pub step: usize,
    pub time: f64,
    pub entropy: f64,
}

pub fn write_entropy_series(path: &Path, series: &[EntropySample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{ENTROPY_HEADER}")?;
    for s in series {
        writeln!(w, "{},{:.16e},{:.16e}", s.step, s.time, s.entropy)?;
    }
    w.flush()?;
    Ok(())
}
