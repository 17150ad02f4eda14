//! Run configuration, the time-marching loop and refinement ladders.
//!
//! Shared by the command-line front end and the acceptance harness.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::diagnostics::{error_norms, total_entropy, ErrorNorms, ErrorReport, Variable};
use crate::error::{Error, Result};
use crate::io::{write_entropy_series, write_profile, EntropySample, ProfileMeta};
use crate::limiters::{Limiter, LimiterConfig, LimiterStats};
use crate::physics::EosParams;
use crate::problems::{Preset, ProblemSpec};
use crate::sbp::{build_operator, QuadratureOperator};
use crate::solver::{compute_dt, ssp_rk3_step, DGField, InterfaceFlux, Mesh, SpatialOperator};

/// Interface flux selection. `Ec` uses the entropy conservative flux on
/// interfaces too and is meant for smooth diagnostics only.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FluxMode {
    #[default]
    Es,
    Ec,
}

impl FluxMode {
    pub fn interface(self) -> InterfaceFlux {
        match self {
            FluxMode::Es => InterfaceFlux::LaxFriedrichs,
            FluxMode::Ec => InterfaceFlux::EntropyConservative,
        }
    }
}

impl fmt::Display for FluxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxMode::Es => "es",
            FluxMode::Ec => "ec",
        })
    }
}

impl FromStr for FluxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "es" => Ok(FluxMode::Es),
            "ec" => Ok(FluxMode::Ec),
            _ => Err(Error::Parse(format!("flux mode `{s}` is not `ec` or `es`"))),
        }
    }
}

pub const DEFAULT_CFL: f64 = 0.2;
pub const MAX_STEP_REJECTIONS: usize = 6;
pub const DEFAULT_DEGREE: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: Preset,
    /// Resolution; `None` takes the preset default.
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub r: usize,
    pub cfl: f64,
    /// Constant step size replacing the CFL rule (the last step still
    /// lands on `t_end`).
    pub fixed_dt: Option<f64>,
    pub t_end: Option<f64>,
    /// Slope limiter on or off; `None` takes the preset default.
    pub limiter: Option<bool>,
    pub tvb_m: Option<f64>,
    pub flux: FluxMode,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub seed: u64,
    /// Record the total entropy after every accepted step.
    pub track_entropy: bool,
    /// Retry steps whose positivity repairs raised the total entropy (only
    /// with a limiter).
    pub entropy_control: bool,
}

impl RunConfig {
    pub fn new(problem: Preset) -> Self {
        Self {
            problem,
            nx: None,
            ny: None,
            r: DEFAULT_DEGREE,
            cfl: DEFAULT_CFL,
            fixed_dt: None,
            t_end: None,
            limiter: None,
            tvb_m: None,
            flux: FluxMode::Es,
            workers: None,
            seed: 0,
            track_entropy: true,
            entropy_control: true,
        }
    }

    pub fn with_cells(mut self, nx: usize, ny: usize) -> Self {
        self.nx = Some(nx);
        self.ny = Some(ny);
        self
    }

    pub fn cells(&self, spec: &ProblemSpec) -> (usize, usize) {
        let nx = self.nx.unwrap_or(spec.default_cells.0);
        let square = spec.default_cells.0 == spec.default_cells.1;
        let ny = match (spec.dim, self.nx, self.ny) {
            (1, _, _) => 1,
            (_, _, Some(ny)) => ny,
            // A lone `nx` on a square-cell preset means `nx x nx`.
            (_, Some(nx), None) if square => nx,
            _ => spec.default_cells.1,
        };
        (nx, ny)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl {} outside (0, 1]",
                self.cfl
            )));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("fixed dt {dt}")));
            }
        }
        if let Some(t) = self.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("final time {t}")));
            }
        }
        if self.nx == Some(0) || self.ny == Some(0) {
            return Err(Error::InvalidConfig("cell counts must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("worker count must be positive".into()));
        }
        Ok(())
    }
}

/// Variable that error reports track by default.
pub fn default_error_variable(problem: Preset) -> Variable {
    match problem {
        Preset::Alfven1d | Preset::Alfven2d => Variable::By,
        Preset::Vortex => Variable::D,
        _ => Variable::Rho,
    }
}

/// Totals over all limiter applications of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimiterTotals {
    pub applications: usize,
    pub max_troubled: usize,
    pub modified: usize,
    pub scaled: usize,
    pub min_theta: f64,
    pub char_fallbacks: usize,
}

impl Default for LimiterTotals {
    fn default() -> Self {
        Self {
            applications: 0,
            max_troubled: 0,
            modified: 0,
            scaled: 0,
            min_theta: 1.0,
            char_fallbacks: 0,
        }
    }
}

impl LimiterTotals {
    fn add(&mut self, s: &LimiterStats) {
        self.applications += 1;
        self.max_troubled = self.max_troubled.max(s.troubled);
        self.modified += s.modified;
        self.scaled += s.scaled;
        self.min_theta = self.min_theta.min(s.min_theta);
        self.char_fallbacks += s.char_fallbacks;
    }
}

/// A preset bound to a resolution, advanced with SSP-RK3.
pub struct Simulation {
    config: RunConfig,
    spec: ProblemSpec,
    mesh: Mesh,
    op: QuadratureOperator,
    eos: EosParams,
    spatial: SpatialOperator,
    /// Present when the slope limiter is on or the preset needs positivity
    /// control; the positivity stage always runs when present.
    limiter: Option<Limiter>,
    slope_limiting: bool,
    pool: Option<Arc<rayon::ThreadPool>>,
    field: DGField,
    time: f64,
    t_end: f64,
    steps: usize,
    entropy: Vec<EntropySample>,
    limiter_totals: LimiterTotals,
    rejected_steps: usize,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.problem.spec()?;
        let (nx, ny) = config.cells(&spec);
        let mesh = spec.mesh(nx, ny)?;
        let op = build_operator(config.r)?;
        let eos = spec.eos();
        let pool = match config.workers {
            Some(n) => Some(Arc::new(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?,
            )),
            None => None,
        };
        let field = spec.initial_field(&mesh, &op)?;
        if !field.all_finite() {
            return Err(Error::InvalidConfig("initial data is not finite".into()));
        }
        let spatial = SpatialOperator::new(
            mesh.clone(),
            op.clone(),
            eos,
            config.flux.interface(),
            &field,
        )?;
        let slope_limiting = config.limiter.unwrap_or(spec.limit_by_default);
        let limiter = if slope_limiting || spec.limit_by_default {
            let mut lc: LimiterConfig = spec.limiter;
            if let Some(m) = config.tvb_m {
                lc.tvb_m = m;
            }
            Some(Limiter::new(
                lc,
                slope_limiting,
                mesh.clone(),
                op.clone(),
                eos,
                &field,
            )?)
        } else {
            None
        };
        let t_end = config.t_end.unwrap_or(spec.t_end);
        let mut sim = Self {
            config,
            spec,
            mesh,
            op,
            eos,
            spatial,
            limiter,
            slope_limiting,
            pool,
            field,
            time: 0.0,
            t_end,
            steps: 0,
            entropy: Vec::new(),
            limiter_totals: LimiterTotals::default(),
            rejected_steps: 0,
        };
        if sim.config.track_entropy {
            let s = sim.install(|s| total_entropy(&s.field, &s.mesh, &s.op, &s.eos))?;
            sim.entropy.push(EntropySample {
                step: 0,
                time: 0.0,
                entropy: s,
            });
        }
        Ok(sim)
    }

    fn install<T: Send>(&self, f: impl FnOnce(&Self) -> T + Send) -> T
    where
        Self: Sync,
    {
        match &self.pool {
            Some(p) => p.install(|| f(self)),
            None => f(self),
        }
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn op(&self) -> &QuadratureOperator {
        &self.op
    }

    pub fn eos(&self) -> &EosParams {
        &self.eos
    }

    pub fn field(&self) -> &DGField {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn slope_limiting(&self) -> bool {
        self.slope_limiting
    }

    pub fn entropy_series(&self) -> &[EntropySample] {
        &self.entropy
    }

    pub fn limiter_totals(&self) -> &LimiterTotals {
        &self.limiter_totals
    }

    /// Attempts discarded by entropy control.
    pub fn rejected_steps(&self) -> usize {
        self.rejected_steps
    }

    /// Largest increase of the total entropy between consecutive samples,
    /// relative to `max(|S|, 1e-300)`; negative when strictly decreasing.
    pub fn max_relative_entropy_increase(&self) -> f64 {
        self.entropy
            .windows(2)
            .map(|w| (w[1].entropy - w[0].entropy) / w[0].entropy.abs().max(1e-300))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Step size the next step would use, before clipping to `t_end`.
    pub fn next_dt(&self) -> Result<f64> {
        match self.config.fixed_dt {
            Some(dt) => Ok(dt),
            None => self.install(|s| compute_dt(&s.field, &s.mesh, &s.eos, s.config.cfl)),
        }
    }

    fn attempt(&self, dt: f64) -> Result<(DGField, Vec<LimiterStats>)> {
        let spatial = &self.spatial;
        let limiter = self.limiter.as_ref();
        let field = &self.field;
        let work = move || -> Result<(DGField, Vec<LimiterStats>)> {
            let mut stats = Vec::with_capacity(3);
            let next = ssp_rk3_step(
                field,
                dt,
                |u| spatial.rhs(u),
                |u| {
                    if let Some(l) = limiter {
                        stats.push(l.apply(u)?);
                    }
                    Ok(())
                },
            )?;
            Ok((next, stats))
        };
        match &self.pool {
            Some(p) => p.install(work),
            None => work(),
        }
    }

    fn current_entropy(&self) -> Result<f64> {
        match self.entropy.last() {
            Some(e) if e.step == self.steps => Ok(e.entropy),
            _ => self.install(|s| total_entropy(&s.field, &s.mesh, &s.op, &s.eos)),
        }
    }

    /// Advances one SSP-RK3 step (clipped to `t_end`) and returns its size.
    ///
    /// With entropy control, a step in which the positivity limiter had to
    /// repair states and the total entropy grew is retried with half the
    /// step, at most [`MAX_STEP_REJECTIONS`] times.
    pub fn step(&mut self) -> Result<f64> {
        let mut dt = self.next_dt()?;
        let remaining = self.t_end - self.time;
        if dt >= remaining || remaining - dt < 1e-12 * self.t_end.max(1.0) {
            dt = remaining;
        }
        let control = self.config.entropy_control && self.limiter.is_some();
        let s_old = if control {
            Some(self.current_entropy()?)
        } else {
            None
        };
        let mut rejections = 0;
        let (next, stats, s_new) = loop {
            let (next, stats) = self.attempt(dt)?;
            if !next.all_finite() {
                return Err(Error::InvalidConfig(format!(
                    "non-finite state after step {} at t = {:.6e}; aborting",
                    self.steps + 1,
                    self.time
                )));
            }
            let repaired = stats.iter().any(|s| s.scaled > 0);
            match s_old {
                Some(s0) if repaired => {
                    let s1 = self.install(|s| total_entropy(&next, &s.mesh, &s.op, &s.eos))?;
                    if s1 > s0 && rejections < MAX_STEP_REJECTIONS {
                        rejections += 1;
                        dt *= 0.5;
                        continue;
                    }
                    if s1 > s0 {
                        log::warn!(
                            "total entropy grew by {:.3e} at t = {:.6e} after {} step rejections",
                            s1 - s0,
                            self.time,
                            rejections
                        );
                    }
                    break (next, stats, Some(s1));
                }
                _ => break (next, stats, None),
            }
        };
        self.rejected_steps += rejections;
        for s in &stats {
            self.limiter_totals.add(s);
        }
        self.field = next;
        self.steps += 1;
        self.time = if dt == remaining {
            self.t_end
        } else {
            self.time + dt
        };
        if self.config.track_entropy {
            let s = match s_new {
                Some(s) => s,
                None => self.install(|s| total_entropy(&s.field, &s.mesh, &s.op, &s.eos))?,
            };
            self.entropy.push(EntropySample {
                step: self.steps,
                time: self.time,
                entropy: s,
            });
        }
        Ok(dt)
    }

    /// Steps until `t_end`.
    pub fn run(&mut self) -> Result<()> {
        while self.time < self.t_end {
            self.step()?;
            if self.steps.is_multiple_of(100) {
                log::debug!(
                    "{}: step {} t = {:.6e}",
                    self.spec.name,
                    self.steps,
                    self.time
                );
            }
        }
        Ok(())
    }

    /// Errors in `var` against the exact solution at the current time, or
    /// `None` when the preset has none.
    pub fn error_norms(&self, var: Variable) -> Option<Result<ErrorNorms>> {
        let exact = self.spec.exact.clone()?;
        let t = self.time;
        Some(self.install(|s| {
            error_norms(
                &s.field,
                &s.mesh,
                &s.op,
                &s.eos,
                &|x, y| exact(x, y, t),
                var,
            )
        }))
    }

    /// File stem encoding preset, resolution and degree.
    pub fn output_stem(&self) -> String {
        let (nx, ny) = (self.mesh.nx(), self.mesh.ny());
        if self.mesh.dim() == 1 {
            format!("{}_n{}_r{}", self.spec.name, nx, self.config.r)
        } else {
            format!("{}_n{}x{}_r{}", self.spec.name, nx, ny, self.config.r)
        }
    }

    pub fn profile_meta(&self) -> ProfileMeta {
        ProfileMeta {
            problem: self.spec.name.to_string(),
            nx: self.mesh.nx(),
            ny: self.mesh.ny(),
            r: self.config.r,
            time: self.time,
            gamma: self.spec.gamma,
            flux: self.config.flux.to_string(),
            limiter: self.slope_limiting,
        }
    }

    /// Writes the profile (with its metadata sidecar) and the entropy
    /// series into `dir`; returns the written paths.
    pub fn write_outputs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.output_stem();
        let profile = dir.join(format!("{stem}.csv"));
        write_profile(
            &profile,
            &self.field,
            &self.mesh,
            &self.op,
            &self.eos,
            &self.profile_meta(),
        )?;
        let mut out = vec![profile.clone(), crate::io::meta_path(&profile)];
        if self.config.track_entropy {
            let e = dir.join(format!("{stem}_entropy.csv"));
            write_entropy_series(&e, &self.entropy)?;
            out.push(e);
        }
        Ok(out)
    }
}

/// Runs `base` at every resolution in `ladder` (`ny = nx` in 2D) and
/// collects the errors in `var` at the final time.
pub fn convergence_ladder(
    base: &RunConfig,
    ladder: &[usize],
    var: Variable,
) -> Result<ErrorReport> {
    let spec = base.problem.spec()?;
    if spec.exact.is_none() {
        return Err(Error::InvalidConfig(format!(
            "{} has no exact solution",
            spec.name
        )));
    }
    let mut report = ErrorReport::new(var);
    for &n in ladder {
        let mut cfg = base.clone();
        cfg.nx = Some(n);
        cfg.ny = Some(if spec.dim == 1 { 1 } else { n });
        cfg.track_entropy = false;
        let mut sim = Simulation::new(cfg)?;
        sim.run()?;
        let e = sim
            .error_norms(var)
            .expect("exact solution checked above")?;
        log::info!(
            "{} n = {n}: l1 = {:.4e} l2 = {:.4e} linf = {:.4e} ({} steps)",
            spec.name,
            e.l1,
            e.l2,
            e.linf,
            sim.steps()
        );
        report.push(n, e);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flux_mode_parsing() {
        assert_eq!("ec".parse::<FluxMode>().unwrap(), FluxMode::Ec);
        assert_eq!(FluxMode::Es.to_string(), "es");
        assert!("lf".parse::<FluxMode>().is_err());
    }

    #[test]
    fn resolution_defaults() {
        let spec = Preset::OrszagTang.spec().unwrap();
        let c = RunConfig::new(Preset::OrszagTang);
        assert_eq!(c.cells(&spec), (100, 100));
        let c = RunConfig { nx: Some(32), ..c };
        assert_eq!(c.cells(&spec), (32, 32));
        let spec = Preset::RotatedShockTube.spec().unwrap();
        let c = RunConfig {
            nx: Some(64),
            ..RunConfig::new(Preset::RotatedShockTube)
        };
        assert_eq!(c.cells(&spec), (64, 2));
        let spec = Preset::Riemann1.spec().unwrap();
        assert_eq!(RunConfig::new(Preset::Riemann1).cells(&spec), (800, 1));
    }

    #[test]
    fn validation() {
        let c = RunConfig::new(Preset::Alfven1d);
        assert!(c.validate().is_ok());
        assert!(RunConfig {
            cfl: 0.0,
            ..c.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            fixed_dt: Some(-1.0),
            ..c.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig {
            workers: Some(0),
            ..c.clone()
        }
        .validate()
        .is_err());
        assert!(RunConfig { nx: Some(0), ..c }.validate().is_err());
    }

    #[test]
    fn short_run_lands_on_final_time() {
        let cfg = RunConfig {
            t_end: Some(0.05),
            workers: Some(1),
            ..RunConfig::new(Preset::Alfven1d).with_cells(10, 1)
        };
        let mut sim = Simulation::new(cfg).unwrap();
        sim.run().unwrap();
        assert_eq!(sim.time(), 0.05);
        assert_eq!(sim.entropy_series().len(), sim.steps() + 1);
        assert!(sim.max_relative_entropy_increase() <= 1e-12);
        let e = sim.error_norms(Variable::By).unwrap().unwrap();
        assert!(e.l1 < 1e-3);
        assert!(sim.limiter_totals().applications == 0);
    }

    #[test]
    fn limited_run_counts_applications() {
        let cfg = RunConfig {
            t_end: Some(0.01),
            ..RunConfig::new(Preset::Riemann1).with_cells(50, 1)
        };
        let mut sim = Simulation::new(cfg).unwrap();
        sim.run().unwrap();
        assert_eq!(sim.limiter_totals().applications, 3 * sim.steps());
        assert!(sim.slope_limiting());
        let dir = tempfile::tempdir().unwrap();
        let files = sim.write_outputs(dir.path()).unwrap();
        assert_eq!(files.len(), 3);
        assert!(files[0].ends_with("riemann1_n50_r2.csv"));
        assert!(files.iter().all(|f| f.exists()));
    }

    #[test]
    fn fixed_step_is_honoured() {
        let cfg = RunConfig {
            t_end: Some(0.1),
            fixed_dt: Some(0.025),
            track_entropy: false,
            ..RunConfig::new(Preset::Alfven1d).with_cells(8, 1)
        };
        let mut sim = Simulation::new(cfg).unwrap();
        sim.run().unwrap();
        assert_eq!(sim.steps(), 4);
        assert!(sim.entropy_series().is_empty());
    }

    #[test]
    fn ladder_requires_exact_solution() {
        let base = RunConfig::new(Preset::Riemann1);
        assert!(convergence_ladder(&base, &[10], Variable::Rho).is_err());
    }

    #[test]
    fn tiny_ladder_converges() {
        let base = RunConfig {
            t_end: Some(0.1),
            ..RunConfig::new(Preset::Alfven1d)
        };
        let rep = convergence_ladder(&base, &[8, 16], Variable::By).unwrap();
        assert_eq!(rep.cells, vec![8, 16]);
        assert!(rep.order(1).l1 > 2.0, "{:?}", rep);
    }
}
