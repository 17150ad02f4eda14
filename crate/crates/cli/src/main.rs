//! `rmhd-dg`: batch front end for the relativistic MHD DG solver.
//!
//! Settings come from flags, optionally layered over a flat `key=value`
//! file given with `--config`; flags win.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rmhd_dg::checks::{run_flux_checks, sign_error_flux, FluxCheckConfig};
use rmhd_dg::diagnostics::Variable;
use rmhd_dg::driver::{
    convergence_ladder, default_error_variable, FluxMode, RunConfig, Simulation,
};
use rmhd_dg::fluxes::ec_flux_prim;
use rmhd_dg::io::parse_key_values;
use rmhd_dg::problems::Preset;

#[derive(Parser, Debug)]
#[command(
    name = "rmhd-dg",
    version,
    about = "Entropy stable DG solver for relativistic MHD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a preset to its final time and write profile and entropy files.
    Run(RunArgs),
    /// Run a preset with an exact solution on a refinement ladder.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Comma separated cell counts (`ny = nx` in 2D).
        #[arg(long, value_delimiter = ',')]
        ladder: Option<Vec<usize>>,
        /// Variable measured (rho, vx, vy, vz, p, Bx, By, Bz, D, W).
        #[arg(long)]
        variable: Option<String>,
    },
    /// Randomised property suite of the two-point fluxes and SBP operators.
    Fluxcheck {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Highest SBP degree checked.
        #[arg(long, default_value_t = 4)]
        max_degree: usize,
        /// Check a deliberately broken flux instead of the real one.
        #[arg(long, hide = true)]
        inject_sign_error: bool,
    },
    /// List the available presets.
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FluxArg {
    Ec,
    Es,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat key=value file; keys are the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Polynomial degree.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Final time override.
    #[arg(long)]
    tend: Option<f64>,
    /// TVB constant override.
    #[arg(long = "tvb-m")]
    tvb_m: Option<f64>,
    /// Slope limiter; positivity control stays active on shock presets.
    #[arg(long, value_enum)]
    limiter: Option<OnOff>,
    /// `es`: entropy stable interfaces; `ec`: entropy conservative
    /// everywhere (smooth problems only).
    #[arg(long, value_enum)]
    flux: Option<FluxArg>,
    /// Worker threads; 1 gives bit-reproducible output.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

const RUN_KEYS: [&str; 13] = [
    "problem", "nx", "ny", "r", "cfl", "tend", "tvb-m", "limiter", "flux", "workers", "seed",
    "out", "ladder",
];

/// Flag values layered over the config file.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                parse_key_values(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
            None => BTreeMap::new(),
        };
        for k in file.keys() {
            if !RUN_KEYS.contains(&k.as_str()) && k != "variable" {
                bail!("unknown config key `{k}`");
            }
        }
        Ok(Self { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key `{key}` = `{v}`: {e}")),
            None => Ok(None),
        }
    }
}

fn parse_on_off(s: &str) -> Result<bool> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => bail!("limiter must be `on` or `off`, got `{s}`"),
    }
}

fn build_run(args: &RunArgs, settings: &Settings) -> Result<(RunConfig, PathBuf)> {
    let problem: String = settings
        .get(args.problem.clone(), "problem")?
        .context("--problem is required (see `rmhd-dg list`)")?;
    let problem: Preset = problem.parse()?;
    let mut cfg = RunConfig::new(problem);
    cfg.nx = settings.get(args.nx, "nx")?;
    cfg.ny = settings.get(args.ny, "ny")?;
    if let Some(r) = settings.get(args.r, "r")? {
        cfg.r = r;
    }
    if let Some(c) = settings.get(args.cfl, "cfl")? {
        cfg.cfl = c;
    }
    cfg.t_end = settings.get(args.tend, "tend")?;
    cfg.tvb_m = settings.get(args.tvb_m, "tvb-m")?;
    cfg.limiter = match args.limiter {
        Some(v) => Some(v == OnOff::On),
        None => settings
            .file
            .get("limiter")
            .map(|s| parse_on_off(s))
            .transpose()?,
    };
    cfg.flux = match args.flux {
        Some(FluxArg::Ec) => FluxMode::Ec,
        Some(FluxArg::Es) => FluxMode::Es,
        None => settings.get(None::<FluxMode>, "flux")?.unwrap_or_default(),
    };
    cfg.workers = settings.get(args.workers, "workers")?;
    if let Some(s) = settings.get(args.seed, "seed")? {
        cfg.seed = s;
    }
    let out = settings
        .get(args.out.as_ref().map(|p| p.display().to_string()), "out")?
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.validate()?;
    Ok((cfg, out))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let settings = Settings::load(args.config.as_deref())?;
    let (cfg, out) = build_run(args, &settings)?;
    let start = Instant::now();
    let mut sim = Simulation::new(cfg.clone())?;
    println!(
        "{}: {} cells, r = {}, t_end = {}, flux = {}, slope limiter {}",
        sim.spec().name,
        sim.mesh().num_cells(),
        cfg.r,
        sim.t_end(),
        cfg.flux,
        if sim.slope_limiting() { "on" } else { "off" }
    );
    sim.run().with_context(|| {
        format!(
            "run failed at t = {:.6e} after {} steps",
            sim.time(),
            sim.steps()
        )
    })?;
    let files = sim.write_outputs(&out)?;
    println!(
        "{} steps to t = {} in {:.1} s",
        sim.steps(),
        sim.time(),
        start.elapsed().as_secs_f64()
    );
    if let (Some(first), Some(last)) = (sim.entropy_series().first(), sim.entropy_series().last()) {
        println!(
            "total entropy {:.12e} -> {:.12e}, largest relative increase per step {:.3e}",
            first.entropy,
            last.entropy,
            sim.max_relative_entropy_increase().max(0.0)
        );
    }
    let lt = sim.limiter_totals();
    if lt.applications > 0 {
        println!(
            "limiter: max troubled cells {}, slopes changed {}, positivity scalings {}, min theta {:.3e}, rejected steps {}",
            lt.max_troubled,
            lt.modified,
            lt.scaled,
            lt.min_theta,
            sim.rejected_steps()
        );
    }
    let var = default_error_variable(cfg.problem);
    if let Some(e) = sim.error_norms(var) {
        let e = e?;
        println!(
            "error in {var}: l1 = {:.6e} l2 = {:.6e} linf = {:.6e}",
            e.l1, e.l2, e.linf
        );
        let path = out.join(format!("{}_errors.csv", sim.output_stem()));
        fs::write(
            &path,
            format!(
                "variable,l1,l2,linf\n{var},{:.16e},{:.16e},{:.16e}\n",
                e.l1, e.l2, e.linf
            ),
        )?;
        println!("wrote {}", path.display());
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn default_ladder(p: Preset) -> Vec<usize> {
    match p {
        Preset::Alfven2d => vec![10, 20, 40],
        Preset::Vortex => vec![20, 40, 80],
        _ => vec![20, 40, 80, 160],
    }
}

fn cmd_convergence(
    args: &RunArgs,
    ladder: Option<Vec<usize>>,
    variable: Option<String>,
) -> Result<()> {
    let settings = Settings::load(args.config.as_deref())?;
    let (cfg, out) = build_run(args, &settings)?;
    let ladder = match ladder {
        Some(l) => l,
        None => match settings.file.get("ladder") {
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .context("config key `ladder`")?,
            None => default_ladder(cfg.problem),
        },
    };
    if ladder.is_empty() {
        bail!("empty ladder");
    }
    let var = match variable.or_else(|| settings.file.get("variable").cloned()) {
        Some(v) => v.parse::<Variable>()?,
        None => default_error_variable(cfg.problem),
    };
    let report = convergence_ladder(&cfg, &ladder, var)?;
    let csv = report.to_csv();
    fs::create_dir_all(&out)?;
    let path = out.join(format!(
        "{}_convergence_r{}_{}.csv",
        cfg.problem, cfg.r, var
    ));
    fs::write(&path, &csv)?;
    print!("{csv}");
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_fluxcheck(
    seed: Option<u64>,
    samples: Option<usize>,
    max_degree: usize,
    broken: bool,
) -> Result<bool> {
    let mut cfg = FluxCheckConfig::default();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = samples {
        cfg.samples = n;
    }
    cfg.max_sbp_degree = max_degree;
    if samples == Some(0) {
        eprintln!("warning: zero samples; state properties pass vacuously");
    }
    let report = run_flux_checks(
        &cfg,
        if broken {
            sign_error_flux
        } else {
            ec_flux_prim
        },
    );
    print!("{report}");
    println!(
        "{} samples, seed {}: {}",
        report.samples,
        cfg.seed,
        if report.passed() {
            "all bounds met"
        } else {
            "BOUND VIOLATED"
        }
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args).map(|_| true),
        Command::Convergence {
            run,
            ladder,
            variable,
        } => cmd_convergence(&run, ladder, variable).map(|_| true),
        Command::Fluxcheck {
            seed,
            samples,
            max_degree,
            inject_sign_error,
        } => cmd_fluxcheck(seed, samples, max_degree, inject_sign_error),
        Command::List => {
            for p in Preset::ALL {
                println!("{p}");
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
