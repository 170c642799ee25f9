use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use magwell::asymptotics::PredictionConstants;
use magwell::config::{self, RunConfig};
use magwell::grid2d::{self, LatticeParams};
use magwell::interaction::ReportInputs;
use magwell::profile::{MagneticProfile, WellGeometry};
use magwell::verify::{self, Check, Setup};
use magwell::{radial, report, Error};

#[derive(Parser)]
#[command(name = "magwell", version, about = "Tunneling splitting between two radial magnetic wells")]
struct Cli {
    /// Run configuration (`key = value` lines); defaults to b0=1, b1=2, a=1, L=5, kappa=1.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exponents and prefactor constants of the splitting formula.
    Constants,
    /// Radial ground state of one well.
    Radial {
        #[arg(long, default_value_t = 0.05)]
        h: f64,
    },
    /// Splitting report for each h.
    Splitting {
        /// Comma-separated list, overrides `h_list` from the config.
        #[arg(long)]
        h_list: Option<String>,
    },
    /// Lowest eigenvalues of the 2D lattice operator.
    Grid2d {
        #[arg(long)]
        h: Option<f64>,
        /// Half-width of the square box.
        #[arg(long = "box")]
        half_width: Option<f64>,
        #[arg(long)]
        dx: Option<f64>,
    },
    /// Run the numerical checks and print a pass/fail table.
    Verify {
        /// Also run the 2D lattice diagnostics (several minutes).
        #[arg(long)]
        with_grid: bool,
    },
    /// CSV of the splitting over an h-grid, with the fitted log-slope.
    Sweep {
        #[arg(long)]
        h_list: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> magwell::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => config::parse_config(path)?,
        None => RunConfig::reference(),
    };
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j.max(1);
    }
    Ok(cfg)
}

fn output(cli: &Cli, cfg: &RunConfig) -> magwell::Result<Box<dyn Write>> {
    let path = cli.out.clone().or_else(|| if cli.json { cfg.json.clone() } else { cfg.csv.clone() });
    Ok(match path {
        Some(p) => {
            let f = File::create(&p)
                .map_err(|source| Error::Io { context: format!("creating {}", p.display()), source })?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(out: &mut dyn Write, value: &impl Serialize) -> magwell::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(out, "{text}").map_err(|source| Error::Io { context: "writing JSON".into(), source })
}

fn h_list(arg: &Option<String>, cfg: &RunConfig) -> magwell::Result<Vec<f64>> {
    match arg {
        Some(s) => config::parse_list(s).map_err(|e| Error::InvalidConfig(vec![format!("--h-list: {e}")])),
        None => Ok(cfg.h_list.clone()),
    }
}

#[derive(Serialize)]
struct RadialSummary {
    h: f64,
    mu: f64,
    /// (μ − b0h)/h².
    second_order_coefficient: f64,
    ln_phi_midpoint: f64,
    norm_defect: f64,
    residual: f64,
}

fn run(cli: &Cli) -> magwell::Result<bool> {
    let cfg = load(cli)?;
    let (profile, geometry) = cfg.profile.build()?;
    let constants = PredictionConstants::compute(&profile, &geometry)?;
    let mut out = output(cli, &cfg)?;
    let io_err = |source| Error::Io { context: "writing output".into(), source };
    match &cli.command {
        Command::Constants => {
            if cli.json {
                write_json(&mut out, &constants)?;
            } else {
                report::write_constants_csv(&constants, &mut out)?;
            }
        }
        Command::Radial { h } => {
            let s = radial::ground_state(*h, &profile, &cfg.radial)?;
            let summary = RadialSummary {
                h: s.h,
                mu: s.mu,
                second_order_coefficient: (s.mu - profile.b0() * s.h) / (s.h * s.h),
                ln_phi_midpoint: s.log_value(0.5 * geometry.l)?.0,
                norm_defect: s.norm_defect,
                residual: s.residual,
            };
            write_json(&mut out, &summary)?;
        }
        Command::Splitting { h_list: arg } | Command::Sweep { h_list: arg } => {
            let hs = h_list(arg, &cfg)?;
            let inputs = ReportInputs {
                profile: &profile,
                geometry: &geometry,
                constants: &constants,
                radial: &cfg.radial,
                quadrature: &cfg.quadrature,
                amplitude: None,
            };
            let rows = report::sweep(&hs, &inputs, cfg.jobs)?;
            if cli.json {
                write_json(&mut out, &rows)?;
            } else {
                report::write_sweep_csv(&rows, &mut out)?;
            }
            if matches!(cli.command, Command::Sweep { .. }) && rows.len() >= 2 {
                let slope = report::sweep_slope(&rows);
                eprintln!("slope of ln(2|w_h|) vs 1/h: {slope:.6} (-S = {:.6})", -constants.s);
            }
        }
        Command::Grid2d { h, half_width, dx } => {
            let h = h.unwrap_or(cfg.grid.h);
            let lattice = LatticeParams {
                half_width: half_width.unwrap_or(cfg.grid.lattice.half_width),
                dx: dx.unwrap_or(cfg.grid.lattice.dx),
            };
            let result = grid2d::solve(h, &profile, &geometry, lattice, &cfg.grid.eigen)?;
            write_json(&mut out, &result)?;
        }
        Command::Verify { with_grid } => {
            let checks = verify_suite(&cfg, &profile, &geometry, &constants, *with_grid)?;
            if cli.json {
                write_json(&mut out, &checks)?;
            } else {
                for c in &checks {
                    writeln!(out, "{:<8} {:<60} {:>12.4e}  {}", c.status(), c.name, c.value, c.detail)
                        .map_err(io_err)?;
                }
            }
            out.flush().map_err(io_err)?;
            return Ok(verify::all_passed(&checks));
        }
    }
    out.flush().map_err(io_err)?;
    Ok(true)
}

fn verify_suite(
    cfg: &RunConfig,
    profile: &MagneticProfile,
    geometry: &WellGeometry,
    constants: &PredictionConstants,
    with_grid: bool,
) -> magwell::Result<Vec<Check>> {
    let setup = Setup { profile, geometry, constants, radial: &cfg.radial, quadrature: &cfg.quadrature };
    let mut checks = verify::identity_suite(profile, geometry)?;
    let state = radial::ground_state(0.05, profile, &cfg.radial)?;
    checks.extend(verify::kummer_oracle(&state, profile, geometry, (profile.a() + 0.1, geometry.l))?);
    let d1 = radial::eigenvalue_expansion(profile).d1;
    checks.push(verify::eigenvalue_coefficient(0.005, profile, &verify::refined_radial(0.005, geometry), d1, 0.05)?);
    checks.extend(verify::integral_identity(&setup, &[0.1, 0.05, 0.025], 1e-4)?);
    checks.extend(verify::contour_and_laplace(&setup, 0.1, &[[0.0, 0.0], [1.0, 0.5]], &[0.1, 0.05, 0.025])?);
    let trend = verify::ratio_trend(&setup, &[0.1, 0.05, 0.025, 0.0125], &cfg.amplitude_h)?;
    checks.extend(verify::ratio_trend_checks(&trend, 0.02));
    checks.push(verify::slope_check(&setup, &[0.1, 0.08, 0.0625, 0.05, 0.04, 0.03125, 0.025], 0.02)?);
    if with_grid {
        checks.extend(verify::grid_diagnostics(
            cfg.grid.h,
            profile,
            geometry,
            cfg.grid.lattice,
            &cfg.grid.eigen,
            &cfg.radial,
        )?);
    }
    Ok(checks)
}
