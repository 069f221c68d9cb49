use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bftl::bounds::certify;
use bftl::harness::{self, FigurePreset, ScenarioConfig, SweepGrid, EXIT_STRICT};
use bftl::sim::{headways, simulate};
use bftl::{io as bio, stability, Error};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bftl",
    version,
    about = "Bando follow-the-leader platoon simulation and certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "BFTL_OUT")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario file and write its artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Exit with status 4 when the certificate or the beta assumption fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run one of the figure presets.
    Reproduce {
        /// fig-lower, fig-upper, fig-five, fig-two-constant, fig-five-constant, fig-energy or fig-phase.
        preset: String,
        #[command(flatten)]
        out: OutDir,
        #[arg(long)]
        strict: bool,
    },
    /// Print the headway certificate of a scenario without simulating.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the equilibrium and assumption report for a leader speed.
    Stability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        vstar: f64,
        /// Check the assumptions on [LO, HI] instead of the simulated headway range.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], conflicts_with = "observed")]
        interval: Option<Vec<f64>>,
        /// Check the assumptions on the simulated headway range of the first follower (default).
        #[arg(long)]
        observed: bool,
    },
    /// Run a parameter grid and print the summary table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write sweep.csv into this directory.
        #[arg(long, env = "BFTL_OUT")]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Error(Error),
    Strict(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn run_scenario(cfg: &ScenarioConfig, out: &Path, strict: bool) -> Result<(), Failure> {
    let (outcome, files) = harness::run(cfg, out)?;
    for f in &files {
        println!("{}", f.display());
    }
    let report = &outcome.certificate_report;
    eprintln!("certificate: {}", report.verdict);
    for v in &report.vehicles {
        eprintln!(
            "  vehicle {}: min h = {:.6} at t = {:.3}, |acc| <= {:.4}, v in [{:.4}, {:.4}]",
            v.vehicle, v.min_headway, v.t_min_headway, v.max_abs_acc, v.v_lo, v.v_hi
        );
    }
    let failures = outcome.strict_failures();
    if strict && !failures.is_empty() {
        return Err(Failure::Strict(failures));
    }
    Ok(())
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    bio::write_json(&mut lock, value).map_err(Error::from)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            dt,
            t_end,
            strict,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(dt) = dt {
                cfg.dt = dt;
            }
            if let Some(t) = t_end {
                cfg.t_end = t;
            }
            run_scenario(&cfg, &out.out, strict)
        }
        Command::Reproduce { preset, out, strict } => {
            let preset: FigurePreset = preset.parse()?;
            run_scenario(&preset.config(), &out.out, strict)
        }
        Command::Bounds { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let init = cfg.validate()?;
            let cert = certify(
                &cfg.params,
                &headways(&init, cfg.params.length),
                cfg.mode,
                cfg.v_bar_max,
            )?;
            print_json(&cert)
        }
        Command::Stability {
            config,
            vstar,
            interval,
            observed: _,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let init = cfg.validate()?;
            let h0 = cfg.initial.headways[0];
            let range = match interval {
                Some(v) => (v[0], v[1]),
                None => simulate(&init, &cfg.leader, &cfg.params, cfg.dt, cfg.t_end)?.headway_range(2),
            };
            print_json(&stability::report(&cfg.params, vstar, range, h0)?)
        }
        Command::Sweep {
            config,
            grid,
            jobs,
            out,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let text = fs::read_to_string(&grid).map_err(|e| Error::Config(format!("{}: {e}", grid.display())))?;
            let grid = SweepGrid::from_json(&text)?;
            let rows = harness::sweep(&cfg, &grid, jobs)?;
            let mut buf = Vec::new();
            harness::write_sweep_csv(&mut buf, &rows).map_err(Error::from)?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(Error::from)?;
                let mut w = BufWriter::new(fs::File::create(dir.join("sweep.csv")).map_err(Error::from)?);
                w.write_all(&buf).map_err(Error::from)?;
                w.flush().map_err(Error::from)?;
            }
            io::stdout().write_all(&buf).map_err(Error::from)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
        Err(Failure::Strict(reasons)) => {
            for r in reasons {
                eprintln!("strict: {r}");
            }
            ExitCode::from(EXIT_STRICT as u8)
        }
    }
}
