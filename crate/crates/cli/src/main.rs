use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ropeclimb::commands::{self, parse_bench_rows, CliError, TrackArgs, BENCH_ROWS};
use ropeclimb::config::{ScenarioFile, UNITS};

#[derive(Parser)]
#[command(name = "ropeclimb", version, about = "Plan, track and analyse jumps of a two-rope wall-climbing robot")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = "ROPECLIMB_OUT", default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; missing keys come from the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base preset: default, landing or obstacle.
    #[arg(long)]
    preset: Option<String>,
    /// Override a key, e.g. `--set scenario.mu=0.6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a jump and write the plan.
    Plan {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Lift-off position x,y,z (m).
        #[arg(long, allow_hyphen_values = true)]
        p0: Option<String>,
        /// Target position x,y,z (m).
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
    },
    /// Simulate a stored plan, open loop or under MPC.
    Track {
        #[arg(long)]
        plan: PathBuf,
        /// mpc or open-loop.
        #[arg(long, default_value = "mpc")]
        controller: String,
        /// none, constant:fx,fy,fz or impulse:fx,fy,fz@start[+duration].
        #[arg(long, allow_hyphen_values = true)]
        disturbance: Option<String>,
        /// Rate noise sigmas psi_dot,l1_dot,l2_dot.
        #[arg(long)]
        noise: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulate wall contact after the flight.
        #[arg(long)]
        landing: bool,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Feasibility margin over the configured (Y, Z) grid.
    Heatmap {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// [+-](fx|fy|fz|mx|my|mz) or six numbers.
        #[arg(long, allow_hyphen_values = true, default_value = "-fz")]
        direction: String,
        /// Comma-separated friction coefficients; one map each.
        #[arg(long, value_delimiter = ',')]
        mu: Vec<f64>,
        /// Wall inclination from the vertical (rad).
        #[arg(long, allow_hyphen_values = true)]
        inclination: Option<f64>,
    },
    /// Compare integration schemes on the configured jump.
    BenchIntegrators {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// knots:method:substeps list, e.g. 40:rk4:0,30:rk4:5.
        #[arg(long)]
        rows: Option<String>,
    },
    /// Landing-error statistics under random impulsive disturbances.
    Robustness {
        #[arg(long)]
        plan: PathBuf,
        /// Runs per flight interval.
        #[arg(long, short)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "mpc")]
        controller: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the resolved configuration as TOML.
    ShowConfig {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print every configuration key with its unit.
    Schema,
}

fn resolve(args: &ConfigArgs) -> Result<ScenarioFile, CliError> {
    let body = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|source| ropeclimb::ConfigError::Io { path: p.clone(), source })?),
        None => None,
    };
    let origin = args.config.as_deref().map(Path::display).map(|d| d.to_string()).unwrap_or_default();
    let mut cfg = ScenarioFile::resolve(body.as_deref().map(|b| (origin.as_str(), b)), args.preset.as_deref(), &args.overrides)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.noise.seed = seed;
    }
    Ok(cfg)
}

fn triple(s: &str, what: &str) -> Result<[f64; 3], CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{what}: expected three comma-separated numbers")))?;
    v.try_into().map_err(|_| CliError::Usage(format!("{what}: expected three comma-separated numbers")))
}

fn run(cli: Cli) -> Result<Vec<String>, CliError> {
    let out = &cli.out;
    let outcome = match cli.command {
        Command::Plan { cfg, p0, target } => {
            let mut c = resolve(&cfg)?;
            if let Some(p) = p0 {
                c.jump.p0 = triple(&p, "--p0")?.into();
            }
            if let Some(p) = target {
                c.jump.p_tg = triple(&p, "--target")?.into();
            }
            c.validate()?;
            commands::cmd_plan(&c, out)?
        }
        Command::Track { plan, controller, disturbance, noise, seed, landing, overrides } => {
            let noise = noise.as_deref().map(|n| triple(n, "--noise")).transpose()?;
            let args = TrackArgs {
                plan: &plan,
                overrides: &overrides,
                controller: &controller,
                disturbance: disturbance.as_deref(),
                noise,
                seed,
                landing,
            };
            commands::cmd_track(&args, out)?
        }
        Command::Heatmap { cfg, direction, mu, inclination } => {
            let mut c = resolve(&cfg)?;
            if let Some(a) = inclination {
                c.scenario = c.scenario.with_wall_inclination(a);
            }
            commands::cmd_heatmap(&c, &direction, &mu, out)?
        }
        Command::BenchIntegrators { cfg, rows } => {
            let c = resolve(&cfg)?;
            let rows = match rows {
                Some(r) => parse_bench_rows(&r)?,
                None => BENCH_ROWS.to_vec(),
            };
            commands::cmd_bench_integrators(&c, &rows, out)?
        }
        Command::Robustness { plan, n, seed, controller, overrides } => {
            commands::cmd_robustness(&plan, &overrides, n, seed, &controller, out)?
        }
        Command::ShowConfig { cfg } => return Ok(vec![resolve(&cfg)?.to_toml()]),
        Command::Schema => {
            return Ok(UNITS.iter().map(|(k, u, d)| format!("{k:<28} {u:<16} {d}")).collect());
        }
    };
    let mut lines = outcome.lines;
    lines.push(format!("manifest: {}", outcome.manifest.display()));
    Ok(lines)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
