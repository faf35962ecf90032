use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lambda_field::{Estimator, Point2, RobotShape};
use lambda_field_cli::{
    cmd_compare, cmd_eval_path, cmd_map, cmd_plan, cmd_simulate_scans, output_dir, CliError, CompareArgs, Engine,
    EvalPathArgs, ScenarioConfig,
};

/// Lambda-Field mapping, path risk and risk-gated planning.
#[derive(Debug, Parser)]
#[command(name = "lambda-field", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(short, long)]
    config: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: scenario output_dir, then $LAMBDA_FIELD_OUT, then .]
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<(ScenarioConfig, u64, PathBuf), CliError> {
        let config = ScenarioConfig::load(&self.config)?;
        let seed = self.seed.unwrap_or(config.seed);
        let out = output_dir(self.out.as_deref(), Some(&config));
        Ok((config, seed, out))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Lambda,
    Bayes,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundArg {
    Mle,
    Lower,
    Upper,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the intensity map and the log-odds baseline from scans.
    Map(ScenarioArgs),
    /// Simulate the scenario's scans and write the scan log.
    SimulateScans(ScenarioArgs),
    /// Collision probability and expected risk along a path.
    EvalPath {
        /// Lambda dump, or bayes dump with `--engine bayes`.
        #[arg(long)]
        dump: PathBuf,
        /// CSV of x,y,theta poses.
        #[arg(long)]
        path: PathBuf,
        #[arg(long, value_enum, default_value = "lambda")]
        engine: EngineArg,
        #[arg(long, value_enum, default_value = "mle")]
        bound: BoundArg,
        #[arg(long, default_value_t = 0.5)]
        width: f64,
        #[arg(long, default_value_t = 0.6)]
        length: f64,
        /// Robot mass, kg.
        #[arg(long, default_value_t = 20.0)]
        mass: f64,
        /// Constant speed, m/s.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Use a unit loss, so the expected risk is a probability.
        #[arg(long)]
        unit_risk: bool,
        /// Per-cell risk report CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Closed-loop planning episode.
    Plan {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Overrides the scenario reference path.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Path collision probability of both representations across resolutions.
    Compare {
        /// Occupancy probability of every cell.
        #[arg(long, default_value_t = 0.1)]
        probability: f64,
        /// Cell size at which the intensity reproduces that probability.
        #[arg(long, default_value_t = 0.5)]
        calibration_resolution: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        resolutions: Vec<f64>,
        /// Lower-left corner as `x,y`.
        #[arg(long, value_parser = pair, default_value = "0,0")]
        origin: (f64, f64),
        /// Width and height of the environment as `w,h`.
        #[arg(long, value_parser = pair)]
        extent: (f64, f64),
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        width: f64,
        /// Output CSV [default: compare.csv in the output directory]
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok((num(a)?, num(b)?))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Map(args) => {
            let (config, seed, out) = args.load()?;
            let s = cmd_map(&config, seed, &out)?;
            println!("scans={} beams={} out={}", s.scans, s.beams, out.display());
        }
        Command::SimulateScans(args) => {
            let (config, seed, out) = args.load()?;
            let s = cmd_simulate_scans(&config, seed, &out)?;
            println!("scans={} beams={} out={}", s.scans, s.beams, out.display());
        }
        Command::EvalPath {
            dump,
            path,
            engine,
            bound,
            width,
            length,
            mass,
            speed,
            unit_risk,
            report,
        } => {
            let args = EvalPathArgs {
                dump,
                path,
                engine: match engine {
                    EngineArg::Lambda => Engine::Lambda,
                    EngineArg::Bayes => Engine::Bayes,
                },
                bound: match bound {
                    BoundArg::Mle => Estimator::Mle,
                    BoundArg::Lower => Estimator::Lower,
                    BoundArg::Upper => Estimator::Upper,
                },
                shape: RobotShape::new(width, length, mass)?,
                speed,
                unit_risk,
                report,
            };
            let s = cmd_eval_path(&args)?;
            match s.expected_risk {
                Some(r) => println!("P_coll={} E_risk={} cells={}", s.p_collision, r, s.cells),
                None => println!("P_coll={} cells={}", s.p_collision, s.cells),
            }
        }
        Command::Plan { scenario, reference } => {
            let (config, seed, out) = scenario.load()?;
            let s = cmd_plan(&config, seed, &out, reference.as_deref())?;
            println!(
                "steps={} stops={} reached={} goal_distance={:.3} max_risk_upper={:.4} out={}",
                s.steps,
                s.stops,
                s.reached,
                s.goal_distance,
                s.max_logged_risk,
                out.display()
            );
        }
        Command::Compare {
            probability,
            calibration_resolution,
            resolutions,
            origin,
            extent,
            path,
            width,
            out,
        } => {
            let out = out.unwrap_or_else(|| output_dir(None, None).join("compare.csv"));
            let args = CompareArgs {
                probability,
                calibration_resolution,
                resolutions,
                origin: Point2::new(origin.0, origin.1),
                extent,
                path,
                width,
                out: Some(out),
            };
            println!("resolution,P_lambda,P_bayes_naive");
            for r in cmd_compare(&args)? {
                println!("{},{},{}", r.resolution, r.p_lambda, r.p_bayes_naive);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
