use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use irs_illum::config::ScenarioConfig;
use irs_illum::experiments::{
    cmd_min_power, cmd_overhead_vs_snr, cmd_protocol_sim, cmd_snr_map, cmd_snr_sweep, DeltaPolicy,
    MapSpec, SweepRange,
};
use irs_illum::io::{manifest, snr_grid_csv, snr_grid_pgm, write_artifact};
use irs_illum::overhead::{comparison_csv, comparison_table};
use irs_illum::verify::{cmd_verify, VerifyOptions};
use irs_illum::Axis;

/// Carriers above this need `--enable-28ghz`; their panels have thousands of
/// elements and runs take much longer.
const GATED_FREQUENCY_HZ: f64 = 6e9;

const EXIT_VALIDATION: u8 = 1;
const EXIT_VERIFY_FAILED: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "irs-illum",
    version,
    about = "Position-based IRS illumination experiments"
)]
struct Cli {
    /// Scenario file (flat `key = value`); built-in defaults if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides `grid.spacing_m`, the disc-grid spacing.
    #[arg(long, global = true)]
    grid_spacing_m: Option<f64>,
    /// Allow carriers above 6 GHz.
    #[arg(long = "enable-28ghz", global = true)]
    enable_28ghz: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// SNR along one axis through the user position.
    SnrSweep {
        #[arg(long, default_value = "y", value_parser = parse_axis)]
        axis: Axis,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        start_m: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        stop_m: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Illumination width; `illumination.delta_m` if omitted.
        #[arg(long)]
        delta_m: Option<f64>,
    },
    /// SNR heatmap in a plane through the user position.
    SnrMap {
        /// Two of x, y, z, e.g. `xy`.
        #[arg(long, default_value = "xy")]
        plane: String,
        #[arg(long, default_value_t = 15.0)]
        half_width_m: f64,
        #[arg(long, default_value_t = 121)]
        points: usize,
        #[arg(long)]
        delta_m: Option<f64>,
    },
    /// Average overhead of the proposed scheme versus the required SNR.
    OverheadVsSnr {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "0,5,10,15,20"
        )]
        gamma_thr_db: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,8")]
        delta_m: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        seeds: usize,
    },
    /// Minimum transmit power versus blockage diameter.
    MinPower {
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10,12,14,16")]
        d_blk_m: Vec<f64>,
        /// Illumination widths in meters, or `full` for Δ = D_blk.
        #[arg(long, value_delimiter = ',', default_value = "0,4,8,full")]
        policy: Vec<String>,
    },
    /// One crossing of the blockage area under the reconfiguration protocol.
    ProtocolSim {
        #[arg(long)]
        delta_m: Option<f64>,
    },
    /// Model consistency and invariant checks.
    Verify {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Drop the −π/2 of the reflection coefficient; consistency must fail.
        #[arg(long)]
        corrupt_phase_convention: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SnrSweep { .. } => "snr-sweep",
            Command::SnrMap { .. } => "snr-map",
            Command::OverheadVsSnr { .. } => "overhead-vs-snr",
            Command::MinPower { .. } => "min-power",
            Command::ProtocolSim { .. } => "protocol-sim",
            Command::Verify { .. } => "verify",
        }
    }
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: irs_illum::Error| e.to_string())
}

fn parse_plane(s: &str) -> anyhow::Result<(Axis, Axis)> {
    let axes: Vec<Axis> = s
        .chars()
        .map(|c| parse_axis(&c.to_string()))
        .collect::<Result<_, _>>()
        .map_err(anyhow::Error::msg)?;
    match axes.as_slice() {
        [u, v] if u != v => Ok((*u, *v)),
        _ => bail!("plane must name two different axes, e.g. `xy`; got `{s}`"),
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            ScenarioConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(spacing) = cli.grid_spacing_m {
        cfg.grid_spacing_m = Some(spacing);
    }
    cfg.validate()?;
    if cfg.frequency_hz > GATED_FREQUENCY_HZ && !cli.enable_28ghz {
        bail!(
            "carrier {} Hz is above {GATED_FREQUENCY_HZ} Hz; pass --enable-28ghz to run it",
            cfg.frequency_hz
        );
    }
    Ok(cfg)
}

fn written(path: PathBuf) {
    println!("wrote {}", path.display());
}

/// Runs the command; `Ok(false)` means verification failed.
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = load_config(cli)?;
    let out: &Path = &cli.out;
    let mut passed = true;
    match &cli.command {
        Command::SnrSweep {
            axis,
            start_m,
            stop_m,
            points,
            delta_m,
        } => {
            let range = SweepRange {
                start_m: *start_m,
                stop_m: *stop_m,
                points: *points,
            };
            let csv = cmd_snr_sweep(
                &cfg,
                *axis,
                &range,
                delta_m.unwrap_or(cfg.illumination_delta_m),
            )?;
            written(write_artifact(out, "snr_sweep.csv", csv)?);
        }
        Command::SnrMap {
            plane,
            half_width_m,
            points,
            delta_m,
        } => {
            let (axis_u, axis_v) = parse_plane(plane)?;
            let map = MapSpec {
                axis_u,
                axis_v,
                half_width_m: *half_width_m,
                points: *points,
            };
            let grid = cmd_snr_map(&cfg, &map, delta_m.unwrap_or(cfg.illumination_delta_m))?;
            let (pgm, range) = snr_grid_pgm(&grid);
            written(write_artifact(out, "snr_map.csv", snr_grid_csv(&grid))?);
            written(write_artifact(out, "snr_map.pgm", pgm)?);
            written(write_artifact(out, "snr_map.range.txt", range)?);
        }
        Command::OverheadVsSnr {
            gamma_thr_db,
            delta_m,
            seeds,
        } => {
            let csv = cmd_overhead_vs_snr(&cfg, gamma_thr_db, delta_m, *seeds)?;
            written(write_artifact(out, "overhead_vs_snr.csv", csv)?);
            let table = comparison_table(&cfg.overhead_params()?)?;
            written(write_artifact(
                out,
                "overhead_table.csv",
                comparison_csv(&table),
            )?);
        }
        Command::MinPower { d_blk_m, policy } => {
            let policies = policy
                .iter()
                .map(|p| p.parse::<DeltaPolicy>())
                .collect::<Result<Vec<_>, _>>()?;
            let csv = cmd_min_power(&cfg, d_blk_m, &policies)?;
            written(write_artifact(out, "min_power.csv", csv)?);
        }
        Command::ProtocolSim { delta_m } => {
            let trace = cmd_protocol_sim(&cfg, delta_m.unwrap_or(cfg.illumination_delta_m))?;
            written(write_artifact(out, "protocol_trace.csv", trace.to_csv())?);
            println!(
                "{} reconfigurations over {:.3} s; overhead {:.6}",
                trace.reconfiguration_count(),
                trace.crossing_duration_s,
                trace.overhead_fraction
            );
        }
        Command::Verify {
            trials,
            corrupt_phase_convention,
        } => {
            let opts = VerifyOptions {
                trials: *trials,
                corrupt_phase_convention: *corrupt_phase_convention,
            };
            let report = cmd_verify(&cfg, &opts)?;
            print!("{report}");
            written(write_artifact(
                out,
                "verify_report.txt",
                report.to_string(),
            )?);
            passed = report.passed();
        }
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let command = format!("{} ({})", cli.command.name(), args.join(" "));
    written(write_artifact(
        out,
        "manifest.txt",
        manifest(env!("CARGO_PKG_VERSION"), &command, &cfg),
    )?);
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY_FAILED),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}
