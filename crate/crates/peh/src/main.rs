use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use peh::{presets, CliError, Command, PointSpec, RunConfig};

#[derive(Parser)]
#[command(name = "peh", version, about = "Piezoelectric harvester impedance, power and bandwidth studies")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in parameter set (strong, weak). Defaults to strong.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Artifact directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Interface circuit: seh, sece, s-sshi, p-sshi.
    #[arg(long, global = true)]
    topology: Option<String>,
    /// Enable or disable phase-variable switching.
    #[arg(long, global = true)]
    pv: Option<bool>,
    /// Worker threads for sweeps and oracle batches (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone, Copy)]
struct PointArgs {
    /// Frequency relative to the natural frequency.
    #[arg(long, default_value_t = 1.0)]
    omega_rel: f64,
    /// Switching phase in degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi_deg: f64,
    /// Normalized rectified voltage (SEH, S-SSHI) or blocking angle in degrees (P-SSHI).
    #[arg(long)]
    second: Option<f64>,
}

impl From<PointArgs> for PointSpec {
    fn from(a: PointArgs) -> Self {
        PointSpec { omega_rel: a.omega_rel, phi_deg: a.phi_deg, second: a.second }
    }
}

#[derive(Subcommand)]
enum Sub {
    /// Ideal kinetic harvester ratios and half-power bandwidth table.
    Ideal,
    /// Piezoelectric voltage waveform and work cycle at one tuning.
    Waveform(PointArgs),
    /// Attainable normalized impedance region and match report.
    Region,
    /// Harvested power over the frequency and tuning grid.
    Sweep,
    /// Optimized power envelope and bandwidth metrics.
    Bandwidth,
    /// Time-domain simulation at one tuning.
    Oracle(PointArgs),
    /// Analytic model against the time-domain oracle over a grid.
    Compare,
    /// Print a built-in preset as JSON.
    Preset { name: String },
    /// Print the resolved run configuration as JSON.
    ShowConfig,
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::for_preset(name)?,
        (None, None) => RunConfig::for_preset("strong")?,
    };
    if let Some(t) = &cli.topology {
        cfg.topology = t.clone();
    }
    if let Some(pv) = cli.pv {
        cfg.pv_enabled = pv;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let cmd = match cli.command {
        Sub::Preset { ref name } => {
            let text = presets::source(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
            print!("{text}");
            return Ok(());
        }
        Sub::ShowConfig => {
            println!("{}", serde_json::to_string_pretty(&resolve(&cli)?)?);
            return Ok(());
        }
        Sub::Ideal => Command::Ideal,
        Sub::Waveform(p) => Command::Waveform(p.into()),
        Sub::Region => Command::Region,
        Sub::Sweep => Command::Sweep,
        Sub::Bandwidth => Command::Bandwidth,
        Sub::Oracle(p) => Command::Oracle(p.into()),
        Sub::Compare => Command::Compare,
    };
    let cfg = resolve(&cli)?;
    for path in peh::run(&cmd, &cfg, std::path::Path::new(&cfg.output.dir))? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
