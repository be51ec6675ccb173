//! `etbc`: simulate, validate and plot adaptive event-triggered boundary control runs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod output;
mod plot;
mod scenario;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use etbc_core::simulator::{run_batch, x2_sin_family, ControlMode};
use etbc_core::trigger::{dwell_bound, lemma1_constants, suggest_kappas, DesignConstants, SearchGrid};
use etbc_core::{compute_gains, run, solve_h, Estimate, KernelParams, KernelScheme, ScenarioConfig64};

use error::CliError;
use output::{BatchFile, DwellFile, EventsFile, SummaryFile, SCHEMA};
use plot::Figure;
use scenario::ScenarioFile;

#[derive(Debug, Parser)]
#[command(name = "etbc", version, about = "Adaptive event-triggered boundary control of a PDE-ODE cascade")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario; writes trajectory.csv, events.json, summary.json and the resolved scenario.toml.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Hold the input at zero.
        #[arg(long)]
        open_loop: bool,
    },
    /// Pool inter-event times over the `x² sin(nπx)` family, n = 1..members.
    Batch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        members: u32,
        #[arg(long, default_value_t = 0.2)]
        zeta0: f64,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Override the decay rate of `m`.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Kernel and gain utilities.
    Kernels {
        #[command(subcommand)]
        action: KernelsAction,
    },
    /// Print the dwell-time bound and the smallest admissible state weights as JSON.
    SuggestKappas {
        #[command(flatten)]
        common: Common,
        /// Also write the JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the design parameters in order; exit 1 on a hard failure.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Render an SVG chart from a trajectory CSV (or a batch histogram CSV).
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        fig: Figure,
        /// Output file; `<fig>.svg` beside the input when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum KernelsAction {
    /// Write kernels.csv (y, K1) and kernels.json for one estimate.
    Dump {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the scenario's initial estimate.
        #[arg(long)]
        lambda_hat: Option<f64>,
        #[arg(long)]
        a_hat: Option<f64>,
        /// Kernel grid nodes; the scenario's when absent.
        #[arg(long)]
        nx: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Paper,
    Refined,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    kernel_scheme: Option<SchemeArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Final time in seconds.
    #[arg(long)]
    horizon: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig64, CliError> {
        let mut cfg = ScenarioFile::load(&self.scenario)?.to_config();
        if let Some(s) = self.kernel_scheme {
            cfg.kernel_scheme = match s {
                SchemeArg::Paper => KernelScheme::Paper,
                SchemeArg::Refined => KernelScheme::Refined,
            };
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        Ok(cfg)
    }

    /// The scenario after overrides, rejected if any hard check fails.
    fn checked_config(&self) -> Result<ScenarioConfig64, CliError> {
        let cfg = self.config()?;
        let report = validate::validate(&cfg);
        if report.failed() {
            let lines: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
            return Err(CliError::Validation(lines.join("\n")));
        }
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn simulate(common: &Common, out: &Path, open_loop: bool) -> Result<(), CliError> {
    let mut cfg = common.checked_config()?;
    if open_loop {
        cfg.control = ControlMode::OpenLoop;
    }
    let (log, summary) = run(&cfg)?;
    create_dir(out)?;
    std::fs::write(out.join("scenario.toml"), ScenarioFile::from_config(&cfg).to_toml())?;
    output::write_trajectory(&out.join("trajectory.csv"), &log)?;
    output::write_json(&out.join("events.json"), &EventsFile::from_log(&log))?;
    let s = SummaryFile::new(&summary, &log, cfg.horizon);
    output::write_json(&out.join("summary.json"), &s)?;
    println!(
        "{} events, min dwell {}, final ‖u‖ + |ζ| = {:.3e} (peak {:.3e})",
        s.event_count,
        s.min_dwell.map_or("-".into(), |d| format!("{d:.4} s")),
        s.final_u_norm + s.final_abs_zeta,
        s.peak_state
    );
    Ok(())
}

fn batch(common: &Common, out: &Path, members: u32, zeta0: f64, bins: usize, eta: Option<f64>) -> Result<(), CliError> {
    let mut cfg = common.checked_config()?;
    if let Some(eta) = eta {
        if !(eta > 0.0) {
            return Err(CliError::Validation(format!("eta must be positive, got {eta}")));
        }
        cfg.etm.eta = eta;
    }
    let family = x2_sin_family(&cfg, members, zeta0);
    let outcome = run_batch(&family, bins)?;
    create_dir(out)?;
    let BatchFile { mode, dwell_count, excluded, .. } = output::write_batch(out, &outcome)?;
    println!(
        "{dwell_count} dwells from {} members ({} excluded), histogram mode {mode:.4} s",
        outcome.members,
        excluded.len()
    );
    Ok(())
}

fn kernels_dump(
    common: &Common,
    out: &Path,
    lambda_hat: Option<f64>,
    a_hat: Option<f64>,
    nx: Option<usize>,
) -> Result<(), CliError> {
    let cfg = common.checked_config()?;
    let est = Estimate::new(
        lambda_hat.unwrap_or(cfg.initial_estimate.lambda_hat),
        a_hat.unwrap_or(cfg.initial_estimate.a_hat),
    );
    let p = KernelParams::new(est, cfg.plant.eps, cfg.plant.b, cfg.plant.q, cfg.kappa)?;
    p.check_admissible(&cfg.bounds)?;
    let h = solve_h(&p, nx.unwrap_or(cfg.kernel_nx), cfg.kernel_scheme)?;
    let gains = compute_gains(&p, &h)?;
    create_dir(out)?;
    output::write_kernels(out, &gains)?;
    println!("K2 = {}, r = {}, K1(1,1) = {}", gains.k2, gains.r, gains.k1_profile.last().copied().unwrap_or(f64::NAN));
    Ok(())
}

fn suggest(common: &Common, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = common.checked_config()?;
    let design =
        DesignConstants { bounds: cfg.bounds, q: cfg.plant.q, eps: cfg.plant.eps, b: cfg.plant.b, kappa: cfg.kappa };
    let grid = SearchGrid { kernel_nx: cfg.kernel_nx, scheme: cfg.kernel_scheme, ..SearchGrid::default() };
    let constants = lemma1_constants(&design, grid)?;
    let file = DwellFile {
        schema: SCHEMA,
        constants,
        report: dwell_bound(&constants, &cfg.etm)?,
        suggested_kappas: suggest_kappas(&constants, cfg.etm.xi)?,
    };
    println!("{}", serde_json::to_string_pretty(&file)?);
    if let Some(path) = out {
        output::write_json(path, &file)?;
    }
    Ok(())
}

fn plot_cmd(input: &Path, fig: Figure, out: Option<&Path>) -> Result<(), CliError> {
    let svg = plot::figure(fig, input)?.render();
    let name = format!("{}.svg", fig.to_possible_value().expect("figures have names").get_name());
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).join(name));
    std::fs::write(&path, svg).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    println!("{}", path.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, out, open_loop } => simulate(&common, &out, open_loop),
        Command::Batch { common, out, members, zeta0, bins, eta } => batch(&common, &out, members, zeta0, bins, eta),
        Command::Kernels { action: KernelsAction::Dump { common, out, lambda_hat, a_hat, nx } } => {
            kernels_dump(&common, &out, lambda_hat, a_hat, nx)
        }
        Command::SuggestKappas { common, out } => suggest(&common, out.as_deref()),
        Command::Validate { common } => {
            let report = validate::validate(&common.config()?);
            print!("{report}");
            if report.failed() {
                Err(CliError::Validation("validation failed".into()))
            } else {
                Ok(())
            }
        }
        Command::Plot { input, fig, out } => plot_cmd(&input, fig, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
