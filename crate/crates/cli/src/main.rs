//! `pbec`: polarised photon condensate simulator.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use pbec_core::analytic::{threshold_report, ThresholdReport};
use pbec_core::config::{emit_defaults, parse_config, Format, RunConfig};
use pbec_core::output::{
    self, gnuplot_script, spectrum_gnuplot, write_gnuplot, write_modes_csv, write_pinned_csv, write_spectrum_csv,
    write_sweep_csv, Figure, OutputDir, RunManifest, SweepRecord,
};
use pbec_core::selftest::run_selftest;
use pbec_core::sensitivity::sensitivity;
use pbec_core::sweep::{chi_sweep, grid_sweep, pump_sweep, SweepResult};

/// Grid points of the dye spectrum table.
const SPECTRUM_POINTS: usize = 1201;

#[derive(Parser)]
#[command(name = "pbec", version, about = "Polarised photon condensate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML); reference parameters when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `[output] directory`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Exit successfully even if some points did not converge.
    #[arg(long, global = true)]
    allow_partial: bool,
    /// Reserved; the simulator has no randomness and rejects this flag.
    #[arg(long, global = true, hide = true)]
    seed_less: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Write the cavity mode ladder with its dye rates.
    Modes,
    /// Write the dye emission and absorption spectrum.
    Spectrum,
    /// S3 against pump, with the pinning approximation.
    SweepPump,
    /// S3 against chirality for a family of absorption strengths.
    SweepChi,
    /// S3 over the chirality-pump plane.
    SweepGrid,
    /// Slope of S3 with respect to enantiomeric excess.
    Sensitivity,
    /// Ground-mode thresholds of both polarisations.
    Threshold,
    /// Run the built-in consistency checks.
    Selftest,
    /// Print the resolved default configuration.
    EmitDefaults,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Spectrum => "spectrum",
            Command::SweepPump => "sweep-pump",
            Command::SweepChi => "sweep-chi",
            Command::SweepGrid => "sweep-grid",
            Command::Sensitivity => "sensitivity",
            Command::Threshold => "threshold",
            Command::Selftest => "selftest",
            Command::EmitDefaults => "emit-defaults",
        }
    }
}

fn load_config(global: &Global) -> Result<RunConfig> {
    let mut config = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &global.out {
        config.output.directory = out.to_string_lossy().into_owned();
    }
    Ok(config)
}

/// Output directory, manifest and the files written so far.
struct Run {
    dir: OutputDir,
    manifest: RunManifest,
    config: RunConfig,
}

impl Run {
    fn start(command: Command, config: &RunConfig) -> Result<Self> {
        let dir = OutputDir::acquire(&config.output.directory)?;
        Ok(Run {
            dir,
            manifest: RunManifest::new(command.name(), config),
            config: config.clone(),
        })
    }

    fn wants(&self, format: Format) -> bool {
        self.config.output.wants(format)
    }

    /// Path for `name`, recorded in the manifest.
    fn file(&mut self, name: &str) -> PathBuf {
        self.manifest.files.push(name.to_string());
        self.dir.file(name)
    }

    fn sweep(&mut self, name: &str, figure: Figure, result: &SweepResult) -> Result<()> {
        let csv = format!("{name}.csv");
        let pinned = result.pinned.as_ref().map(|_| format!("{name}_pinned.csv"));
        if self.wants(Format::Csv) {
            let path = self.file(&csv);
            write_sweep_csv(&path, result)?;
            if let (Some(p), Some(file)) = (&result.pinned, &pinned) {
                let path = self.file(file);
                write_pinned_csv(&path, p)?;
            }
        }
        if self.wants(Format::Gnuplot) {
            let path = self.file(&format!("{name}.gp"));
            write_gnuplot(&path, &gnuplot_script(figure, result, &csv, pinned.as_deref()))?;
        }
        self.manifest.sweeps.push(SweepRecord {
            name: name.to_string(),
            summary: result.summary(),
        });
        Ok(())
    }

    fn finish(mut self) -> Result<PathBuf> {
        if self.wants(Format::Json) {
            self.manifest.files.push(output::MANIFEST_FILE.to_string());
            self.manifest.files.push(output::CONFIG_FILE.to_string());
            self.manifest.write(&self.dir)?;
        }
        Ok(self.dir.path().to_path_buf())
    }
}

fn print_thresholds(report: &ThresholdReport) {
    println!("tau_L = {:.6e} 1/s", report.tau_left);
    println!("tau_R = {:.6e} 1/s", report.tau_right);
    println!("effective_tau_L = {:.6e} 1/s", report.effective_left);
    println!("effective_tau_R = {:.6e} 1/s", report.effective_right);
    match report.winner {
        Some(p) => println!("winner = {}", p.label()),
        None => println!("winner = degenerate"),
    }
}

fn check_convergence(result: &SweepResult, allow_partial: bool) -> Result<()> {
    let s = result.summary();
    println!(
        "{} of {} points converged (max residual {:.3e} 1/s, {} iterations)",
        s.converged, s.points, s.max_residual, s.total_iterations
    );
    if s.converged < s.points && !allow_partial {
        bail!(
            "{} points did not converge; results were written, rerun with --allow-partial to accept them",
            s.points - s.converged
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    if g.seed_less {
        bail!("--seed-less is reserved: the simulator is deterministic and has no seed");
    }
    if let Some(n) = g.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    if let Command::EmitDefaults = cli.command {
        print!("{}", emit_defaults()?);
        return Ok(());
    }
    let config = load_config(g)?;
    let setup = config.setup()?;

    match cli.command {
        Command::EmitDefaults => unreachable!("handled above"),
        Command::Threshold => {
            let modes = setup.modes()?;
            print_thresholds(&threshold_report(&setup.dye, &modes, &setup.rates(&modes)?)?);
        }
        Command::Selftest => {
            let report = run_selftest(&setup);
            print!("{report}");
            if !report.passed() {
                bail!("self-test failed");
            }
        }
        Command::Modes | Command::Spectrum => {
            let mut run = Run::start(cli.command, &config)?;
            let modes = setup.modes()?;
            let rates = setup.rates(&modes)?;
            if matches!(cli.command, Command::Modes) {
                let path = run.file("modes.csv");
                write_modes_csv(&path, &modes, &setup.dye, &rates)?;
            } else {
                let path = run.file("spectrum.csv");
                write_spectrum_csv(&path, &setup.dye, SPECTRUM_POINTS)?;
                let path = run.file("spectrum_modes.csv");
                write_modes_csv(&path, &modes, &setup.dye, &rates)?;
                if run.wants(Format::Gnuplot) {
                    let path = run.file("spectrum.gp");
                    write_gnuplot(&path, &spectrum_gnuplot("spectrum.csv", "spectrum_modes.csv"))?;
                }
            }
            println!("wrote {}", run.finish()?.display());
        }
        Command::SweepPump | Command::SweepChi | Command::SweepGrid => {
            let mut run = Run::start(cli.command, &config)?;
            let (name, figure, result) = match cli.command {
                Command::SweepPump => {
                    let spec = config.pump_sweep_spec()?;
                    ("pump_sweep", Figure::Pump, run.manifest.time("sweep", || pump_sweep(&spec))?)
                }
                Command::SweepChi => {
                    let spec = config.chi_sweep_spec()?;
                    ("chi_sweep", Figure::Chi, run.manifest.time("sweep", || chi_sweep(&spec))?)
                }
                _ => {
                    let spec = config.grid_sweep_spec()?;
                    ("grid_sweep", Figure::Grid, run.manifest.time("sweep", || grid_sweep(&spec))?)
                }
            };
            run.sweep(name, figure, &result)?;
            if let Some(t) = &result.thresholds {
                print_thresholds(t);
            }
            let dir = run.finish()?;
            println!("wrote {}", dir.display());
            check_convergence(&result, g.allow_partial)?;
        }
        Command::Sensitivity => {
            let s = &config.sweep.sensitivity;
            let mut run = Run::start(cli.command, &config)?;
            let base = setup.with_pump(s.pump.0);
            let report = run.manifest.time("sensitivity", || sensitivity(&base, s.epsilon, s.step))?;
            println!("epsilon = {}", report.epsilon);
            println!("step = {:e}", report.step);
            println!("dS3/depsilon = {:.6e}", report.slope);
            println!("S3(epsilon - step) = {:.12e}", report.s3_minus);
            println!("S3(epsilon + step) = {:.12e}", report.s3_plus);
            if report.noise_dominated {
                println!("warning: difference below the solver noise floor {:.3e}", report.noise_floor);
            }
            if run.wants(Format::Json) {
                let path = run.file("sensitivity.json");
                fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            println!("wrote {}", run.finish()?.display());
            if !report.converged && !g.allow_partial {
                bail!("a bracketing solve did not converge; rerun with --allow-partial to accept it");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
