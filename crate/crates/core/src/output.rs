//! Result persistence: CSV tables, the JSON run manifest and gnuplot scripts.
//!
//! Floats are written as `{:.12e}` so repeated runs give byte-identical
//! files. An undefined S3 is an empty field. A lock file marks an output
//! directory as owned by one process for the lifetime of [`OutputDir`].

use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytic::PinnedPoint;
use crate::cavity::Mode;
use crate::config::RunConfig;
use crate::dye::{DyeParams, RateTable};
use crate::error::{Error, Result};
use crate::numeric::linspace;
use crate::sweep::{ConvergenceSummary, SweepResult};

pub const LOCK_FILE: &str = ".pbec.lock";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Resolved configuration; `--config` on it replays the run.
pub const CONFIG_FILE: &str = "config.toml";

/// Canonical float text.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.12e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// An output directory held under an exclusive lock file.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    lock: PathBuf,
}

impl OutputDir {
    /// Creates the directory if needed and takes the lock.
    pub fn acquire(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        fs::create_dir_all(&path)?;
        let lock = path.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => writeln!(f, "{}", std::process::id())?,
            Err(e) if e.kind() == ErrorKind::AlreadyExists => return Err(Error::Locked(path)),
            Err(e) => return Err(e.into()),
        }
        Ok(OutputDir { path, lock })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if let Err(e) = fs::remove_file(&self.lock) {
            log::warn!("could not remove {}: {e}", self.lock.display());
        }
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_path(path)?)
}

/// One row per grid point, outer-major.
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = Vec::new();
    if let Some(outer) = &result.spec.outer {
        header.push(outer.axis.label());
    }
    header.push(result.spec.inner.axis.label());
    header.extend([
        "n_left_total",
        "n_right_total",
        "n_left_ground",
        "n_right_ground",
        "s3",
        "s3_ground",
        "excited_fraction",
        "converged",
        "residual",
        "iterations",
        "clamped",
    ]);
    w.write_record(&header)?;
    for p in &result.points {
        let o = &p.observables;
        let mut row = Vec::with_capacity(header.len());
        if let Some(outer) = p.outer {
            row.push(fmt_float(outer));
        }
        row.extend([
            fmt_float(p.inner),
            fmt_float(o.total_left),
            fmt_float(o.total_right),
            fmt_float(o.ground_left),
            fmt_float(o.ground_right),
            fmt_opt(o.s3),
            fmt_opt(o.s3_ground),
            fmt_float(o.excited_fraction),
            p.converged.to_string(),
            fmt_float(p.residual_norm),
            p.iterations.to_string(),
            p.clamped.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pinned_csv(path: &Path, pinned: &[PinnedPoint]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["pump", "n_left_ground", "n_right_ground", "s3"])?;
    for p in pinned {
        w.write_record([fmt_float(p.pump), fmt_float(p.left), fmt_float(p.right), fmt_opt(p.s3)])?;
    }
    w.flush()?;
    Ok(())
}

/// Mode ladder with the dye rates of each mode.
pub fn write_modes_csv(path: &Path, modes: &[Mode], dye: &DyeParams, rates: &RateTable) -> Result<()> {
    rates.check_modes(modes)?;
    let mut w = writer(path)?;
    w.write_record([
        "polarisation",
        "l",
        "j",
        "degeneracy",
        "omega",
        "detuning",
        "kappa",
        "gamma_down",
        "gamma_up",
    ])?;
    for (m, r) in modes.iter().zip(rates.rates()) {
        w.write_record([
            m.polarisation.label().to_string(),
            m.l.to_string(),
            m.j.to_string(),
            m.degeneracy.to_string(),
            fmt_float(m.omega),
            fmt_float(m.omega - dye.omega0),
            fmt_float(m.kappa),
            fmt_float(r.emission),
            fmt_float(r.absorption),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Emission and absorption on a detuning grid of ±3 dye linewidths.
pub fn write_spectrum_csv(path: &Path, dye: &DyeParams, points: usize) -> Result<()> {
    let half = 3.0 * dye.linewidth;
    let mut w = writer(path)?;
    w.write_record(["omega", "detuning", "gamma_down", "gamma_up"])?;
    for d in linspace(-half, half, points) {
        let omega = dye.omega0 + d;
        w.write_record([
            fmt_float(omega),
            fmt_float(d),
            fmt_float(dye.emission_at(omega)),
            fmt_float(dye.absorption_at(omega)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Wall-clock duration of one stage of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub name: String,
    pub summary: ConvergenceSummary,
}

/// Provenance of one run. `config` with `command` reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub timings: Vec<StageTiming>,
    pub sweeps: Vec<SweepRecord>,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            version: crate::VERSION.to_string(),
            config: config.clone(),
            timings: Vec::new(),
            sweeps: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    /// Writes the manifest and the resolved config next to the results.
    pub fn write(&self, dir: &OutputDir) -> Result<()> {
        fs::write(dir.file(CONFIG_FILE), self.config.to_toml()?)?;
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.file(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Which plot a sweep result should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// S3 and both ground occupations against pump, log axes.
    Pump,
    /// One S3 curve per absorption scale against χ or ε.
    Chi,
    /// S3 heat map over pump and χ.
    Grid,
}

/// Gnuplot script rendering `csv` (and `pinned`, for pump sweeps) to PNG.
pub fn gnuplot_script(figure: Figure, result: &SweepResult, csv: &str, pinned: Option<&str>) -> String {
    let stem = csv.trim_end_matches(".csv");
    let mut s = format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{stem}.png'\nset key autotitle columnhead\n"
    );
    let inner = result.spec.inner.axis.label();
    match figure {
        Figure::Pump => {
            s.push_str(&format!(
                "set multiplot layout 2,1\nset logscale x\nset xlabel '{inner}'\nset ylabel 'S3'\nset yrange [-1.05:1.05]\n"
            ));
            let mut plot = format!("plot '{csv}' using 1:6 with lines title 'full'");
            if let Some(p) = pinned {
                plot.push_str(&format!(", '{p}' using 1:4 with lines dashtype 2 title 'pinned'"));
            }
            s.push_str(&plot);
            s.push_str(&format!(
                "\nset logscale y\nset autoscale y\nset ylabel 'ground occupation'\nplot '{csv}' using 1:4 with lines title 'L', '{csv}' using 1:5 with lines title 'R'\nunset multiplot\n"
            ));
        }
        Figure::Chi => {
            s.push_str(&format!("set xlabel '{inner}'\nset ylabel 'S3'\nset yrange [-1.05:1.05]\n"));
            match &result.spec.outer {
                Some(outer) => {
                    let label = outer.axis.label();
                    let n = result.spec.inner.values.len();
                    let curves: Vec<String> = outer
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| {
                            format!(
                                "'{csv}' every ::{}::{} using 2:7 with lines title '{label} = {v}'",
                                i * n,
                                (i + 1) * n - 1
                            )
                        })
                        .collect();
                    s.push_str(&format!("plot {}\n", curves.join(", ")));
                }
                None => s.push_str(&format!("plot '{csv}' using 1:6 with lines title 'S3'\n")),
            }
        }
        Figure::Grid => {
            let outer = result.spec.outer.as_ref().map_or("outer", |o| o.axis.label());
            s.push_str(&format!(
                "set view map\nset logscale y\nset xlabel '{outer}'\nset ylabel '{inner}'\nset cblabel 'S3'\nset cbrange [-1:1]\nset palette defined (-1 'blue', 0 'white', 1 'red')\nsplot '{csv}' using 1:2:7 with image notitle\n"
            ));
        }
    }
    s
}

/// Gnuplot script for the dye spectrum with the cavity modes marked.
pub fn spectrum_gnuplot(spectrum: &str, modes: &str) -> String {
    let stem = spectrum.trim_end_matches(".csv");
    format!(
        "set datafile separator ','\nset terminal pngcairo size 900,600\nset output '{stem}.png'\nset key autotitle columnhead\nset xlabel 'detuning (rad/s)'\nset ylabel 'rate (1/s)'\nplot '{spectrum}' using 2:3 with lines title 'emission', '{spectrum}' using 2:4 with lines title 'absorption', '{modes}' using 6:8 with points pointtype 7 pointsize 0.4 title 'modes'\n"
    )
}

pub fn write_gnuplot(path: &Path, script: &str) -> Result<()> {
    fs::write(path, script)?;
    Ok(())
}
