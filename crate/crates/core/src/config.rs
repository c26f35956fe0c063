//! Run configuration in TOML.
//!
//! Dimensioned values are strings with a unit suffix and bare numbers are
//! rejected for them:
//!
//! | kind            | units                         |
//! |-----------------|-------------------------------|
//! | rate, frequency | `Hz`, `kHz`, `MHz`, `GHz`, `THz` (1/s or rad/s by field) |
//! | length          | `m`, `mm`, `um`, `nm`         |
//! | time            | `s`, `ms`, `us`, `ns`         |
//! | number density  | `m^-3`                        |
//! | angle           | `deg`                         |
//!
//! Every section except `[medium]` may be omitted and falls back to the
//! reference parameters. `[medium]` holds either `n_left` and `n_right`, or a
//! `[medium.sample]` table (glucose defaults) with an optional
//! `[medium.solvent]` table (methanol defaults).
//!
//! ```toml
//! [cavity]
//! mirror_separation = "1.46 um"
//! kappa_override = "100 MHz"
//!
//! [medium.sample]
//! epsilon = 0.5
//!
//! [dye]
//! pump = "10 GHz"
//! ```

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::cavity::{CavityParams, MediumIndices, Polarisation};
use crate::chiral::{ChiralSample, SolventParams};
use crate::dye::DyeParams;
use crate::dynamics::{SolverConfig, SolverMode};
use crate::error::{invalid, Error, Result};
use crate::numeric::max_of;
use crate::setup::{MediumSpec, Setup};
use crate::sweep::{Axis, AxisGrid, SweepSpec};

/// A family of units: suffixes with their factor to SI, largest first.
pub trait UnitKind {
    const UNITS: &'static [(&'static str, f64)];
    const WHAT: &'static str;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateUnit;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthUnit;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeUnit;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityUnit;
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleUnit;

impl UnitKind for RateUnit {
    const UNITS: &'static [(&'static str, f64)] = &[("THz", 1e12), ("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)];
    const WHAT: &'static str = "a rate such as \"10 GHz\"";
}

impl UnitKind for LengthUnit {
    const UNITS: &'static [(&'static str, f64)] = &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)];
    const WHAT: &'static str = "a length such as \"1.46 um\"";
}

impl UnitKind for TimeUnit {
    const UNITS: &'static [(&'static str, f64)] = &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)];
    const WHAT: &'static str = "a duration such as \"10 ms\"";
}

impl UnitKind for DensityUnit {
    const UNITS: &'static [(&'static str, f64)] = &[("m^-3", 1.0)];
    const WHAT: &'static str = "a number density such as \"1.488e28 m^-3\"";
}

impl UnitKind for AngleUnit {
    const UNITS: &'static [(&'static str, f64)] = &[("deg", 1.0)];
    const WHAT: &'static str = "an angle such as \"44 deg\"";
}

/// A value in SI units (degrees for angles) written with a unit suffix.
pub struct Quantity<K>(pub f64, PhantomData<K>);

pub type Rate = Quantity<RateUnit>;
pub type Length = Quantity<LengthUnit>;
pub type Duration = Quantity<TimeUnit>;
pub type Density = Quantity<DensityUnit>;
pub type Angle = Quantity<AngleUnit>;

impl<K> Quantity<K> {
    pub const fn new(value: f64) -> Self {
        Quantity(value, PhantomData)
    }
}

impl<K> Clone for Quantity<K> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<K> Copy for Quantity<K> {}

impl<K> PartialEq for Quantity<K> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl<K: UnitKind> fmt::Debug for Quantity<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_quantity::<K>(self.0))
    }
}

/// Parses `"<number> <unit>"`; whitespace between the two is optional.
pub fn parse_quantity<K: UnitKind>(text: &str) -> std::result::Result<f64, String> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| c.is_alphabetic() && !is_exponent(text, i))
        .map(|(i, _)| i)
        .ok_or_else(|| format!("missing unit in {text:?}; expected {}", K::WHAT))?;
    let (number, unit) = (text[..split].trim(), text[split..].trim());
    let factor = K::UNITS
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, f)| *f)
        .ok_or_else(|| {
            let known: Vec<&str> = K::UNITS.iter().map(|(u, _)| *u).collect();
            format!("unknown unit {unit:?}; expected one of {}", known.join(", "))
        })?;
    let value: f64 = number.parse().map_err(|_| format!("invalid number {number:?} in {text:?}"))?;
    if !value.is_finite() {
        return Err(format!("non-finite value in {text:?}"));
    }
    Ok(value * factor)
}

/// `e`/`E` inside a number is an exponent, not the start of a unit.
fn is_exponent(text: &str, i: usize) -> bool {
    let bytes = text.as_bytes();
    matches!(bytes[i], b'e' | b'E')
        && i > 0
        && (bytes[i - 1].is_ascii_digit() || bytes[i - 1] == b'.')
        && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit() || *b == b'-' || *b == b'+')
}

/// Shortest text that parses back to exactly `value`, with the largest unit
/// that keeps the mantissa at least one.
pub fn format_quantity<K: UnitKind>(value: f64) -> String {
    for (unit, factor) in K::UNITS {
        let scaled = value / factor;
        if scaled.abs() < 1.0 && value != 0.0 {
            continue;
        }
        let text = format!("{scaled} {unit}");
        if parse_quantity::<K>(&text) == Ok(value) {
            return text;
        }
    }
    let (base, _) = K::UNITS.iter().find(|(_, f)| *f == 1.0).copied().unwrap_or(K::UNITS[0]);
    format!("{value:e} {base}")
}

impl<K: UnitKind> Serialize for Quantity<K> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_quantity::<K>(self.0))
    }
}

impl<'de, K: UnitKind> Deserialize<'de> for Quantity<K> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V<K>(PhantomData<K>);
        impl<K: UnitKind> Visitor<'_> for V<K> {
            type Value = Quantity<K>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} (a string with a unit suffix)", K::WHAT)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                parse_quantity::<K>(v).map(Quantity::new).map_err(E::custom)
            }
        }
        d.deserialize_str(V(PhantomData))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavitySection {
    pub mirror_radius: Length,
    pub mirror_separation: Length,
    pub longitudinal_index: u32,
    pub mirror_loss: f64,
    pub l_max: u32,
    pub kappa_override: Option<Rate>,
}

impl Default for CavitySection {
    fn default() -> Self {
        let c = CavityParams::reference();
        CavitySection {
            mirror_radius: Quantity::new(c.mirror_radius),
            mirror_separation: Quantity::new(c.mirror_separation),
            longitudinal_index: c.longitudinal_index,
            mirror_loss: c.mirror_loss,
            l_max: 200,
            kappa_override: Some(Quantity::new(1e8)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSection {
    pub specific_rotation: Angle,
    pub molar_mass_u: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub dominant: Polarisation,
}

impl Default for SampleSection {
    fn default() -> Self {
        let g = ChiralSample::glucose();
        SampleSection {
            specific_rotation: Quantity::new(g.theta),
            molar_mass_u: g.molar_mass_u,
            alpha: g.alpha,
            epsilon: g.epsilon,
            dominant: g.dominant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolventSection {
    pub number_density: Density,
    pub base_index: f64,
    pub wavelength: Length,
}

impl Default for SolventSection {
    fn default() -> Self {
        let m = SolventParams::methanol();
        SolventSection {
            number_density: Quantity::new(m.number_density),
            base_index: m.base_index,
            wavelength: Quantity::new(m.wavelength),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_left: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_right: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solvent: Option<SolventSection>,
}

impl MediumSection {
    fn reference() -> Self {
        MediumSection {
            n_left: Some(1.3435),
            n_right: Some(1.3395),
            sample: None,
            solvent: None,
        }
    }

    /// Fills the solvent defaults of a sample-derived medium.
    fn resolve(&mut self) -> Result<()> {
        let explicit = self.n_left.is_some() || self.n_right.is_some();
        match (explicit, self.sample.is_some()) {
            (false, false) => {
                if self.solvent.is_some() {
                    return invalid("[medium.solvent] given without [medium.sample]");
                }
                invalid("[medium] must set either n_left and n_right or a [medium.sample] table")
            }
            (true, true) => invalid("[medium] sets both explicit indices and a sample; choose one"),
            (true, false) => {
                if self.n_left.is_none() || self.n_right.is_none() {
                    return invalid("[medium] needs both n_left and n_right");
                }
                if self.solvent.is_some() {
                    return invalid("[medium.solvent] only applies to a sample-derived medium");
                }
                Ok(())
            }
            (false, true) => {
                self.solvent.get_or_insert_with(SolventSection::default);
                Ok(())
            }
        }
    }

    fn spec(&self) -> Result<MediumSpec> {
        match (self.n_left, self.n_right, self.sample) {
            (Some(left), Some(right), None) => Ok(MediumSpec::Indices(MediumIndices::new(left, right)?)),
            (None, None, Some(s)) => {
                let sample = ChiralSample {
                    theta: s.specific_rotation.0,
                    molar_mass_u: s.molar_mass_u,
                    alpha: s.alpha,
                    epsilon: s.epsilon,
                    dominant: s.dominant,
                };
                let sv = self.solvent.unwrap_or_default();
                let solvent = SolventParams {
                    number_density: sv.number_density.0,
                    base_index: sv.base_index,
                    wavelength: sv.wavelength.0,
                };
                sample.validate()?;
                solvent.validate()?;
                Ok(MediumSpec::Sample { sample, solvent })
            }
            _ => invalid("[medium] is not resolved"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DyeSection {
    pub omega0: Rate,
    pub delta_omega: Rate,
    pub linewidth: Rate,
    pub gamma_down0: Rate,
    pub gamma_up0: Rate,
    pub gamma_down: Rate,
    /// External pump γ↑ for single-point commands.
    pub pump: Rate,
    pub molecules: f64,
    pub coupling: Option<Rate>,
}

impl Default for DyeSection {
    fn default() -> Self {
        DyeSection::from(DyeParams::default())
    }
}

impl From<DyeParams> for DyeSection {
    fn from(d: DyeParams) -> Self {
        DyeSection {
            omega0: Quantity::new(d.omega0),
            delta_omega: Quantity::new(d.delta_omega),
            linewidth: Quantity::new(d.linewidth),
            gamma_down0: Quantity::new(d.gamma_down0),
            gamma_up0: Quantity::new(d.gamma_up0),
            gamma_down: Quantity::new(d.gamma_down),
            pump: Quantity::new(d.gamma_up_pump),
            molecules: d.molecules,
            coupling: d.coupling.map(Quantity::new),
        }
    }
}

impl DyeSection {
    fn params(&self) -> DyeParams {
        DyeParams {
            omega0: self.omega0.0,
            delta_omega: self.delta_omega.0,
            linewidth: self.linewidth.0,
            gamma_down0: self.gamma_down0.0,
            gamma_up0: self.gamma_up0.0,
            gamma_down: self.gamma_down.0,
            gamma_up_pump: self.pump.0,
            molecules: self.molecules,
            coupling: self.coupling.map(|q| q.0),
        }
    }
}

/// Solver settings; `abs_tol` and `max_time` default to `1e-6 κ` and
/// `1e6 / κ` with κ the largest mode loss rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub mode: SolverMode,
    pub abs_tol: Option<Rate>,
    pub rel_tol: f64,
    pub max_time: Option<Duration>,
    pub max_iters: usize,
    pub damping: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::for_kappa(1.0);
        SolverSection {
            mode: d.mode,
            abs_tol: None,
            rel_tol: d.rel_tol,
            max_time: None,
            max_iters: d.max_iters,
            damping: d.damping,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpAxisSection {
    pub start: Rate,
    pub stop: Rate,
    pub points: usize,
    pub spacing: Spacing,
}

impl Default for PumpAxisSection {
    fn default() -> Self {
        PumpAxisSection {
            start: Quantity::new(1e8),
            stop: Quantity::new(1e10),
            points: 100,
            spacing: Spacing::Log,
        }
    }
}

impl PumpAxisSection {
    fn grid(&self, points: usize) -> Result<AxisGrid> {
        match self.spacing {
            Spacing::Log => AxisGrid::log(Axis::Pump, self.start.0, self.stop.0, points),
            Spacing::Linear => AxisGrid::linear(Axis::Pump, self.start.0, self.stop.0, points),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiAxisKind {
    Chi,
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChiAxisSection {
    /// `chi` sweeps the index splitting directly; `epsilon` sweeps the
    /// signed excess of the configured sample.
    pub axis: ChiAxisKind,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Fixed pump for the whole family.
    pub pump: Rate,
    /// One trace per absorption scale.
    pub gamma_up0_scales: Vec<f64>,
}

impl Default for ChiAxisSection {
    fn default() -> Self {
        ChiAxisSection {
            axis: ChiAxisKind::Chi,
            start: -3e-5,
            stop: 3e-5,
            points: 61,
            pump: Quantity::new(1e10),
            gamma_up0_scales: vec![0.5, 1.0, 2.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub chi_start: f64,
    pub chi_stop: f64,
    pub chi_points: usize,
    pub pump_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            chi_start: -3e-5,
            chi_stop: 3e-5,
            chi_points: 61,
            pump_points: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensitivitySection {
    pub epsilon: f64,
    pub step: f64,
    pub pump: Rate,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        SensitivitySection {
            epsilon: 0.5,
            step: 0.01,
            pump: Quantity::new(1e10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub warm_start: bool,
    /// Pump axis of the pump sweep and of the grid sweep (with its own
    /// point count).
    pub pump: PumpAxisSection,
    pub chi: ChiAxisSection,
    pub grid: GridSection,
    pub sensitivity: SensitivitySection,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            warm_start: true,
            pump: PumpAxisSection::default(),
            chi: ChiAxisSection::default(),
            grid: GridSection::default(),
            sensitivity: SensitivitySection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Gnuplot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            directory: "out".to_string(),
            formats: vec![Format::Csv, Format::Json, Format::Gnuplot],
        }
    }
}

impl OutputSection {
    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub cavity: CavitySection,
    pub medium: MediumSection,
    #[serde(default)]
    pub dye: DyeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl Default for RunConfig {
    /// Reference parameters with explicit indices, fully resolved.
    fn default() -> Self {
        let mut c = RunConfig {
            cavity: CavitySection::default(),
            medium: MediumSection::reference(),
            dye: DyeSection::default(),
            solver: SolverSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        };
        c.resolve().expect("reference configuration is valid");
        c
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

/// Parses, resolves and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    config.resolve()?;
    Ok(config)
}

/// The resolved default configuration as TOML; parsing it reproduces
/// [`RunConfig::default`].
pub fn emit_defaults() -> Result<String> {
    RunConfig::default().to_toml()
}

impl RunConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Emit(e.to_string()))
    }

    /// Expands derived defaults and checks every invariant.
    fn resolve(&mut self) -> Result<()> {
        self.medium.resolve()?;
        if self.cavity.kappa_override.is_none() && self.cavity.mirror_loss == 0.0 {
            return invalid("cavity.mirror_loss is zero and no kappa_override is set");
        }
        let mut setup = self.setup_unresolved()?;
        let kappa = max_of(setup.modes()?.iter().map(|m| m.kappa));
        let defaults = SolverConfig::for_kappa(kappa);
        self.solver.abs_tol.get_or_insert(Quantity::new(defaults.abs_tol));
        self.solver.max_time.get_or_insert(Quantity::new(defaults.max_time));
        setup.solver = self.solver_config();
        setup.validate()?;
        self.validate_sweeps()
    }

    fn validate_sweeps(&self) -> Result<()> {
        let s = &self.sweep;
        if s.pump.points < 2 || s.chi.points < 2 || s.grid.chi_points < 2 || s.grid.pump_points < 2 {
            return invalid("every sweep axis needs at least two points");
        }
        if !(s.pump.start.0 > 0.0 && s.pump.stop.0 > s.pump.start.0) {
            return invalid("sweep.pump must satisfy 0 < start < stop");
        }
        if s.chi.start == s.chi.stop || s.grid.chi_start == s.grid.chi_stop {
            return invalid("chi axes need distinct start and stop");
        }
        if !(s.chi.pump.0 > 0.0 && s.sensitivity.pump.0 > 0.0) {
            return invalid("sweep pumps must be positive");
        }
        if s.chi.gamma_up0_scales.iter().any(|x| !(*x > 0.0)) {
            return invalid("sweep.chi.gamma_up0_scales must be positive");
        }
        if !(s.sensitivity.epsilon > 0.0 && s.sensitivity.epsilon < 1.0) {
            return invalid("sweep.sensitivity.epsilon must lie in (0, 1)");
        }
        if !(s.sensitivity.step > 0.0) {
            return invalid("sweep.sensitivity.step must be positive");
        }
        if self.output.directory.is_empty() {
            return invalid("output.directory must not be empty");
        }
        Ok(())
    }

    fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            mode: s.mode,
            abs_tol: s.abs_tol.map_or(f64::NAN, |q| q.0),
            rel_tol: s.rel_tol,
            max_time: s.max_time.map_or(f64::NAN, |q| q.0),
            max_iters: s.max_iters,
            damping: s.damping,
        }
    }

    fn setup_unresolved(&self) -> Result<Setup> {
        let c = &self.cavity;
        Ok(Setup {
            cavity: CavityParams::new(c.mirror_radius.0, c.mirror_separation.0, c.longitudinal_index, c.mirror_loss)?,
            medium: self.medium.spec()?,
            l_max: c.l_max,
            kappa_override: c.kappa_override.map(|q| q.0),
            dye: self.dye.params(),
            solver: SolverConfig::for_kappa(1.0),
        })
    }

    /// Physical setup at the configured pump.
    pub fn setup(&self) -> Result<Setup> {
        let setup = Setup {
            solver: self.solver_config(),
            ..self.setup_unresolved()?
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn pump_sweep_spec(&self) -> Result<SweepSpec> {
        Ok(SweepSpec {
            base: self.setup()?,
            inner: self.sweep.pump.grid(self.sweep.pump.points)?,
            outer: None,
            warm_start: self.sweep.warm_start,
        })
    }

    pub fn chi_sweep_spec(&self) -> Result<SweepSpec> {
        let c = &self.sweep.chi;
        let axis = match c.axis {
            ChiAxisKind::Chi => Axis::Chi,
            ChiAxisKind::Epsilon => Axis::Epsilon,
        };
        let outer = match c.gamma_up0_scales.as_slice() {
            [] => None,
            scales => Some(AxisGrid::new(Axis::AbsorptionScale, scales.to_vec())?),
        };
        Ok(SweepSpec {
            base: self.setup()?.with_pump(c.pump.0),
            inner: AxisGrid::linear(axis, c.start, c.stop, c.points)?,
            outer,
            warm_start: self.sweep.warm_start,
        })
    }

    /// Pump traces (inner) for each χ (outer).
    pub fn grid_sweep_spec(&self) -> Result<SweepSpec> {
        let g = &self.sweep.grid;
        Ok(SweepSpec {
            base: self.setup()?,
            inner: self.sweep.pump.grid(g.pump_points)?,
            outer: Some(AxisGrid::linear(Axis::Chi, g.chi_start, g.chi_stop, g.chi_points)?),
            warm_start: self.sweep.warm_start,
        })
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn quantities_parse() {
        assert_eq!(parse_quantity::<RateUnit>("10 GHz"), Ok(1e10));
        assert_eq!(parse_quantity::<RateUnit>("3456THz"), Ok(3456e12));
        assert_eq!(parse_quantity::<RateUnit>(" 1e9 Hz "), Ok(1e9));
        assert_eq!(parse_quantity::<RateUnit>("2.5e-3 kHz"), Ok(2.5));
        assert_eq!(parse_quantity::<LengthUnit>("1.46 um"), Ok(1.46e-6));
        assert_eq!(parse_quantity::<DensityUnit>("1.488e28 m^-3"), Ok(1.488e28));
        assert_eq!(parse_quantity::<AngleUnit>("44 deg"), Ok(44.0));
        assert_eq!(parse_quantity::<TimeUnit>("10 ms"), Ok(1e-2));
        assert!(parse_quantity::<RateUnit>("10").is_err());
        assert!(parse_quantity::<RateUnit>("10 m").is_err());
        assert!(parse_quantity::<RateUnit>("ten GHz").is_err());
        assert!(parse_quantity::<RateUnit>("inf Hz").is_err());
    }

    #[test]
    fn quantities_format() {
        assert_eq!(format_quantity::<RateUnit>(1e10), "10 GHz");
        assert_eq!(format_quantity::<RateUnit>(2.5e12), "2.5 THz");
        assert_eq!(parse_quantity::<RateUnit>(&format_quantity::<RateUnit>(4.18e12)), Ok(4.18e12));
        assert_eq!(format_quantity::<RateUnit>(10.0), "10 Hz");
        assert_eq!(format_quantity::<LengthUnit>(546e-9), "546 nm");
        assert_eq!(format_quantity::<RateUnit>(0.0), "0 THz");
    }

    proptest! {
        #[test]
        fn quantity_format_round_trips(m in 1.0f64..10.0, e in -12i32..16) {
            let v = m * 10f64.powi(e);
            prop_assert_eq!(parse_quantity::<RateUnit>(&format_quantity::<RateUnit>(v)), Ok(v));
            prop_assert_eq!(parse_quantity::<LengthUnit>(&format_quantity::<LengthUnit>(v)), Ok(v));
        }
    }

    #[test]
    fn defaults_round_trip() {
        let text = emit_defaults().unwrap();
        let parsed = parse_config(&text).unwrap();
        assert_eq!(parsed, RunConfig::default());
        assert_eq!(parsed.to_toml().unwrap(), text);
        let setup = parsed.setup().unwrap();
        assert_eq!(setup, Setup::reference());
    }

    #[test]
    fn medium_section_is_required() {
        assert!(matches!(parse_config(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("[medium]\n"), Err(Error::Validation(_))));
        assert!(matches!(parse_config("[medium]\nn_left = 1.34\n"), Err(Error::Validation(_))));
        let both = "[medium]\nn_left = 1.34\nn_right = 1.34\n[medium.sample]\nepsilon = 1.0\n";
        assert!(matches!(parse_config(both), Err(Error::Validation(_))));
        let stray = "[medium]\nn_left = 1.34\nn_right = 1.34\n[medium.solvent]\nbase_index = 1.3\n";
        assert!(matches!(parse_config(stray), Err(Error::Validation(_))));
    }

    #[test]
    fn sample_epsilon_resolves_chi() {
        let c = parse_config("[medium.sample]\nepsilon = 0.5\n").unwrap();
        assert_eq!(c.medium.solvent, Some(SolventSection::default()));
        let chi = c.setup().unwrap().medium.chi();
        assert_relative_eq!(chi, 1.355e-5, max_relative = 1e-2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[medium]\nn_left = 1.34\nn_right = 1.34\n\n[dye]\npump = 1e10\n";
        match parse_config(text) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 6);
                assert!(message.contains("unit suffix"), "{message}");
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
        let text = "[medium]\nn_left = 1.34\nn_right = 1.34\nbogus = 3\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { line: 4, .. })));
        let text = "[medium]\nn_left = 1.34\nn_right = 1.34\n[dye]\npump = \"10 Gz\"\n";
        assert!(matches!(parse_config(text), Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn validation_names_the_field() {
        let text = "[medium]\nn_left = 1.34\nn_right = 1.34\n[solver]\ndamping = 1.5\n";
        match parse_config(text) {
            Err(Error::Validation(m)) => assert!(m.contains("damping"), "{m}"),
            other => panic!("{other:?}"),
        }
        let text = "[medium]\nn_left = 1.34\nn_right = 1.34\n[sweep.pump]\nstart = \"10 GHz\"\nstop = \"1 GHz\"\n";
        assert!(matches!(parse_config(text), Err(Error::Validation(_))));
    }

    #[test]
    fn solver_defaults_follow_kappa() {
        let c = parse_config("[medium]\nn_left = 1.34\nn_right = 1.34\n[cavity]\nkappa_override = \"1 GHz\"\n").unwrap();
        assert_eq!(c.solver.abs_tol.unwrap().0, 1e3);
        assert_relative_eq!(c.solver.max_time.unwrap().0, 1e-3, max_relative = 1e-15);
        let c = parse_config("[medium]\nn_left = 1.34\nn_right = 1.34\n[solver]\nabs_tol = \"5 Hz\"\n").unwrap();
        assert_eq!(c.solver.abs_tol.unwrap().0, 5.0);
    }

    #[test]
    fn sweep_specs_follow_config() {
        let c = RunConfig::default();
        let pump = c.pump_sweep_spec().unwrap();
        assert_eq!(pump.inner.values.len(), 100);
        let chi = c.chi_sweep_spec().unwrap();
        assert_eq!(chi.inner.values.len(), 61);
        assert_eq!(chi.outer.unwrap().values, vec![0.5, 1.0, 2.0, 10.0]);
        assert_eq!(chi.base.dye.gamma_up_pump, 1e10);
        let grid = c.grid_sweep_spec().unwrap();
        assert_eq!((grid.inner.values.len(), grid.outer.unwrap().values.len()), (50, 61));
    }
}
