//! Run configuration files.
//!
//! One `section.key = value [unit]` entry per line; `#` starts a comment.
//! Dimensional values must carry a unit:
//!
//! | quantity                    | units                                   |
//! |-----------------------------|-----------------------------------------|
//! | butterfly rates             | `Gamma`                                 |
//! | butterfly radius            | `lambda`                                |
//! | silver frequencies          | `GHz`, `MHz`, `2pi*GHz`, `2pi*MHz`      |
//! | silver lengths              | `m`, `mm`, `um`, `nm`                   |
//! | times                       | `Gamma^-1` (silver also `ns`)           |
//! | angles                      | `rad`, `deg`                            |
//!
//! Silver frequencies are angular: `1 GHz` means `10⁹ rad/s`, so a linewidth
//! of `23.4 2pi*MHz` is `0.147 GHz`. Exactly one of the `butterfly.*` and
//! `silver.*` sections must be present. Unknown keys, repeated keys and
//! missing required keys are errors that name the offending line.
//!
//! ```
//! use biphoton::config::RunConfig;
//!
//! let cfg = RunConfig::parse(
//!     "butterfly.gamma_signal = 1 Gamma
//!      butterfly.gamma_idler = 1 Gamma
//!      butterfly.omega_drive = 0.1 Gamma
//!      butterfly.omega_couple = 100 Gamma
//!      butterfly.atom_number = 1e6
//!      butterfly.radius = 50 lambda",
//! )?;
//! assert_eq!(cfg.rings, 200);
//! # Ok::<(), biphoton::Error>(())
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dynamics::ButterflyParams;
use crate::error::{Error, Result};
use crate::geometry::{DipoleOrientation, DipoleRole};
use crate::report::fmt17;
use crate::schemes::SilverConfig;

const FIG2: &str = include_str!("../presets/fig2.conf");
const SILVER_PRESET: &str = include_str!("../presets/silver-paper.conf");

/// Names of the bundled presets.
pub const PRESETS: [&str; 2] = ["fig2", "silver-paper"];

/// Text of a bundled preset.
pub fn preset_text(name: &str) -> Result<&'static str> {
    match name {
        "fig2" => Ok(FIG2),
        "silver-paper" => Ok(SILVER_PRESET),
        other => Err(Error::invalid(format!(
            "unknown preset `{other}` (available: {})",
            PRESETS.join(", ")
        ))),
    }
}

pub fn preset(name: &str) -> Result<RunConfig> {
    RunConfig::parse(preset_text(name)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Butterfly(ButterflyParams),
    /// `reduce = false` keeps the raw scheme; only `silver-reduce` accepts it.
    Silver {
        config: SilverConfig,
        reduce: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSettings {
    /// End time in units of `Γ⁻¹`.
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Step cap in `Γ⁻¹`; `None` uses `0.01` over the fastest rate.
    pub max_step: Option<f64>,
    /// Fixed step in `Γ⁻¹`, replacing adaptive control.
    pub fixed_step: Option<f64>,
    pub samples: usize,
    pub fit_fraction: f64,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            fixed_step: None,
            samples: 201,
            fit_fraction: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputSettings {
    /// Output directory; the command line may override it.
    pub dir: Option<PathBuf>,
    /// Skip `grid.csv`.
    pub skip_grid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSettings {
    /// Polar angle of the signal mode, radians; the nearest ring is used.
    pub theta: f64,
    /// Longest delay in `Γ⁻¹`; `None` covers two coupler periods.
    pub tau_max: Option<f64>,
    pub samples: usize,
}

impl Default for CorrelationSettings {
    fn default() -> Self {
        Self {
            theta: 0.0,
            tau_max: None,
            samples: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationSettings {
    pub theta_max: f64,
    pub samples: usize,
}

impl Default for PolarizationSettings {
    fn default() -> Self {
        Self {
            theta_max: 0.5,
            samples: 181,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    /// Full key of a numeric scheme entry, e.g. `butterfly.omega_drive`.
    pub parameter: String,
    /// Bounds in the parameter's canonical unit.
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub scale: SweepScale,
}

impl SweepSettings {
    /// Sweep points in order, `start` first.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let f = i as f64 / last;
                match self.scale {
                    SweepScale::Linear => self.start + (self.stop - self.start) * f,
                    SweepScale::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub rings: usize,
    pub integration: IntegrationSettings,
    pub outputs: OutputSettings,
    pub correlation: CorrelationSettings,
    pub polarization: PolarizationSettings,
    pub sweep: Option<SweepSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// Units of Γ.
    Rate,
    /// Angular GHz.
    Frequency,
    /// Units of λ.
    Wavelengths,
    /// Metres.
    Length,
    /// Units of Γ⁻¹.
    Time,
    Angle,
    Real,
    Count,
    Flag,
    Dipole,
    Word,
    Path,
}

const KEYS: &[(&str, Kind)] = &[
    ("butterfly.gamma_signal", Kind::Rate),
    ("butterfly.gamma_idler", Kind::Rate),
    ("butterfly.omega_drive", Kind::Rate),
    ("butterfly.omega_couple", Kind::Rate),
    ("butterfly.atom_number", Kind::Real),
    ("butterfly.radius", Kind::Wavelengths),
    ("butterfly.signal_dipole", Kind::Dipole),
    ("butterfly.idler_dipole", Kind::Dipole),
    ("butterfly.loss_branching", Kind::Real),
    ("silver.omega1", Kind::Frequency),
    ("silver.omega2", Kind::Frequency),
    ("silver.omega3", Kind::Frequency),
    ("silver.omega4", Kind::Frequency),
    ("silver.omega5", Kind::Frequency),
    ("silver.omega6", Kind::Frequency),
    ("silver.delta1", Kind::Frequency),
    ("silver.delta2", Kind::Frequency),
    ("silver.delta3", Kind::Frequency),
    ("silver.delta4", Kind::Frequency),
    ("silver.linewidth", Kind::Frequency),
    ("silver.atom_number", Kind::Real),
    ("silver.radius", Kind::Length),
    ("silver.wavelength", Kind::Length),
    ("silver.loss_branching", Kind::Real),
    ("silver.reduce", Kind::Flag),
    ("grid.rings", Kind::Count),
    ("integration.t_end", Kind::Time),
    ("integration.rtol", Kind::Real),
    ("integration.atol", Kind::Real),
    ("integration.max_step", Kind::Time),
    ("integration.fixed_step", Kind::Time),
    ("integration.samples", Kind::Count),
    ("integration.fit_fraction", Kind::Real),
    ("outputs.dir", Kind::Path),
    ("outputs.grid", Kind::Flag),
    ("correlation.theta", Kind::Angle),
    ("correlation.tau_max", Kind::Time),
    ("correlation.samples", Kind::Count),
    ("polarization.theta_max", Kind::Angle),
    ("polarization.samples", Kind::Count),
    ("sweep.parameter", Kind::Word),
    ("sweep.start", Kind::Real),
    ("sweep.stop", Kind::Real),
    ("sweep.steps", Kind::Count),
    ("sweep.scale", Kind::Word),
];

const BUTTERFLY_REQUIRED: [&str; 6] = [
    "butterfly.gamma_signal",
    "butterfly.gamma_idler",
    "butterfly.omega_drive",
    "butterfly.omega_couple",
    "butterfly.atom_number",
    "butterfly.radius",
];

const SILVER_REQUIRED: [&str; 13] = [
    "silver.omega1",
    "silver.omega2",
    "silver.omega3",
    "silver.omega4",
    "silver.omega5",
    "silver.omega6",
    "silver.delta1",
    "silver.delta2",
    "silver.delta3",
    "silver.delta4",
    "silver.atom_number",
    "silver.radius",
    "silver.wavelength",
];

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
    unit: String,
}

struct Entries(BTreeMap<String, Entry>);

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl Entries {
    fn read(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, rhs) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{body}`")))?;
            let key = key.trim();
            if kind_of(key).is_none() {
                return Err(err(line, format!("unknown key `{key}`")));
            }
            let mut parts = rhs.split_whitespace();
            let value = parts
                .next()
                .ok_or_else(|| err(line, format!("`{key}` has no value")))?
                .to_string();
            let unit = parts.collect::<Vec<_>>().join(" ");
            let entry = Entry { line, value, unit };
            if let Some(prev) = map.insert(key.to_string(), entry) {
                return Err(err(line, format!("`{key}` repeats line {}", prev.line)));
            }
        }
        Ok(Self(map))
    }

    fn has_section(&self, section: &str) -> Option<usize> {
        self.0
            .iter()
            .filter(|(k, _)| k.split('.').next() == Some(section))
            .map(|(_, e)| e.line)
            .min()
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.0.get(key).map(|e| e.line)
    }

    fn number(&self, key: &str, ctx: &Context) -> Result<Option<f64>> {
        let Some(e) = self.0.get(key) else { return Ok(None) };
        let kind = kind_of(key).expect("keys are validated on read");
        convert(&e.value, &e.unit, kind, ctx)
            .map(Some)
            .map_err(|m| err(e.line, format!("`{key}`: {m}")))
    }

    fn require(&self, key: &str, ctx: &Context, anchor: usize) -> Result<f64> {
        self.number(key, ctx)?
            .ok_or_else(|| err(anchor, format!("missing required key `{key}`")))
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        let Some(e) = self.0.get(key) else { return Ok(None) };
        unitless(e, key)?;
        e.value
            .parse::<usize>()
            .map(Some)
            .map_err(|_| err(e.line, format!("`{key}` must be a non-negative integer")))
    }

    fn flag(&self, key: &str) -> Result<Option<bool>> {
        let Some(e) = self.0.get(key) else { return Ok(None) };
        unitless(e, key)?;
        match e.value.as_str() {
            "true" => Ok(Some(true)),
            "false" => Ok(Some(false)),
            _ => Err(err(e.line, format!("`{key}` must be true or false"))),
        }
    }

    fn word(&self, key: &str) -> Result<Option<(String, usize)>> {
        let Some(e) = self.0.get(key) else { return Ok(None) };
        unitless(e, key)?;
        Ok(Some((e.value.clone(), e.line)))
    }
}

fn unitless(e: &Entry, key: &str) -> Result<()> {
    if e.unit.is_empty() {
        Ok(())
    } else {
        Err(err(e.line, format!("`{key}` takes no unit, found `{}`", e.unit)))
    }
}

/// Scheme information needed to convert units.
struct Context {
    silver: bool,
    /// Silver linewidth in GHz, for `ns` times.
    linewidth: f64,
}

fn convert(value: &str, unit: &str, kind: Kind, ctx: &Context) -> std::result::Result<f64, String> {
    let x: f64 = value.parse().map_err(|_| format!("`{value}` is not a number"))?;
    if !x.is_finite() {
        return Err("value must be finite".into());
    }
    // (factor, divisor): dividing by powers of ten keeps `20 um` equal to `20e-6`
    let (factor, divisor) = match (kind, unit) {
        (Kind::Rate, "Gamma") | (Kind::Wavelengths, "lambda") | (Kind::Time, "Gamma^-1") => (1.0, 1.0),
        (Kind::Time, "ns") if ctx.silver => (ctx.linewidth, 1.0),
        (Kind::Frequency, "GHz") => (1.0, 1.0),
        (Kind::Frequency, "MHz") => (1.0, 1e3),
        (Kind::Frequency, "2pi*GHz") => (2.0 * PI, 1.0),
        (Kind::Frequency, "2pi*MHz") => (2.0 * PI, 1e3),
        (Kind::Length, "m") => (1.0, 1.0),
        (Kind::Length, "mm") => (1.0, 1e3),
        (Kind::Length, "um") => (1.0, 1e6),
        (Kind::Length, "nm") => (1.0, 1e9),
        (Kind::Angle, "rad") => (1.0, 1.0),
        (Kind::Angle, "deg") => (PI, 180.0),
        (Kind::Real, "") => (1.0, 1.0),
        (_, "") => return Err(format!("missing unit ({})", unit_hint(kind, ctx))),
        (_, u) => return Err(format!("unit `{u}` does not fit ({})", unit_hint(kind, ctx))),
    };
    Ok(factor * (x / divisor))
}

fn unit_hint(kind: Kind, ctx: &Context) -> &'static str {
    match kind {
        Kind::Rate => "expected Gamma",
        Kind::Wavelengths => "expected lambda",
        Kind::Time if ctx.silver => "expected Gamma^-1 or ns",
        Kind::Time => "expected Gamma^-1",
        Kind::Frequency => "expected GHz, MHz, 2pi*GHz or 2pi*MHz",
        Kind::Length => "expected m, mm, um or nm",
        Kind::Angle => "expected rad or deg",
        _ => "expected no unit",
    }
}

fn parse_dipole(name: &str, role: DipoleRole) -> Option<DipoleOrientation> {
    use nalgebra::Vector3;
    Some(match name {
        "sigma+" => DipoleOrientation::sigma_plus(role),
        "sigma-" => DipoleOrientation::sigma_minus(role),
        "x" => DipoleOrientation::linear(Vector3::x(), role).ok()?,
        "y" => DipoleOrientation::linear(Vector3::y(), role).ok()?,
        "z" => DipoleOrientation::linear(Vector3::z(), role).ok()?,
        _ => return None,
    })
}

fn dipole_name(d: &DipoleOrientation) -> Option<&'static str> {
    ["sigma+", "sigma-", "x", "y", "z"]
        .into_iter()
        .find(|n| parse_dipole(n, d.role).is_some_and(|c| c.vector() == d.vector()))
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let e = Entries::read(text)?;
        let butterfly = e.has_section("butterfly");
        let silver = e.has_section("silver");
        let end = text.lines().count().max(1);
        let (scheme, ctx) = match (butterfly, silver) {
            (Some(b), Some(s)) => {
                return Err(err(
                    b.max(s),
                    "both butterfly.* and silver.* sections are present; choose one scheme",
                ))
            }
            (None, None) => return Err(err(end, "no scheme section (butterfly.* or silver.*)")),
            (Some(anchor), None) => {
                let ctx = Context {
                    silver: false,
                    linewidth: 1.0,
                };
                (Scheme::Butterfly(butterfly_params(&e, &ctx, anchor)?), ctx)
            }
            (None, Some(anchor)) => {
                let probe = Context {
                    silver: true,
                    linewidth: 1.0,
                };
                let linewidth = e
                    .number("silver.linewidth", &probe)?
                    .unwrap_or(SilverConfig::DEFAULT_LINEWIDTH);
                let ctx = Context {
                    silver: true,
                    linewidth,
                };
                (silver_scheme(&e, &ctx, anchor)?, ctx)
            }
        };

        let mut cfg = RunConfig {
            scheme,
            rings: e.count("grid.rings")?.unwrap_or(200),
            integration: IntegrationSettings::default(),
            outputs: OutputSettings::default(),
            correlation: CorrelationSettings::default(),
            polarization: PolarizationSettings::default(),
            sweep: None,
        };
        let i = &mut cfg.integration;
        if let Some(x) = e.number("integration.t_end", &ctx)? {
            i.t_end = x;
        }
        if let Some(x) = e.number("integration.rtol", &ctx)? {
            i.rtol = x;
        }
        if let Some(x) = e.number("integration.atol", &ctx)? {
            i.atol = x;
        }
        i.max_step = e.number("integration.max_step", &ctx)?;
        i.fixed_step = e.number("integration.fixed_step", &ctx)?;
        if let Some(n) = e.count("integration.samples")? {
            i.samples = n;
        }
        if let Some(x) = e.number("integration.fit_fraction", &ctx)? {
            i.fit_fraction = x;
        }
        if let Some((dir, _)) = e.word("outputs.dir")? {
            cfg.outputs.dir = Some(PathBuf::from(dir));
        }
        cfg.outputs.skip_grid = !e.flag("outputs.grid")?.unwrap_or(true);
        if let Some(x) = e.number("correlation.theta", &ctx)? {
            cfg.correlation.theta = x;
        }
        cfg.correlation.tau_max = e.number("correlation.tau_max", &ctx)?;
        if let Some(n) = e.count("correlation.samples")? {
            cfg.correlation.samples = n;
        }
        if let Some(x) = e.number("polarization.theta_max", &ctx)? {
            cfg.polarization.theta_max = x;
        }
        if let Some(n) = e.count("polarization.samples")? {
            cfg.polarization.samples = n;
        }
        cfg.sweep = sweep_settings(&e, &ctx, &cfg.scheme)?;
        cfg.check(&e)?;
        Ok(cfg)
    }

    fn check(&self, e: &Entries) -> Result<()> {
        let at = |key: &str| e.line(key).unwrap_or(0);
        if self.rings < 2 {
            return Err(err(at("grid.rings"), "grid.rings must be at least 2"));
        }
        let i = &self.integration;
        if !(i.t_end > 0.0) {
            return Err(err(at("integration.t_end"), "integration.t_end must be positive"));
        }
        if !(i.rtol > 0.0 && i.atol > 0.0) {
            return Err(err(
                at("integration.rtol").max(at("integration.atol")),
                "tolerances must be positive",
            ));
        }
        if i.max_step.is_some_and(|h| !(h > 0.0)) {
            return Err(err(at("integration.max_step"), "integration.max_step must be positive"));
        }
        if i.fixed_step.is_some_and(|h| !(h > 0.0)) {
            return Err(err(
                at("integration.fixed_step"),
                "integration.fixed_step must be positive",
            ));
        }
        if i.samples < 3 {
            return Err(err(at("integration.samples"), "integration.samples must be at least 3"));
        }
        if !(i.fit_fraction > 0.0 && i.fit_fraction <= 1.0) {
            return Err(err(
                at("integration.fit_fraction"),
                "integration.fit_fraction must lie in (0, 1]",
            ));
        }
        if !(0.0..=PI).contains(&self.correlation.theta) {
            return Err(err(at("correlation.theta"), "correlation.theta must lie in [0, π]"));
        }
        if self.correlation.tau_max.is_some_and(|t| !(t > 0.0)) {
            return Err(err(at("correlation.tau_max"), "correlation.tau_max must be positive"));
        }
        if self.correlation.samples < 2 {
            return Err(err(at("correlation.samples"), "correlation.samples must be at least 2"));
        }
        if !(self.polarization.theta_max > 0.0 && self.polarization.theta_max <= PI / 2.0) {
            return Err(err(
                at("polarization.theta_max"),
                "polarization.theta_max must lie in (0, π/2]",
            ));
        }
        if self.polarization.samples < 2 {
            return Err(err(
                at("polarization.samples"),
                "polarization.samples must be at least 2",
            ));
        }
        Ok(())
    }

    /// Canonical text form; parsing it returns an identical configuration.
    pub fn serialize(&self) -> Result<String> {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        let time_unit = "Gamma^-1";
        match &self.scheme {
            Scheme::Butterfly(p) => {
                if p.wavelength != 1.0 || p.time_unit_seconds.is_some() {
                    return Err(Error::invalid(
                        "butterfly parameters must use units of Γ and λ to be written as a config",
                    ));
                }
                put("butterfly.gamma_signal", format!("{} Gamma", fmt17(p.gamma_signal)));
                put("butterfly.gamma_idler", format!("{} Gamma", fmt17(p.gamma_idler)));
                put("butterfly.omega_drive", format!("{} Gamma", fmt17(p.omega_drive)));
                put("butterfly.omega_couple", format!("{} Gamma", fmt17(p.omega_couple)));
                put("butterfly.atom_number", fmt17(p.atom_number));
                put("butterfly.radius", format!("{} lambda", fmt17(p.radius)));
                for (key, d) in [
                    ("butterfly.signal_dipole", &p.signal_dipole),
                    ("butterfly.idler_dipole", &p.idler_dipole),
                ] {
                    let name =
                        dipole_name(d).ok_or_else(|| Error::invalid(format!("{key} has no named orientation")))?;
                    put(key, name.to_string());
                }
                put("butterfly.loss_branching", fmt17(p.loss_branching));
            }
            Scheme::Silver { config: c, reduce } => {
                for (i, x) in c.rabi.iter().enumerate() {
                    put(&format!("silver.omega{}", i + 1), format!("{} GHz", fmt17(*x)));
                }
                for (i, x) in c.detunings.iter().enumerate() {
                    put(&format!("silver.delta{}", i + 1), format!("{} GHz", fmt17(*x)));
                }
                put("silver.linewidth", format!("{} GHz", fmt17(c.linewidth)));
                put("silver.atom_number", fmt17(c.atom_number));
                put("silver.radius", format!("{} m", fmt17(c.radius)));
                put("silver.wavelength", format!("{} m", fmt17(c.wavelength)));
                put("silver.loss_branching", fmt17(c.loss_branching));
                put("silver.reduce", reduce.to_string());
            }
        }
        let sweep_kind = self.sweep.as_ref().and_then(|s| kind_of(&s.parameter));
        put("grid.rings", self.rings.to_string());
        let i = &self.integration;
        put("integration.t_end", format!("{} {time_unit}", fmt17(i.t_end)));
        put("integration.rtol", fmt17(i.rtol));
        put("integration.atol", fmt17(i.atol));
        if let Some(h) = i.max_step {
            put("integration.max_step", format!("{} {time_unit}", fmt17(h)));
        }
        if let Some(h) = i.fixed_step {
            put("integration.fixed_step", format!("{} {time_unit}", fmt17(h)));
        }
        put("integration.samples", i.samples.to_string());
        put("integration.fit_fraction", fmt17(i.fit_fraction));
        if let Some(dir) = &self.outputs.dir {
            let text = dir
                .to_str()
                .filter(|s| !s.contains(char::is_whitespace) && !s.contains('#'));
            put(
                "outputs.dir",
                text.ok_or_else(|| Error::invalid("output directory cannot be written as a config value"))?
                    .to_string(),
            );
        }
        put("outputs.grid", (!self.outputs.skip_grid).to_string());
        put("correlation.theta", format!("{} rad", fmt17(self.correlation.theta)));
        if let Some(t) = self.correlation.tau_max {
            put("correlation.tau_max", format!("{} {time_unit}", fmt17(t)));
        }
        put("correlation.samples", self.correlation.samples.to_string());
        put(
            "polarization.theta_max",
            format!("{} rad", fmt17(self.polarization.theta_max)),
        );
        put("polarization.samples", self.polarization.samples.to_string());
        if let Some(s) = &self.sweep {
            let unit = canonical_unit(sweep_kind.unwrap_or(Kind::Real));
            let with_unit = |x: f64| {
                if unit.is_empty() {
                    fmt17(x)
                } else {
                    format!("{} {unit}", fmt17(x))
                }
            };
            put("sweep.parameter", s.parameter.clone());
            put("sweep.start", with_unit(s.start));
            put("sweep.stop", with_unit(s.stop));
            put("sweep.steps", s.steps.to_string());
            put(
                "sweep.scale",
                match s.scale {
                    SweepScale::Linear => "linear",
                    SweepScale::Log => "log",
                }
                .to_string(),
            );
        }
        Ok(out)
    }

    /// Copy with one numeric scheme entry replaced; `value` is in the
    /// entry's canonical unit.
    pub fn with_parameter(&self, key: &str, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        let slot: &mut f64 = match (&mut cfg.scheme, key) {
            (Scheme::Butterfly(p), "butterfly.gamma_signal") => &mut p.gamma_signal,
            (Scheme::Butterfly(p), "butterfly.gamma_idler") => &mut p.gamma_idler,
            (Scheme::Butterfly(p), "butterfly.omega_drive") => &mut p.omega_drive,
            (Scheme::Butterfly(p), "butterfly.omega_couple") => &mut p.omega_couple,
            (Scheme::Butterfly(p), "butterfly.atom_number") => &mut p.atom_number,
            (Scheme::Butterfly(p), "butterfly.radius") => &mut p.radius,
            (Scheme::Butterfly(p), "butterfly.loss_branching") => &mut p.loss_branching,
            (Scheme::Silver { config: c, .. }, k) => match k {
                "silver.linewidth" => &mut c.linewidth,
                "silver.atom_number" => &mut c.atom_number,
                "silver.radius" => &mut c.radius,
                "silver.wavelength" => &mut c.wavelength,
                "silver.loss_branching" => &mut c.loss_branching,
                _ => match silver_index(k) {
                    Some((true, i)) => &mut c.rabi[i],
                    Some((false, i)) => &mut c.detunings[i],
                    None => return Err(Error::invalid(format!("`{key}` is not a sweepable silver parameter"))),
                },
            },
            _ => {
                return Err(Error::invalid(format!(
                    "`{key}` is not a sweepable parameter of this scheme"
                )))
            }
        };
        *slot = value;
        Ok(cfg)
    }

    /// Configured output directory, if any.
    pub fn output_dir(&self) -> Option<&PathBuf> {
        self.outputs.dir.as_ref()
    }
}

fn canonical_unit(kind: Kind) -> &'static str {
    match kind {
        Kind::Rate => "Gamma",
        Kind::Frequency => "GHz",
        Kind::Wavelengths => "lambda",
        Kind::Length => "m",
        Kind::Time => "Gamma^-1",
        Kind::Angle => "rad",
        _ => "",
    }
}

/// `silver.omegaN` → `(true, N − 1)`, `silver.deltaN` → `(false, N − 1)`.
fn silver_index(key: &str) -> Option<(bool, usize)> {
    let (rabi, digits, count) = if let Some(d) = key.strip_prefix("silver.omega") {
        (true, d, 6)
    } else {
        (false, key.strip_prefix("silver.delta")?, 4)
    };
    let n: usize = digits.parse().ok()?;
    (1..=count).contains(&n).then_some((rabi, n - 1))
}

fn butterfly_params(e: &Entries, ctx: &Context, anchor: usize) -> Result<ButterflyParams> {
    let r = |k| e.require(k, ctx, anchor);
    let (gs, gi, od, oc, n, radius) = (
        r(BUTTERFLY_REQUIRED[0])?,
        r(BUTTERFLY_REQUIRED[1])?,
        r(BUTTERFLY_REQUIRED[2])?,
        r(BUTTERFLY_REQUIRED[3])?,
        r(BUTTERFLY_REQUIRED[4])?,
        r(BUTTERFLY_REQUIRED[5])?,
    );
    let dipole = |key: &str, role, default: fn(DipoleRole) -> DipoleOrientation| -> Result<DipoleOrientation> {
        match e.word(key)? {
            None => Ok(default(role)),
            Some((name, line)) => parse_dipole(&name, role).ok_or_else(|| {
                err(
                    line,
                    format!("`{key}`: unknown orientation `{name}` (sigma+, sigma-, x, y, z)"),
                )
            }),
        }
    };
    let mut p = ButterflyParams::toy(od, oc, n, radius);
    p.gamma_signal = gs;
    p.gamma_idler = gi;
    p.signal_dipole = dipole(
        "butterfly.signal_dipole",
        DipoleRole::Signal,
        DipoleOrientation::sigma_plus,
    )?;
    p.idler_dipole = dipole(
        "butterfly.idler_dipole",
        DipoleRole::Idler,
        DipoleOrientation::sigma_minus,
    )?;
    if let Some(b) = e.number("butterfly.loss_branching", ctx)? {
        p.loss_branching = b;
    }
    p.validate().map_err(|x| err(anchor, x.to_string()))?;
    Ok(p)
}

fn silver_scheme(e: &Entries, ctx: &Context, anchor: usize) -> Result<Scheme> {
    let mut c = SilverConfig::standard();
    for (i, slot) in c.rabi.iter_mut().enumerate() {
        *slot = e.require(SILVER_REQUIRED[i], ctx, anchor)?;
    }
    for (i, slot) in c.detunings.iter_mut().enumerate() {
        *slot = e.require(SILVER_REQUIRED[6 + i], ctx, anchor)?;
    }
    c.linewidth = ctx.linewidth;
    c.atom_number = e.require("silver.atom_number", ctx, anchor)?;
    c.radius = e.require("silver.radius", ctx, anchor)?;
    c.wavelength = e.require("silver.wavelength", ctx, anchor)?;
    if let Some(b) = e.number("silver.loss_branching", ctx)? {
        c.loss_branching = b;
    }
    c.validate().map_err(|x| err(anchor, x.to_string()))?;
    let reduce = e.flag("silver.reduce")?.unwrap_or(true);
    Ok(Scheme::Silver { config: c, reduce })
}

fn sweep_settings(e: &Entries, ctx: &Context, scheme: &Scheme) -> Result<Option<SweepSettings>> {
    let Some(anchor) = e.has_section("sweep") else {
        return Ok(None);
    };
    let (parameter, pline) = e
        .word("sweep.parameter")?
        .ok_or_else(|| err(anchor, "missing required key `sweep.parameter`"))?;
    let kind =
        kind_of(&parameter).filter(|k| !matches!(k, Kind::Count | Kind::Flag | Kind::Dipole | Kind::Word | Kind::Path));
    let section_ok = match scheme {
        Scheme::Butterfly(_) => parameter.starts_with("butterfly."),
        Scheme::Silver { .. } => parameter.starts_with("silver."),
    };
    let Some(kind) = kind.filter(|_| section_ok) else {
        return Err(err(
            pline,
            format!("`{parameter}` is not a numeric parameter of the configured scheme"),
        ));
    };
    let bound = |key: &str| -> Result<f64> {
        let entry =
            e.0.get(key)
                .ok_or_else(|| err(anchor, format!("missing required key `{key}`")))?;
        convert(&entry.value, &entry.unit, kind, ctx).map_err(|m| err(entry.line, format!("`{key}`: {m}")))
    };
    let start = bound("sweep.start")?;
    let stop = bound("sweep.stop")?;
    let steps = e
        .count("sweep.steps")?
        .ok_or_else(|| err(anchor, "missing required key `sweep.steps`"))?;
    if steps == 0 {
        return Err(err(
            e.line("sweep.steps").unwrap_or(anchor),
            "sweep.steps must be at least 1",
        ));
    }
    let scale = match e.word("sweep.scale")? {
        None => SweepScale::Linear,
        Some((w, _)) if w == "linear" => SweepScale::Linear,
        Some((w, _)) if w == "log" => SweepScale::Log,
        Some((w, line)) => return Err(err(line, format!("sweep.scale must be linear or log, found `{w}`"))),
    };
    if scale == SweepScale::Log && !(start > 0.0 && stop > 0.0) {
        return Err(err(anchor, "a log sweep needs positive bounds"));
    }
    Ok(Some(SweepSettings {
        parameter,
        start,
        stop,
        steps,
        scale,
    }))
}
