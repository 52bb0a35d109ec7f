//! Experiment drivers behind the command-line subcommands.
//!
//! Every command writes `summary.json` into the output directory, also when
//! it fails, and returns the regime warnings it found so the caller can
//! enforce `--strict`.

use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::Value;

use crate::config::{RunConfig, Scheme};
use crate::correlations::RingCorrelation;
use crate::dynamics::{
    closure_ratio, emission_rates, integrate_model, kappa, mode_averages, pairing_ratio, solve_steady, ButterflyParams,
    IntegrationControl, LossChannel, Parallelism, RateModel, SystemState, Trajectory,
};
use crate::error::{Error, Result};
use crate::geometry::ModeGrid;
use crate::ode::StepControl;
use crate::polarization;
use crate::report::{fmt17, num, opt_num, to_text, Object};
use crate::schemes::{self, RegimeReport, SilverReduction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Steady,
    G2,
    Polarization,
    SilverReduce,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Steady,
        Command::G2,
        Command::Polarization,
        Command::SilverReduce,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Steady => "steady",
            Command::G2 => "g2",
            Command::Polarization => "polarization",
            Command::SilverReduce => "silver-reduce",
            Command::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown command `{s}`")))
    }
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INTEGRATOR: i32 = 3;
    pub const STEADY_STATE: i32 = 4;
    pub const IO: i32 = 5;
    pub const REGIME: i32 = 6;
}

/// Exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::StepUnderflow { .. } | Error::NonFinite { .. } | Error::StepLimit { .. } => exit::INTEGRATOR,
        Error::NoSteadyState { .. } | Error::Undefined { .. } => exit::STEADY_STATE,
        Error::Io(_) => exit::IO,
        Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Reduction(_) | Error::Config { .. } => {
            exit::CONFIG
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides `grid.rings`.
    pub rings: Option<usize>,
    pub strict: bool,
    pub parallelism: Parallelism,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("."),
            rings: None,
            strict: false,
            parallelism: Parallelism::Sequential,
        }
    }
}

/// Result of a successful command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Value,
    /// Files written, `summary.json` last.
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl Outcome {
    /// Exit code honouring `strict`.
    pub fn exit_code(&self, strict: bool) -> i32 {
        if strict && !self.warnings.is_empty() {
            exit::REGIME
        } else {
            exit::OK
        }
    }
}

/// Runs `command`, writing its artifacts and `summary.json` into `opts.out_dir`.
pub fn run_command(cfg: &RunConfig, command: Command, opts: &RunOptions) -> Result<Outcome> {
    fs::create_dir_all(&opts.out_dir)?;
    let result = match command {
        Command::Simulate => simulate(cfg, opts),
        Command::Steady => steady(cfg, opts),
        Command::G2 => g2(cfg, opts),
        Command::Polarization => polarization_scan(cfg, opts),
        Command::SilverReduce => silver_reduce(cfg),
        Command::Sweep => sweep(cfg, opts),
    };
    let summary_path = opts.out_dir.join("summary.json");
    match result {
        Ok(mut run) => {
            let summary = Object::new()
                .set("command", command.name())
                .set("status", "ok")
                .set("strict", opts.strict)
                .set("warnings", run.warnings.clone())
                .set("result", run.summary)
                .into_value();
            fs::write(&summary_path, to_text(&summary))?;
            run.files.push(summary_path);
            Ok(Outcome {
                summary,
                files: run.files,
                warnings: run.warnings,
            })
        }
        Err(e) => {
            let summary = Object::new()
                .set("command", command.name())
                .set("status", "error")
                .set("exit_code", exit_code(&e))
                .set("error", e.to_string())
                .into_value();
            // the original error matters more than a failed report
            let _ = fs::write(&summary_path, to_text(&summary));
            Err(e)
        }
    }
}

struct Partial {
    summary: Value,
    files: Vec<PathBuf>,
    warnings: Vec<String>,
}

/// Scheme parameters ready for the dynamics, with reduction details for silver.
struct Resolved {
    params: ButterflyParams,
    grid: ModeGrid,
    reduction: Option<SilverReduction>,
    regime: RegimeReport,
}

impl Resolved {
    fn warnings(&self) -> Vec<String> {
        let mut w = self.regime.warnings();
        if let Some(r) = &self.reduction {
            w.extend(r.warnings.iter().map(|x| format!("reduction: {x}")));
        }
        w
    }

    fn echo(&self, obj: Object) -> Object {
        let obj = obj
            .set("rings", self.grid.ring_count())
            .set("regime", self.regime.summary_json())
            .set("params", crate::report::params_json(&self.params));
        match &self.reduction {
            Some(r) => obj.set("reduction", r.summary_json()),
            None => obj,
        }
    }
}

fn resolve(cfg: &RunConfig, opts: &RunOptions) -> Result<Resolved> {
    let rings = opts.rings.unwrap_or(cfg.rings);
    let (params, reduction, silver) = match &cfg.scheme {
        Scheme::Butterfly(p) => (p.clone(), None, None),
        Scheme::Silver { config, reduce: true } => {
            let r = schemes::reduce(config)?;
            (r.params.clone(), Some(r), Some(config))
        }
        Scheme::Silver { reduce: false, .. } => {
            return Err(Error::invalid(
                "silver.reduce = false: only silver-reduce can run on the raw scheme",
            ))
        }
    };
    let grid = ModeGrid::build(params.radius, params.wavelength, rings)?;
    let regime = match (silver, &reduction) {
        (Some(c), Some(r)) => schemes::validate_silver(c, r, &grid)?,
        _ => schemes::validate_regime(&params, &grid)?,
    };
    Ok(Resolved {
        params,
        grid,
        reduction,
        regime,
    })
}

fn control(cfg: &RunConfig, params: &ButterflyParams) -> IntegrationControl {
    let i = &cfg.integration;
    let mut ctl = IntegrationControl::for_params(params);
    ctl.samples = i.samples;
    ctl.fit_fraction = i.fit_fraction;
    ctl.step = match (i.fixed_step, ctl.step) {
        (Some(step), _) => StepControl::Fixed { step },
        (None, StepControl::Adaptive { max_step, .. }) => {
            StepControl::adaptive(i.rtol, i.atol, i.max_step.unwrap_or(max_step))
        }
        (None, fixed) => fixed,
    };
    ctl
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_grid(cfg: &RunConfig, r: &Resolved, opts: &RunOptions, files: &mut Vec<PathBuf>) -> Result<()> {
    if cfg.outputs.skip_grid {
        return Ok(());
    }
    let path = opts.out_dir.join("grid.csv");
    r.grid
        .write_csv(create(&path)?, &r.params.signal_dipole, &r.params.idler_dipole)?;
    files.push(path);
    Ok(())
}

fn integrate_resolved(cfg: &RunConfig, r: &Resolved, opts: &RunOptions) -> Result<(RateModel, Trajectory)> {
    let model = RateModel::new(&r.params, &r.grid, LossChannel::Included)?.with_parallelism(opts.parallelism);
    let initial = SystemState::ground_state(r.params.atom_number, r.grid.ring_count());
    let traj = integrate_model(&model, &initial, cfg.integration.t_end, &control(cfg, &r.params))?;
    Ok((model, traj))
}

fn simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial> {
    let r = resolve(cfg, opts)?;
    let (model, traj) = integrate_resolved(cfg, &r, opts)?;
    let mut files = Vec::new();
    let path = opts.out_dir.join("trajectory.csv");
    traj.write_csv(create(&path)?)?;
    files.push(path);
    write_grid(cfg, &r, opts, &mut files)?;
    let summary = r
        .echo(Object::new())
        .set("trajectory", traj.summary_json(&r.params))
        .set("kappa_final", opt_num(kappa(&traj.final_state, &model).ok()))
        .into_value();
    Ok(Partial {
        summary,
        files,
        warnings: r.warnings(),
    })
}

fn steady_for(r: &Resolved) -> Result<(RateModel, SystemState)> {
    let model = RateModel::new(&r.params, &r.grid, LossChannel::Neglected)?;
    let state = solve_steady(&model)?;
    Ok((model, state))
}

fn steady(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial> {
    let r = resolve(cfg, opts)?;
    let (model, s) = steady_for(&r)?;
    let (n3, n4) = mode_averages(&s, &r.grid);
    let (rs, ri) = emission_rates(&s, &model)?;
    let closures = (0..r.grid.ring_count())
        .map(|j| closure_ratio(&s, j))
        .collect::<Result<Vec<_>>>()?;
    let mut files = Vec::new();
    let path = opts.out_dir.join("steady.csv");
    {
        use std::io::Write;
        let mut out = create(&path)?;
        writeln!(out, "theta_center,weight,Nk3,Nk4,closure")?;
        for (j, c) in closures.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(r.grid.theta(j)),
                fmt17(r.grid.weights()[j]),
                fmt17(s.signal_mode[j]),
                fmt17(s.idler_mode[j]),
                fmt17(*c)
            )?;
        }
    }
    files.push(path);
    write_grid(cfg, &r, opts, &mut files)?;
    let min = closures.iter().copied().fold(f64::INFINITY, f64::min);
    let max = closures.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let summary = r
        .echo(Object::new())
        .f("N1", s.ground)
        .f("N2", s.upper)
        .f("Nbar3", n3)
        .f("Nbar4", n4)
        .f("signal_rate", rs)
        .f("idler_rate", ri)
        .f("idler_to_signal", ri / rs)
        .f("closure_min", min)
        .f("closure_max", max)
        .f("pairing_ratio_polar", pairing_ratio(&s, 0)?)
        .set("kappa", opt_num(kappa(&s, &model).ok()))
        .f("residual", model.steady_residual(&s)?)
        .into_value();
    Ok(Partial {
        summary,
        files,
        warnings: r.warnings(),
    })
}

fn ring_correlation(cfg: &RunConfig, r: &Resolved, s: &SystemState) -> Result<RingCorrelation> {
    let ring = r.grid.nearest_ring(cfg.correlation.theta);
    RingCorrelation::new(&r.grid, ring, s, &r.params)
}

fn g2(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial> {
    let r = resolve(cfg, opts)?;
    let (_, s) = steady_for(&r)?;
    let rc = ring_correlation(cfg, &r, &s)?;
    let tau_max = match cfg.correlation.tau_max {
        Some(t) => t,
        None if r.params.omega_couple > 0.0 => 4.0 * std::f64::consts::PI / r.params.omega_couple,
        None => return Err(Error::undefined("correlation window", "coupler is off")),
    };
    let curve = rc.curve(tau_max, cfg.correlation.samples)?;
    let path = opts.out_dir.join("g2.csv");
    curve.write_csv(create(&path)?)?;
    let mut warnings = r.warnings();
    if !curve.strong_coupling {
        warnings.push(format!(
            "ring {} is outside the strong-coupling regime of the g² closed form",
            rc.ring
        ));
    }
    let summary = r
        .echo(Object::new())
        .set("g2", curve.summary_json())
        .set("ring", rc.ring)
        .f("Nk4", rc.idler_occupation)
        .into_value();
    Ok(Partial {
        summary,
        files: vec![path],
        warnings,
    })
}

fn polarization_scan(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial> {
    let dipole = match &cfg.scheme {
        Scheme::Butterfly(p) => p.signal_dipole,
        Scheme::Silver { .. } => crate::geometry::DipoleOrientation::sigma_plus(crate::geometry::DipoleRole::Signal),
    };
    let points = polarization::scan(cfg.polarization.samples)?;
    let path = opts.out_dir.join("polarization.csv");
    polarization::write_scan_csv(&points, create(&path)?)?;
    let t = cfg.polarization.theta_max;
    let summary = Object::new()
        .f("theta_max", t)
        .f(
            "P_equator",
            polarization::opposite_polarization_probability(std::f64::consts::FRAC_PI_2)?,
        )
        .f("P_theta_max", polarization::opposite_polarization_probability(t)?)
        .f("fidelity_theta_max", polarization::bell_fidelity(t)?)
        .f("entangled_fraction", polarization::entangled_fraction(t, &dipole)?)
        .into_value();
    Ok(Partial {
        summary,
        files: vec![path],
        warnings: Vec::new(),
    })
}

fn silver_reduce(cfg: &RunConfig) -> Result<Partial> {
    let Scheme::Silver { config, .. } = &cfg.scheme else {
        return Err(Error::invalid("silver-reduce needs a silver.* scheme section"));
    };
    let reduction = schemes::reduce(config)?;
    let grid = ModeGrid::build(reduction.params.radius, reduction.params.wavelength, cfg.rings)?;
    let regime = schemes::validate_silver(config, &reduction, &grid)?;
    let mut warnings = regime.warnings();
    warnings.extend(reduction.warnings.iter().map(|x| format!("reduction: {x}")));
    let summary = Object::new()
        .set("reduction", reduction.summary_json())
        .set("regime", regime.summary_json())
        .into_value();
    Ok(Partial {
        summary,
        files: Vec::new(),
        warnings,
    })
}

/// Metrics of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub status: String,
    pub pair_rate: Option<f64>,
    pub loss_rate: Option<f64>,
    pub kappa: Option<f64>,
    pub peak_g2: Option<f64>,
    pub cs_factor: Option<f64>,
    pub weak_drive: Option<bool>,
    pub strong_coupler: Option<bool>,
}

impl SweepRow {
    fn failed(value: f64, e: &Error) -> Self {
        Self {
            value,
            status: format!("error: {}", e.to_string().replace([',', '\n'], ";")),
            pair_rate: None,
            loss_rate: None,
            kappa: None,
            peak_g2: None,
            cs_factor: None,
            weak_drive: None,
            strong_coupler: None,
        }
    }
}

/// Simulation and correlation metrics for one configuration.
pub fn sweep_point(cfg: &RunConfig, value: f64, opts: &RunOptions) -> SweepRow {
    let run = || -> Result<SweepRow> {
        let r = resolve(cfg, opts)?;
        let (_, traj) = integrate_resolved(cfg, &r, opts)?;
        let correlation = steady_for(&r).and_then(|(_, s)| {
            let rc = ring_correlation(cfg, &r, &s)?;
            Ok((rc.peak_g2()?, rc.cs_factor()?))
        });
        let warnings = r.warnings();
        let status = match &correlation {
            Err(e) => format!("steady-state failed: {}", e.to_string().replace([',', '\n'], ";")),
            Ok(_) if opts.strict && !warnings.is_empty() => "regime-warning".to_string(),
            Ok(_) => "ok".to_string(),
        };
        let (peak, cs) = correlation.map_or((None, None), |(p, c)| (Some(p), Some(c)));
        Ok(SweepRow {
            value,
            status,
            pair_rate: Some(traj.pair_fit.slope),
            loss_rate: Some(traj.loss_fit.slope),
            kappa: Some(traj.rate_ratio()),
            peak_g2: peak,
            cs_factor: cs,
            weak_drive: Some(r.regime.weak_drive),
            strong_coupler: Some(r.regime.strong_coupler),
        })
    };
    run().unwrap_or_else(|e| SweepRow::failed(value, &e))
}

/// Evaluates every sweep point, in parameter order.
pub fn run_sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<Vec<SweepRow>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::invalid("the configuration has no sweep section"))?;
    let points = sweep
        .values()
        .into_iter()
        .map(|v| cfg.with_parameter(&sweep.parameter, v).map(|c| (v, c)))
        .collect::<Result<Vec<_>>>()?;
    // points are independent; ring sums inside each stay sequential
    let inner = RunOptions {
        parallelism: Parallelism::Sequential,
        ..opts.clone()
    };
    let eval = |(v, c): &(f64, RunConfig)| sweep_point(c, *v, &inner);
    let mut rows: Vec<SweepRow> = match opts.parallelism {
        Parallelism::Rayon => points.par_iter().map(eval).collect(),
        Parallelism::Sequential => points.iter().map(eval).collect(),
    };
    rows.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(rows)
}

/// Writes the sweep table.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "value,status,pair_rate,loss_rate,kappa,peak_g2,cs_factor,weak_drive,strong_coupler"
    )?;
    let f = |x: Option<f64>| x.map_or(String::new(), fmt17);
    let b = |x: Option<bool>| x.map_or(String::new(), |v| v.to_string());
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt17(r.value),
            r.status,
            f(r.pair_rate),
            f(r.loss_rate),
            f(r.kappa),
            f(r.peak_g2),
            f(r.cs_factor),
            b(r.weak_drive),
            b(r.strong_coupler)
        )?;
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<Partial> {
    let rows = run_sweep(cfg, opts)?;
    let path = opts.out_dir.join("sweep.csv");
    write_sweep_csv(&rows, create(&path)?)?;
    let sweep = cfg.sweep.as_ref().expect("run_sweep checked the section");
    let warnings: Vec<String> = rows
        .iter()
        .filter(|r| r.status != "ok")
        .map(|r| format!("point {}: {}", fmt17(r.value), r.status))
        .collect();
    let summary = Object::new()
        .set("parameter", sweep.parameter.clone())
        .set("points", rows.len())
        .set("values", rows.iter().map(|r| num(r.value)).collect::<Vec<_>>())
        .set("failed", rows.iter().filter(|r| r.status.starts_with("error")).count())
        .into_value();
    Ok(Partial {
        summary,
        files: vec![path],
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
        assert!("simulat".parse::<Command>().is_err());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            exit_code(&Error::invalid("x")),
            exit_code(&Error::StepUnderflow { t: 0.0, step: 0.0 }),
            exit_code(&Error::NoSteadyState {
                reason: String::new(),
                residual: 0.0,
            }),
            exit_code(&Error::Io(std::io::Error::other("x"))),
        ];
        assert_eq!(codes, [exit::CONFIG, exit::INTEGRATOR, exit::STEADY_STATE, exit::IO]);
    }

    #[test]
    fn polarization_command_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = crate::config::preset("fig2").unwrap();
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            ..RunOptions::default()
        };
        let out = run_command(&cfg, Command::Polarization, &opts).unwrap();
        assert_eq!(out.files.len(), 2);
        assert!(dir.path().join("summary.json").exists());
    }

    #[test]
    fn failure_still_writes_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = crate::config::preset("fig2").unwrap();
        let opts = RunOptions {
            out_dir: dir.path().to_path_buf(),
            ..RunOptions::default()
        };
        let e = run_command(&cfg, Command::SilverReduce, &opts).unwrap_err();
        assert_eq!(exit_code(&e), exit::CONFIG);
        let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
        assert!(text.contains("\"error\""));
    }
}
