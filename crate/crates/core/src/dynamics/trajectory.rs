use std::io::Write;

use serde_json::Value;

use super::model::{LossChannel, RateModel};
use super::params::ButterflyParams;
use super::state::SystemState;
use crate::error::{Error, Result};
use crate::geometry::ModeGrid;
use crate::ode::{self, StepControl};
use crate::reduce::pairwise_sum;
use crate::report::{fmt17, num, Object};

/// Step policy, sampling and rate-fit window for one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationControl {
    pub step: StepControl,
    /// Output samples including `t = 0` and `t = t_end`.
    pub samples: usize,
    /// Trailing fraction of samples used for the linear rate fits.
    pub fit_fraction: f64,
}

impl IntegrationControl {
    /// Adaptive stepping with the step capped at `0.01` over the fastest rate.
    pub fn for_params(params: &ButterflyParams) -> Self {
        let fastest = params
            .omega_couple
            .max(params.omega_drive)
            .max(params.gamma_signal)
            .max(params.gamma_idler);
        Self {
            step: StepControl::adaptive(1e-8, 1e-10, 0.01 / fastest),
            samples: 201,
            fit_fraction: 0.7,
        }
    }
}

/// Ordinary least-squares line `y = slope·t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn fit(t: &[f64], y: &[f64]) -> Result<Self> {
        let n = t.len();
        if n < 2 || y.len() != n {
            return Err(Error::invalid("a linear fit needs at least two matching points"));
        }
        let nf = n as f64;
        let t_mean = pairwise_sum(t) / nf;
        let y_mean = pairwise_sum(y) / nf;
        let sxx: Vec<f64> = t.iter().map(|ti| (ti - t_mean).powi(2)).collect();
        let sxy: Vec<f64> = t.iter().zip(y).map(|(ti, yi)| (ti - t_mean) * (yi - y_mean)).collect();
        let sxx = pairwise_sum(&sxx);
        if sxx == 0.0 {
            return Err(Error::invalid("fit window has zero time span"));
        }
        let slope = pairwise_sum(&sxy) / sxx;
        let intercept = y_mean - slope * t_mean;
        let res: Vec<f64> = t
            .iter()
            .zip(y)
            .map(|(ti, yi)| (yi - slope * ti - intercept).powi(2))
            .collect();
        Ok(Self {
            slope,
            intercept,
            rms_residual: (pairwise_sum(&res) / nf).sqrt(),
            t_start: t[0],
            t_end: t[n - 1],
            points: n,
        })
    }

    fn json(&self) -> Value {
        Object::new()
            .f("rate", self.slope)
            .f("intercept", self.intercept)
            .f("rms_residual", self.rms_residual)
            .f("t_start", self.t_start)
            .f("t_end", self.t_end)
            .set("points", self.points)
            .into_value()
    }
}

/// Sampled scalars of one integration plus the fitted pair and loss rates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub ground: Vec<f64>,
    pub upper: Vec<f64>,
    /// Mode-averaged `N̄₃`.
    pub mean_signal: Vec<f64>,
    /// Mode-averaged `N̄₄`.
    pub mean_idler: Vec<f64>,
    pub pairs: Vec<f64>,
    pub lost: Vec<f64>,
    /// Atoms still in the cycle.
    pub atoms: Vec<f64>,
    /// Integrated right side of the atom-number balance.
    pub balance: Vec<f64>,
    pub pair_fit: LinearFit,
    pub loss_fit: LinearFit,
    pub fit_fraction: f64,
    pub final_state: SystemState,
}

impl Trajectory {
    /// Relative mismatch between the change in atom number and its integrated rate.
    pub fn balance_error(&self) -> f64 {
        let last = self.t.len() - 1;
        let lhs = self.atoms[last] - self.atoms[0];
        let rhs = self.balance[last] - self.balance[0];
        if rhs == 0.0 {
            return lhs.abs();
        }
        ((lhs - rhs) / rhs).abs()
    }

    /// Final `N_pair / N_loss` rate ratio from the fits.
    pub fn rate_ratio(&self) -> f64 {
        self.pair_fit.slope / self.loss_fit.slope
    }

    /// Writes `t,N1,N2,Nbar3,Nbar4,Npair,Nloss`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,N1,N2,Nbar3,Nbar4,Npair,Nloss")?;
        for i in 0..self.t.len() {
            let row = [
                self.t[i],
                self.ground[i],
                self.upper[i],
                self.mean_signal[i],
                self.mean_idler[i],
                self.pairs[i],
                self.lost[i],
            ];
            let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn summary_json(&self, params: &ButterflyParams) -> Value {
        let last = self.t.len() - 1;
        let to_si = params.time_unit_seconds;
        Object::new()
            .set("pair_fit", self.pair_fit.json())
            .set("loss_fit", self.loss_fit.json())
            .f("fit_fraction", self.fit_fraction)
            .f("pair_loss_ratio", self.rate_ratio())
            .set(
                "pair_rate_per_second",
                to_si.map_or(Value::Null, |s| num(self.pair_fit.slope / s)),
            )
            .set(
                "loss_rate_per_second",
                to_si.map_or(Value::Null, |s| num(self.loss_fit.slope / s)),
            )
            .f("balance_relative_error", self.balance_error())
            .set(
                "final",
                Object::new()
                    .f("t", self.t[last])
                    .f("N1", self.ground[last])
                    .f("N2", self.upper[last])
                    .f("Nbar3", self.mean_signal[last])
                    .f("Nbar4", self.mean_idler[last])
                    .f("Npair", self.pairs[last])
                    .f("Nloss", self.lost[last]),
            )
            .set("params", crate::report::params_json(params))
            .into_value()
    }
}

/// Integrates the full rate equations (loss channel included) from `initial` to `t_end`.
pub fn integrate(
    initial: &SystemState,
    params: &ButterflyParams,
    grid: &ModeGrid,
    t_end: f64,
    control: &IntegrationControl,
) -> Result<Trajectory> {
    let model = RateModel::new(params, grid, LossChannel::Included)?;
    integrate_model(&model, initial, t_end, control)
}

/// Integrates `model` from `initial` to `t_end`.
pub fn integrate_model(
    model: &RateModel,
    initial: &SystemState,
    t_end: f64,
    control: &IntegrationControl,
) -> Result<Trajectory> {
    initial.check_rings(model.ring_count())?;
    if !(t_end > initial.t) || !t_end.is_finite() {
        return Err(Error::invalid("t_end must be finite and later than the initial time"));
    }
    if control.samples < 3 {
        return Err(Error::invalid("at least three samples are needed"));
    }
    if !(control.fit_fraction > 0.0 && control.fit_fraction <= 1.0) {
        return Err(Error::invalid("fit fraction must lie in (0, 1]"));
    }
    let t0 = initial.t;
    let n = control.samples;
    let sample_times: Vec<f64> = (1..n)
        .map(|i| {
            if i + 1 == n {
                t_end
            } else {
                t0 + (t_end - t0) * i as f64 / (n - 1) as f64
            }
        })
        .collect();

    let y0 = initial.to_flat();
    debug_assert_eq!(y0.len(), model.flat_len());
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| model.eval(y, dy);
    let mut states = vec![y0.clone()];
    states.extend(ode::integrate(rhs, t0, &y0, &sample_times, control.step)?);

    let weights = model.weights();
    let modes = pairwise_sum(weights);
    let mut traj = Trajectory {
        t: Vec::with_capacity(n),
        ground: Vec::with_capacity(n),
        upper: Vec::with_capacity(n),
        mean_signal: Vec::with_capacity(n),
        mean_idler: Vec::with_capacity(n),
        pairs: Vec::with_capacity(n),
        lost: Vec::with_capacity(n),
        atoms: Vec::with_capacity(n),
        balance: Vec::with_capacity(n),
        pair_fit: LinearFit::fit(&[0.0, 1.0], &[0.0, 0.0])?,
        loss_fit: LinearFit::fit(&[0.0, 1.0], &[0.0, 0.0])?,
        fit_fraction: control.fit_fraction,
        final_state: initial.clone(),
    };
    let times = std::iter::once(t0).chain(sample_times.iter().copied());
    for (t, y) in times.zip(&states) {
        let s = SystemState::from_flat(t, y);
        let weighted = |v: &[f64]| {
            let terms: Vec<f64> = v.iter().zip(weights).map(|(x, w)| w * x).collect();
            pairwise_sum(&terms) / modes
        };
        traj.t.push(t);
        traj.ground.push(s.ground);
        traj.upper.push(s.upper);
        traj.mean_signal.push(weighted(&s.signal_mode));
        traj.mean_idler.push(weighted(&s.idler_mode));
        traj.pairs.push(s.pairs);
        traj.lost.push(s.lost);
        traj.atoms.push(s.atoms(weights));
        traj.balance.push(s.balance);
        traj.final_state = s;
    }
    let start = n - ((control.fit_fraction * n as f64).round() as usize).clamp(2, n);
    traj.pair_fit = LinearFit::fit(&traj.t[start..], &traj.pairs[start..])?;
    traj.loss_fit = LinearFit::fit(&traj.t[start..], &traj.lost[start..])?;
    Ok(traj)
}
