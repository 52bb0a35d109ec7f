use num_complex::Complex64;
use rayon::prelude::*;

use super::params::ButterflyParams;
use super::state::{slot, SystemState, HEADER, RING};
use crate::error::{Error, Result};
use crate::geometry::ModeGrid;
use crate::reduce::pairwise_sum_rows;

/// Whether non-collective `|4⟩` decay is part of the equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossChannel {
    /// The full rate equations.
    Included,
    /// Drops the `Γ₄ N_k4` spontaneous term, as in the loss-free steady state.
    Neglected,
}

/// How the per-ring work of one right-hand-side evaluation is scheduled.
///
/// Both choices give bitwise-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    #[default]
    Sequential,
    /// Split rings over the current rayon pool.
    Rayon,
}

/// Rate equations bound to a mode grid: scalars plus per-ring couplings.
#[derive(Debug, Clone)]
pub struct RateModel {
    params: ButterflyParams,
    loss: LossChannel,
    parallelism: Parallelism,
    weights: Vec<f64>,
    mu_signal: Vec<f64>,
    mu_idler: Vec<f64>,
}

impl RateModel {
    pub fn new(params: &ButterflyParams, grid: &ModeGrid, loss: LossChannel) -> Result<Self> {
        params.validate()?;
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !same(params.radius / params.wavelength, grid.radius() / grid.wavelength()) {
            return Err(Error::invalid(format!(
                "grid built for R/λ = {} but parameters give {}",
                grid.radius() / grid.wavelength(),
                params.radius / params.wavelength
            )));
        }
        Ok(Self {
            params: params.clone(),
            loss,
            parallelism: Parallelism::Sequential,
            weights: grid.weights().to_vec(),
            mu_signal: grid.enhancement_profile(&params.signal_dipole),
            mu_idler: grid.enhancement_profile(&params.idler_dipole),
        })
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }

    pub fn with_loss(mut self, loss: LossChannel) -> Self {
        self.loss = loss;
        self
    }

    pub fn params(&self) -> &ButterflyParams {
        &self.params
    }

    pub fn loss(&self) -> LossChannel {
        self.loss
    }

    pub fn ring_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mu_signal(&self) -> &[f64] {
        &self.mu_signal
    }

    pub fn mu_idler(&self) -> &[f64] {
        &self.mu_idler
    }

    /// 1 when the spontaneous `|4⟩` term is present, 0 otherwise.
    pub(crate) fn spontaneous(&self) -> f64 {
        match self.loss {
            LossChannel::Included => 1.0,
            LossChannel::Neglected => 0.0,
        }
    }

    pub(crate) fn flat_len(&self) -> usize {
        HEADER + RING * self.ring_count()
    }

    /// Weighted ring sums `[Σ w μ₂ (N_k3+1), Σ w μ₄ N_k4, Σ w N_k4]`.
    pub(crate) fn ring_sums(&self, y: &[f64]) -> [f64; 3] {
        let rings = &y[HEADER..];
        let term = |(j, b): (usize, &[f64])| -> [f64; 3] {
            let w = self.weights[j];
            [
                w * self.mu_signal[j] * (b[0] + 1.0),
                w * self.mu_idler[j] * b[1],
                w * b[1],
            ]
        };
        let rows: Vec<[f64; 3]> = match self.parallelism {
            Parallelism::Sequential => rings.chunks_exact(RING).enumerate().map(term).collect(),
            Parallelism::Rayon => rings.par_chunks_exact(RING).enumerate().map(term).collect(),
        };
        pairwise_sum_rows(&rows)
    }

    /// Flat right-hand side.
    pub(crate) fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let ell = self.spontaneous();
        let [sig, idl, pop4] = self.ring_sums(y);
        let signal_sum = p.gamma_signal * sig;
        let idler_sum = p.gamma_idler * idl;
        let spontaneous4 = ell * p.gamma_idler * pop4;

        let n1 = y[slot::GROUND];
        let n2 = y[slot::UPPER];
        let rho = Complex64::new(y[slot::DRIVE_RE], y[slot::DRIVE_IM]);
        let drive_flow = p.omega_drive * rho.im;

        dy[slot::GROUND] = -drive_flow + idler_sum * (n1 + 1.0) + (1.0 - p.loss_branching) * spontaneous4;
        dy[slot::UPPER] = drive_flow - signal_sum * n2;
        let drho = Complex64::new(0.0, 0.5 * p.omega_drive * (n1 - n2)) + 0.5 * rho * (idler_sum - signal_sum);
        dy[slot::DRIVE_RE] = drho.re;
        dy[slot::DRIVE_IM] = drho.im;
        dy[slot::PAIRS] = idler_sum * (n1 + 1.0);
        dy[slot::LOST] = p.loss_branching * spontaneous4;
        dy[slot::BALANCE] = idler_sum - p.loss_branching * spontaneous4;

        let ring_rhs = |(j, (b, d)): (usize, (&[f64], &mut [f64]))| {
            let gain = p.gamma_signal * self.mu_signal[j] * n2;
            let decay = p.gamma_idler * (self.mu_idler[j] * n1 + ell);
            let rho43 = Complex64::new(b[2], b[3]);
            let couple_flow = p.omega_couple * rho43.im;
            d[0] = -couple_flow + gain * (b[0] + 1.0);
            d[1] = couple_flow - decay * b[1];
            let dr = Complex64::new(0.0, 0.5 * p.omega_couple * (b[0] - b[1])) + 0.5 * rho43 * (gain - decay);
            d[2] = dr.re;
            d[3] = dr.im;
        };
        let (src, dst) = (&y[HEADER..], &mut dy[HEADER..]);
        match self.parallelism {
            Parallelism::Sequential => src
                .chunks_exact(RING)
                .zip(dst.chunks_exact_mut(RING))
                .enumerate()
                .for_each(ring_rhs),
            Parallelism::Rayon => src
                .par_chunks_exact(RING)
                .zip(dst.par_chunks_exact_mut(RING))
                .enumerate()
                .for_each(ring_rhs),
        }
    }

    /// Time derivative of every field of `state`, counters included.
    ///
    /// The returned `t` field is 1 (`dt/dt`).
    pub fn derivative(&self, state: &SystemState) -> Result<SystemState> {
        state.check_rings(self.ring_count())?;
        let y = state.to_flat();
        let mut dy = vec![0.0; y.len()];
        self.eval(&y, &mut dy);
        Ok(SystemState::from_flat(1.0, &dy))
    }

    /// Norm of the derivative with the `N₁` reservoir and all counters excluded.
    ///
    /// `N₁` is fixed by atom-number conservation in the steady state, so its
    /// own equation is not part of the fixed-point condition.
    pub fn steady_residual(&self, state: &SystemState) -> Result<f64> {
        let mut d = self.derivative(state)?;
        d.ground = 0.0;
        d.pairs = 0.0;
        d.lost = 0.0;
        d.balance = 0.0;
        Ok(d.norm())
    }
}

/// Derivative of the full rate equations (loss channel included).
pub fn rhs(state: &SystemState, params: &ButterflyParams, grid: &ModeGrid) -> Result<SystemState> {
    RateModel::new(params, grid, LossChannel::Included)?.derivative(state)
}
