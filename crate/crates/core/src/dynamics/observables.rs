//! Emission, pairing and loss observables of a state.
//!
//! Negative occupations left by integration error are clamped to zero here
//! and only here.

use std::f64::consts::PI;

use super::model::RateModel;
use super::state::SystemState;
use crate::error::{Error, Result};
use crate::reduce::pairwise_sum;

fn occ(x: f64) -> f64 {
    x.max(0.0)
}

/// Total signal and idler emission rates `(R_S, R_I)`.
///
/// `R_S = Γ₂ Σ_k μ_k2 N₂ (N_k3 + 1)`, `R_I = Γ₄ Σ_k μ_k4 N_k4 (N₁ + 1)`.
pub fn emission_rates(state: &SystemState, model: &RateModel) -> Result<(f64, f64)> {
    state.check_rings(model.ring_count())?;
    let p = model.params();
    let w = model.weights();
    let sig: Vec<f64> = (0..w.len())
        .map(|j| w[j] * model.mu_signal()[j] * (occ(state.signal_mode[j]) + 1.0))
        .collect();
    let idl: Vec<f64> = (0..w.len())
        .map(|j| w[j] * model.mu_idler()[j] * occ(state.idler_mode[j]))
        .collect();
    let rs = p.gamma_signal * pairwise_sum(&sig) * occ(state.upper);
    let ri = p.gamma_idler * pairwise_sum(&idl) * (occ(state.ground) + 1.0);
    Ok((rs, ri))
}

/// Instantaneous pair-generation rate, equal to `R_I`.
pub fn pair_rate(state: &SystemState, model: &RateModel) -> Result<f64> {
    emission_rates(state, model).map(|(_, ri)| ri)
}

/// Instantaneous atom-loss rate `b·Γ₄ Σ_k N_k4`.
pub fn loss_rate(state: &SystemState, model: &RateModel) -> Result<f64> {
    state.check_rings(model.ring_count())?;
    let w = model.weights();
    let t: Vec<f64> = (0..w.len()).map(|j| w[j] * occ(state.idler_mode[j])).collect();
    let p = model.params();
    Ok(p.loss_branching * p.gamma_idler * pairwise_sum(&t))
}

/// `R_I(k̂)/R_S(k̂) = ((N₁+1)/N₂)·(N_k4/(N_k3+1))` for one ring, taking
/// `μ_k2 = μ_k4` and `Γ₂ = Γ₄`.
pub fn pairing_ratio(state: &SystemState, ring: usize) -> Result<f64> {
    check_ring(state, ring)?;
    if state.upper <= 0.0 {
        return Err(Error::undefined("pairing ratio", "N₂ = 0"));
    }
    Ok((occ(state.ground) + 1.0) / state.upper * occ(state.idler_mode[ring]) / (occ(state.signal_mode[ring]) + 1.0))
}

/// `N_k4 N₁ / (N₂ (N_k3 + 1))`; one when the strong-pairing closure holds.
pub fn closure_ratio(state: &SystemState, ring: usize) -> Result<f64> {
    check_ring(state, ring)?;
    if state.upper <= 0.0 {
        return Err(Error::undefined("closure ratio", "N₂ = 0"));
    }
    Ok(occ(state.idler_mode[ring]) * occ(state.ground) / (state.upper * (occ(state.signal_mode[ring]) + 1.0)))
}

fn check_ring(state: &SystemState, ring: usize) -> Result<()> {
    if ring >= state.ring_count() {
        return Err(Error::invalid(format!(
            "ring {ring} out of range ({} rings)",
            state.ring_count()
        )));
    }
    Ok(())
}

/// Pair-to-loss ratio `κ = N₁ μ̄` with `μ̄ = Σμ_k4 N_k4 / ΣN_k4`.
pub fn kappa(state: &SystemState, model: &RateModel) -> Result<f64> {
    state.check_rings(model.ring_count())?;
    let w = model.weights();
    let rows: Vec<f64> = (0..w.len()).map(|j| w[j] * occ(state.idler_mode[j])).collect();
    let pop = pairwise_sum(&rows);
    if pop <= 0.0 {
        return Err(Error::undefined("kappa", "no idler population"));
    }
    let weighted: Vec<f64> = (0..w.len()).map(|j| rows[j] * model.mu_idler()[j]).collect();
    Ok(occ(state.ground) * pairwise_sum(&weighted) / pop)
}

/// Rough sphere estimate `κ ≈ N₁ λ² / (4πR²)`.
pub fn kappa_sphere_estimate(ground: f64, radius: f64, wavelength: f64) -> f64 {
    ground * wavelength * wavelength / (4.0 * PI * radius * radius)
}
