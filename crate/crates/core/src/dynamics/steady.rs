//! Stationary solution of the rate equations.
//!
//! With `N₁` and `N₂` held fixed every ring is a linear problem with a closed
//! form. Writing `a = Γ₂μ_k2 N₂` (signal gain), `b = Γ₄(μ_k4 N₁ + ℓ)` (idler
//! decay, `ℓ = 0` when losses are neglected) and `D = (b − a)(Ω_c² − ab)`:
//!
//! ```text
//! N_k3 = a(Ω_c² + b² − ab) / D,   N_k4 = aΩ_c² / D,   ρ_k43 = i·abΩ_c / D
//! ```
//!
//! A ring is stable only while `a < b` and `ab < Ω_c²`. The drive
//! coherence is then `ρ₂₁ = iΩ_d(N₁ − N₂)/(S₃ − S₄)` with the weighted ring
//! sums `S₃ = Γ₂Σμ_k2(N_k3+1)`, `S₄ = Γ₄Σμ_k4 N_k4`, and `N₂` solves
//! `Ω_d Im ρ₂₁ = S₃N₂`. Finally `N₁` is fixed by atom-number conservation
//! `N₁ + N₂ + Σ(N_k3 + N_k4) = N`, which stands in for the `N₁` equation.

use num_complex::Complex64;

use super::model::{LossChannel, RateModel};
use super::params::ButterflyParams;
use super::state::SystemState;
use crate::error::{Error, Result};
use crate::geometry::ModeGrid;
use crate::reduce::{pairwise_sum, pairwise_sum_rows};

/// Accepted `|rhs| / |state|` for a stationary state.
pub const STEADY_TOLERANCE: f64 = 1e-10;

const MAX_BISECTIONS: usize = 400;

/// Loss-free steady state (the spontaneous `|4⟩` decay is neglected).
pub fn steady_state(params: &ButterflyParams, grid: &ModeGrid) -> Result<SystemState> {
    let model = RateModel::new(params, grid, LossChannel::Neglected)?;
    solve(&model)
}

/// Steady state of `model` under its own loss setting.
pub fn solve(model: &RateModel) -> Result<SystemState> {
    let p = model.params();
    if p.omega_drive <= 0.0 {
        return Err(Error::invalid("steady state needs a nonzero drive"));
    }
    let total = p.atom_number;
    let mismatch = |n1: f64| -> Result<(f64, SystemState)> {
        let s = fixed_ground(model, n1)?;
        Ok((s.atoms(model.weights()) - total, s))
    };
    let (mut lo, mut hi) = (0.0, total);
    let (excess, mut best) = mismatch(hi)?;
    if excess < 0.0 {
        return Err(Error::NoSteadyState {
            reason: "atom-number constraint has no root".into(),
            residual: excess.abs(),
        });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (m, s) = mismatch(mid)?;
        if m < 0.0 {
            lo = mid;
        } else {
            hi = mid;
            best = s;
        }
    }
    let residual = model.steady_residual(&best)?;
    let norm = best.norm();
    if residual > STEADY_TOLERANCE * norm {
        return Err(Error::NoSteadyState {
            reason: format!("fixed point not reached (|state| = {norm:e})"),
            residual,
        });
    }
    Ok(best)
}

struct Rings {
    signal: Vec<f64>,
    idler: Vec<f64>,
    coherence: Vec<f64>,
}

fn ring_solution(model: &RateModel, n1: f64, n2: f64) -> Option<Rings> {
    let p = model.params();
    let ell = model.spontaneous();
    let oc2 = p.omega_couple * p.omega_couple;
    let n = model.ring_count();
    let mut out = Rings {
        signal: vec![0.0; n],
        idler: vec![0.0; n],
        coherence: vec![0.0; n],
    };
    for j in 0..n {
        let a = p.gamma_signal * model.mu_signal()[j] * n2;
        if a == 0.0 {
            continue;
        }
        let b = p.gamma_idler * (model.mu_idler()[j] * n1 + ell);
        let den = (b - a) * (oc2 - a * b);
        if !(b > a && oc2 > a * b) || den <= 0.0 {
            return None;
        }
        out.signal[j] = a * (oc2 + b * b - a * b) / den;
        out.idler[j] = a * oc2 / den;
        out.coherence[j] = a * b * p.omega_couple / den;
    }
    Some(out)
}

/// Largest `N₂` for which every ring stays stable at the given `N₁`.
fn upper_limit(model: &RateModel, n1: f64) -> f64 {
    let p = model.params();
    let ell = model.spontaneous();
    let oc2 = p.omega_couple * p.omega_couple;
    let mut lim = n1;
    for j in 0..model.ring_count() {
        let g = p.gamma_signal * model.mu_signal()[j];
        if g == 0.0 {
            continue;
        }
        let b = p.gamma_idler * (model.mu_idler()[j] * n1 + ell);
        lim = lim.min(b / g);
        if b > 0.0 {
            lim = lim.min(oc2 / (b * g));
        } else {
            lim = 0.0;
        }
    }
    lim
}

fn assemble(model: &RateModel, n1: f64, n2: f64, rings: Rings) -> (SystemState, f64) {
    let p = model.params();
    let w = model.weights();
    let rows: Vec<[f64; 2]> = (0..model.ring_count())
        .map(|j| {
            [
                w[j] * model.mu_signal()[j] * (rings.signal[j] + 1.0),
                w[j] * model.mu_idler()[j] * rings.idler[j],
            ]
        })
        .collect();
    let [s3, s4] = pairwise_sum_rows(&rows);
    let (s3, s4) = (p.gamma_signal * s3, p.gamma_idler * s4);
    let rho = if s3 > s4 {
        p.omega_drive * (n1 - n2) / (s3 - s4)
    } else {
        f64::INFINITY
    };
    let mut s = SystemState::zeros(model.ring_count());
    s.ground = n1;
    s.upper = n2;
    s.drive_coherence = Complex64::new(0.0, rho);
    s.couple_coherence = rings.coherence.iter().map(|&x| Complex64::new(0.0, x)).collect();
    s.signal_mode = rings.signal;
    s.idler_mode = rings.idler;
    // Ω_d Im ρ₂₁ − S₃ N₂
    let upper_rate = p.omega_drive * rho - s3 * n2;
    (s, upper_rate)
}

/// Stationary state of everything except `N₁`, which is held at `n1`.
fn fixed_ground(model: &RateModel, n1: f64) -> Result<SystemState> {
    let eval = |n2: f64| ring_solution(model, n1, n2).map(|r| assemble(model, n1, n2, r));
    let (zero, f0) = eval(0.0).ok_or_else(|| Error::NoSteadyState {
        reason: "unstable at zero excitation".into(),
        residual: f64::INFINITY,
    })?;
    if f0 <= 0.0 {
        return Ok(zero);
    }
    let limit = upper_limit(model, n1);
    if limit <= 0.0 {
        return Err(Error::NoSteadyState {
            reason: "coupler too weak for any stationary excitation".into(),
            residual: f0,
        });
    }
    // f(N₂) falls from f(0) > 0 towards −∞ at the stability limit
    let (mut lo, mut hi) = ((0.0, zero, f0), limit);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo.0 + hi);
        if mid <= lo.0 || mid >= hi {
            break;
        }
        match eval(mid) {
            Some((s, f)) if f > 0.0 => lo = (mid, s, f),
            _ => hi = mid,
        }
    }
    match eval(hi) {
        Some((s, f)) if f.abs() < lo.2 => Ok(s),
        _ => Ok(lo.1),
    }
}

/// Mode-averaged occupations `(N̄₃, N̄₄)` of a state.
pub fn mode_averages(state: &SystemState, grid: &ModeGrid) -> (f64, f64) {
    let w = grid.weights();
    let modes = pairwise_sum(w);
    let avg = |v: &[f64]| {
        let t: Vec<f64> = v.iter().zip(w).map(|(x, w)| w * x).collect();
        pairwise_sum(&t) / modes
    };
    (avg(&state.signal_mode), avg(&state.idler_mode))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requires_drive() {
        let mut p = ButterflyParams::fig2();
        p.omega_drive = 0.0;
        let g = ModeGrid::build(p.radius, p.wavelength, 10).unwrap();
        assert!(steady_state(&p, &g).is_err());
    }

    #[test]
    fn coupler_off_has_no_steady_state() {
        let mut p = ButterflyParams::fig2();
        p.omega_couple = 0.0;
        let g = ModeGrid::build(p.radius, p.wavelength, 10).unwrap();
        assert!(matches!(steady_state(&p, &g), Err(Error::NoSteadyState { .. })));
    }

    #[test]
    fn conserves_atoms() {
        let p = ButterflyParams::fig2();
        let g = ModeGrid::build(p.radius, p.wavelength, 40).unwrap();
        let s = steady_state(&p, &g).unwrap();
        let atoms = s.atoms(g.weights());
        assert!((atoms - p.atom_number).abs() < 1e-6 * p.atom_number);
        assert!(s.upper > 0.0 && s.upper < 0.02 * s.ground);
    }
}
