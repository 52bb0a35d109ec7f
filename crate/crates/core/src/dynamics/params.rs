use crate::error::{Error, Result};
use crate::geometry::{DipoleOrientation, DipoleRole};

/// Physical constants of a (reduced) butterfly scheme.
///
/// Rates and Rabi frequencies share one unit; times are in its inverse.
/// The toy model uses units of the linewidth Γ. Lengths only enter through
/// `radius / wavelength`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyParams {
    /// Spontaneous rate of `|2⟩ → |3⟩` (signal).
    pub gamma_signal: f64,
    /// Spontaneous rate of `|4⟩ → |1⟩` (idler).
    pub gamma_idler: f64,
    /// Drive Rabi frequency `|1⟩ ↔ |2⟩`.
    pub omega_drive: f64,
    /// Coupler Rabi frequency `|3⟩ ↔ |4⟩`.
    pub omega_couple: f64,
    pub signal_dipole: DipoleOrientation,
    pub idler_dipole: DipoleOrientation,
    /// Atoms, all initially in `|1⟩`.
    pub atom_number: f64,
    pub radius: f64,
    pub wavelength: f64,
    /// Fraction of non-collective `|4⟩` decays that leave the cycle. The
    /// remainder returns to `|1⟩`. The toy model loses every such atom.
    pub loss_branching: f64,
    /// Length of one time unit in seconds, when the rates carry a physical unit.
    pub time_unit_seconds: Option<f64>,
}

impl ButterflyParams {
    /// Toy model in units of Γ with circular dipoles `(x̂ ± iŷ)/√2`.
    pub fn toy(omega_drive: f64, omega_couple: f64, atom_number: f64, radius_over_wavelength: f64) -> Self {
        Self {
            gamma_signal: 1.0,
            gamma_idler: 1.0,
            omega_drive,
            omega_couple,
            signal_dipole: DipoleOrientation::sigma_plus(DipoleRole::Signal),
            idler_dipole: DipoleOrientation::sigma_minus(DipoleRole::Idler),
            atom_number,
            radius: radius_over_wavelength,
            wavelength: 1.0,
            loss_branching: 1.0,
            time_unit_seconds: None,
        }
    }

    /// The toy experiment: `N = 10⁶`, `Ω_d = 0.1Γ`, `Ω_c = 100Γ`, `R = 50λ`.
    pub fn fig2() -> Self {
        Self::toy(0.1, 100.0, 1e6, 50.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma_signal,
            self.gamma_idler,
            self.omega_drive,
            self.omega_couple,
            self.atom_number,
            self.radius,
            self.wavelength,
            self.loss_branching,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("parameters must be finite"));
        }
        if self.gamma_signal <= 0.0 || self.gamma_idler <= 0.0 {
            return Err(Error::invalid("decay rates must be positive"));
        }
        if self.omega_drive < 0.0 || self.omega_couple < 0.0 {
            return Err(Error::invalid("Rabi frequencies must be non-negative"));
        }
        if self.atom_number < 1.0 {
            return Err(Error::invalid("atom number must be at least 1"));
        }
        if self.radius <= 0.0 || self.wavelength <= 0.0 {
            return Err(Error::invalid("radius and wavelength must be positive"));
        }
        if !(0.0..=1.0).contains(&self.loss_branching) {
            return Err(Error::invalid("loss branching must lie in [0, 1]"));
        }
        Ok(())
    }
}
