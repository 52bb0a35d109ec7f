//! The six-laser silver scheme and operating-regime checks.
//!
//! Each leg of the butterfly is a three-photon transition through two far
//! detuned intermediate levels. Eliminating them adiabatically gives
//!
//! ```text
//! Ω_eff = Ω_a Ω_b Ω_c / (4 Δ_a Δ_b)
//! ```
//!
//! Frequencies in [`SilverConfig`] are angular, in units of `10⁹ s⁻¹`
//! (written GHz throughout). The reduced [`ButterflyParams`] are expressed in
//! units of the linewidth `Γ`, with `time_unit_seconds` set accordingly.

use serde_json::Value;

use crate::dynamics::{kappa_sphere_estimate, ButterflyParams};
use crate::error::{Error, Result};
use crate::geometry::{DipoleOrientation, DipoleRole, ModeGrid};
use crate::reduce::pairwise_sum;
use crate::report::Object;

/// Largest `Ω/|ΔE|` allowed on a link between two intermediate levels.
pub const MAX_LINK_RATIO: f64 = 0.5;
/// `Ω_d/Γ₂` at or below which the drive counts as weak.
pub const WEAK_DRIVE_RATIO: f64 = 0.3;

/// Reference parameters of the silver scheme plus the inputs it leaves open.
#[derive(Debug, Clone, PartialEq)]
pub struct SilverConfig {
    /// `Ω₁..Ω₆` in GHz: `Ω₁..Ω₃` drive, `Ω₄..Ω₆` coupling.
    pub rabi: [f64; 6],
    /// `Δ₁..Δ₄` in GHz: `Δ₁, Δ₂` drive, `Δ₃, Δ₄` coupling.
    pub detunings: [f64; 4],
    /// Linewidth `Γ` of the excited manifold in GHz.
    pub linewidth: f64,
    pub atom_number: f64,
    /// Metres.
    pub radius: f64,
    /// Metres.
    pub wavelength: f64,
    /// Fraction of spontaneous `|4⟩` decays that leave the cycle.
    pub loss_branching: f64,
}

impl SilverConfig {
    /// Default linewidth `2π × 23.4 MHz`.
    pub const DEFAULT_LINEWIDTH: f64 = 2.0 * std::f64::consts::PI * (23.4 / 1e3);

    /// Reference laser parameters with `N = 10⁶`, `R = 20 µm`, `λ = 328 nm`.
    pub fn standard() -> Self {
        Self {
            rabi: [0.4, 9.0, 1.5, 4.0, 12.0, 0.5],
            detunings: [24.0, 3.0, 80.0, 0.4],
            linewidth: Self::DEFAULT_LINEWIDTH,
            atom_number: 1e6,
            radius: 20e-6,
            wavelength: 328e-9,
            loss_branching: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rabi.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid("Rabi frequencies must be finite and non-negative"));
        }
        if self.detunings.iter().any(|x| !x.is_finite() || *x == 0.0) {
            return Err(Error::invalid("detunings must be finite and nonzero"));
        }
        if !(self.linewidth.is_finite() && self.linewidth > 0.0) {
            return Err(Error::invalid("linewidth must be positive"));
        }
        if !(0.0..=1.0).contains(&self.loss_branching) {
            return Err(Error::invalid("loss branching must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// A ladder of `n` laser links through `n − 1` intermediate levels, the
/// first and last levels resonant.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiphotonChain {
    rabi: Vec<f64>,
    detunings: Vec<f64>,
}

impl MultiphotonChain {
    pub fn new(rabi: Vec<f64>, detunings: Vec<f64>) -> Result<Self> {
        if rabi.is_empty() || detunings.len() + 1 != rabi.len() {
            return Err(Error::invalid("a chain of n links needs n − 1 detunings"));
        }
        if detunings.iter().any(|d| !d.is_finite() || *d == 0.0) {
            return Err(Error::invalid("intermediate detunings must be nonzero"));
        }
        Ok(Self { rabi, detunings })
    }

    pub fn rabi(&self) -> &[f64] {
        &self.rabi
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    /// `|ΠΩ| / (2^{n−1} |ΠΔ|)`.
    pub fn effective_rabi(&self) -> f64 {
        let num: f64 = self.rabi.iter().product();
        let den: f64 = self.detunings.iter().product();
        (num / (2f64.powi(self.detunings.len() as i32) * den)).abs()
    }

    /// `Ω_i / |E_i − E_{i−1}|` per link, with end levels at zero energy.
    /// Infinite for a single resonant link.
    pub fn link_ratios(&self) -> Vec<f64> {
        let energy = |i: usize| {
            if i == 0 || i == self.rabi.len() {
                0.0
            } else {
                self.detunings[i - 1]
            }
        };
        (0..self.rabi.len())
            .map(|i| self.rabi[i] / (energy(i + 1) - energy(i)).abs())
            .collect()
    }

    /// Refuses a near-resonant link between two intermediate levels; large
    /// ratios on the end links only produce warnings.
    pub fn check(&self) -> Result<Vec<String>> {
        if self.detunings.is_empty() {
            return Ok(Vec::new());
        }
        let ratios = self.link_ratios();
        let last = ratios.len() - 1;
        let mut warnings = Vec::new();
        for (i, &r) in ratios.iter().enumerate() {
            if r <= MAX_LINK_RATIO {
                continue;
            }
            if i == 0 || i == last {
                warnings.push(format!("end link {} has Ω/Δ = {r:.3}", i + 1));
            } else {
                return Err(Error::Reduction(format!(
                    "link {} between intermediate levels has Ω/ΔE = {r:.3} > {MAX_LINK_RATIO}",
                    i + 1
                )));
            }
        }
        Ok(warnings)
    }
}

/// `Ω₁, Ω₂, Ω₃` through `Δ₁, Δ₂`.
pub fn drive_chain(cfg: &SilverConfig) -> Result<MultiphotonChain> {
    MultiphotonChain::new(cfg.rabi[..3].to_vec(), cfg.detunings[..2].to_vec())
}

/// `Ω₄, Ω₅, Ω₆` through `Δ₃, Δ₄`; the only place the link order is assumed.
pub fn coupling_chain(cfg: &SilverConfig) -> Result<MultiphotonChain> {
    MultiphotonChain::new(cfg.rabi[3..].to_vec(), cfg.detunings[2..].to_vec())
}

/// Reduced scheme together with the intermediate quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SilverReduction {
    pub params: ButterflyParams,
    /// Effective drive Rabi frequency in GHz.
    pub drive_ghz: f64,
    /// Effective coupler Rabi frequency in GHz.
    pub couple_ghz: f64,
    pub warnings: Vec<String>,
}

impl SilverReduction {
    pub fn summary_json(&self) -> Value {
        Object::new()
            .f("omega_drive_eff_ghz", self.drive_ghz)
            .f("omega_couple_eff_ghz", self.couple_ghz)
            .f("omega_drive_eff_gamma", self.params.omega_drive)
            .f("omega_couple_eff_gamma", self.params.omega_couple)
            .set("warnings", self.warnings.clone())
            .set("params", crate::report::params_json(&self.params))
            .into_value()
    }
}

pub fn reduce(cfg: &SilverConfig) -> Result<SilverReduction> {
    cfg.validate()?;
    let drive = drive_chain(cfg)?;
    let couple = coupling_chain(cfg)?;
    let mut warnings = drive.check()?;
    warnings.extend(couple.check()?.into_iter().map(|w| format!("coupling {w}")));
    let (d, c) = (drive.effective_rabi(), couple.effective_rabi());
    let gamma = cfg.linewidth;
    let params = ButterflyParams {
        gamma_signal: 1.0,
        gamma_idler: 1.0,
        omega_drive: d / gamma,
        omega_couple: c / gamma,
        signal_dipole: DipoleOrientation::sigma_plus(DipoleRole::Signal),
        idler_dipole: DipoleOrientation::sigma_minus(DipoleRole::Idler),
        atom_number: cfg.atom_number,
        radius: cfg.radius,
        wavelength: cfg.wavelength,
        loss_branching: cfg.loss_branching,
        time_unit_seconds: Some(1e-9 / gamma),
    };
    params.validate()?;
    Ok(SilverReduction {
        params,
        drive_ghz: d,
        couple_ghz: c,
        warnings,
    })
}

/// Reduced butterfly parameters in units of `Γ`.
pub fn effective_params_from_silver(cfg: &SilverConfig) -> Result<ButterflyParams> {
    reduce(cfg).map(|r| r.params)
}

/// Regime flags and closed-form expectations for a parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub weak_drive: bool,
    pub strong_coupler: bool,
    /// `Ω_d / Γ₂`.
    pub drive_ratio: f64,
    /// `Ω_c / (Γ₄ μ_max N)`.
    pub coupler_ratio: f64,
    /// Two-level estimate `N Ω_d² / (γ₂² + 2Ω_d²)` with `γ₂ = Γ₂Σμ_k2`.
    pub predicted_upper: f64,
    /// `N_k4 ≈ N₂ / N₁` from the pairing closure at small `N_k3`.
    pub predicted_idler_occupation: f64,
    /// Sphere estimate `N λ² / (4πR²)`.
    pub predicted_kappa: f64,
    /// `N₁ μ̄` with the idler profile implied by the closure.
    pub mode_resolved_kappa: f64,
    pub rogue_photon_note: Option<String>,
}

impl RegimeReport {
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !self.weak_drive {
            w.push(format!(
                "drive is not weak: Ω_d/Γ₂ = {:.3} > {WEAK_DRIVE_RATIO}",
                self.drive_ratio
            ));
        }
        if !self.strong_coupler {
            w.push(format!(
                "coupler is not strong: Ω_c/(Γ₄μN) = {:.3} < 1",
                self.coupler_ratio
            ));
        }
        if self.mode_resolved_kappa <= 1.0 {
            w.push(format!("losses dominate pairs: κ = {:.3}", self.mode_resolved_kappa));
        }
        w
    }

    pub fn summary_json(&self) -> Value {
        Object::new()
            .set("weak_drive", self.weak_drive)
            .set("strong_coupler", self.strong_coupler)
            .f("drive_ratio", self.drive_ratio)
            .f("coupler_ratio", self.coupler_ratio)
            .f("predicted_N2", self.predicted_upper)
            .f("predicted_Nk4", self.predicted_idler_occupation)
            .f("predicted_kappa", self.predicted_kappa)
            .f("mode_resolved_kappa", self.mode_resolved_kappa)
            .set(
                "rogue_photons",
                self.rogue_photon_note.clone().map_or(Value::Null, Value::from),
            )
            .set("warnings", self.warnings())
            .into_value()
    }
}

pub fn validate_regime(params: &ButterflyParams, grid: &ModeGrid) -> Result<RegimeReport> {
    params.validate()?;
    let w = grid.weights();
    let mu_s = grid.enhancement_profile(&params.signal_dipole);
    let mu_i = grid.enhancement_profile(&params.idler_dipole);
    let mu_max = mu_i.iter().copied().fold(0.0, f64::max);
    let n = params.atom_number;

    let drive_ratio = params.omega_drive / params.gamma_signal;
    let collective = params.gamma_idler * mu_max * n;
    let coupler_ratio = if collective > 0.0 {
        params.omega_couple / collective
    } else {
        f64::INFINITY
    };

    let signal_sum = pairwise_sum(&w.iter().zip(&mu_s).map(|(w, m)| w * m).collect::<Vec<_>>());
    let gamma2 = params.gamma_signal * signal_sum;
    let od2 = params.omega_drive * params.omega_drive;
    let upper = n * od2 / (gamma2 * gamma2 + 2.0 * od2);
    let ground = n - upper;

    let ratio_sum: Vec<f64> = (0..w.len())
        .map(|j| if mu_i[j] > 0.0 { w[j] * mu_s[j] / mu_i[j] } else { 0.0 })
        .collect();
    let ratio_sum = pairwise_sum(&ratio_sum);
    let mode_resolved_kappa = if ratio_sum > 0.0 {
        ground * signal_sum / ratio_sum
    } else {
        0.0
    };

    Ok(RegimeReport {
        weak_drive: drive_ratio <= WEAK_DRIVE_RATIO,
        strong_coupler: coupler_ratio >= 1.0,
        drive_ratio,
        coupler_ratio,
        predicted_upper: upper,
        predicted_idler_occupation: if ground > 0.0 { upper / ground } else { f64::INFINITY },
        predicted_kappa: kappa_sphere_estimate(n, params.radius, params.wavelength),
        mode_resolved_kappa,
        rogue_photon_note: None,
    })
}

/// Regime report for the reduced silver scheme, with the rogue-photon note.
pub fn validate_silver(cfg: &SilverConfig, reduction: &SilverReduction, grid: &ModeGrid) -> Result<RegimeReport> {
    let mut report = validate_regime(&reduction.params, grid)?;
    report.rogue_photon_note = Some(format!(
        "non-collective |4⟩ decay photons sit about {} GHz from the pair photons and can be filtered",
        cfg.detunings[2].abs()
    ));
    Ok(report)
}
