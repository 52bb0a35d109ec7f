//! Signal–idler cross-correlation `g²(k, −k, τ)` in the strong-coupling limit.
//!
//! With the coupler much faster than collective idler emission,
//!
//! ```text
//! g²(τ) ≈ 1 + χ(τ)/N_k4,   χ(τ) = sin²(Ω_c τ/2) · exp(−Γ₄ μ_k4 N₁ τ/2)
//! ```
//!
//! The formula is evaluated outside that regime too, but results carry a
//! `strong_coupling = false` flag. Auto-correlations at zero delay are taken
//! as thermal (`g²_ss(0) = g²_ii(0) = 2`) for the Cauchy–Schwarz factor.

use std::f64::consts::PI;
use std::io::Write;

use serde_json::Value;

use crate::dynamics::{ButterflyParams, SystemState};
use crate::error::{Error, Result};
use crate::geometry::ModeGrid;
use crate::report::{fmt17, Object};

/// Zero-delay auto-correlation assumed for both arms.
pub const THERMAL_AUTO_CORRELATION: f64 = 2.0;

const BISECTIONS: usize = 200;

/// `χ(τ) = sin²(Ω_c τ/2)·exp(−Γ₄μN₁τ/2)`, always in `[0, 1]`.
pub fn chi(tau: f64, omega_couple: f64, gamma_idler: f64, mu: f64, ground: f64) -> Result<f64> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!(
            "delay must be finite and non-negative (τ = {tau})"
        )));
    }
    if [omega_couple, gamma_idler, mu, ground]
        .iter()
        .any(|x| !(x.is_finite() && *x >= 0.0))
    {
        return Err(Error::invalid("χ parameters must be finite and non-negative"));
    }
    Ok(chi_unchecked(tau, omega_couple, 0.5 * gamma_idler * mu * ground))
}

fn chi_unchecked(tau: f64, omega_couple: f64, damping: f64) -> f64 {
    let s = (0.5 * omega_couple * tau).sin();
    s * s * (-damping * tau).exp()
}

/// `Ω_c ≥ Γ₄μN₁`: the regime in which the closed form holds.
pub fn is_strong_coupling(omega_couple: f64, gamma_idler: f64, mu: f64, ground: f64) -> bool {
    omega_couple >= gamma_idler * mu * ground
}

/// Correlation inputs for one ring of a steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingCorrelation {
    pub ring: usize,
    pub theta: f64,
    /// Idler enhancement factor `μ_k4` of the ring.
    pub mu: f64,
    pub ground: f64,
    /// `N_k4`.
    pub idler_occupation: f64,
    pub omega_couple: f64,
    pub gamma_idler: f64,
}

impl RingCorrelation {
    pub fn new(grid: &ModeGrid, ring: usize, steady: &SystemState, params: &ButterflyParams) -> Result<Self> {
        steady.check_rings(grid.ring_count())?;
        if ring >= grid.ring_count() {
            return Err(Error::invalid(format!(
                "ring {ring} out of range ({} rings)",
                grid.ring_count()
            )));
        }
        Ok(Self {
            ring,
            theta: grid.theta(ring),
            mu: grid.ring_enhancement(ring, &params.idler_dipole),
            ground: steady.ground.max(0.0),
            idler_occupation: steady.idler_mode[ring].max(0.0),
            omega_couple: params.omega_couple,
            gamma_idler: params.gamma_idler,
        })
    }

    /// Collective idler rate `Γ₄μN₁`.
    pub fn collective_rate(&self) -> f64 {
        self.gamma_idler * self.mu * self.ground
    }

    pub fn strong_coupling(&self) -> bool {
        is_strong_coupling(self.omega_couple, self.gamma_idler, self.mu, self.ground)
    }

    pub fn chi(&self, tau: f64) -> Result<f64> {
        chi(tau, self.omega_couple, self.gamma_idler, self.mu, self.ground)
    }

    pub fn g2(&self, tau: f64) -> Result<f64> {
        let c = self.chi(tau)?;
        if self.idler_occupation <= 0.0 {
            return Err(Error::undefined("g²", "no idler population in this mode"));
        }
        Ok(1.0 + c / self.idler_occupation)
    }

    /// Position and height `(τ*, χ(τ*))` of the first maximum of `χ`.
    ///
    /// `dχ/dτ = 0` gives `tan(Ω_cτ/2) = Ω_c/κ` with `κ = Γ₄μN₁/2`.
    pub fn first_peak(&self) -> Result<(f64, f64)> {
        if self.omega_couple <= 0.0 {
            return Err(Error::undefined("correlation peak", "coupler is off"));
        }
        let damping = 0.5 * self.collective_rate();
        let tau = 2.0 * self.omega_couple.atan2(damping) / self.omega_couple;
        Ok((tau, chi_unchecked(tau, self.omega_couple, damping)))
    }

    pub fn peak_g2(&self) -> Result<f64> {
        let (tau, _) = self.first_peak()?;
        self.g2(tau)
    }

    /// Full width at half maximum of the first peak of `g² − 1`.
    pub fn fwhm(&self) -> Result<f64> {
        let (t_peak, c_peak) = self.first_peak()?;
        let damping = 0.5 * self.collective_rate();
        let half = 0.5 * c_peak;
        let f = |t: f64| chi_unchecked(t, self.omega_couple, damping) - half;
        // χ rises on (0, τ*) and falls back to zero at 2π/Ω_c
        let left = bisect(&f, 0.0, t_peak);
        let right = bisect(&f, t_peak, 2.0 * PI / self.omega_couple);
        Ok(right - left)
    }

    /// `[max g²]² / (g²_ss(0) g²_ii(0))`.
    pub fn cs_factor(&self) -> Result<f64> {
        let g = self.peak_g2()?;
        Ok(g * g / (THERMAL_AUTO_CORRELATION * THERMAL_AUTO_CORRELATION))
    }

    /// `(Γ₄μN₁)⁻¹`.
    pub fn idler_delay(&self) -> Result<f64> {
        let rate = self.collective_rate();
        if rate <= 0.0 {
            return Err(Error::undefined("idler delay", "collective idler rate is zero"));
        }
        Ok(1.0 / rate)
    }

    /// Samples `g²` on `samples` evenly spaced delays in `[0, tau_max]`.
    pub fn curve(&self, tau_max: f64, samples: usize) -> Result<CorrelationCurve> {
        if !(tau_max > 0.0 && tau_max.is_finite()) || samples < 2 {
            return Err(Error::invalid("curve needs tau_max > 0 and at least two samples"));
        }
        let tau: Vec<f64> = (0..samples)
            .map(|i| tau_max * i as f64 / (samples - 1) as f64)
            .collect();
        let g2 = tau.iter().map(|&t| self.g2(t)).collect::<Result<Vec<_>>>()?;
        let (peak_tau, _) = self.first_peak()?;
        Ok(CorrelationCurve {
            tau,
            g2,
            peak: self.peak_g2()?,
            peak_tau,
            fwhm: self.fwhm()?,
            cs_factor: self.cs_factor()?,
            idler_delay: self.idler_delay().ok(),
            theta: self.theta,
            strong_coupling: self.strong_coupling(),
        })
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let rising = f(a) < f(b);
    for _ in 0..BISECTIONS {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) < 0.0) == rising {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `g²(k, −k, τ)` for ring `ring` of a steady state.
pub fn g2_cross(grid: &ModeGrid, ring: usize, tau: f64, steady: &SystemState, params: &ButterflyParams) -> Result<f64> {
    RingCorrelation::new(grid, ring, steady, params)?.g2(tau)
}

/// Cauchy–Schwarz violation factor; values above one are nonclassical.
pub fn cs_violation(grid: &ModeGrid, ring: usize, steady: &SystemState, params: &ButterflyParams) -> Result<f64> {
    RingCorrelation::new(grid, ring, steady, params)?.cs_factor()
}

/// Idler delay `(Γ₄μ_k4 N₁)⁻¹` for ring `ring`.
pub fn idler_delay(grid: &ModeGrid, ring: usize, steady: &SystemState, params: &ButterflyParams) -> Result<f64> {
    RingCorrelation::new(grid, ring, steady, params)?.idler_delay()
}

/// Sampled correlation curve with its peak summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub peak: f64,
    pub peak_tau: f64,
    pub fwhm: f64,
    pub cs_factor: f64,
    pub idler_delay: Option<f64>,
    pub theta: f64,
    pub strong_coupling: bool,
}

impl CorrelationCurve {
    /// Writes `tau,g2`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tau,g2")?;
        for (t, g) in self.tau.iter().zip(&self.g2) {
            writeln!(out, "{},{}", fmt17(*t), fmt17(*g))?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> Value {
        Object::new()
            .f("peak", self.peak)
            .f("peak_tau", self.peak_tau)
            .f("fwhm", self.fwhm)
            .f("cs_factor", self.cs_factor)
            .f("theta", self.theta)
            .set("idler_delay", crate::report::opt_num(self.idler_delay))
            .set("strong_coupling", self.strong_coupling)
            .into_value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ring(mu_n1: f64, occupation: f64) -> RingCorrelation {
        RingCorrelation {
            ring: 0,
            theta: 0.0,
            mu: mu_n1 / 1e6,
            ground: 1e6,
            idler_occupation: occupation,
            omega_couple: 100.0,
            gamma_idler: 1.0,
        }
    }

    #[test]
    fn chi_examples() {
        assert_eq!(chi(0.0, 100.0, 1.0, 1.19e-5, 1e6).unwrap(), 0.0);
        let c = chi(PI / 100.0, 100.0, 1.0, 11.94e-6, 1e6).unwrap();
        assert_relative_eq!(c, (-0.5 * 11.94 * PI / 100.0).exp(), max_relative = 1e-12);
        assert!((c - 0.829).abs() < 1e-3);
        assert_relative_eq!(chi(PI / 100.0, 100.0, 1.0, 0.0, 1e6).unwrap(), 1.0);
        assert!(chi(-1.0, 100.0, 1.0, 0.0, 1e6).is_err());
    }

    #[test]
    fn undamped_peak_and_width() {
        let r = ring(0.0, 0.01);
        let (t, c) = r.first_peak().unwrap();
        assert_relative_eq!(t, PI / 100.0, max_relative = 1e-14);
        assert_relative_eq!(c, 1.0);
        // sin² falls to one half at quarter and three-quarter period
        assert_relative_eq!(r.fwhm().unwrap(), PI / 100.0, max_relative = 1e-12);
    }

    #[test]
    fn cs_boundaries() {
        let peak = ring(11.94, 1.0).first_peak().unwrap().1;
        assert_relative_eq!(ring(11.94, peak).cs_factor().unwrap(), 1.0, max_relative = 1e-12);
        assert!(ring(11.94, 1e12).cs_factor().unwrap() < 0.25 + 1e-9);
        assert!(ring(11.94, 0.0).g2(0.1).is_err());
    }

    #[test]
    fn delay_is_inverse_collective_rate() {
        assert_relative_eq!(ring(11.94, 0.01).idler_delay().unwrap(), 1.0 / 11.94);
        assert!(ring(0.0, 0.01).idler_delay().is_err());
        assert!(ring(11.94, 0.01).strong_coupling());
        assert!(!ring(200.0, 0.01).strong_coupling());
    }

    #[test]
    fn curve_export() {
        let c = ring(11.94, 0.01).curve(0.1, 11).unwrap();
        assert_eq!(c.g2[0], 1.0);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert!(text.starts_with("tau,g2\n"));
    }
}
