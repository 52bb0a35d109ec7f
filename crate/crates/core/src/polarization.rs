//! Circular-polarization content of pairs emitted at polar angle `θ` from
//! the pump axis.
//!
//! A signal photon along `k̂` is left circular with probability
//! `β_S^L = 1/(1 + cot⁴(θ/2))`; the idler along `−k̂` carries the opposite
//! assignment. Probabilities are quoted along `k̂` for both photons, so
//! "opposite along `k̂`" means "same helicity along each photon's own
//! propagation direction". Assuming perfect temporal overlap, the fidelity
//! to `|Ψ⁺⟩` equals the opposite-polarization probability
//! `P = (β_S^L)² + (β_S^R)²`.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::DipoleOrientation;
use crate::report::fmt17;

/// Absolute tolerance of the cone quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationPoint {
    pub theta: f64,
    pub signal_left: f64,
    pub signal_right: f64,
    pub idler_left: f64,
    pub idler_right: f64,
    /// Probability of opposite circular polarizations along `k̂`.
    pub opposite: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::invalid(format!("polar angle {theta} outside [0, π]")));
    }
    Ok(())
}

/// All four circular probabilities at `theta`; the poles are the limits.
pub fn circular_probabilities(theta: f64) -> Result<PolarizationPoint> {
    check_theta(theta)?;
    // cot⁴(θ/2) = c⁴/s⁴ written without the division so the poles stay finite
    let (s, c) = (0.5 * theta).sin_cos();
    let (s4, c4) = (s.powi(4), c.powi(4));
    let left = s4 / (s4 + c4);
    let right = c4 / (s4 + c4);
    Ok(PolarizationPoint {
        theta,
        signal_left: left,
        signal_right: right,
        idler_left: right,
        idler_right: left,
        opposite: (s4 * s4 + c4 * c4) / ((s4 + c4) * (s4 + c4)),
    })
}

/// `P(θ) = (1 + cot⁸(θ/2)) / (1 + cot⁴(θ/2))²`.
pub fn opposite_polarization_probability(theta: f64) -> Result<f64> {
    circular_probabilities(theta).map(|p| p.opposite)
}

/// Fidelity of the pair state with `|Ψ⁺⟩`, equal to `P(θ)`.
pub fn bell_fidelity(theta: f64) -> Result<f64> {
    opposite_polarization_probability(theta)
}

/// Fraction of pairs whose signal photon leaves inside either polar cone of
/// half-angle `theta_max`, weighted by the emission pattern of `dipole`.
pub fn entangled_fraction(theta_max: f64, dipole: &DipoleOrientation) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta_max) {
        return Err(Error::invalid(format!("cone half-angle {theta_max} outside [0, π/2]")));
    }
    // dΩ = dφ d(cos θ); the azimuthal average absorbs φ
    let pattern = |x: f64| 1.0 - dipole.azimuthal_projection_sq(x);
    let edge = theta_max.cos();
    let total = adaptive_simpson(&pattern, -1.0, 1.0, QUADRATURE_TOLERANCE);
    let cones = adaptive_simpson(&pattern, edge, 1.0, 0.5 * QUADRATURE_TOLERANCE)
        + adaptive_simpson(&pattern, -1.0, -edge, 0.5 * QUADRATURE_TOLERANCE);
    Ok((cones / total).clamp(0.0, 1.0))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Evaluates `samples` evenly spaced angles on `[0, π]`.
pub fn scan(samples: usize) -> Result<Vec<PolarizationPoint>> {
    if samples < 2 {
        return Err(Error::invalid("an angular scan needs at least two samples"));
    }
    (0..samples)
        .map(|i| circular_probabilities(std::f64::consts::PI * i as f64 / (samples - 1) as f64))
        .collect()
}

/// Writes `theta,betaL,betaR,P,fidelity` with signal-photon probabilities.
pub fn write_scan_csv<W: Write>(points: &[PolarizationPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta,betaL,betaR,P,fidelity")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(p.theta),
            fmt17(p.signal_left),
            fmt17(p.signal_right),
            fmt17(p.opposite),
            fmt17(p.opposite)
        )?;
    }
    Ok(())
}
