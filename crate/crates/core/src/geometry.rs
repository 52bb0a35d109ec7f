//! Collective emission modes on the full sphere.
//!
//! Each collective mode subtends a solid angle `ΔΩ = (λ/2R)²`. With that
//! choice the enhancement factors of all modes sum to one for any dipole,
//! so the non-enhanced total decay rate equals the single-atom rate.
//!
//! Both pump axes lie along `ẑ` and the default dipoles are circular about
//! `ẑ`, so the dynamics depend only on the polar angle. The sphere is cut
//! into rings of equal area (uniform in `cos θ`); every ring carries one
//! representative mode plus a (fractional) degeneracy weight equal to the
//! number of modes it contains.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::reduce::pairwise_sum;

/// Which transition a dipole belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DipoleRole {
    /// `|2⟩ → |3⟩`, emits the signal photon.
    Signal,
    /// `|4⟩ → |1⟩`, emits the idler photon.
    Idler,
}

/// Unit-norm complex dipole orientation of a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleOrientation {
    vector: Vector3<Complex64>,
    pub role: DipoleRole,
}

impl DipoleOrientation {
    /// Normalizes `vector`; rejects zero or non-finite input.
    pub fn new(vector: Vector3<Complex64>, role: DipoleRole) -> Result<Self> {
        let norm = vector.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::invalid("dipole vector must be finite and nonzero"));
        }
        Ok(Self {
            vector: vector.map(|c| c / norm),
            role,
        })
    }

    /// `(x̂ + iŷ)/√2`
    pub fn sigma_plus(role: DipoleRole) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            vector: Vector3::new(Complex64::new(s, 0.0), Complex64::new(0.0, s), Complex64::new(0.0, 0.0)),
            role,
        }
    }

    /// `(x̂ − iŷ)/√2`
    pub fn sigma_minus(role: DipoleRole) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            vector: Vector3::new(
                Complex64::new(s, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, 0.0),
            ),
            role,
        }
    }

    /// Linear dipole along `axis`.
    pub fn linear(axis: Vector3<f64>, role: DipoleRole) -> Result<Self> {
        Self::new(axis.map(|x| Complex64::new(x, 0.0)), role)
    }

    pub fn vector(&self) -> &Vector3<Complex64> {
        &self.vector
    }

    /// `|k̂·d̂|²` for a real direction.
    pub fn projection_sq(&self, direction: &Vector3<f64>) -> f64 {
        let dot: Complex64 = direction.iter().zip(self.vector.iter()).map(|(&k, &d)| d * k).sum();
        dot.norm_sqr()
    }

    /// `|k̂·d̂|²` averaged over the azimuth at fixed `cos θ`.
    ///
    /// Cross terms vanish under the average, leaving
    /// `sin²θ (|d_x|² + |d_y|²)/2 + cos²θ |d_z|²`.
    pub fn azimuthal_projection_sq(&self, cos_theta: f64) -> f64 {
        let sin_sq = 1.0 - cos_theta * cos_theta;
        0.5 * sin_sq * (self.vector.x.norm_sqr() + self.vector.y.norm_sqr())
            + cos_theta * cos_theta * self.vector.z.norm_sqr()
    }

    /// True when the emission pattern is symmetric about `ẑ`.
    pub fn is_axially_symmetric(&self) -> bool {
        let (x, y, z) = (self.vector.x, self.vector.y, self.vector.z);
        // |k·d|² independent of φ ⇔ x,y components form a circular or null pair
        // and do not interfere with z.
        let xy_circular = (x.norm_sqr() - y.norm_sqr()).abs() < 1e-12 && (x * y.conj()).re.abs() < 1e-12;
        let no_cross = (x * z.conj()).norm() < 1e-12 && (y * z.conj()).norm() < 1e-12;
        xy_circular && no_cross
    }
}

/// Peak enhancement `(3/8π)(λ/2R)²`, reached perpendicular to a linear dipole.
pub fn peak_enhancement(radius: f64, wavelength: f64) -> f64 {
    let ratio = wavelength / (2.0 * radius);
    3.0 / (8.0 * PI) * ratio * ratio
}

/// Collective enhancement factor `μ = (1 − |k̂·d̂|²)(3/8π)(λ/2R)²` for one mode.
pub fn enhancement_factor(
    direction: &Vector3<f64>,
    dipole: &DipoleOrientation,
    radius: f64,
    wavelength: f64,
) -> Result<f64> {
    check_lengths(radius, wavelength)?;
    let norm = direction.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "direction must be a unit vector (|k| = {norm})"
        )));
    }
    let transverse = (1.0 - dipole.projection_sq(direction)).max(0.0);
    Ok(transverse * peak_enhancement(radius, wavelength))
}

fn check_lengths(radius: f64, wavelength: f64) -> Result<()> {
    if !(radius.is_finite() && wavelength.is_finite()) || radius <= 0.0 || wavelength <= 0.0 {
        return Err(Error::invalid("radius and wavelength must be positive"));
    }
    Ok(())
}

/// Equal-area ring discretization of the emission sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeGrid {
    radius: f64,
    wavelength: f64,
    mode_solid_angle: f64,
    /// `θ` ring edges, `rings + 1` values from 0 to π.
    boundaries: Vec<f64>,
    /// `cos θ` of each ring's representative direction (midpoint in `cos θ`).
    cos_centers: Vec<f64>,
    weights: Vec<f64>,
}

impl ModeGrid {
    /// Builds `ring_count` equal-area rings for a sample of `radius` at `wavelength`.
    ///
    /// Samples with `R < λ/2` are rejected: the mode solid angle would exceed
    /// one steradian and the collective-mode picture no longer applies.
    pub fn build(radius: f64, wavelength: f64, ring_count: usize) -> Result<Self> {
        check_lengths(radius, wavelength)?;
        if ring_count < 2 {
            return Err(Error::invalid("ring_count must be at least 2"));
        }
        if radius < 0.5 * wavelength {
            return Err(Error::invalid(format!(
                "sample radius {radius} is below λ/2 = {}; collective modes are undefined",
                0.5 * wavelength
            )));
        }
        let mode_solid_angle = (wavelength / (2.0 * radius)).powi(2);
        let n = ring_count as f64;
        let boundaries = (0..=ring_count)
            .map(|j| (1.0 - 2.0 * j as f64 / n).clamp(-1.0, 1.0).acos())
            .collect();
        let cos_centers = (0..ring_count).map(|j| 1.0 - (2.0 * j as f64 + 1.0) / n).collect();
        let weight = 4.0 * PI / n / mode_solid_angle;
        Ok(Self {
            radius,
            wavelength,
            mode_solid_angle,
            boundaries,
            cos_centers,
            weights: vec![weight; ring_count],
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Per-mode solid angle `(λ/2R)²` in steradian.
    pub fn mode_solid_angle(&self) -> f64 {
        self.mode_solid_angle
    }

    pub fn ring_count(&self) -> usize {
        self.weights.len()
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Representative polar angle of ring `j`.
    pub fn theta(&self, j: usize) -> f64 {
        self.cos_centers[j].acos()
    }

    pub fn cos_theta(&self, j: usize) -> f64 {
        self.cos_centers[j]
    }

    /// Unit vector of ring `j`'s representative mode (in the `xz` plane).
    pub fn direction(&self, j: usize) -> Vector3<f64> {
        let c = self.cos_centers[j];
        Vector3::new((1.0 - c * c).max(0.0).sqrt(), 0.0, c)
    }

    /// Total number of collective modes, `Σ_j w_j = 4π/ΔΩ`.
    pub fn total_modes(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Ring whose representative direction is closest to polar angle `theta`.
    pub fn nearest_ring(&self, theta: f64) -> usize {
        let c = theta.cos();
        let n = self.ring_count() as f64;
        let j = ((1.0 - c) * n / 2.0).floor();
        (j.max(0.0) as usize).min(self.ring_count() - 1)
    }

    /// Azimuth-averaged enhancement factor of ring `j`.
    ///
    /// Equal to the pointwise factor of the representative mode whenever the
    /// dipole is symmetric about `ẑ`.
    pub fn ring_enhancement(&self, j: usize, dipole: &DipoleOrientation) -> f64 {
        let transverse = (1.0 - dipole.azimuthal_projection_sq(self.cos_centers[j])).max(0.0);
        transverse * peak_enhancement(self.radius, self.wavelength)
    }

    pub fn enhancement_profile(&self, dipole: &DipoleOrientation) -> Vec<f64> {
        (0..self.ring_count())
            .map(|j| self.ring_enhancement(j, dipole))
            .collect()
    }

    /// Writes `theta_center,weight,mu_signal,mu_idler`, one row per ring.
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        signal: &DipoleOrientation,
        idler: &DipoleOrientation,
    ) -> std::io::Result<()> {
        writeln!(out, "theta_center,weight,mu_signal,mu_idler")?;
        for j in 0..self.ring_count() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.theta(j),
                self.weights[j],
                self.ring_enhancement(j, signal),
                self.ring_enhancement(j, idler)
            )?;
        }
        Ok(())
    }
}

/// `Σ_k μ_k = Σ_j w_j μ_j`; tends to one as the grid is refined.
pub fn enhancement_sum(grid: &ModeGrid, dipole: &DipoleOrientation) -> f64 {
    let terms: Vec<f64> = (0..grid.ring_count())
        .map(|j| grid.weights[j] * grid.ring_enhancement(j, dipole))
        .collect();
    pairwise_sum(&terms)
}
