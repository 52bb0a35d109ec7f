use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalars stored ahead of the per-ring blocks in the flat layout.
pub(crate) const HEADER: usize = 7;
/// Reals per ring: `N_k3`, `N_k4`, `Re ρ_k43`, `Im ρ_k43`.
pub(crate) const RING: usize = 4;

pub(crate) mod slot {
    pub const GROUND: usize = 0;
    pub const UPPER: usize = 1;
    pub const DRIVE_RE: usize = 2;
    pub const DRIVE_IM: usize = 3;
    pub const PAIRS: usize = 4;
    pub const LOST: usize = 5;
    pub const BALANCE: usize = 6;
}

/// Dynamical variables of the rate equations.
///
/// Per-ring entries refer to one representative collective mode of the ring.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    /// `N₁`, atoms in `|1⟩`.
    pub ground: f64,
    /// `N₂`, atoms in `|2⟩`.
    pub upper: f64,
    /// `ρ₂₁`, drive coherence on the atom-number scale.
    pub drive_coherence: Complex64,
    /// `N_k3`: atoms in `|3⟩` whose recoil matches a signal photon in mode k.
    pub signal_mode: Vec<f64>,
    /// `N_k4`: the same atoms after transfer to `|4⟩`.
    pub idler_mode: Vec<f64>,
    /// `ρ_k43`.
    pub couple_coherence: Vec<Complex64>,
    /// Cumulative photon pairs.
    pub pairs: f64,
    /// Cumulative lost atoms.
    pub lost: f64,
    /// Integral of the net atom-number rate, `∫ Γ₄ Σ_k N_k4 (μ_k4 − b) dt`.
    pub balance: f64,
}

impl SystemState {
    /// All `atom_number` atoms in `|1⟩`, nothing else populated.
    pub fn ground_state(atom_number: f64, rings: usize) -> Self {
        Self {
            ground: atom_number,
            ..Self::zeros(rings)
        }
    }

    pub fn zeros(rings: usize) -> Self {
        Self {
            t: 0.0,
            ground: 0.0,
            upper: 0.0,
            drive_coherence: Complex64::new(0.0, 0.0),
            signal_mode: vec![0.0; rings],
            idler_mode: vec![0.0; rings],
            couple_coherence: vec![Complex64::new(0.0, 0.0); rings],
            pairs: 0.0,
            lost: 0.0,
            balance: 0.0,
        }
    }

    pub fn ring_count(&self) -> usize {
        self.signal_mode.len()
    }

    pub(crate) fn check_rings(&self, expected: usize) -> Result<()> {
        let n = self.ring_count();
        if n != expected || self.idler_mode.len() != n || self.couple_coherence.len() != n {
            return Err(Error::DimensionMismatch { expected, found: n });
        }
        Ok(())
    }

    /// Atoms still in the cycle, `N₁ + N₂ + Σ_k (N_k3 + N_k4)`.
    pub fn atoms(&self, weights: &[f64]) -> f64 {
        let terms: Vec<f64> = weights
            .iter()
            .zip(self.signal_mode.iter().zip(&self.idler_mode))
            .map(|(w, (n3, n4))| w * (n3 + n4))
            .collect();
        self.ground + self.upper + crate::reduce::pairwise_sum(&terms)
    }

    /// Euclidean norm over the dynamical variables (counters excluded).
    pub fn norm(&self) -> f64 {
        let mut s = self.ground.powi(2) + self.upper.powi(2) + self.drive_coherence.norm_sqr();
        for j in 0..self.ring_count() {
            s += self.signal_mode[j].powi(2) + self.idler_mode[j].powi(2) + self.couple_coherence[j].norm_sqr();
        }
        s.sqrt()
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut y = vec![0.0; HEADER + RING * self.ring_count()];
        y[slot::GROUND] = self.ground;
        y[slot::UPPER] = self.upper;
        y[slot::DRIVE_RE] = self.drive_coherence.re;
        y[slot::DRIVE_IM] = self.drive_coherence.im;
        y[slot::PAIRS] = self.pairs;
        y[slot::LOST] = self.lost;
        y[slot::BALANCE] = self.balance;
        for (j, block) in y[HEADER..].chunks_exact_mut(RING).enumerate() {
            block[0] = self.signal_mode[j];
            block[1] = self.idler_mode[j];
            block[2] = self.couple_coherence[j].re;
            block[3] = self.couple_coherence[j].im;
        }
        y
    }

    pub(crate) fn from_flat(t: f64, y: &[f64]) -> Self {
        let rings = (y.len() - HEADER) / RING;
        let mut s = Self::zeros(rings);
        s.t = t;
        s.ground = y[slot::GROUND];
        s.upper = y[slot::UPPER];
        s.drive_coherence = Complex64::new(y[slot::DRIVE_RE], y[slot::DRIVE_IM]);
        s.pairs = y[slot::PAIRS];
        s.lost = y[slot::LOST];
        s.balance = y[slot::BALANCE];
        for (j, block) in y[HEADER..].chunks_exact(RING).enumerate() {
            s.signal_mode[j] = block[0];
            s.idler_mode[j] = block[1];
            s.couple_coherence[j] = Complex64::new(block[2], block[3]);
        }
        s
    }
}
