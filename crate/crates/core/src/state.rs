use num_complex::Complex64;

use crate::basis::site_mask;
use crate::error::{invalid, Error, Result};
use crate::params::DenseLimits;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pure state of `L` qubits, amplitudes indexed by basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    sites: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The basis state `|m⟩`.
    pub fn basis(sites: usize, index: usize) -> Result<Self> {
        DenseLimits::current().check_statevector(sites)?;
        if index >= 1 << sites {
            return Err(Error::IndexOutOfRange { index, sites });
        }
        let mut amps = vec![ZERO; 1 << sites];
        amps[index] = ONE;
        Ok(Self { sites, amps })
    }

    pub fn all_down(sites: usize) -> Result<Self> {
        Self::basis(sites, 0)
    }

    pub fn from_amplitudes(sites: usize, amps: Vec<Complex64>) -> Result<Self> {
        DenseLimits::current().check_statevector(sites)?;
        if amps.len() != 1 << sites {
            return Err(Error::DimensionMismatch {
                expected: 1 << sites,
                actual: amps.len(),
            });
        }
        Ok(Self { sites, amps })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(invalid("state", "cannot normalize a zero or non-finite vector"));
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// `⟨n_site⟩` for a 1-based site.
    pub fn occupation(&self, site: usize) -> f64 {
        let mask = site_mask(site);
        self.amps
            .iter()
            .enumerate()
            .filter(|(m, _)| m & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn occupations(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sites];
        for (m, a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut bits = m;
            while bits != 0 {
                out[bits.trailing_zeros() as usize] += w;
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_pure(self)
    }
}

/// Mixed state of `L` qubits stored as a dense row-major `2^L × 2^L` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    sites: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(sites: usize) -> Result<Self> {
        DenseLimits::current().check_density(sites)?;
        let dim = 1 << sites;
        Ok(Self {
            sites,
            entries: vec![ZERO; dim * dim],
        })
    }

    pub fn maximally_mixed(sites: usize) -> Result<Self> {
        let weight = 1.0 / (1u64 << sites) as f64;
        Self::diagonal(sites, &vec![weight; 1 << sites])
    }

    /// Diagonal state from a probability vector over basis states.
    pub fn diagonal(sites: usize, probabilities: &[f64]) -> Result<Self> {
        let mut rho = Self::zeros(sites)?;
        if probabilities.len() != rho.dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                actual: probabilities.len(),
            });
        }
        let dim = rho.dim();
        for (m, &p) in probabilities.iter().enumerate() {
            rho.entries[m * dim + m] = Complex64::new(p, 0.0);
        }
        Ok(rho)
    }

    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let mut rho = Self::zeros(state.sites)?;
        let dim = rho.dim();
        for (m, a) in state.amps.iter().enumerate() {
            for (n, b) in state.amps.iter().enumerate() {
                rho.entries[m * dim + n] = a * b.conj();
            }
        }
        Ok(rho)
    }

    pub fn from_entries(sites: usize, entries: Vec<Complex64>) -> Result<Self> {
        DenseLimits::current().check_density(sites)?;
        let expected = 1usize << (2 * sites);
        if entries.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: entries.len(),
            });
        }
        Ok(Self { sites, entries })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.entries[m * self.dim() + n]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, value: Complex64) {
        let dim = self.dim();
        self.entries[m * dim + n] = value;
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|m| self.entries[m * dim + m]).sum()
    }

    pub fn diagonal_probabilities(&self) -> Vec<f64> {
        let dim = self.dim();
        (0..dim).map(|m| self.entries[m * dim + m].re).collect()
    }

    pub fn scale(&mut self, factor: f64) {
        self.entries.iter_mut().for_each(|z| *z *= factor);
    }

    /// `⟨n_site⟩ = Tr(n_site ρ) / Tr ρ`.
    pub fn occupation(&self, site: usize) -> f64 {
        let mask = site_mask(site);
        let dim = self.dim();
        let up: f64 = (0..dim)
            .filter(|m| m & mask != 0)
            .map(|m| self.entries[m * dim + m].re)
            .sum();
        up / self.trace().re
    }

    /// Largest `|ρ_mn - conj(ρ_nm)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for m in 0..dim {
            for n in m..dim {
                worst = worst.max((self.get(m, n) - self.get(n, m).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.dim();
        let mat = nalgebra::DMatrix::from_fn(dim, dim, |m, n| {
            (self.get(m, n) + self.get(n, m).conj()) * 0.5
        });
        mat.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest entrywise difference to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// The stationary state `1 / 2^L` of the unmonitored and monitored dynamics.
pub fn maximally_mixed_state(sites: usize) -> Result<DensityMatrix> {
    DensityMatrix::maximally_mixed(sites)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_mixed_is_normalized() {
        let rho = maximally_mixed_state(3).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        assert_eq!(rho.get(2, 2).re, 0.125);
        assert_eq!(rho.get(1, 2), ZERO);
        assert!((rho.occupation(2) - 0.5).abs() < 1e-15);
        assert!((rho.min_eigenvalue() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn dense_limit_is_enforced() {
        let limits = DenseLimits::current();
        assert!(matches!(
            DensityMatrix::zeros(limits.density + 1),
            Err(Error::DenseLimit { .. })
        ));
        assert!(matches!(
            StateVector::all_down(limits.statevector + 1),
            Err(Error::DenseLimit { .. })
        ));
    }

    #[test]
    fn occupations_match_per_site() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::from_amplitudes(
            2,
            vec![Complex64::new(h, 0.0), ZERO, ZERO, Complex64::new(0.0, h)],
        )
        .unwrap();
        let occ = psi.occupations();
        assert!((occ[0] - 0.5).abs() < 1e-15);
        assert!((psi.occupation(2) - 0.5).abs() < 1e-15);
        let rho = psi.to_density().unwrap();
        assert!(rho.hermiticity_error() < 1e-15);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
    }
}
