use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Environment variable overriding the largest state-vector size (qubits).
/// A state vector takes `16 · 2^L` bytes.
pub const STATEVECTOR_LIMIT_VAR: &str = "FLOQUET_EAST_MAX_STATEVECTOR_QUBITS";

/// Environment variable overriding the largest density-matrix size (qubits).
/// A complex density matrix takes `16 · 4^L` bytes; the real-frame evolution
/// used for partition functions needs two to three `8 · 4^L` byte buffers.
pub const DENSITY_LIMIT_VAR: &str = "FLOQUET_EAST_MAX_DENSITY_QUBITS";

/// Parameters shared by every simulation of the monitored circuit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Number of qubits `L`.
    #[serde(rename = "L")]
    pub sites: usize,
    /// Number of timesteps `T`.
    #[serde(rename = "T")]
    pub steps: usize,
    /// East-gate rotation angle `ω` in radians.
    pub omega: f64,
    /// Measurement strength `γ ∈ [0, π/2]` in radians.
    pub gamma: f64,
}

impl CircuitParams {
    pub fn new(sites: usize, steps: usize, omega: f64, gamma: f64) -> Result<Self> {
        let params = Self {
            sites,
            steps,
            omega,
            gamma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(invalid("L", "must be at least 1"));
        }
        if self.steps == 0 {
            return Err(invalid("T", "must be at least 1"));
        }
        if !self.omega.is_finite() {
            return Err(invalid("omega", "must be finite"));
        }
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&self.gamma) {
            return Err(invalid("gamma", format!("{} not in [0, π/2]", self.gamma)));
        }
        Ok(())
    }

    pub fn with_steps(self, steps: usize) -> Self {
        Self { steps, ..self }
    }

    pub fn with_sites(self, sites: usize) -> Self {
        Self { sites, ..self }
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    /// Projective measurements: the dynamics is the classical Floquet-East chain.
    pub fn is_classical(&self) -> bool {
        (self.gamma - FRAC_PI_2).abs() < 1e-12
    }

    /// Classical flip probability `p = sin²ω` of a facilitated site.
    pub fn flip_probability(&self) -> f64 {
        self.omega.sin().powi(2)
    }

    /// Stationary single-site probability of outcome 1, `sin²γ / 2`.
    pub fn stationary_activity(&self) -> f64 {
        self.gamma.sin().powi(2) / 2.0
    }
}

/// Upper bounds on dense object sizes, in qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseLimits {
    pub statevector: usize,
    pub density: usize,
}

impl Default for DenseLimits {
    fn default() -> Self {
        Self {
            statevector: 12,
            density: 10,
        }
    }
}

impl DenseLimits {
    /// Defaults overridden by [`STATEVECTOR_LIMIT_VAR`] and [`DENSITY_LIMIT_VAR`].
    pub fn from_env() -> Self {
        let mut limits = Self::default();
        let read = |var: &str| std::env::var(var).ok().and_then(|v| v.trim().parse().ok());
        if let Some(n) = read(STATEVECTOR_LIMIT_VAR) {
            limits.statevector = n;
        }
        if let Some(n) = read(DENSITY_LIMIT_VAR) {
            limits.density = n;
        }
        limits
    }

    /// Process-wide limits, read from the environment once.
    pub fn current() -> Self {
        static LIMITS: OnceLock<DenseLimits> = OnceLock::new();
        *LIMITS.get_or_init(Self::from_env)
    }

    pub fn check_statevector(&self, sites: usize) -> Result<()> {
        if sites > self.statevector {
            return Err(Error::DenseLimit {
                what: "state vector",
                sites,
                limit: self.statevector,
            });
        }
        Ok(())
    }

    pub fn check_density(&self, sites: usize) -> Result<()> {
        if sites > self.density {
            return Err(Error::DenseLimit {
                what: "density matrix",
                sites,
                limit: self.density,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(CircuitParams::new(0, 4, 0.1, 0.3).is_err());
        assert!(CircuitParams::new(4, 0, 0.1, 0.3).is_err());
        assert!(CircuitParams::new(4, 4, 0.1, 1.7).is_err());
        assert!(CircuitParams::new(4, 4, 0.1, -0.1).is_err());
        assert!(CircuitParams::new(4, 4, f64::NAN, 0.3).is_err());
        assert!(CircuitParams::new(4, 4, 0.1, FRAC_PI_2).unwrap().is_classical());
        assert!(!CircuitParams::new(4, 4, 0.1, 0.0).unwrap().is_classical());
    }

    #[test]
    fn dense_limits_guard() {
        let limits = DenseLimits::default();
        assert!(limits.check_statevector(12).is_ok());
        assert!(matches!(
            limits.check_statevector(13),
            Err(Error::DenseLimit { limit: 12, .. })
        ));
        assert!(limits.check_density(10).is_ok());
        assert!(limits.check_density(11).is_err());
    }

    #[test]
    fn metadata_uses_short_names() {
        let p = CircuitParams::new(3, 5, 0.1, 0.3).unwrap();
        let json = serde_json::to_value(p).unwrap();
        assert_eq!(json["L"], 3);
        assert_eq!(json["T"], 5);
        let back: CircuitParams = serde_json::from_value(json).unwrap();
        assert_eq!(back, p);
    }
}
