use crate::error::{invalid, Error, Result};

/// Measurement outcomes `c_{i,t} ∈ {0, 1}` of one trajectory.
///
/// Stored time-major: row `t` holds the `L` outcomes of step `t + 1` in
/// ascending site order. Indices passed to accessors are zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    sites: usize,
    steps: usize,
    outcomes: Vec<u8>,
    seed: u64,
}

impl MeasurementRecord {
    pub fn zeros(sites: usize, steps: usize, seed: u64) -> Self {
        Self {
            sites,
            steps,
            outcomes: vec![0; sites * steps],
            seed,
        }
    }

    pub fn from_outcomes(sites: usize, steps: usize, outcomes: Vec<u8>, seed: u64) -> Result<Self> {
        if outcomes.len() != sites * steps {
            return Err(Error::DimensionMismatch {
                expected: sites * steps,
                actual: outcomes.len(),
            });
        }
        if let Some(bad) = outcomes.iter().find(|&&c| c > 1) {
            return Err(invalid("outcome", format!("{bad} is not a bit")));
        }
        Ok(Self {
            sites,
            steps,
            outcomes,
            seed,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    /// Outcome at zero-based `site` and `time`.
    #[inline]
    pub fn get(&self, site: usize, time: usize) -> u8 {
        self.outcomes[time * self.sites + site]
    }

    #[inline]
    pub fn set(&mut self, site: usize, time: usize, outcome: u8) {
        debug_assert!(outcome <= 1);
        self.outcomes[time * self.sites + site] = outcome;
    }

    pub fn row(&self, time: usize) -> &[u8] {
        &self.outcomes[time * self.sites..(time + 1) * self.sites]
    }

    pub fn row_mut(&mut self, time: usize) -> &mut [u8] {
        &mut self.outcomes[time * self.sites..(time + 1) * self.sites]
    }

    /// Total number of outcome-1 events `K(c)`.
    pub fn activity(&self) -> usize {
        self.outcomes.iter().map(|&c| c as usize).sum()
    }

    /// Whether every 1 in `self` is also a 1 in `other`.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.sites == other.sites
            && self.steps == other.steps
            && self
                .outcomes
                .iter()
                .zip(&other.outcomes)
                .all(|(&a, &b)| a <= b)
    }
}

/// Total activity `K(c) = Σ_{i,t} c_{i,t}` of a record.
pub fn activity(record: &MeasurementRecord) -> usize {
    record.activity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn activity_counts_ones() {
        let r = MeasurementRecord::from_outcomes(2, 2, vec![1, 0, 1, 1], 0).unwrap();
        assert_eq!(activity(&r), 3);
        assert_eq!(r.get(1, 1), 1);
        assert_eq!(r.get(1, 0), 0);
        assert_eq!(r.row(1), &[1, 1]);
        assert_eq!(activity(&MeasurementRecord::zeros(3, 4, 0)), 0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(MeasurementRecord::from_outcomes(2, 2, vec![0; 3], 0).is_err());
        assert!(MeasurementRecord::from_outcomes(1, 1, vec![2], 0).is_err());
    }

    proptest! {
        #[test]
        fn activity_is_monotone(
            bits in proptest::collection::vec(0u8..2, 12),
            extra in proptest::collection::vec(0u8..2, 12),
        ) {
            let lower = MeasurementRecord::from_outcomes(3, 4, bits.clone(), 0).unwrap();
            let upper_bits: Vec<u8> = bits.iter().zip(&extra).map(|(a, b)| a | b).collect();
            let upper = MeasurementRecord::from_outcomes(3, 4, upper_bits, 0).unwrap();
            prop_assert!(lower.dominated_by(&upper));
            prop_assert!(activity(&lower) <= activity(&upper));
        }
    }
}
