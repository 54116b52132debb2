//! Computational-basis index arithmetic.
//!
//! Site `i ∈ {1..L}` is stored in bit `i - 1` of a basis index, so site 1 (the
//! driven boundary site) is the least significant bit.

use crate::error::{Error, Result};

#[inline]
pub fn site_mask(site: usize) -> usize {
    debug_assert!(site >= 1);
    1 << (site - 1)
}

/// Occupation of `site` (1-based) in basis state `index`.
#[inline]
pub fn occupation(index: usize, site: usize) -> u8 {
    ((index >> (site - 1)) & 1) as u8
}

/// Number of up spins `f(m)` in basis state `m` of an `L`-site chain.
pub fn occupation_count(m: usize, sites: usize) -> Result<usize> {
    if sites < usize::BITS as usize && m >> sites != 0 {
        return Err(Error::IndexOutOfRange { index: m, sites });
    }
    Ok(m.count_ones() as usize)
}

/// A basis state `|m⟩` of an `L`-site chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisConfiguration {
    index: usize,
    sites: usize,
}

impl BasisConfiguration {
    pub fn new(index: usize, sites: usize) -> Result<Self> {
        occupation_count(index, sites)?;
        Ok(Self { index, sites })
    }

    /// Builds the configuration from site occupations listed from site 1 upwards.
    pub fn from_occupations(occupations: &[u8]) -> Self {
        let index = occupations
            .iter()
            .enumerate()
            .filter(|(_, &n)| n != 0)
            .fold(0, |acc, (i, _)| acc | (1 << i));
        Self {
            index,
            sites: occupations.len(),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn occupation(&self, site: usize) -> u8 {
        occupation(self.index, site)
    }

    pub fn occupations(&self) -> Vec<u8> {
        (1..=self.sites).map(|i| self.occupation(i)).collect()
    }

    pub fn occupation_count(&self) -> usize {
        self.index.count_ones() as usize
    }

    pub fn complement(&self) -> Self {
        let full = if self.sites >= usize::BITS as usize {
            usize::MAX
        } else {
            (1 << self.sites) - 1
        };
        Self {
            index: !self.index & full,
            sites: self.sites,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_up_spins() {
        assert_eq!(occupation_count(0, 4).unwrap(), 0);
        assert_eq!(occupation_count((1 << 5) - 1, 5).unwrap(), 5);
        assert_eq!(occupation_count(0b110, 3).unwrap(), 2);
        assert!(matches!(
            occupation_count(8, 3),
            Err(Error::IndexOutOfRange { index: 8, sites: 3 })
        ));
    }

    #[test]
    fn site_one_is_least_significant() {
        let m = BasisConfiguration::from_occupations(&[1, 0, 1]);
        assert_eq!(m.index(), 0b101);
        assert_eq!(m.occupation(1), 1);
        assert_eq!(m.occupation(2), 0);
        assert_eq!(m.occupations(), vec![1, 0, 1]);
    }

    proptest! {
        #[test]
        fn complement_counts_sum_to_l(sites in 1usize..20, raw in any::<usize>()) {
            let m = BasisConfiguration::new(raw & ((1 << sites) - 1), sites).unwrap();
            prop_assert_eq!(m.occupation_count() + m.complement().occupation_count(), sites);
        }
    }
}
