use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::basis::site_mask;
use crate::circuit::brickwork::apply_brickwork;
use crate::error::{invalid, Result};
use crate::params::{CircuitParams, DenseLimits};
use crate::record::MeasurementRecord;
use crate::rng::{trajectory_rng, TrajectoryRng};
use crate::state::StateVector;

/// Weakly measures a 1-based `site`, collapsing `state` in place.
///
/// Outcome 1 occurs with probability `π_1 = sin²γ ⟨n_site⟩`. The post-measurement
/// state is `K_k |ψ⟩ / √π_k`, including the `-i` phase of `K_1`.
pub fn measure_site<R: Rng + ?Sized>(
    state: &mut StateVector,
    site: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<u8> {
    if site == 0 || site > state.sites() {
        return Err(invalid("site", format!("{site} not in 1..={}", state.sites())));
    }
    let (s, c) = gamma.sin_cos();
    let mask = site_mask(site);
    let pi1 = s * s * state.occupation(site);
    let u: f64 = rng.random();
    let amps = state.amplitudes_mut();
    if u < pi1 {
        // u ∈ [0, 1) so this branch is unreachable when π_1 = 0.
        let f = Complex64::new(0.0, -s / pi1.sqrt());
        for (m, a) in amps.iter_mut().enumerate() {
            *a = if m & mask != 0 { *a * f } else { Complex64::new(0.0, 0.0) };
        }
        Ok(1)
    } else {
        let inv = 1.0 / (1.0 - pi1).sqrt();
        for (m, a) in amps.iter_mut().enumerate() {
            *a *= if m & mask != 0 { c * inv } else { inv };
        }
        Ok(0)
    }
}

/// One sampled trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub record: MeasurementRecord,
    pub final_state: StateVector,
    /// `occupations[t][i]` is `⟨n_{i+1}⟩` right after the measurements of step `t + 1`.
    pub occupations: Vec<Vec<f64>>,
}

/// Samples `T` steps of unitary layer followed by ascending-site measurements.
pub fn sample_trajectory_with<R: Rng + ?Sized>(
    params: &CircuitParams,
    initial: StateVector,
    rng: &mut R,
    seed: u64,
) -> Result<Trajectory> {
    params.validate()?;
    DenseLimits::current().check_statevector(params.sites)?;
    let mut state = initial;
    let mut record = MeasurementRecord::zeros(params.sites, params.steps, seed);
    let mut occupations = Vec::with_capacity(params.steps);
    for t in 0..params.steps {
        apply_brickwork(&mut state, params)?;
        for i in 1..=params.sites {
            let k = measure_site(&mut state, i, params.gamma, rng)?;
            record.set(i - 1, t, k);
        }
        occupations.push(state.occupations());
    }
    Ok(Trajectory {
        record,
        final_state: state,
        occupations,
    })
}

/// Samples one trajectory on stream 0 of `seed`.
pub fn sample_trajectory(params: &CircuitParams, initial: StateVector, seed: u64) -> Result<Trajectory> {
    let mut rng = trajectory_rng(seed, 0);
    sample_trajectory_with(params, initial, &mut rng, seed)
}

/// Initial condition of a trajectory batch.
#[derive(Debug, Clone)]
pub enum InitialState {
    /// Every trajectory starts from the given pure state.
    Pure(StateVector),
    /// A uniformly random basis state per trajectory: an unravelling of the
    /// maximally mixed state.
    RandomBasis,
}

impl InitialState {
    fn draw(&self, sites: usize, rng: &mut TrajectoryRng) -> Result<StateVector> {
        match self {
            Self::Pure(psi) => Ok(psi.clone()),
            Self::RandomBasis => StateVector::basis(sites, rng.random_range(0..1usize << sites)),
        }
    }
}

/// Samples `count` trajectories in parallel. Trajectory `j` uses stream `j` of
/// `seed`, so the batch does not depend on the thread count.
pub fn sample_batch(
    params: &CircuitParams,
    initial: &InitialState,
    count: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    (0..count as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = trajectory_rng(seed, j);
            let psi = initial.draw(params.sites, &mut rng)?;
            sample_trajectory_with(params, psi, &mut rng, seed)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn plus() -> StateVector {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        StateVector::from_amplitudes(1, vec![h, h]).unwrap()
    }

    #[test]
    fn projective_measurement_of_plus_state() {
        let mut rng = seeded_rng(3);
        let n = 20_000;
        let mut ones = 0;
        for _ in 0..n {
            let mut psi = plus();
            if measure_site(&mut psi, 1, FRAC_PI_2, &mut rng).unwrap() == 1 {
                ones += 1;
                assert!((psi.amplitudes()[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
                assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
            } else {
                assert!((psi.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
            }
        }
        let f = ones as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn down_state_and_zero_strength_never_click() {
        let mut rng = seeded_rng(1);
        for _ in 0..100 {
            let mut psi = StateVector::all_down(1).unwrap();
            assert_eq!(measure_site(&mut psi, 1, 1.2, &mut rng).unwrap(), 0);
            assert_eq!(psi, StateVector::all_down(1).unwrap());
            let mut psi = plus();
            assert_eq!(measure_site(&mut psi, 1, 0.0, &mut rng).unwrap(), 0);
            assert!((psi.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn frozen_dynamics_records_nothing() {
        let p = CircuitParams::new(4, 20, 0.0, FRAC_PI_2).unwrap();
        let tr = sample_trajectory(&p, StateVector::all_down(4).unwrap(), 9).unwrap();
        assert_eq!(tr.record.activity(), 0);
    }

    #[test]
    fn projective_trajectories_stay_classical() {
        let p = CircuitParams::new(4, 30, 0.4, FRAC_PI_2).unwrap();
        let tr = sample_trajectory(&p, StateVector::all_down(4).unwrap(), 5).unwrap();
        for row in &tr.occupations {
            for &n in row {
                assert!(n.abs() < 1e-12 || (n - 1.0).abs() < 1e-12);
            }
        }
        // At γ = π/2 the outcome equals the post-measurement occupation.
        for (t, row) in tr.occupations.iter().enumerate() {
            for (i, &n) in row.iter().enumerate() {
                assert_eq!(tr.record.get(i, t), n.round() as u8);
            }
        }
    }

    #[test]
    fn batch_is_reproducible() {
        let p = CircuitParams::new(3, 10, 0.3, 0.8).unwrap();
        let a = sample_batch(&p, &InitialState::RandomBasis, 8, 11).unwrap();
        let b = sample_batch(&p, &InitialState::RandomBasis, 8, 11).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.record, y.record);
        }
        assert!(a.iter().any(|x| x.record != a[0].record));
    }
}
