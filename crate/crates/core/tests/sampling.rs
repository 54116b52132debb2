use floquet_east::circuit::{channel_step, sample_batch, sample_trajectory, InitialState};
use floquet_east::classical::{sample_classical_trajectory, ClassicalParams};
use floquet_east::clusters::{empirical_cluster_free_energy, inactive_cluster_probability, WindowMargin};
use floquet_east::{CircuitParams, StateVector};
use std::f64::consts::FRAC_PI_2;

fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn sampled_activity_density_matches_law() {
    for (gamma, seed) in [(0.3, 11), (1.0, 12)] {
        let params = CircuitParams::new(4, 20, 0.4, gamma).unwrap();
        let batch = sample_batch(&params, &InitialState::RandomBasis, 10_000, seed).unwrap();
        let densities: Vec<f64> = batch.iter().map(|t| t.record.activity() as f64 / 80.0).collect();
        let (mean, err) = mean_and_error(&densities);
        let expected = gamma.sin().powi(2) / 2.0;
        assert!((mean - expected).abs() < 3.0 * err, "γ={gamma}: {mean} ± {err} vs {expected}");
    }
}

#[test]
fn trajectory_average_reproduces_channel() {
    let params = CircuitParams::new(4, 6, 0.6, 0.8).unwrap();
    let start = StateVector::basis(4, 0b0010).unwrap();
    let batch = sample_batch(&params, &InitialState::Pure(start.clone()), 6000, 5).unwrap();
    let mut rho = start.to_density().unwrap();
    for t in 0..params.steps {
        rho = channel_step(&rho, &params).unwrap();
        for site in 1..=4 {
            let samples: Vec<f64> = batch.iter().map(|tr| tr.occupations[t][site - 1]).collect();
            let (mean, err) = mean_and_error(&samples);
            let exact = rho.occupation(site);
            assert!((mean - exact).abs() < 4.0 * err + 1e-12, "t={t} site={site}: {mean} ± {err} vs {exact}");
        }
    }
}

#[test]
fn seeding_is_reproducible() {
    let params = CircuitParams::new(5, 30, 0.3, 0.7).unwrap();
    let psi = StateVector::all_down(5).unwrap();
    let a = sample_trajectory(&params, psi.clone(), 42).unwrap();
    let b = sample_trajectory(&params, psi.clone(), 42).unwrap();
    let c = sample_trajectory(&params, psi, 43).unwrap();
    assert_eq!(a.record, b.record);
    assert_ne!(a.record.outcomes(), c.record.outcomes());
    let small = sample_batch(&params, &InitialState::RandomBasis, 3, 9).unwrap();
    let large = sample_batch(&params, &InitialState::RandomBasis, 8, 9).unwrap();
    for (x, y) in small.iter().zip(&large) {
        assert_eq!(x.record, y.record);
    }
}

#[test]
fn frozen_dynamics_records_nothing() {
    let params = CircuitParams::new(6, 10, 0.0, FRAC_PI_2).unwrap();
    let tr = sample_trajectory(&params, StateVector::all_down(6).unwrap(), 1).unwrap();
    assert_eq!(tr.record.activity(), 0);
}

#[test]
fn empirical_clusters_agree_with_channel() {
    let (sites, gamma) = (8, 1.0);
    let params = CircuitParams::new(sites, 120, 0.5, gamma).unwrap();
    let batch = sample_batch(&params, &InitialState::RandomBasis, 400, 77).unwrap();
    let records: Vec<_> = batch.into_iter().map(|t| t.record).collect();
    for ell in 1..=3 {
        // Only the rightmost `ell` sites, matching the channel placement.
        let margin = WindowMargin {
            sites: sites - ell,
            steps: 0,
        };
        for tau in 1..=3 {
            let est = empirical_cluster_free_energy(&records, ell, tau, margin).unwrap();
            let exact = -inactive_cluster_probability(&CircuitParams { steps: tau, ..params }, ell, tau)
                .unwrap()
                .ln();
            assert!(!est.censored);
            // Overlapping windows are correlated in time, so the binomial error
            // is inflated by √τ.
            let tol = 4.0 * est.std_error * (tau as f64).sqrt();
            assert!((est.free_energy - exact).abs() < tol, "ell={ell} tau={tau}: {est:?} vs {exact}");
        }
    }
}

#[test]
fn single_site_windows_at_projective_strength() {
    let params = CircuitParams::new(6, 200, 0.3, FRAC_PI_2).unwrap();
    let records: Vec<_> = sample_batch(&params, &InitialState::RandomBasis, 50, 3)
        .unwrap()
        .into_iter()
        .map(|t| t.record)
        .collect();
    // Outcomes are correlated in time, so the error comes from the spread
    // between independent records.
    let margin = WindowMargin { sites: 0, steps: 0 };
    let fractions: Vec<f64> = records
        .chunks(1)
        .map(|r| {
            let est = empirical_cluster_free_energy(r, 1, 1, margin).unwrap();
            est.hits as f64 / est.windows as f64
        })
        .collect();
    let (mean, err) = mean_and_error(&fractions);
    assert!((mean - 0.5).abs() < 4.0 * err, "{mean} ± {err}");
    let pooled = empirical_cluster_free_energy(&records, 1, 1, margin).unwrap();
    assert!((pooled.free_energy - 2f64.ln()).abs() < 4.0 * err / mean);
}

#[test]
fn classical_sampling_at_large_size() {
    let cl = ClassicalParams::from_omega(64, 0.1).unwrap();
    for seed in 0..3 {
        let a = sample_classical_trajectory(&cl, 400, seed, None).unwrap();
        let b = sample_classical_trajectory(&cl, 400, seed, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sites(), 64);
        assert_eq!(a.steps(), 400);
        let density = a.activity() as f64 / (64.0 * 400.0);
        assert!((density - 0.5).abs() < 0.1);
    }
}
