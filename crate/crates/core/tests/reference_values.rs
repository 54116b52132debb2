use floquet_east::circuit::{east_gate, tilted_channel_step};
use floquet_east::classical::{classical_scgf, ni_scgf, transition_matrix, zero_activity_probability, ClassicalParams};
use floquet_east::clusters::{
    build_cluster_table, crossover_time, empirical_cluster_free_energy, fit_area_perimeter, AreaPerimeterFit,
    WindowMargin,
};
use floquet_east::effective::{compare_effective_vs_full, effective_flip_rate, CompareOptions, OmegaTildeForm};
use floquet_east::large_deviations::{
    crossover_from_samples, instantaneous_increment_series, legendre_rate_function, partition_function,
};
use floquet_east::{maximally_mixed_state, CircuitParams, MeasurementRecord};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, LN_2};

#[test]
fn gate_on_single_excitation() {
    let g = east_gate(0.1);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    // |control=1, target=0⟩
    let out = g.apply([zero, zero, one, zero]);
    assert!((out[2] - Complex64::new(0.1f64.cos(), 0.0)).norm() < 1e-15);
    assert!((out[3] - Complex64::new(0.0, -0.1f64.sin())).norm() < 1e-15);
    assert!((out[2].re - 0.99500).abs() < 5e-6 && (out[3].im + 0.09983).abs() < 5e-6);
    // |control=0, target=1⟩ is blocked.
    assert_eq!(g.apply([zero, one, zero, zero]), [zero, one, zero, zero]);
}

#[test]
fn partition_function_trivial_cases() {
    let p = CircuitParams::new(3, 7, 0.4, 0.9).unwrap();
    let r = partition_function(&p, 0.0, None).unwrap();
    assert!(r.log_z.abs() < 1e-10);
    assert!(instantaneous_increment_series(&r).iter().all(|v| v.abs() < 1e-10));
    let unmonitored = CircuitParams { gamma: 0.0, ..p };
    for s in [-3.0, 1.0, 10.0] {
        assert!(partition_function(&unmonitored, s, None).unwrap().log_z.abs() < 1e-12);
    }
}

#[test]
fn strongly_biased_two_site_values() {
    let p = CircuitParams::new(2, 4, 0.1, FRAC_PI_2).unwrap();
    let z = partition_function(&p, 20.0, None).unwrap().log_z.exp();
    assert!((z - 0.24260).abs() < 5e-6, "{z}");
    // Three steps with an infinite field.
    let p3 = CircuitParams::new(2, 3, 0.1, FRAC_PI_2).unwrap();
    let mut rho = maximally_mixed_state(2).unwrap();
    let mut log_z = 0.0;
    for _ in 0..3 {
        let (next, inc) = tilted_channel_step(&rho, &p3, f64::INFINITY).unwrap();
        rho = next;
        log_z += inc;
    }
    let expected = 0.25 * (1.0 - 0.1f64.sin().powi(2)).powi(2);
    assert!((log_z.exp() - expected).abs() < 1e-14);
    assert!((zero_activity_probability(2, 3, 0.01).unwrap() - 0.245025).abs() < 1e-15);
}

#[test]
fn classical_reference_values() {
    let m = transition_matrix(&ClassicalParams::new(1, 0.2).unwrap()).unwrap();
    assert!((m.get(0, 0) - 0.8).abs() < 1e-15 && (m.get(1, 0) - 0.2).abs() < 1e-15);
    let cl = ClassicalParams::from_omega(3, 0.1).unwrap();
    let theta = classical_scgf(&cl, 30.0).unwrap();
    assert!((theta - (1.0 - cl.p).ln() / 3.0).abs() < 1e-6);
    assert!((theta + 0.003340).abs() < 2e-6);
}

#[test]
fn synthetic_crossover_is_located() {
    let (c, w) = (0.137, 0.02);
    let s: Vec<f64> = (0..81).map(|k| -0.2 + 0.005 * k as f64).collect();
    let a: Vec<f64> = s.iter().map(|x| 1.0 / (1.0 + ((x - c) / w).exp())).collect();
    let found = crossover_from_samples(&s, &a).unwrap();
    assert!((found.grid_argmax - c).abs() <= 0.005);
    assert!((found.refined - c).abs() < 0.0025);
}

#[test]
fn legendre_reference_values() {
    let phi = legendre_rate_function(&[(-1.0, 0.5), (1.0, -0.5)], &[0.5]);
    assert!(phi[0].abs() < 1e-15);
    let zero_branch: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.0)).collect();
    assert!(legendre_rate_function(&zero_branch, &[0.0])[0].abs() < 1e-15);
}

#[test]
fn legendre_transform_matches_binomial_enumeration() {
    // L = 1, p = 1/2: outcomes are independent fair coins.
    let p = 0.5;
    let steps = 10u32;
    let m = transition_matrix(&ClassicalParams::new(1, p).unwrap()).unwrap();
    let mut counts = vec![0.0; steps as usize + 1];
    for eta in 0u32..1 << steps {
        let mut prob = 0.5;
        for t in 1..steps {
            let (from, to) = ((eta >> (t - 1)) & 1, (eta >> t) & 1);
            prob *= m.get(to as usize, from as usize);
        }
        counts[eta.count_ones() as usize] += prob;
    }
    let curve: Vec<(f64, f64)> = (-400..=400).map(|k| k as f64 * 0.05).map(|s| (s, ni_scgf(p, s))).collect();
    let correction = ((steps + 1) as f64).ln() / steps as f64;
    for (a, k) in [(0.0, 0), (0.5, 5), (1.0, 10)] {
        let phi = legendre_rate_function(&curve, &[a])[0];
        let brute = -counts[k].ln() / steps as f64;
        assert!(phi >= -1e-12);
        assert!((phi - brute).abs() <= correction, "a={a}: {phi} vs {brute}");
    }
    assert!((legendre_rate_function(&curve, &[0.0])[0] - LN_2).abs() < 1e-6);
}

#[test]
fn cluster_reference_values() {
    let zeros = MeasurementRecord::zeros(6, 20, 0);
    let est = empirical_cluster_free_energy(&[zeros], 2, 3, WindowMargin { sites: 1, steps: 1 }).unwrap();
    assert_eq!(est.free_energy, 0.0);

    let exact = [(2.0, 0.7), (3.0, 0.8), (5.0, 1.0)];
    let fit = fit_area_perimeter(&exact).unwrap();
    assert!((fit.alpha - 0.1).abs() < 1e-12 && (fit.beta - 0.5).abs() < 1e-12);

    let mk = |r: f64| AreaPerimeterFit {
        alpha: 1.0,
        beta: r,
        residual: 0.0,
    };
    let l = 10.0;
    let ct = crossover_time(&[(1, mk(0.5 * l)), (2, mk(0.9 * l)), (3, mk(1.2 * l))], 10).unwrap();
    assert_eq!(ct.tau_star, Some(3));
}

#[test]
fn perimeter_law_at_projective_strength() {
    let p = CircuitParams::new(8, 1, 0.1, FRAC_PI_2).unwrap();
    let table = build_cluster_table(&p, &[2, 3, 4], 12).unwrap();
    let fit = table.fits[&10];
    assert!(fit.alpha.abs() < 1e-10, "{fit:?}");
    let scale = -(1.0 - 0.1f64.sin().powi(2)).ln();
    assert!(fit.beta > 0.0 && fit.beta < 2.0 * scale, "{fit:?}");
    assert!(table.is_monotone(1e-12));
}

#[test]
fn effective_reference_values() {
    let rate = effective_flip_rate(0.1, FRAC_PI_2, OmegaTildeForm::CotSquared).unwrap();
    assert!((rate - 0.01).abs() < 1e-15);
    let p = CircuitParams::new(4, 1, 0.0, 1.4).unwrap();
    let mut init = vec![0.0; 16];
    init[0b0101] = 1.0;
    let dev = compare_effective_vs_full(&p, 10, &init, CompareOptions::default()).unwrap();
    assert_eq!(dev.max_global(), 0.0);
    // Projective measurements: the full diagonal dynamics is the classical chain
    // with flip probability sin²ω, which the effective chain matches up to O(ω⁴).
    let deviation = |omega: f64| {
        let p = CircuitParams::new(4, 1, omega, FRAC_PI_2).unwrap();
        compare_effective_vs_full(&p, 10, &init, CompareOptions::default()).unwrap().max_global()
    };
    let ratio = deviation(0.1) / deviation(0.05);
    assert!((12.0..20.0).contains(&ratio), "{ratio}");
}
