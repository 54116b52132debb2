//! The projective-measurement limit `γ = π/2`: a discrete-time stochastic East
//! chain in which a facilitated site flips with probability `p = sin²ω`.
//!
//! Probability vectors are columns; `P_{mn}` is the probability of `n → m`.

mod power;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::site_mask;
use crate::circuit::{layer_slots, Layer};
use crate::error::{invalid, Error, Result};
use crate::large_deviations::{crossover_from_samples, refine_crossover, Crossover};
use crate::linalg::{DenseMatrix, LinearOperator};
use crate::params::DenseLimits;
use crate::record::MeasurementRecord;
use crate::rng::trajectory_rng;

pub use power::{dominant_eigenvalue, DominantEigen, PowerOptions, GAP_RELAX_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalParams {
    #[serde(rename = "L")]
    pub sites: usize,
    pub p: f64,
}

impl ClassicalParams {
    pub fn new(sites: usize, p: f64) -> Result<Self> {
        if sites == 0 {
            return Err(invalid("L", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid("p", format!("{p} not in [0, 1]")));
        }
        Ok(Self { sites, p })
    }

    /// `p = sin²ω`.
    pub fn from_omega(sites: usize, omega: f64) -> Result<Self> {
        Self::new(sites, omega.sin().powi(2))
    }

    /// `p = 1`: deterministic and ergodicity breaking.
    pub fn is_deterministic(&self) -> bool {
        self.p == 1.0
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }
}

/// Basis-index pairs `(lo, hi)` of every gate in a layer (see
/// [`crate::circuit::GateSlot::pairs`]).
fn layer_pairs(sites: usize, layer: Layer) -> Vec<(u32, u32)> {
    layer_slots(sites, layer)
        .into_iter()
        .flat_map(|g| g.pairs(sites).map(|(a, b)| (a as u32, b as u32)).collect::<Vec<_>>())
        .collect()
}

/// Applies a layer of stochastic flip gates `[[1-f, f], [f, 1-f]]` in place.
/// The gates in a layer act on disjoint pairs, so the order is irrelevant.
fn apply_flip_layer(x: &mut [f64], pairs: &[(u32, u32)], flip: f64) {
    if flip == 0.0 {
        return;
    }
    let stay = 1.0 - flip;
    for &(lo, hi) in pairs {
        let (a, b) = (x[lo as usize], x[hi as usize]);
        x[lo as usize] = stay * a + flip * b;
        x[hi as usize] = flip * a + stay * b;
    }
}

/// `e^{-s f(m)}` for every basis state.
fn activity_weights(sites: usize, s: f64) -> Vec<f64> {
    (0..1usize << sites)
        .map(|m| {
            let f = m.count_ones();
            if f == 0 {
                1.0
            } else {
                (-s * f as f64).exp()
            }
        })
        .collect()
}

/// Column-stochastic one-step transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DenseMatrix);

impl TransitionMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    /// `P_{mn}`: probability of `n → m`.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.0.get(m, n)
    }

    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.0.data().iter().all(|&v| v >= 0.0) && self.0.column_sums().iter().all(|c| (c - 1.0).abs() <= tol)
    }
}

/// Matrix-free `P(s) = D(s) G_o G_e`: even flip layer, odd flip layer, then
/// the weight `e^{-s f(m)}` of the destination state.
#[derive(Debug, Clone)]
pub struct TiltedEastOperator {
    p: f64,
    even: Vec<(u32, u32)>,
    odd: Vec<(u32, u32)>,
    weights: Vec<f64>,
}

impl TiltedEastOperator {
    pub fn new(params: &ClassicalParams, s: f64) -> Result<Self> {
        DenseLimits::current().check_statevector(params.sites)?;
        Ok(Self {
            p: params.p,
            even: layer_pairs(params.sites, Layer::Even),
            odd: layer_pairs(params.sites, Layer::Odd),
            weights: activity_weights(params.sites, s),
        })
    }
}

impl LinearOperator for TiltedEastOperator {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        apply_flip_layer(y, &self.even, self.p);
        apply_flip_layer(y, &self.odd, self.p);
        y.iter_mut().zip(&self.weights).for_each(|(v, w)| *v *= w);
    }
}

/// Symmetric operator `H = G_e^{1/2} D^{1/2} G_o D^{1/2} G_e^{1/2}`, similar to
/// `P(s)` and hence with the same spectrum. Needs `p ≤ 1/2` so that each flip
/// gate is positive semidefinite; its square root is a flip gate with
/// `q = (1 - √(1 - 2p)) / 2`.
#[derive(Debug, Clone)]
pub struct SymmetrizedEastOperator {
    p: f64,
    q: f64,
    sites: usize,
    even: Vec<(u32, u32)>,
    odd: Vec<(u32, u32)>,
    sqrt_weights: Vec<f64>,
}

impl SymmetrizedEastOperator {
    pub fn new(params: &ClassicalParams, s: f64) -> Result<Self> {
        DenseLimits::current().check_statevector(params.sites)?;
        if params.p > 0.5 {
            return Err(invalid("p", "symmetrized form needs p ≤ 1/2"));
        }
        Ok(Self {
            p: params.p,
            q: 0.5 * (1.0 - (1.0 - 2.0 * params.p).sqrt()),
            sites: params.sites,
            even: layer_pairs(params.sites, Layer::Even),
            odd: layer_pairs(params.sites, Layer::Odd),
            sqrt_weights: activity_weights(params.sites, 0.5 * s),
        })
    }

    /// `y = D^{1/2} G_e^{1/2} ψ`.
    fn half_step(&self, psi: &[f64]) -> Vec<f64> {
        let mut y = psi.to_vec();
        apply_flip_layer(&mut y, &self.even, self.q);
        y.iter_mut().zip(&self.sqrt_weights).for_each(|(v, w)| *v *= w);
        y
    }

    /// `a(s) = -θ'(s)` from a converged eigenvector by Hellmann-Feynman:
    /// `a = yᵀ F G_o y / (L yᵀ G_o y)` with `F = diag f(m)`.
    pub fn activity(&self, psi: &[f64]) -> f64 {
        let y = self.half_step(psi);
        let mut gy = y.clone();
        apply_flip_layer(&mut gy, &self.odd, self.p);
        let (mut num, mut den) = (0.0, 0.0);
        for (m, (a, b)) in y.iter().zip(&gy).enumerate() {
            den += a * b;
            num += m.count_ones() as f64 * a * b;
        }
        num / (self.sites as f64 * den)
    }
}

impl LinearOperator for SymmetrizedEastOperator {
    fn dim(&self) -> usize {
        self.sqrt_weights.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        apply_flip_layer(y, &self.even, self.q);
        y.iter_mut().zip(&self.sqrt_weights).for_each(|(v, w)| *v *= w);
        apply_flip_layer(y, &self.odd, self.p);
        y.iter_mut().zip(&self.sqrt_weights).for_each(|(v, w)| *v *= w);
        apply_flip_layer(y, &self.even, self.q);
    }
}

/// Dense `P_cl` built column by column from the layer operator.
pub fn transition_matrix(params: &ClassicalParams) -> Result<TransitionMatrix> {
    Ok(TransitionMatrix(DenseMatrix::from_operator(&TiltedEastOperator::new(params, 0.0)?)))
}

/// Dense `P_cl(s)_{mn} = P_{mn} e^{-s f(m)}`.
pub fn tilted_matrix(params: &ClassicalParams, s: f64) -> Result<DenseMatrix> {
    if s.is_nan() {
        return Err(invalid("s", "NaN"));
    }
    Ok(DenseMatrix::from_operator(&TiltedEastOperator::new(params, s)?))
}

/// SCGF `θ_L(s)` with the activity `a_L(s) = -θ_L'(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalPoint {
    pub s: f64,
    pub theta: f64,
    pub a: f64,
    pub eigen: DominantEigen,
}

fn check_ergodic(params: &ClassicalParams) -> Result<()> {
    if params.is_deterministic() {
        return Err(Error::Deterministic("the dominant-eigenvalue path is disabled"));
    }
    Ok(())
}

/// Step used for `a` when the non-symmetric path is taken (`p > 1/2`).
const FD_STEP: f64 = 1e-5;

/// `θ_L(s)` and `a_L(s)`, optionally warm-started from a previous eigenvector.
///
/// For `p ≤ 1/2` the symmetrized operator is used and `a` comes from
/// Hellmann-Feynman; otherwise `P(s)` is iterated directly and `a` is a central
/// difference of `θ`.
pub fn classical_point(
    params: &ClassicalParams,
    s: f64,
    opts: PowerOptions,
    warm: Option<&[f64]>,
) -> Result<ClassicalPoint> {
    check_ergodic(params)?;
    let l = params.sites as f64;
    if params.p <= 0.5 {
        let op = SymmetrizedEastOperator::new(params, s)?;
        let eigen = dominant_eigenvalue(&op, opts, warm)?;
        Ok(ClassicalPoint {
            s,
            theta: eigen.value.ln() / l,
            a: op.activity(&eigen.vector),
            eigen,
        })
    } else {
        let solve = |s: f64, warm: Option<&[f64]>| dominant_eigenvalue(&TiltedEastOperator::new(params, s)?, opts, warm);
        let eigen = solve(s, warm)?;
        let up = solve(s + FD_STEP, Some(&eigen.vector))?;
        let down = solve(s - FD_STEP, Some(&eigen.vector))?;
        Ok(ClassicalPoint {
            s,
            theta: eigen.value.ln() / l,
            a: -(up.value.ln() - down.value.ln()) / (2.0 * FD_STEP * l),
            eigen,
        })
    }
}

/// `θ_L(s) = (1/L) log dom P_cl(s)`.
pub fn classical_scgf(params: &ClassicalParams, s: f64) -> Result<f64> {
    Ok(classical_point(params, s, PowerOptions::default(), None)?.theta)
}

/// `θ_L(s)` from a full dense eigen-decomposition; a cross-check for small `L`.
pub fn dense_classical_scgf(params: &ClassicalParams, s: f64) -> Result<f64> {
    check_ergodic(params)?;
    Ok(tilted_matrix(params, s)?.spectral_radius().ln() / params.sites as f64)
}

/// Evaluates a sorted grid sequentially, warm-starting each point from the
/// previous eigenvector.
pub fn classical_curve(params: &ClassicalParams, s_grid: &[f64], opts: PowerOptions) -> Result<Vec<ClassicalPoint>> {
    let mut out: Vec<ClassicalPoint> = Vec::with_capacity(s_grid.len());
    for &s in s_grid {
        let warm = out.last().map(|p| p.eigen.vector.as_slice());
        out.push(classical_point(params, s, opts, warm)?);
    }
    Ok(out)
}

/// Result of an adaptive `s*` search on the classical chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalCrossover {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub crossover: Crossover,
}

/// Locates `s*` by refining `initial` around the steepest slope of `a_L(s)`.
pub fn classical_crossover(
    params: &ClassicalParams,
    initial: &[f64],
    rounds: usize,
    points: usize,
    opts: PowerOptions,
) -> Result<ClassicalCrossover> {
    let mut warm: Option<Vec<f64>> = None;
    let eval = |grid: &[f64]| -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(grid.len());
        for &s in grid {
            let point = classical_point(params, s, opts, warm.as_deref())?;
            values.push(point.a);
            warm = Some(point.eigen.vector);
        }
        Ok(values)
    };
    let (s, a, crossover) = refine_crossover(eval, initial, rounds, points)?;
    debug_assert!(crossover_from_samples(&s, &a).is_ok());
    Ok(ClassicalCrossover { s, a, crossover })
}

/// Closed-form SCGF of a single unconstrained spin flipping with probability
/// `p` per step, i.e. `θ_L(s)` for non-interacting spins and the `L = 1` chain.
pub fn ni_scgf(p: f64, s: f64) -> f64 {
    // Largest root of λ² - (1-p)(1+x)λ + (1-2p)x with x = e^{-s}.
    let x = (-s).exp();
    let b = (1.0 - p) * (1.0 + x);
    let radicand = b * b - 4.0 * (1.0 - 2.0 * p) * x;
    assert!(radicand >= 0.0, "negative radicand {radicand} for p = {p}, s = {s}");
    (0.5 * (b + radicand.sqrt())).ln()
}

/// `2^{-L} (1 - p)^{T-1}`: probability that a stationary trajectory of `T`
/// steps records no activity at all.
pub fn zero_activity_probability(sites: usize, steps: usize, p: f64) -> Result<f64> {
    if p == 1.0 {
        return Err(Error::Deterministic("log(1 - p) diverges"));
    }
    if !(0.0..1.0).contains(&p) {
        return Err(invalid("p", format!("{p} not in [0, 1)")));
    }
    if steps == 0 {
        return Err(invalid("T", "must be at least 1"));
    }
    Ok(0.5f64.powi(sites as i32) * (1.0 - p).powi(steps as i32 - 1))
}

/// Uniformly random configuration, site 1 first.
pub fn random_configuration<R: Rng + ?Sized>(sites: usize, rng: &mut R) -> Vec<u8> {
    (0..sites).map(|_| rng.random_range(0..2u8)).collect()
}

/// One full step of the stochastic brickwork on a configuration (site 1 first).
pub fn classical_step<R: Rng + ?Sized>(state: &mut [u8], p: f64, rng: &mut R) {
    let sites = state.len();
    for first in [0usize, 1] {
        for i in (first..sites).step_by(2) {
            let facilitated = i == 0 || state[i - 1] == 1;
            if facilitated && rng.random::<f64>() < p {
                state[i] ^= 1;
            }
        }
    }
}

/// Samples `T` steps; row `t` of the record is the configuration after step
/// `t + 1`, which at `γ = π/2` is exactly the measurement record.
pub fn sample_classical_trajectory_with<R: Rng + ?Sized>(
    params: &ClassicalParams,
    steps: usize,
    initial: &[u8],
    rng: &mut R,
    seed: u64,
) -> Result<MeasurementRecord> {
    if initial.len() != params.sites {
        return Err(Error::DimensionMismatch {
            expected: params.sites,
            actual: initial.len(),
        });
    }
    if initial.iter().any(|&b| b > 1) {
        return Err(invalid("initial", "occupations must be 0 or 1"));
    }
    let mut state = initial.to_vec();
    let mut record = MeasurementRecord::zeros(params.sites, steps, seed);
    for t in 0..steps {
        classical_step(&mut state, params.p, rng);
        record.row_mut(t).copy_from_slice(&state);
    }
    Ok(record)
}

/// One trajectory on stream 0 of `seed`; `None` draws a uniform initial configuration.
pub fn sample_classical_trajectory(
    params: &ClassicalParams,
    steps: usize,
    seed: u64,
    initial: Option<&[u8]>,
) -> Result<MeasurementRecord> {
    let mut rng = trajectory_rng(seed, 0);
    match initial {
        Some(init) => sample_classical_trajectory_with(params, steps, init, &mut rng, seed),
        None => {
            let init = random_configuration(params.sites, &mut rng);
            sample_classical_trajectory_with(params, steps, &init, &mut rng, seed)
        }
    }
}

/// Index of a configuration listed from site 1 upwards.
pub fn configuration_index(state: &[u8]) -> usize {
    state
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 1)
        .fold(0, |acc, (i, _)| acc | site_mask(i + 1))
}
