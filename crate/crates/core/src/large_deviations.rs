//! Dynamical partition functions `Z_{L,T}(s)`, the SCGF `θ_{L,T}(s)`, the activity
//! density `a_{L,T}(s)` and the crossover field `s*`.

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::frame::{frame_trace, stationary_frame, KrausMask, RealFrame};
use crate::circuit::tilted_channel_step;
use crate::error::{invalid, Error, Result};
use crate::params::{CircuitParams, DenseLimits};
use crate::state::DensityMatrix;

/// Tolerance on the imaginary part when moving an initial state to the real frame.
const FRAME_TOL: f64 = 1e-13;

/// Outcome of evolving with the tilted map for `T` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltedEvolutionResult {
    pub s: f64,
    /// `log(Z_t / Z_{t-1}) = L λ_{L,t}(s)` for `t = 1..T`.
    pub per_step_log_increments: Vec<f64>,
    pub log_z: f64,
    /// `θ_{L,T}(s) = log Z / (L T)`.
    pub theta: f64,
    pub params: CircuitParams,
}

fn check_s(s: f64) -> Result<()> {
    if s.is_nan() || s == f64::NEG_INFINITY {
        return Err(invalid("s", format!("{s} is not an admissible counting field")));
    }
    Ok(())
}

fn finish(params: &CircuitParams, s: f64, increments: Vec<f64>) -> TiltedEvolutionResult {
    let log_z: f64 = increments.iter().sum();
    TiltedEvolutionResult {
        s,
        theta: log_z / (params.sites * params.steps) as f64,
        per_step_log_increments: increments,
        log_z,
        params: *params,
    }
}

fn normalize(m: &mut [f64], dim: usize, step: usize) -> Result<f64> {
    let tr = frame_trace(m, dim);
    if !(tr >= crate::circuit::frame::TRACE_FLOOR) {
        return Err(Error::TraceUnderflow { trace: tr, step });
    }
    let inv = 1.0 / tr;
    m.iter_mut().for_each(|x| *x *= inv);
    Ok(tr)
}

fn evolve_frame(params: &CircuitParams, s: f64, mut m: Vec<f64>) -> Result<Vec<f64>> {
    let frame = RealFrame::new(params.sites, params.omega)?;
    let mask = KrausMask::tilted(params.sites, params.gamma, s, false);
    let dim = frame.dim();
    let mut scratch = Vec::new();
    let mut increments = Vec::with_capacity(params.steps);
    for t in 1..=params.steps {
        frame.conjugate_symmetric(&mut m, &mut scratch);
        mask.apply(&mut m);
        increments.push(normalize(&mut m, dim, t)?.ln());
    }
    Ok(increments)
}

/// `Z_{L,T}(s) = Tr[E_s^T(ρ_0)]`, accumulated in log space.
///
/// `initial` defaults to the stationary state `1/2^L`. States that are real in
/// the rotated frame (every diagonal state included) take the fast real path;
/// anything else falls back to complex evolution.
pub fn partition_function(
    params: &CircuitParams,
    s: f64,
    initial: Option<&DensityMatrix>,
) -> Result<TiltedEvolutionResult> {
    params.validate()?;
    check_s(s)?;
    DenseLimits::current().check_density(params.sites)?;
    let increments = match initial {
        None => evolve_frame(params, s, stationary_frame(params.sites))?,
        Some(rho) => {
            if rho.sites() != params.sites {
                return Err(Error::DimensionMismatch {
                    expected: params.dim(),
                    actual: rho.dim(),
                });
            }
            let frame = RealFrame::new(params.sites, params.omega)?;
            match frame.to_frame(rho, FRAME_TOL).filter(|m| is_symmetric(m, frame.dim())) {
                Some(m) => evolve_frame(params, s, m)?,
                None => {
                    let mut rho = rho.clone();
                    let mut increments = Vec::with_capacity(params.steps);
                    for t in 1..=params.steps {
                        let (next, inc) = tilted_channel_step(&rho, params, s).map_err(|e| match e {
                            Error::TraceUnderflow { trace, .. } => Error::TraceUnderflow { trace, step: t },
                            other => other,
                        })?;
                        rho = next;
                        increments.push(inc);
                    }
                    increments
                }
            }
        }
    };
    Ok(finish(params, s, increments))
}

fn is_symmetric(m: &[f64], dim: usize) -> bool {
    (0..dim).all(|i| (i + 1..dim).all(|j| (m[i * dim + j] - m[j * dim + i]).abs() <= FRAME_TOL))
}

/// Default finite-difference step for [`activity_density`].
pub const DEFAULT_DS: f64 = 1e-3;

/// `a_{L,T}(s)` by central finite differences of `log Z` from the stationary state.
pub fn activity_density(params: &CircuitParams, s: f64, ds: f64) -> Result<f64> {
    if !(ds > 0.0) || !ds.is_finite() {
        return Err(invalid("ds", format!("{ds} must be positive")));
    }
    let up = partition_function(params, s + ds, None)?;
    let down = partition_function(params, s - ds, None)?;
    Ok(-(up.log_z - down.log_z) / (2.0 * ds * (params.sites * params.steps) as f64))
}

/// `θ` and `a` at one counting field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityPoint {
    pub s: f64,
    pub theta: f64,
    pub a: f64,
}

/// `θ_{L,T}(s)` and the exact `a_{L,T}(s) = -∂_s θ` from the stationary state.
///
/// The derivative is propagated alongside the state: with `r_t` the normalized
/// tilted state and `q_t = ∂_s r̃_t / Z_t`, one step is
/// `q_{t+1} = [E'_s(r_t) + E_s(q_t)] / c_{t+1}` and `∂_s log Z_T = Tr q_T`.
pub fn activity_tangent(params: &CircuitParams, s: f64) -> Result<ActivityPoint> {
    params.validate()?;
    check_s(s)?;
    let frame = RealFrame::new(params.sites, params.omega)?;
    let mask = KrausMask::tilted(params.sites, params.gamma, s, true);
    let dmask = mask.derivative().expect("derivative requested");
    let dim = frame.dim();
    let mut r = stationary_frame(params.sites);
    let mut q = vec![0.0; dim * dim];
    let mut scratch = Vec::new();
    let mut log_z = 0.0;
    for t in 1..=params.steps {
        frame.conjugate_symmetric(&mut r, &mut scratch);
        if t > 1 {
            frame.conjugate_symmetric(&mut q, &mut scratch);
        }
        for ((qi, ri), (&f, &df)) in q.iter_mut().zip(r.iter_mut()).zip(mask.values().iter().zip(dmask)) {
            *qi = f * *qi + df * *ri;
            *ri *= f;
        }
        let c = normalize(&mut r, dim, t)?;
        let inv = 1.0 / c;
        q.iter_mut().for_each(|x| *x *= inv);
        log_z += c.ln();
    }
    let lt = (params.sites * params.steps) as f64;
    Ok(ActivityPoint {
        s,
        theta: log_z / lt,
        a: -frame_trace(&q, dim) / lt,
    })
}

/// `λ_{L,t}(s)` for `t = 1..T`.
pub fn instantaneous_increment_series(result: &TiltedEvolutionResult) -> Vec<f64> {
    let l = result.params.sites as f64;
    result.per_step_log_increments.iter().map(|x| x / l).collect()
}

/// Relative change of `λ_{L,t}` across the final `fraction` of the steps.
/// Small values indicate the increments have reached a plateau.
pub fn plateau_relative_change(lambdas: &[f64], fraction: f64) -> f64 {
    let n = lambdas.len();
    if n < 2 {
        return 0.0;
    }
    let window = ((n as f64 * fraction).ceil() as usize).clamp(1, n - 1);
    let (first, last) = (lambdas[n - 1 - window], lambdas[n - 1]);
    let scale = last.abs().max(first.abs());
    if scale == 0.0 {
        0.0
    } else {
        (last - first).abs() / scale
    }
}

/// How `a(s)` is evaluated along a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActivityMethod {
    /// Exact derivative propagated with the state.
    Tangent,
    /// Central finite difference with the given step.
    FiniteDifference { ds: f64 },
}

/// `a_{L,T}(s)` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityCurve {
    pub s_grid: Vec<f64>,
    pub a_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub gamma: f64,
    pub omega: f64,
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub s_star: Option<Crossover>,
}

impl ActivityCurve {
    /// Fills `s_star` if the curve brackets a crossover.
    pub fn locate_crossover(&mut self) -> Option<Crossover> {
        self.s_star = crossover_from_samples(&self.s_grid, &self.a_values).ok();
        self.s_star
    }
}

/// Evaluates `θ` and `a` at each field, in parallel across grid points.
pub fn activity_points(params: &CircuitParams, s_values: &[f64], method: ActivityMethod) -> Result<Vec<ActivityPoint>> {
    s_values
        .par_iter()
        .map(|&s| match method {
            ActivityMethod::Tangent => activity_tangent(params, s),
            ActivityMethod::FiniteDifference { ds } => Ok(ActivityPoint {
                s,
                theta: partition_function(params, s, None)?.theta,
                a: activity_density(params, s, ds)?,
            }),
        })
        .collect()
}

/// Builds the curve on a sorted copy of `s_grid`.
pub fn activity_curve(params: &CircuitParams, s_grid: &[f64], method: ActivityMethod) -> Result<ActivityCurve> {
    let mut grid = s_grid.to_vec();
    sort_dedup(&mut grid);
    let points = activity_points(params, &grid, method)?;
    let mut curve = ActivityCurve {
        s_grid: grid,
        a_values: points.iter().map(|p| p.a).collect(),
        theta_values: points.iter().map(|p| p.theta).collect(),
        gamma: params.gamma,
        omega: params.omega,
        sites: params.sites,
        steps: params.steps,
        s_star: None,
    };
    curve.locate_crossover();
    Ok(curve)
}

fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
}

/// Location of the steepest descent of `a(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    /// Vertex of the parabola through the three slopes around the maximum.
    pub refined: f64,
    /// Grid point with the largest central-difference slope magnitude.
    pub grid_argmax: f64,
    /// `|a'(s)|` at `grid_argmax`.
    pub max_slope: f64,
}

/// `s* = argmax_s |a'(s)|` on the curve's grid.
pub fn crossover_field(curve: &ActivityCurve) -> Result<Crossover> {
    crossover_from_samples(&curve.s_grid, &curve.a_values)
}

/// `s* = argmax_s |a'(s)|` from samples on a sorted, possibly non-uniform grid.
pub fn crossover_from_samples(s: &[f64], a: &[f64]) -> Result<Crossover> {
    let n = s.len();
    if n != a.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.len(),
        });
    }
    if n < 5 {
        return Err(Error::DegenerateGrid(format!("need at least 5 points, got {n}")));
    }
    if s.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::DegenerateGrid("grid must be strictly increasing".into()));
    }
    let slopes: Vec<f64> = (1..n - 1)
        .map(|i| ((a[i + 1] - a[i - 1]) / (s[i + 1] - s[i - 1])).abs())
        .collect();
    let (k, &max_slope) = slopes
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty");
    let i = k + 1;
    if k == 0 || k == slopes.len() - 1 {
        return Err(Error::CrossoverOutsideGrid { at: s[i] });
    }
    let refined = parabola_vertex(
        (s[i - 1], slopes[k - 1]),
        (s[i], slopes[k]),
        (s[i + 1], slopes[k + 1]),
    );
    Ok(Crossover {
        refined,
        grid_argmax: s[i],
        max_slope,
    })
}

/// Abscissa of the maximum of the parabola through three points, clamped to
/// the bracket. Falls back to the middle point if the parabola has no maximum.
fn parabola_vertex((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature < 0.0) {
        return x1;
    }
    // y = y0 + d01 (x - x0) + curvature (x - x0)(x - x1)
    let vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    vertex.clamp(x0, x2)
}

/// Adaptive sweep: evaluates `eval` on `initial`, then `rounds` times inserts
/// `points` new fields evenly into the bracket around the current steepest
/// slope. `eval` receives only the new fields and returns their `a` values.
pub fn refine_crossover<F>(
    mut eval: F,
    initial: &[f64],
    rounds: usize,
    points: usize,
) -> Result<(Vec<f64>, Vec<f64>, Crossover)>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut samples: Vec<(f64, f64)> = {
        let mut grid = initial.to_vec();
        sort_dedup(&mut grid);
        let values = eval(&grid)?;
        grid.into_iter().zip(values).collect()
    };
    let split = |samples: &[(f64, f64)]| -> (Vec<f64>, Vec<f64>) { samples.iter().copied().unzip() };
    let (mut s, mut a) = split(&samples);
    let mut crossover = crossover_from_samples(&s, &a)?;
    for round in 0..rounds {
        let i = s.iter().position(|&x| x == crossover.grid_argmax).expect("argmax on grid");
        let (lo, hi) = (s[i - 1], s[i + 1]);
        let new: Vec<f64> = (1..=points)
            .map(|k| lo + (hi - lo) * k as f64 / (points + 1) as f64)
            .filter(|x| !s.contains(x))
            .collect();
        if new.is_empty() {
            break;
        }
        let values = eval(&new)?;
        samples.extend(new.into_iter().zip(values));
        samples.sort_by(|x, y| x.0.total_cmp(&y.0));
        samples.dedup_by(|x, y| x.0 == y.0);
        (s, a) = split(&samples);
        crossover = crossover_from_samples(&s, &a)?;
        debug!("refinement round {round}: s* = {} (grid {})", crossover.refined, crossover.grid_argmax);
    }
    Ok((s, a, crossover))
}

/// `φ(a) = sup_s [-s a - θ(s)]` over the sampled fields.
pub fn legendre_rate_function(theta_curve: &[(f64, f64)], a_grid: &[f64]) -> Vec<f64> {
    a_grid
        .iter()
        .map(|&a| {
            theta_curve
                .iter()
                .map(|&(s, theta)| -s * a - theta)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn normalized_at_zero_field() {
        let p = CircuitParams::new(3, 50, 0.4, 0.7).unwrap();
        let r = partition_function(&p, 0.0, None).unwrap();
        assert!(r.log_z.abs() < 1e-10);
        assert!(instantaneous_increment_series(&r).iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn log_z_sums_increments() {
        let p = CircuitParams::new(3, 40, 0.4, 0.7).unwrap();
        let r = partition_function(&p, 0.3, None).unwrap();
        let sum: f64 = r.per_step_log_increments.iter().sum();
        assert!((sum - r.log_z).abs() < 1e-10);
        assert!((r.theta - r.log_z / 120.0).abs() < 1e-15);
        let lambdas = instantaneous_increment_series(&r);
        let mean = lambdas.iter().sum::<f64>() / 40.0;
        assert!((mean - r.theta).abs() < 1e-12);
    }

    #[test]
    fn zero_activity_limit() {
        let p = CircuitParams::new(2, 4, 0.1, FRAC_PI_2).unwrap();
        let z = partition_function(&p, 20.0, None).unwrap().log_z.exp();
        let expected = 0.25 * (1.0 - 0.1f64.sin().powi(2)).powi(3);
        assert!((z - expected).abs() < 1e-7, "{z} vs {expected}");
        assert!((z - 0.24260).abs() < 1e-5);
    }

    #[test]
    fn unmonitored_has_unit_partition_function() {
        let p = CircuitParams::new(3, 10, 0.4, 0.0).unwrap();
        for s in [-1.0, 0.5, 3.0] {
            assert!(partition_function(&p, s, None).unwrap().log_z.abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_matches_finite_difference() {
        let p = CircuitParams::new(3, 30, 0.3, 0.9).unwrap();
        for s in [-0.2, 0.0, 0.4] {
            let exact = activity_tangent(&p, s).unwrap();
            let fd = activity_density(&p, s, 1e-4).unwrap();
            assert!((exact.a - fd).abs() < 1e-7, "s={s}: {} vs {fd}", exact.a);
            let theta = partition_function(&p, s, None).unwrap().theta;
            assert!((exact.theta - theta).abs() < 1e-13);
        }
    }

    #[test]
    fn synthetic_sigmoid_crossover() {
        let (c, w) = (0.37, 0.05);
        let s: Vec<f64> = (0..101).map(|k| k as f64 * 0.01).collect();
        let a: Vec<f64> = s.iter().map(|x| 1.0 / (1.0 + ((x - c) / w).exp())).collect();
        let cross = crossover_from_samples(&s, &a).unwrap();
        assert!((cross.refined - c).abs() < 0.01);
        assert!((cross.grid_argmax - c).abs() <= 0.005 + 1e-12);
    }

    #[test]
    fn crossover_at_edge_is_an_error() {
        let s: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let a: Vec<f64> = s.iter().map(|x| (-x).exp()).collect();
        assert!(matches!(crossover_from_samples(&s, &a), Err(Error::CrossoverOutsideGrid { .. })));
        assert!(matches!(crossover_from_samples(&s[..4], &a[..4]), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn refinement_converges_on_sigmoid() {
        let c = 0.1234;
        let f = |x: f64| 1.0 / (1.0 + ((x - c) / 0.01).exp());
        let grid: Vec<f64> = (0..11).map(|k| k as f64 * 0.05 - 0.1).collect();
        let (_, _, cross) = refine_crossover(|xs| Ok(xs.iter().map(|&x| f(x)).collect()), &grid, 6, 6).unwrap();
        assert!((cross.refined - c).abs() < 1e-3, "{}", cross.refined);
    }

    #[test]
    fn legendre_of_linear_branches() {
        let phi = legendre_rate_function(&[(-1.0, 0.5), (1.0, -0.5)], &[0.5]);
        assert!(phi[0].abs() < 1e-15);
        let flat: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 0.0)).collect();
        assert_eq!(legendre_rate_function(&flat, &[0.0])[0], 0.0);
    }

    #[test]
    fn plateau_of_constant_series() {
        assert_eq!(plateau_relative_change(&[1.0; 20], 0.1), 0.0);
        assert!(plateau_relative_change(&[1.0, 2.0], 0.1) > 0.0);
    }
}
