//! Effective classical East dynamics for strong measurements (`γ` near `π/2`)
//! and small `ω`, and a harness measuring its distance to the full channel.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::basis::site_mask;
use crate::circuit::frame::{diagonal_frame, frame_diagonal, KrausMask, RealFrame};
use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;
use crate::params::{CircuitParams, DenseLimits};

/// Which closed form is used for the effective flip rate `ω̃²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaTildeForm {
    /// `cot²(γ/2) ω²`.
    #[default]
    CotSquared,
    /// `ω² / (1 - cos γ)`.
    Bracket,
}

impl OmegaTildeForm {
    pub const ALL: [Self; 2] = [Self::CotSquared, Self::Bracket];

    pub fn name(&self) -> &'static str {
        match self {
            Self::CotSquared => "cot-squared",
            Self::Bracket => "bracket",
        }
    }
}

/// Effective flip rate `ω̃²` for `γ ∈ (0, π]`.
pub fn effective_flip_rate(omega: f64, gamma: f64, form: OmegaTildeForm) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= std::f64::consts::PI) {
        return Err(invalid("gamma", format!("{gamma} not in (0, π]; the effective model needs γ ≠ 0")));
    }
    let w2 = omega * omega;
    Ok(match form {
        OmegaTildeForm::CotSquared => {
            let t = (0.5 * gamma).tan();
            w2 / (t * t)
        }
        OmegaTildeForm::Bracket => w2 / (1.0 - gamma.cos()),
    })
}

/// `tan²(γ/2) τ`.
pub fn rescaled_time(tau: f64, gamma: f64) -> f64 {
    (0.5 * gamma).tan().powi(2) * tau
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    pub omega_tilde_sq: f64,
    #[serde(rename = "L")]
    pub sites: usize,
}

impl EffectiveParams {
    pub fn new(sites: usize, omega_tilde_sq: f64) -> Result<Self> {
        if !(omega_tilde_sq >= 0.0) || !omega_tilde_sq.is_finite() {
            return Err(invalid("omega_tilde_sq", format!("{omega_tilde_sq} must be non-negative")));
        }
        if sites == 0 {
            return Err(invalid("L", "must be at least 1"));
        }
        Ok(Self { omega_tilde_sq, sites })
    }

    /// Whether the single-step linear form is a stochastic matrix.
    pub fn linear_form_valid(&self) -> bool {
        self.sites as f64 * self.omega_tilde_sq <= 1.0
    }
}

/// Continuous-time East generator `W = ω̃² Σ_i n_{i-1} (σ^x_i - 1)` with
/// `n_0 = 1`, column convention.
pub fn east_generator(params: &EffectiveParams) -> Result<DenseMatrix> {
    DenseLimits::current().check_statevector(params.sites)?;
    let dim = 1usize << params.sites;
    let rate = params.omega_tilde_sq;
    let mut w = DenseMatrix::zeros(dim);
    for n in 0..dim {
        for i in 1..=params.sites {
            if i == 1 || n & site_mask(i - 1) != 0 {
                let m = n ^ site_mask(i);
                w.set(m, n, w.get(m, n) + rate);
                w.set(n, n, w.get(n, n) - rate);
            }
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepForm {
    /// `1 + W`, the first-order expansion.
    Linear,
    /// `exp(W)`.
    #[default]
    Exponential,
}

impl StepForm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveStep {
    pub matrix: DenseMatrix,
    /// The form actually used.
    pub form: StepForm,
    /// A linear step was requested but had a negative diagonal.
    pub fell_back: bool,
}

/// One-step matrix of the effective chain.
pub fn effective_transition_step(params: &EffectiveParams, form: StepForm) -> Result<EffectiveStep> {
    let w = east_generator(params)?;
    let dim = w.dim();
    let exponential = |fell_back| EffectiveStep {
        matrix: DenseMatrix::from_nalgebra(&w.to_nalgebra().exp()),
        form: StepForm::Exponential,
        fell_back,
    };
    match form {
        StepForm::Exponential => Ok(exponential(false)),
        StepForm::Linear => {
            if (0..dim).any(|n| 1.0 + w.get(n, n) < 0.0) {
                warn!(
                    "linear effective step has a negative diagonal (L ω̃² = {}); using exp(W)",
                    params.sites as f64 * params.omega_tilde_sq
                );
                return Ok(exponential(true));
            }
            let mut m = w;
            for n in 0..dim {
                m.set(n, n, m.get(n, n) + 1.0);
            }
            Ok(EffectiveStep {
                matrix: m,
                form: StepForm::Linear,
                fell_back: false,
            })
        }
    }
}

/// Heuristic lower bound on `γ` for the effective model.
pub const DEFAULT_MIN_GAMMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub rate_form: OmegaTildeForm,
    pub step_form: StepForm,
    pub min_gamma: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            rate_form: OmegaTildeForm::default(),
            step_form: StepForm::default(),
            min_gamma: DEFAULT_MIN_GAMMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub omega_tilde_sq: f64,
    pub step_form: StepForm,
    /// `max_m |ρ_t(m,m) - μ_t(m)|` for `t = 1..=horizon`, both evolved from the
    /// same initial distribution.
    pub global: Vec<f64>,
    /// One-step error `max_m |E(ρ_{t-1})(m,m) - (P μ)(m)|` with `μ = diag ρ_{t-1}`.
    pub local: Vec<f64>,
}

impl DeviationSeries {
    pub fn max_global(&self) -> f64 {
        self.global.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_local(&self) -> f64 {
        self.local.iter().copied().fold(0.0, f64::max)
    }
}

/// Evolves the full channel and the effective chain from the same diagonal
/// initial state and records the max-norm distance of the diagonal
/// probabilities at each step.
pub fn compare_effective_vs_full(
    params: &CircuitParams,
    horizon: usize,
    initial: &[f64],
    opts: CompareOptions,
) -> Result<DeviationSeries> {
    params.validate()?;
    if params.gamma < opts.min_gamma {
        return Err(invalid(
            "gamma",
            format!("{} below the effective-model threshold {}", params.gamma, opts.min_gamma),
        ));
    }
    let dim = params.dim();
    if initial.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: initial.len(),
        });
    }
    if initial.iter().any(|&p| p < 0.0) || (initial.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(invalid("initial", "must be a probability distribution"));
    }
    let rate = effective_flip_rate(params.omega, params.gamma, opts.rate_form)?;
    let step = effective_transition_step(&EffectiveParams::new(params.sites, rate)?, opts.step_form)?;
    let frame = RealFrame::new(params.sites, params.omega)?;
    let mask = KrausMask::with_weights(params.gamma, &vec![1.0; params.sites]);
    let mut rho = diagonal_frame(initial);
    let mut mu = initial.to_vec();
    let mut scratch = Vec::new();
    let mut global = Vec::with_capacity(horizon);
    let mut local = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let prev = frame_diagonal(&rho, dim);
        frame.conjugate_symmetric(&mut rho, &mut scratch);
        mask.apply(&mut rho);
        let full = frame_diagonal(&rho, dim);
        let one_step = step.matrix.matvec(&prev);
        mu = step.matrix.matvec(&mu);
        local.push(max_abs_diff(&full, &one_step));
        global.push(max_abs_diff(&full, &mu));
    }
    Ok(DeviationSeries {
        omega_tilde_sq: rate,
        step_form: step.form,
        global,
        local,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
