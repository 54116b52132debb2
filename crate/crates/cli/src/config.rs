//! Run configurations. Each subcommand reads an optional JSON file and then
//! applies command-line flags on top; flags win.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use floquet_east::effective::{OmegaTildeForm, StepForm};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::list::{parse_f64_list, parse_u64_list, parse_usize_list};

pub fn load<C: DeserializeOwned + Default>(path: Option<&Path>) -> Result<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", p.display()))
        }
    }
}

fn ensure(cond: bool, field: &str, reason: &str) -> Result<()> {
    if !cond {
        bail!("invalid parameter `{field}`: {reason}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Quantum,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    /// Uniformly random basis state per trajectory (the stationary ensemble).
    #[default]
    Mixed,
    AllDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Tangent,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Windows on the rightmost `ell` sites, matching the channel computation.
    #[default]
    Rightmost,
    /// Every window placement away from the driven boundary.
    Bulk,
}

// ---------------------------------------------------------------- sample

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    pub mode: Mode,
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub omega: f64,
    /// Ignored in classical mode (projective measurements).
    pub gamma: f64,
    pub seeds: Vec<u64>,
    /// Trajectories per seed; more than one writes a batch file.
    pub trajectories: usize,
    pub initial: Initial,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Quantum,
            sites: 8,
            steps: 100,
            omega: 0.1,
            gamma: FRAC_PI_2,
            seeds: vec![0],
            trajectories: 1,
            initial: Initial::Mixed,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long = "L")]
    pub sites: Option<usize>,
    #[arg(long = "T")]
    pub steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true, value_parser = crate::list::parse_f64)]
    pub omega: Option<f64>,
    #[arg(long, value_parser = crate::list::parse_f64)]
    pub gamma: Option<f64>,
    /// Seed list, e.g. `0..9` (inclusive) or `1,5,7`.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long, value_enum)]
    pub initial: Option<Initial>,
}

impl SampleConfig {
    pub fn apply(&mut self, a: &SampleArgs, seed: Option<u64>) -> Result<()> {
        if let Some(v) = a.mode {
            self.mode = v;
        }
        if let Some(v) = a.sites {
            self.sites = v;
        }
        if let Some(v) = a.steps {
            self.steps = v;
        }
        if let Some(v) = a.omega {
            self.omega = v;
        }
        if let Some(v) = a.gamma {
            self.gamma = v;
        }
        if let Some(s) = seed {
            self.seeds = vec![s];
        }
        if let Some(v) = &a.seeds {
            self.seeds = parse_u64_list(v)?;
        }
        if let Some(v) = a.trajectories {
            self.trajectories = v;
        }
        if let Some(v) = a.initial {
            self.initial = v;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.sites >= 1, "L", "must be at least 1")?;
        ensure(self.steps >= 1, "T", "must be at least 1")?;
        ensure(self.omega.is_finite(), "omega", "must be finite")?;
        ensure((0.0..=FRAC_PI_2 + 1e-12).contains(&self.gamma), "gamma", "must lie in [0, π/2]")?;
        ensure(!self.seeds.is_empty(), "seeds", "at least one seed is required")?;
        ensure(self.trajectories >= 1, "trajectories", "must be at least 1")
    }
}

// ---------------------------------------------------------------- phase-diagram

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseDiagramConfig {
    pub mode: Mode,
    #[serde(rename = "L")]
    pub sites: Vec<usize>,
    /// Ignored in classical mode (infinite-time eigenvalue).
    #[serde(rename = "T")]
    pub steps: usize,
    pub omega: f64,
    /// Ignored in classical mode (γ = π/2).
    pub gamma: Vec<f64>,
    pub s: Vec<f64>,
    pub method: Method,
    pub ds: f64,
    pub refine_rounds: usize,
    pub refine_points: usize,
    /// Classical power-iteration tolerance.
    pub tol: f64,
    /// Also write the `t,lambda` increment series per quantum grid point.
    pub diagnostics: bool,
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Quantum,
            sites: vec![4],
            steps: 2000,
            omega: 0.1,
            gamma: vec![0.3, 0.5, 1.0, FRAC_PI_2],
            s: (0..=44).map(|k| -0.02 + 0.005 * k as f64).collect(),
            method: Method::Tangent,
            ds: floquet_east::large_deviations::DEFAULT_DS,
            refine_rounds: 2,
            refine_points: 4,
            tol: 1e-12,
            diagnostics: false,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct PhaseDiagramArgs {
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// System sizes, e.g. `4..12:2`.
    #[arg(long = "L")]
    pub sites: Option<String>,
    #[arg(long = "T")]
    pub steps: Option<usize>,
    #[arg(long, allow_hyphen_values = true, value_parser = crate::list::parse_f64)]
    pub omega: Option<f64>,
    /// Measurement strengths, e.g. `0.3,0.5,1.0,pi/2`.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Counting fields, e.g. `-0.02..0.2:0.002`.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub ds: Option<f64>,
    #[arg(long)]
    pub refine_rounds: Option<usize>,
    #[arg(long)]
    pub refine_points: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub diagnostics: bool,
}

impl PhaseDiagramConfig {
    pub fn apply(&mut self, a: &PhaseDiagramArgs) -> Result<()> {
        if let Some(v) = a.mode {
            self.mode = v;
        }
        if let Some(v) = &a.sites {
            self.sites = parse_usize_list(v)?;
        }
        if let Some(v) = a.steps {
            self.steps = v;
        }
        if let Some(v) = a.omega {
            self.omega = v;
        }
        if let Some(v) = &a.gamma {
            self.gamma = parse_f64_list(v)?;
        }
        if let Some(v) = &a.s {
            self.s = parse_f64_list(v)?;
        }
        if let Some(v) = a.method {
            self.method = v;
        }
        if let Some(v) = a.ds {
            self.ds = v;
        }
        if let Some(v) = a.refine_rounds {
            self.refine_rounds = v;
        }
        if let Some(v) = a.refine_points {
            self.refine_points = v;
        }
        if let Some(v) = a.tol {
            self.tol = v;
        }
        self.diagnostics |= a.diagnostics;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.sites.is_empty() && self.sites.iter().all(|&l| l >= 1), "L", "need sizes ≥ 1")?;
        ensure(self.steps >= 1, "T", "must be at least 1")?;
        ensure(self.omega.is_finite(), "omega", "must be finite")?;
        ensure(
            self.gamma.iter().all(|g| (0.0..=FRAC_PI_2 + 1e-12).contains(g)),
            "gamma",
            "values must lie in [0, π/2]",
        )?;
        ensure(self.s.len() >= 5, "s", "need at least 5 grid points")?;
        ensure(self.s.iter().all(|s| s.is_finite()), "s", "values must be finite")?;
        ensure(self.ds > 0.0, "ds", "must be positive")?;
        ensure(self.tol > 0.0, "tol", "must be positive")
    }
}

// ---------------------------------------------------------------- classical-scgf

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassicalScgfConfig {
    #[serde(rename = "L")]
    pub sites: Vec<usize>,
    pub omega: f64,
    /// Flip probability; overrides `omega` (p = sin²ω) when set.
    pub p: Option<f64>,
    pub s: Vec<f64>,
    pub tol: f64,
    pub crossover: bool,
    pub refine_rounds: usize,
    pub refine_points: usize,
}

impl Default for ClassicalScgfConfig {
    fn default() -> Self {
        Self {
            sites: vec![4, 6, 8],
            omega: 0.1,
            p: None,
            s: (0..=24).map(|k| -0.002 + 5e-4 * k as f64).collect(),
            tol: 1e-13,
            crossover: true,
            refine_rounds: 4,
            refine_points: 4,
        }
    }
}

impl ClassicalScgfConfig {
    pub fn flip_probability(&self) -> f64 {
        self.p.unwrap_or_else(|| self.omega.sin().powi(2))
    }

    pub fn apply(&mut self, a: &ClassicalScgfArgs) -> Result<()> {
        if let Some(v) = &a.sites {
            self.sites = parse_usize_list(v)?;
        }
        if let Some(v) = a.omega {
            self.omega = v;
            self.p = None;
        }
        if let Some(v) = a.p {
            self.p = Some(v);
        }
        if let Some(v) = &a.s {
            self.s = parse_f64_list(v)?;
        }
        if let Some(v) = a.tol {
            self.tol = v;
        }
        if a.no_crossover {
            self.crossover = false;
        }
        if let Some(v) = a.refine_rounds {
            self.refine_rounds = v;
        }
        if let Some(v) = a.refine_points {
            self.refine_points = v;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.sites.is_empty() && self.sites.iter().all(|&l| l >= 1), "L", "need sizes ≥ 1")?;
        let p = self.flip_probability();
        ensure((0.0..1.0).contains(&p), "p", "must lie in [0, 1) for the eigenvalue path")?;
        ensure(!self.s.is_empty() && self.s.iter().all(|s| s.is_finite()), "s", "need finite values")?;
        ensure(!self.crossover || self.s.len() >= 5, "s", "crossover search needs at least 5 points")?;
        ensure(self.tol > 0.0, "tol", "must be positive")
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ClassicalScgfArgs {
    #[arg(long = "L")]
    pub sites: Option<String>,
    #[arg(long, allow_hyphen_values = true, value_parser = crate::list::parse_f64)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Skip the s* search.
    #[arg(long)]
    pub no_crossover: bool,
    #[arg(long)]
    pub refine_rounds: Option<usize>,
    #[arg(long)]
    pub refine_points: Option<usize>,
}

// ---------------------------------------------------------------- clusters

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClustersConfig {
    #[serde(rename = "L")]
    pub sites: usize,
    pub omega: f64,
    pub gamma: Vec<f64>,
    /// Fit grid; defaults to {8..16} for L ≥ 32 and {2..L/2} otherwise.
    pub ell: Option<Vec<usize>>,
    pub tau_max: usize,
    /// Also estimate F from sampled trajectories.
    pub empirical: bool,
    pub trajectories: usize,
    pub empirical_steps: usize,
    pub placement: Placement,
    /// Excluded sites next to the driven boundary (bulk placement).
    pub margin_sites: usize,
    /// Excluded initial steps.
    pub margin_steps: usize,
    /// Largest τ estimated empirically.
    pub empirical_tau_max: usize,
    pub seed: u64,
}

impl Default for ClustersConfig {
    fn default() -> Self {
        Self {
            sites: 10,
            omega: 0.1,
            gamma: vec![0.7, 1.0, 1.3, FRAC_PI_2],
            ell: None,
            tau_max: 40,
            empirical: false,
            trajectories: 200,
            empirical_steps: 200,
            placement: Placement::Rightmost,
            margin_sites: 2,
            margin_steps: 0,
            empirical_tau_max: 6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ClustersArgs {
    #[arg(long = "L")]
    pub sites: Option<usize>,
    #[arg(long, allow_hyphen_values = true, value_parser = crate::list::parse_f64)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub ell: Option<String>,
    #[arg(long)]
    pub tau_max: Option<usize>,
    #[arg(long)]
    pub empirical: bool,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub empirical_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub placement: Option<Placement>,
    #[arg(long)]
    pub margin_sites: Option<usize>,
    #[arg(long)]
    pub margin_steps: Option<usize>,
    #[arg(long)]
    pub empirical_tau_max: Option<usize>,
}

impl ClustersConfig {
    pub fn apply(&mut self, a: &ClustersArgs, seed: Option<u64>) -> Result<()> {
        if let Some(v) = a.sites {
            self.sites = v;
        }
        if let Some(v) = a.omega {
            self.omega = v;
        }
        if let Some(v) = &a.gamma {
            self.gamma = parse_f64_list(v)?;
        }
        if let Some(v) = &a.ell {
            self.ell = Some(parse_usize_list(v)?);
        }
        if let Some(v) = a.tau_max {
            self.tau_max = v;
        }
        self.empirical |= a.empirical;
        if let Some(v) = a.trajectories {
            self.trajectories = v;
        }
        if let Some(v) = a.empirical_steps {
            self.empirical_steps = v;
        }
        if let Some(v) = a.placement {
            self.placement = v;
        }
        if let Some(v) = a.margin_sites {
            self.margin_sites = v;
        }
        if let Some(v) = a.margin_steps {
            self.margin_steps = v;
        }
        if let Some(v) = a.empirical_tau_max {
            self.empirical_tau_max = v;
        }
        if let Some(v) = seed {
            self.seed = v;
        }
        self.validate()
    }

    pub fn ell_grid(&self) -> (Vec<usize>, bool) {
        match &self.ell {
            Some(v) => (v.clone(), v.as_slice() != (8..=16).collect::<Vec<_>>().as_slice()),
            None => floquet_east::clusters::default_ell_grid(self.sites),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.sites >= 2, "L", "must be at least 2")?;
        ensure(self.omega.is_finite(), "omega", "must be finite")?;
        ensure(
            !self.gamma.is_empty() && self.gamma.iter().all(|g| (0.0..=FRAC_PI_2 + 1e-12).contains(g)),
            "gamma",
            "values must lie in [0, π/2]",
        )?;
        let (ells, _) = self.ell_grid();
        ensure(
            ells.iter().all(|&l| l >= 1 && l <= self.sites),
            "ell",
            "values must lie in [1, L]",
        )?;
        ensure(self.tau_max >= 2, "tau_max", "must be at least 2")?;
        if self.empirical {
            ensure(self.trajectories >= 1, "trajectories", "must be at least 1")?;
            ensure(
                self.empirical_tau_max >= 1 && self.empirical_tau_max + self.margin_steps <= self.empirical_steps,
                "empirical_tau_max",
                "windows must fit in the sampled time after the margin",
            )?;
            if self.placement == Placement::Bulk {
                ensure(
                    ells.iter().all(|&l| l + self.margin_sites <= self.sites),
                    "margin_sites",
                    "windows must fit in the chain after the margin",
                )?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------- effective

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectiveConfig {
    #[serde(rename = "L")]
    pub sites: usize,
    pub horizon: usize,
    pub gamma: Vec<f64>,
    pub omega: Vec<f64>,
    pub forms: Vec<OmegaTildeForm>,
    pub step_forms: Vec<StepForm>,
    pub initial: Initial,
    pub min_gamma: f64,
    /// `tau_star.csv` from the clusters subcommand, rescaled into `rescaled_tau_star.csv`.
    pub tau_star_csv: Option<PathBuf>,
}

impl Default for EffectiveConfig {
    fn default() -> Self {
        Self {
            sites: 4,
            horizon: 10,
            gamma: vec![1.0, 1.4, FRAC_PI_2],
            omega: vec![0.1, 0.05, 0.025, 0.0],
            forms: OmegaTildeForm::ALL.to_vec(),
            step_forms: vec![StepForm::Exponential],
            initial: Initial::AllDown,
            min_gamma: floquet_east::effective::DEFAULT_MIN_GAMMA,
            tau_star_csv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepFormArg {
    Linear,
    Exponential,
    Both,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EffectiveArgs {
    #[arg(long = "L")]
    pub sites: Option<usize>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long, value_enum)]
    pub step: Option<StepFormArg>,
    #[arg(long, value_enum)]
    pub initial: Option<Initial>,
    #[arg(long)]
    pub min_gamma: Option<f64>,
    #[arg(long)]
    pub tau_star_csv: Option<PathBuf>,
}

impl EffectiveConfig {
    pub fn apply(&mut self, a: &EffectiveArgs) -> Result<()> {
        if let Some(v) = a.sites {
            self.sites = v;
        }
        if let Some(v) = a.horizon {
            self.horizon = v;
        }
        if let Some(v) = &a.gamma {
            self.gamma = parse_f64_list(v)?;
        }
        if let Some(v) = &a.omega {
            self.omega = parse_f64_list(v)?;
        }
        if let Some(v) = a.step {
            self.step_forms = match v {
                StepFormArg::Linear => vec![StepForm::Linear],
                StepFormArg::Exponential => vec![StepForm::Exponential],
                StepFormArg::Both => vec![StepForm::Linear, StepForm::Exponential],
            };
        }
        if let Some(v) = a.initial {
            self.initial = v;
        }
        if let Some(v) = a.min_gamma {
            self.min_gamma = v;
        }
        if let Some(v) = &a.tau_star_csv {
            self.tau_star_csv = Some(v.clone());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.sites >= 1, "L", "must be at least 1")?;
        ensure(self.horizon >= 1, "horizon", "must be at least 1")?;
        ensure(!self.gamma.is_empty(), "gamma", "need at least one value")?;
        ensure(
            self.gamma.iter().all(|g| (0.0..=FRAC_PI_2 + 1e-12).contains(g)),
            "gamma",
            "values must lie in [0, π/2]",
        )?;
        ensure(!self.omega.is_empty() && self.omega.iter().all(|w| w.is_finite()), "omega", "need finite values")?;
        ensure(!self.forms.is_empty(), "forms", "need at least one form")?;
        ensure(!self.step_forms.is_empty(), "step_forms", "need at least one step form")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let mut c: SampleConfig = serde_json::from_str(r#"{"L": 5, "T": 7, "omega": 0.2, "seeds": [3]}"#).unwrap();
        let args = SampleArgs {
            steps: Some(9),
            seeds: Some("0..2".into()),
            ..Default::default()
        };
        c.apply(&args, None).unwrap();
        assert_eq!((c.sites, c.steps, c.omega), (5, 9, 0.2));
        assert_eq!(c.seeds, vec![0, 1, 2]);
    }

    #[test]
    fn invalid_values_name_the_field() {
        let mut c = SampleConfig::default();
        let args = SampleArgs {
            gamma: Some(2.0),
            ..Default::default()
        };
        let err = c.apply(&args, None).unwrap_err().to_string();
        assert!(err.contains("`gamma`"), "{err}");
    }

    #[test]
    fn sidecar_fields_are_ignored_on_reload() {
        let json = r#"{"tool": "x", "subcommand": "effective", "L": 3, "forms": ["bracket"]}"#;
        let c: EffectiveConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.sites, 3);
        assert_eq!(c.forms, vec![OmegaTildeForm::Bracket]);
    }
}
