//! Inactive space-time clusters: probabilities `p_{ℓ×τ}` that no click occurs on
//! the rightmost `ℓ` sites for `τ` consecutive steps, their free energies
//! `F = -log p`, the area/perimeter decomposition of the temporal increments and
//! the crossover time `τ*`.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::frame::{forbidden_click_weights, frame_trace, stationary_frame, KrausMask, RealFrame, TRACE_FLOOR};
use crate::effective::rescaled_time;
use crate::error::{invalid, Error, Result};
use crate::params::CircuitParams;
use crate::record::MeasurementRecord;

/// Bit mask of the rightmost `ell` sites `{L-ℓ+1..L}`.
pub fn cluster_site_mask(sites: usize, ell: usize) -> usize {
    ((1usize << ell) - 1) << (sites - ell)
}

/// `F_{ℓ×τ}` for `τ = 1..=tau_max` from a single conditioned evolution of the
/// stationary state: cluster sites keep only the no-click branch `K0`, the
/// others evolve with the full channel.
pub fn cluster_free_energy_series(params: &CircuitParams, ell: usize, tau_max: usize) -> Result<Vec<f64>> {
    params.validate()?;
    if ell > params.sites {
        return Err(invalid("ell", format!("{ell} exceeds L = {}", params.sites)));
    }
    let frame = RealFrame::new(params.sites, params.omega)?;
    let weights = forbidden_click_weights(params.sites, cluster_site_mask(params.sites, ell));
    let mask = KrausMask::with_weights(params.gamma, &weights);
    let dim = frame.dim();
    let mut m = stationary_frame(params.sites);
    let mut scratch = Vec::new();
    let mut f = 0.0;
    let mut out = Vec::with_capacity(tau_max);
    for t in 1..=tau_max {
        frame.conjugate_symmetric(&mut m, &mut scratch);
        mask.apply(&mut m);
        let tr = frame_trace(&m, dim);
        if !(tr >= TRACE_FLOOR) {
            return Err(Error::TraceUnderflow { trace: tr, step: t });
        }
        m.iter_mut().for_each(|x| *x /= tr);
        f -= tr.ln();
        out.push(f);
    }
    Ok(out)
}

/// `p_{ℓ×τ}`: probability of an all-zero `ℓ × τ` window on the rightmost
/// sites, starting from the stationary state.
pub fn inactive_cluster_probability(params: &CircuitParams, ell: usize, tau: usize) -> Result<f64> {
    if tau == 0 {
        return Ok(1.0);
    }
    Ok((-cluster_free_energy_series(params, ell, tau)?[tau - 1]).exp())
}

/// Region excluded from empirical window counting: the first `sites` sites
/// next to the driven boundary and the first `steps` timesteps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowMargin {
    pub sites: usize,
    pub steps: usize,
}

impl Default for WindowMargin {
    fn default() -> Self {
        Self { sites: 8, steps: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    /// `-log(hits / windows)`, or the lower bound `log(windows)` if censored.
    pub free_energy: f64,
    /// Delta-method binomial error `√((1-f) / (n f))`. Overlapping windows are
    /// correlated, so this underestimates the true error.
    pub std_error: f64,
    pub hits: u64,
    pub windows: u64,
    /// No all-zero window was seen.
    pub censored: bool,
}

/// Counts all-zero `ℓ × τ` windows over every allowed placement in every record.
pub fn empirical_cluster_free_energy(
    records: &[MeasurementRecord],
    ell: usize,
    tau: usize,
    margin: WindowMargin,
) -> Result<EmpiricalEstimate> {
    let first = records.first().ok_or_else(|| invalid("records", "empty batch"))?;
    let (sites, steps) = (first.sites(), first.steps());
    if records.iter().any(|r| r.sites() != sites || r.steps() != steps) {
        return Err(invalid("records", "records must share L and T"));
    }
    if ell == 0 || tau == 0 {
        return Err(invalid("window", "ell and tau must be positive"));
    }
    if margin.sites + ell > sites || margin.steps + tau > steps {
        return Err(invalid(
            "margin",
            format!("no {ell}x{tau} window fits in {sites}x{steps} after margin {margin:?}"),
        ));
    }
    let per_record = ((sites - ell - margin.sites + 1) * (steps - tau - margin.steps + 1)) as u64;
    let hits: u64 = records
        .par_iter()
        .map(|r| count_empty_windows(r, ell, tau, margin))
        .sum();
    let windows = per_record * records.len() as u64;
    Ok(if hits == 0 {
        EmpiricalEstimate {
            free_energy: (windows as f64).ln(),
            std_error: f64::INFINITY,
            hits,
            windows,
            censored: true,
        }
    } else {
        let f = hits as f64 / windows as f64;
        EmpiricalEstimate {
            free_energy: -f.ln(),
            std_error: ((1.0 - f) / (windows as f64 * f)).sqrt(),
            hits,
            windows,
            censored: false,
        }
    })
}

fn count_empty_windows(r: &MeasurementRecord, ell: usize, tau: usize, margin: WindowMargin) -> u64 {
    let (sites, steps) = (r.sites(), r.steps());
    // Summed-area table with a zero border.
    let w = sites + 1;
    let mut sat = vec![0u32; (steps + 1) * w];
    for t in 0..steps {
        let mut row = 0u32;
        for i in 0..sites {
            row += r.get(i, t) as u32;
            sat[(t + 1) * w + i + 1] = sat[t * w + i + 1] + row;
        }
    }
    let mut hits = 0;
    for t0 in margin.steps..=steps - tau {
        for i0 in margin.sites..=sites - ell {
            let (t1, i1) = (t0 + tau, i0 + ell);
            let total = sat[t1 * w + i1] + sat[t0 * w + i0] - sat[t0 * w + i1] - sat[t1 * w + i0];
            hits += (total == 0) as u64;
        }
    }
    hits
}

/// Least-squares fit `Δ_τ F = α_τ ℓ + β_τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaPerimeterFit {
    pub alpha: f64,
    pub beta: f64,
    /// Euclidean norm of the fit residuals.
    pub residual: f64,
}

impl AreaPerimeterFit {
    pub fn ratio(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// Ordinary least squares on `(ℓ, Δ_τ F)` points.
pub fn fit_area_perimeter(points: &[(f64, f64)]) -> Result<AreaPerimeterFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::DegenerateGrid(format!("need at least 3 distinct ell values, got {}", xs.len())));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let alpha = sxy / sxx;
    let beta = my - alpha * mx;
    let residual = points
        .iter()
        .map(|p| (p.1 - alpha * p.0 - beta).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(AreaPerimeterFit { alpha, beta, residual })
}

/// First `τ` with `β_τ / α_τ > L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverTime {
    /// `None` if the ratio never exceeds `L` on the available range (censored).
    pub tau_star: Option<usize>,
    /// `β_τ / α_τ` for every fitted `τ`, in order.
    pub ratios: Vec<(usize, f64)>,
    /// The crossing was triggered by `α_τ ≤ 0` rather than by the ratio.
    pub nonpositive_alpha: bool,
}

pub fn crossover_time(fits: &[(usize, AreaPerimeterFit)], sites: usize) -> Result<CrossoverTime> {
    if fits.is_empty() {
        return Err(invalid("fits", "empty fit series"));
    }
    if fits.windows(2).any(|w| w[1].0 != w[0].0 + 1) {
        return Err(invalid("fits", "tau values must be contiguous and increasing"));
    }
    let ratios: Vec<(usize, f64)> = fits.iter().map(|(t, f)| (*t, f.ratio())).collect();
    for (tau, fit) in fits {
        if fit.alpha <= 0.0 {
            warn!("alpha_tau = {:e} <= 0 at tau = {tau}; perimeter term already dominant", fit.alpha);
            return Ok(CrossoverTime {
                tau_star: Some(*tau),
                ratios,
                nonpositive_alpha: true,
            });
        }
        if fit.ratio() > sites as f64 {
            return Ok(CrossoverTime {
                tau_star: Some(*tau),
                ratios,
                nonpositive_alpha: false,
            });
        }
    }
    Ok(CrossoverTime {
        tau_star: None,
        ratios,
        nonpositive_alpha: false,
    })
}

/// Free energies, fits and `τ*` for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFreeEnergyTable {
    pub gamma: f64,
    pub omega: f64,
    #[serde(rename = "L")]
    pub sites: usize,
    pub entries: BTreeMap<(usize, usize), f64>,
    pub fits: BTreeMap<usize, AreaPerimeterFit>,
    pub crossover: Option<CrossoverTime>,
    /// The ℓ grid used for fits, and whether it was reduced from {8..16}.
    pub ell_grid: Vec<usize>,
    pub reduced_grid: bool,
}

impl ClusterFreeEnergyTable {
    pub fn new(gamma: f64, omega: f64, sites: usize) -> Self {
        Self {
            gamma,
            omega,
            sites,
            entries: BTreeMap::new(),
            fits: BTreeMap::new(),
            crossover: None,
            ell_grid: Vec::new(),
            reduced_grid: false,
        }
    }

    pub fn get(&self, ell: usize, tau: usize) -> Result<f64> {
        self.entries.get(&(ell, tau)).copied().ok_or(Error::MissingEntry { ell, tau })
    }

    pub fn tau_star(&self) -> Option<usize> {
        self.crossover.as_ref().and_then(|c| c.tau_star)
    }

    /// `tan²(γ/2) τ*`.
    pub fn rescaled_tau_star(&self) -> Option<f64> {
        self.tau_star().map(|t| rescaled_time(t as f64, self.gamma))
    }

    /// Whether every entry is non-negative and non-decreasing in `ℓ` and `τ`
    /// (up to `tol`).
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.entries.iter().all(|(&(ell, tau), &f)| {
            f >= -tol
                && self.entries.get(&(ell + 1, tau)).is_none_or(|&g| g >= f - tol)
                && self.entries.get(&(ell, tau + 1)).is_none_or(|&g| g >= f - tol)
        })
    }
}

/// `Δ_τ F_{ℓ×τ} = F_{ℓ×(τ+1)} - F_{ℓ×τ}`.
pub fn temporal_increment(table: &ClusterFreeEnergyTable, ell: usize, tau: usize) -> Result<f64> {
    Ok(table.get(ell, tau + 1)? - table.get(ell, tau)?)
}

/// Fit grid: {8..16} when the chain is long enough, otherwise {2..L/2}.
pub fn default_ell_grid(sites: usize) -> (Vec<usize>, bool) {
    if sites >= 32 {
        ((8..=16).collect(), false)
    } else {
        ((2..=(sites / 2).max(2)).collect(), true)
    }
}

/// Conditioned-channel table for `ells × {1..=tau_max}` with fits for
/// `τ = 1..tau_max-1` and the crossover time.
pub fn build_cluster_table(params: &CircuitParams, ells: &[usize], tau_max: usize) -> Result<ClusterFreeEnergyTable> {
    let series: Vec<Vec<f64>> = ells
        .par_iter()
        .map(|&ell| cluster_free_energy_series(params, ell, tau_max))
        .collect::<Result<_>>()?;
    cluster_table_from_series(params, ells, &series)
}

/// Assembles a table, its fits and `τ*` from precomputed rows
/// `series[k][τ-1] = F_{ells[k]×τ}`. Rows must share one length.
pub fn cluster_table_from_series(
    params: &CircuitParams,
    ells: &[usize],
    series: &[Vec<f64>],
) -> Result<ClusterFreeEnergyTable> {
    if series.len() != ells.len() {
        return Err(Error::DimensionMismatch {
            expected: ells.len(),
            actual: series.len(),
        });
    }
    let tau_max = series.first().map_or(0, Vec::len);
    if series.iter().any(|row| row.len() != tau_max) {
        return Err(invalid("series", "rows must have equal length"));
    }
    let mut table = ClusterFreeEnergyTable::new(params.gamma, params.omega, params.sites);
    table.ell_grid = ells.to_vec();
    table.reduced_grid = ells != (8..=16).collect::<Vec<_>>().as_slice();
    for (&ell, row) in ells.iter().zip(series) {
        for (k, &f) in row.iter().enumerate() {
            table.entries.insert((ell, k + 1), f);
        }
    }
    if ells.len() >= 3 {
        let mut fits = Vec::new();
        for tau in 1..tau_max {
            let points: Vec<(f64, f64)> = ells
                .iter()
                .map(|&ell| Ok((ell as f64, temporal_increment(&table, ell, tau)?)))
                .collect::<Result<_>>()?;
            let fit = fit_area_perimeter(&points)?;
            table.fits.insert(tau, fit);
            fits.push((tau, fit));
        }
        if !fits.is_empty() {
            table.crossover = Some(crossover_time(&fits, params.sites)?);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn single_step_law() {
        for gamma in [0.2, 0.7, 1.3, FRAC_PI_2] {
            let p = CircuitParams::new(6, 1, 0.3, gamma).unwrap();
            for ell in 1..=3 {
                let got = inactive_cluster_probability(&p, ell, 1).unwrap();
                let expected = (1.0 - gamma.sin().powi(2) / 2.0).powi(ell as i32);
                assert!((got - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unmonitored_clusters_are_certain() {
        let p = CircuitParams::new(4, 1, 0.3, 0.0).unwrap();
        assert!((inactive_cluster_probability(&p, 2, 5).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_cluster() {
        let p = CircuitParams::new(4, 1, 0.3, 0.5).unwrap();
        assert!(inactive_cluster_probability(&p, 5, 1).is_err());
    }

    #[test]
    fn mask_covers_rightmost_sites() {
        assert_eq!(cluster_site_mask(5, 2), 0b11000);
        assert_eq!(cluster_site_mask(5, 5), 0b11111);
    }

    #[test]
    fn empirical_counts() {
        let zeros = vec![MeasurementRecord::zeros(4, 6, 0); 3];
        let est = empirical_cluster_free_energy(&zeros, 2, 2, WindowMargin { sites: 0, steps: 0 }).unwrap();
        assert_eq!(est.free_energy, 0.0);
        assert_eq!(est.windows, 3 * 3 * 5);
        let ones = vec![MeasurementRecord::from_outcomes(2, 2, vec![1; 4], 0).unwrap()];
        let est = empirical_cluster_free_energy(&ones, 1, 1, WindowMargin { sites: 0, steps: 0 }).unwrap();
        assert!(est.censored);
        assert!((est.free_energy - 4f64.ln()).abs() < 1e-15);
        // One zero at (site 2, time 1).
        let one_zero = vec![MeasurementRecord::from_outcomes(2, 2, vec![1, 0, 1, 1], 0).unwrap()];
        let est = empirical_cluster_free_energy(&one_zero, 1, 1, WindowMargin { sites: 1, steps: 0 }).unwrap();
        assert_eq!((est.hits, est.windows), (1, 2));
        assert!(empirical_cluster_free_energy(&one_zero, 2, 2, WindowMargin { sites: 1, steps: 0 }).is_err());
    }

    #[test]
    fn exact_linear_fit() {
        let pts: Vec<(f64, f64)> = (2..7).map(|l| (l as f64, 0.1 * l as f64 + 0.5)).collect();
        let fit = fit_area_perimeter(&pts).unwrap();
        assert!((fit.alpha - 0.1).abs() < 1e-14);
        assert!((fit.beta - 0.5).abs() < 1e-14);
        assert!(fit.residual < 1e-14);
        assert!(fit_area_perimeter(&pts[..2]).is_err());
    }

    fn fit(alpha: f64, beta: f64) -> AreaPerimeterFit {
        AreaPerimeterFit { alpha, beta, residual: 0.0 }
    }

    #[test]
    fn first_crossing() {
        let l = 10.0;
        let fits = vec![(1, fit(1.0, 0.5 * l)), (2, fit(1.0, 0.9 * l)), (3, fit(1.0, 1.2 * l))];
        assert_eq!(crossover_time(&fits, 10).unwrap().tau_star, Some(3));
        let never = vec![(1, fit(1.0, 0.5 * l))];
        assert_eq!(crossover_time(&never, 10).unwrap().tau_star, None);
        let negative = vec![(1, fit(1.0, 0.5)), (2, fit(-1e-3, 0.5))];
        let c = crossover_time(&negative, 10).unwrap();
        assert_eq!(c.tau_star, Some(2));
        assert!(c.nonpositive_alpha);
    }

    #[test]
    fn increments_of_synthetic_table() {
        let mut t = ClusterFreeEnergyTable::new(1.0, 0.1, 6);
        for ell in 1..4 {
            for tau in 1..5 {
                t.entries.insert((ell, tau), 0.3 * (ell * tau) as f64);
            }
        }
        assert!((temporal_increment(&t, 2, 3).unwrap() - 0.6).abs() < 1e-14);
        assert!(matches!(temporal_increment(&t, 2, 4), Err(Error::MissingEntry { .. })));
        assert!(t.is_monotone(0.0));
    }

    #[test]
    fn table_is_monotone_and_fits_area_law_at_first_step() {
        let gamma = 1.0;
        let p = CircuitParams::new(6, 1, 0.1, gamma).unwrap();
        let table = build_cluster_table(&p, &[1, 2, 3], 6).unwrap();
        assert!(table.is_monotone(1e-12));
        assert!(table.fits.len() == 5);
        assert!(table.entries.values().all(|&f| f >= 0.0));
    }
}
