//! Reference complex-arithmetic channels on [`DensityMatrix`].
//!
//! The real-frame evolution in [`super::frame`] is what the large-deviation code
//! runs; these versions work for arbitrary (complex) input states and serve as
//! its oracle.

use num_complex::Complex64;

use crate::basis::site_mask;
use crate::circuit::brickwork::brickwork_slots;
use crate::circuit::gates::{kraus_pair, KrausPair};
use crate::error::{invalid, Error, Result};
use crate::params::CircuitParams;
use crate::state::DensityMatrix;

/// Smallest trace accepted before renormalization.
pub const TRACE_FLOOR: f64 = 1e-300;

/// `ρ → U ρ U†` for one brickwork step.
pub fn apply_unitary_conjugation(rho: &mut DensityMatrix, omega: f64) {
    let (s, c) = omega.sin_cos();
    let sites = rho.sites();
    let dim = rho.dim();
    let ms = Complex64::new(0.0, -s);
    let ps = Complex64::new(0.0, s);
    let data = rho.entries_mut();
    for slot in brickwork_slots(sites) {
        let pairs: Vec<(usize, usize)> = slot.pairs(sites).collect();
        // Rows: left multiplication by u.
        for &(lo, hi) in &pairs {
            let (head, tail) = data.split_at_mut(hi * dim);
            let row_lo = &mut head[lo * dim..(lo + 1) * dim];
            let row_hi = &mut tail[..dim];
            for (a, b) in row_lo.iter_mut().zip(row_hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x * c + y * ms;
                *b = x * ms + y * c;
            }
        }
        // Columns: right multiplication by u†.
        for row in data.chunks_exact_mut(dim) {
            for &(lo, hi) in &pairs {
                let (x, y) = (row[lo], row[hi]);
                row[lo] = x * c + y * ps;
                row[hi] = x * ps + y * c;
            }
        }
    }
}

/// `ρ → K0 ρ K0† + w K1 ρ K1†` on a 1-based site.
pub fn apply_kraus_site(rho: &mut DensityMatrix, site: usize, kraus: &KrausPair, weight: f64) {
    let dim = rho.dim();
    let mask = site_mask(site);
    let f = [
        [kraus.entry_factor(0, 0, weight), kraus.entry_factor(0, 1, weight)],
        [kraus.entry_factor(1, 0, weight), kraus.entry_factor(1, 1, weight)],
    ];
    for (m, row) in rho.entries_mut().chunks_exact_mut(dim).enumerate() {
        let fm = &f[(m & mask != 0) as usize];
        for (n, z) in row.iter_mut().enumerate() {
            *z *= fm[(n & mask != 0) as usize];
        }
    }
}

fn check(rho: &DensityMatrix, params: &CircuitParams) -> Result<()> {
    params.validate()?;
    if rho.sites() != params.sites {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: rho.dim(),
        });
    }
    Ok(())
}

/// One step of the averaged channel `Σ_k K_k U ρ U† K_k†`.
pub fn channel_step(rho: &DensityMatrix, params: &CircuitParams) -> Result<DensityMatrix> {
    check(rho, params)?;
    let mut out = rho.clone();
    apply_unitary_conjugation(&mut out, params.omega);
    let kraus = kraus_pair(params.gamma);
    for i in 1..=params.sites {
        apply_kraus_site(&mut out, i, &kraus, 1.0);
    }
    Ok(out)
}

/// One step with per-site jump weights: site `i` uses `K0 ρ K0† + w_i K1 ρ K1†`.
/// Returns the renormalized state and the log of the trace before
/// renormalization.
pub fn conditioned_channel_step(
    rho: &DensityMatrix,
    params: &CircuitParams,
    weights: &[f64],
) -> Result<(DensityMatrix, f64)> {
    check(rho, params)?;
    if weights.len() != params.sites {
        return Err(Error::DimensionMismatch {
            expected: params.sites,
            actual: weights.len(),
        });
    }
    let mut out = rho.clone();
    apply_unitary_conjugation(&mut out, params.omega);
    let kraus = kraus_pair(params.gamma);
    for (i, &w) in weights.iter().enumerate() {
        apply_kraus_site(&mut out, i + 1, &kraus, w);
    }
    let tr = out.trace().re;
    if !(tr >= TRACE_FLOOR) {
        return Err(Error::TraceUnderflow { trace: tr, step: 0 });
    }
    out.scale(1.0 / tr);
    Ok((out, tr.ln()))
}

/// One step of the tilted map, every outcome-1 branch weighted by `e^{-s}`.
pub fn tilted_channel_step(
    rho: &DensityMatrix,
    params: &CircuitParams,
    s: f64,
) -> Result<(DensityMatrix, f64)> {
    if s.is_nan() || s == f64::NEG_INFINITY {
        return Err(invalid("s", format!("{s} is not an admissible counting field")));
    }
    conditioned_channel_step(rho, params, &vec![(-s).exp(); params.sites])
}
