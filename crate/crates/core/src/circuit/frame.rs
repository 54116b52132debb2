//! Real-arithmetic evolution in the rotated frame `S = ⊗ diag(1, i)`.
//!
//! Under `ρ → S ρ S†` the East gate becomes the real rotation
//! `exp(-i ω n σ^y) = [[c, -s], [s, c]]` on the target, while the diagonal Kraus
//! operators and the maximally mixed state are unchanged. Any state that is real
//! in this frame (the stationary state, every diagonal state) therefore stays real
//! and symmetric under the unitary and every tilted or conditioned Kraus layer,
//! which halves memory and cuts the arithmetic by about four.

use num_complex::Complex64;

use crate::basis::site_mask;
use crate::circuit::brickwork::brickwork_slots;
use crate::error::{Error, Result};
use crate::params::DenseLimits;
use crate::state::DensityMatrix;

pub use crate::circuit::channel::TRACE_FLOOR;

/// Precomputed gate schedule for conjugating `2^L × 2^L` real matrices.
#[derive(Debug, Clone)]
pub struct RealFrame {
    sites: usize,
    dim: usize,
    cos: f64,
    sin: f64,
    slots: Vec<Vec<(u32, u32)>>,
    scratch_len: usize,
}

impl RealFrame {
    pub fn new(sites: usize, omega: f64) -> Result<Self> {
        DenseLimits::current().check_density(sites)?;
        let (sin, cos) = omega.sin_cos();
        let slots = brickwork_slots(sites)
            .into_iter()
            .map(|g| g.pairs(sites).map(|(a, b)| (a as u32, b as u32)).collect())
            .collect();
        let dim = 1 << sites;
        Ok(Self {
            sites,
            dim,
            cos,
            sin,
            slots,
            scratch_len: dim * dim,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Left multiplication by the step unitary, row pairs at a time.
    fn left_multiply(&self, m: &mut [f64]) {
        let (c, s, dim) = (self.cos, self.sin, self.dim);
        for pairs in &self.slots {
            for &(lo, hi) in pairs {
                let (lo, hi) = (lo as usize, hi as usize);
                let (head, tail) = m.split_at_mut(hi * dim);
                let a = &mut head[lo * dim..(lo + 1) * dim];
                let b = &mut tail[..dim];
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = c * u - s * v;
                    *y = s * u + c * v;
                }
            }
        }
    }

    fn transpose_into(&self, src: &[f64], dst: &mut [f64]) {
        const B: usize = 32;
        let dim = self.dim;
        for i0 in (0..dim).step_by(B) {
            for j0 in (0..dim).step_by(B) {
                for i in i0..(i0 + B).min(dim) {
                    for j in j0..(j0 + B).min(dim) {
                        dst[j * dim + i] = src[i * dim + j];
                    }
                }
            }
        }
    }

    /// `M → U M Uᵀ` for a symmetric `M`; `scratch` must hold `dim²` values.
    pub fn conjugate_symmetric(&self, m: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        debug_assert_eq!(m.len(), self.scratch_len);
        scratch.resize(self.scratch_len, 0.0);
        self.left_multiply(m);
        self.transpose_into(m, scratch);
        self.left_multiply(scratch);
        std::mem::swap(m, scratch);
    }

    /// `M → U M Uᵀ` for any real `M`.
    pub fn conjugate(&self, m: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        scratch.resize(self.scratch_len, 0.0);
        self.left_multiply(m);
        self.transpose_into(m, scratch);
        self.left_multiply(scratch);
        self.transpose_into(scratch, m);
    }

    /// Frame representation of `ρ`, or `None` if it has an imaginary part
    /// larger than `tol` there.
    pub fn to_frame(&self, rho: &DensityMatrix, tol: f64) -> Option<Vec<f64>> {
        if rho.sites() != self.sites {
            return None;
        }
        let dim = self.dim;
        let mut out = vec![0.0; dim * dim];
        for m in 0..dim {
            for n in 0..dim {
                let z = rho.get(m, n) * phase(m, n);
                if z.im.abs() > tol {
                    return None;
                }
                out[m * dim + n] = z.re;
            }
        }
        Some(out)
    }

    pub fn from_frame(&self, m: &[f64]) -> Result<DensityMatrix> {
        let dim = self.dim;
        if m.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: m.len(),
            });
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                entries.push(Complex64::new(m[a * dim + b], 0.0) * phase(b, a));
            }
        }
        DensityMatrix::from_entries(self.sites, entries)
    }
}

/// `i^{f(m) - f(n)}`.
fn phase(m: usize, n: usize) -> Complex64 {
    let k = (m.count_ones() as i64 - n.count_ones() as i64).rem_euclid(4);
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ][k as usize]
}

/// Entrywise multiplier of one full measurement layer,
/// `Π_i (K0 ⊗ K0* + w_i K1 ⊗ K1*)`, as a `dim × dim` mask.
#[derive(Debug, Clone)]
pub struct KrausMask {
    values: Vec<f64>,
    derivative: Option<Vec<f64>>,
}

impl KrausMask {
    /// Per-site jump weights `w_i`.
    pub fn with_weights(gamma: f64, weights: &[f64]) -> Self {
        let sites = weights.len();
        let dim = 1usize << sites;
        let (s, c) = gamma.sin_cos();
        let both: Vec<f64> = weights.iter().map(|w| c * c + w * s * s).collect();
        let mut values = vec![0.0; dim * dim];
        for m in 0..dim {
            for n in 0..dim {
                let mut f = c.powi((m ^ n).count_ones() as i32);
                let mut common = m & n;
                while common != 0 && f != 0.0 {
                    f *= both[common.trailing_zeros() as usize];
                    common &= common - 1;
                }
                values[m * dim + n] = f;
            }
        }
        Self {
            values,
            derivative: None,
        }
    }

    /// Uniform tilt `w = e^{-s}`, optionally with `∂/∂s` of the mask.
    pub fn tilted(sites: usize, gamma: f64, s: f64, with_derivative: bool) -> Self {
        let dim = 1usize << sites;
        let w = (-s).exp();
        let (sn, c) = gamma.sin_cos();
        let h = c * c + w * sn * sn;
        let dh = -w * sn * sn;
        let mut values = vec![0.0; dim * dim];
        let mut derivative = if with_derivative { vec![0.0; dim * dim] } else { Vec::new() };
        for m in 0..dim {
            for n in 0..dim {
                let base = c.powi((m ^ n).count_ones() as i32);
                let k = (m & n).count_ones() as i32;
                values[m * dim + n] = base * h.powi(k);
                if with_derivative && k > 0 {
                    derivative[m * dim + n] = base * k as f64 * h.powi(k - 1) * dh;
                }
            }
        }
        Self {
            values,
            derivative: with_derivative.then_some(derivative),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivative(&self) -> Option<&[f64]> {
        self.derivative.as_deref()
    }

    pub fn apply(&self, m: &mut [f64]) {
        m.iter_mut().zip(&self.values).for_each(|(x, f)| *x *= f);
    }
}

pub fn frame_trace(m: &[f64], dim: usize) -> f64 {
    (0..dim).map(|i| m[i * dim + i]).sum()
}

pub fn frame_diagonal(m: &[f64], dim: usize) -> Vec<f64> {
    (0..dim).map(|i| m[i * dim + i]).collect()
}

/// Frame representation of a diagonal state.
pub fn diagonal_frame(probabilities: &[f64]) -> Vec<f64> {
    let dim = probabilities.len();
    let mut m = vec![0.0; dim * dim];
    for (i, &p) in probabilities.iter().enumerate() {
        m[i * dim + i] = p;
    }
    m
}

/// Frame representation of `1 / 2^L`.
pub fn stationary_frame(sites: usize) -> Vec<f64> {
    let dim = 1usize << sites;
    diagonal_frame(&vec![1.0 / dim as f64; dim])
}

/// Jump weights that forbid clicks on the sites of `mask`.
pub fn forbidden_click_weights(sites: usize, mask: usize) -> Vec<f64> {
    (1..=sites)
        .map(|i| if mask & site_mask(i) != 0 { 0.0 } else { 1.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::channel::{conditioned_channel_step, tilted_channel_step};
    use crate::params::CircuitParams;
    use crate::state::maximally_mixed_state;
    use proptest::prelude::*;

    fn frame_step(frame: &RealFrame, mask: &KrausMask, m: &mut Vec<f64>) -> f64 {
        let mut scratch = Vec::new();
        frame.conjugate_symmetric(m, &mut scratch);
        mask.apply(m);
        let tr = frame_trace(m, frame.dim());
        m.iter_mut().for_each(|x| *x /= tr);
        tr.ln()
    }

    #[test]
    fn frame_round_trip() {
        let frame = RealFrame::new(3, 0.2).unwrap();
        let rho = maximally_mixed_state(3).unwrap();
        let m = frame.to_frame(&rho, 1e-14).unwrap();
        assert!(frame.from_frame(&m).unwrap().max_abs_diff(&rho) < 1e-16);
    }

    #[test]
    fn general_conjugation_matches_symmetric() {
        let frame = RealFrame::new(3, 0.9).unwrap();
        let a: Vec<f64> = (0..64).map(|k| ((k * 37 % 11) as f64) - 5.0).collect();
        let mut sym = vec![0.0; 64];
        for i in 0..8 {
            for j in 0..8 {
                sym[i * 8 + j] = a[i * 8 + j] + a[j * 8 + i];
            }
        }
        let (mut x, mut y, mut scratch) = (sym.clone(), sym, Vec::new());
        frame.conjugate(&mut x, &mut scratch);
        frame.conjugate_symmetric(&mut y, &mut scratch);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn matches_complex_tilted_channel(
            omega in -1.6f64..1.6,
            gamma in 0.0f64..std::f64::consts::FRAC_PI_2,
            s in -1.0f64..3.0,
            steps in 1usize..4,
        ) {
            let sites = 3;
            let p = CircuitParams::new(sites, steps, omega, gamma).unwrap();
            let frame = RealFrame::new(sites, omega).unwrap();
            let mask = KrausMask::tilted(sites, gamma, s, false);
            let mut rho = maximally_mixed_state(sites).unwrap();
            let mut m = stationary_frame(sites);
            for _ in 0..steps {
                let (next, inc) = tilted_channel_step(&rho, &p, s).unwrap();
                rho = next;
                let inc_frame = frame_step(&frame, &mask, &mut m);
                prop_assert!((inc - inc_frame).abs() < 1e-12);
            }
            prop_assert!(frame.from_frame(&m).unwrap().max_abs_diff(&rho) < 1e-12);
        }

        #[test]
        fn weighted_mask_matches_complex(
            omega in -1.6f64..1.6,
            gamma in 0.0f64..std::f64::consts::FRAC_PI_2,
            forbid in 0usize..8,
        ) {
            let sites = 3;
            let p = CircuitParams::new(sites, 1, omega, gamma).unwrap();
            let weights = forbidden_click_weights(sites, forbid);
            let frame = RealFrame::new(sites, omega).unwrap();
            let mask = KrausMask::with_weights(gamma, &weights);
            let rho = maximally_mixed_state(sites).unwrap();
            let (next, inc) = conditioned_channel_step(&rho, &p, &weights).unwrap();
            let mut m = stationary_frame(sites);
            let inc_frame = frame_step(&frame, &mask, &mut m);
            prop_assert!((inc - inc_frame).abs() < 1e-12);
            prop_assert!(frame.from_frame(&m).unwrap().max_abs_diff(&next) < 1e-12);
        }
    }

    #[test]
    fn mask_derivative_matches_finite_difference() {
        let (gamma, s, h) = (0.9, 0.4, 1e-6);
        let d = KrausMask::tilted(3, gamma, s, true);
        let up = KrausMask::tilted(3, gamma, s + h, false);
        let dn = KrausMask::tilted(3, gamma, s - h, false);
        for k in 0..64 {
            let fd = (up.values()[k] - dn.values()[k]) / (2.0 * h);
            assert!((fd - d.derivative().unwrap()[k]).abs() < 1e-8);
        }
    }
}
