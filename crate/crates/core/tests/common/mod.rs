//! Dense full-Hilbert-space reference built directly from Kronecker products,
//! independent of the in-place kernels of the library.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Operator acting as `g` (2x2 on `site`) or controlled-`g` (control `site - 1`).
fn embed(sites: usize, site: usize, controlled: bool, g: [[Complex64; 2]; 2]) -> CMat {
    let dim = 1 << sites;
    let t = 1 << (site - 1);
    let ctl = if controlled { 1 << (site - 2) } else { 0 };
    CMat::from_fn(dim, dim, |row, col| {
        if (row ^ col) & !t != 0 {
            return c(0.0, 0.0);
        }
        if ctl != 0 && col & ctl == 0 {
            return if row == col { c(1.0, 0.0) } else { c(0.0, 0.0) };
        }
        g[(row & t != 0) as usize][(col & t != 0) as usize]
    })
}

/// One brickwork step `U = U_odd U_even`.
pub fn step_unitary(sites: usize, omega: f64) -> CMat {
    let (s, co) = omega.sin_cos();
    let g = [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]];
    let mut u = CMat::identity(1 << sites, 1 << sites);
    for i in (1..=sites).step_by(2) {
        u = embed(sites, i, i > 1, g) * u;
    }
    for i in (2..=sites).step_by(2) {
        u = embed(sites, i, true, g) * u;
    }
    u
}

/// Kraus operator for outcome `k` on `site`.
pub fn kraus(sites: usize, site: usize, gamma: f64, k: u8) -> CMat {
    let (s, co) = gamma.sin_cos();
    let g = if k == 0 {
        [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(co, 0.0)]]
    } else {
        [[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -s)]]
    };
    embed(sites, site, false, g)
}

pub fn maximally_mixed(sites: usize) -> CMat {
    let dim = 1 << sites;
    CMat::identity(dim, dim) * c(1.0 / dim as f64, 0.0)
}

/// Probability of every record `η` (bit `t * L + i` is the outcome of site
/// `i + 1` at step `t + 1`) from the given initial state.
pub fn record_probabilities(sites: usize, steps: usize, omega: f64, gamma: f64, rho0: &CMat) -> Vec<f64> {
    let u = step_unitary(sites, omega);
    let ops: Vec<[CMat; 2]> = (1..=sites)
        .map(|i| [kraus(sites, i, gamma, 0), kraus(sites, i, gamma, 1)])
        .collect();
    let n = sites * steps;
    (0..1usize << n)
        .map(|eta| {
            let mut rho = rho0.clone();
            for t in 0..steps {
                rho = &u * rho * u.adjoint();
                for (i, pair) in ops.iter().enumerate() {
                    let k = &pair[(eta >> (t * sites + i)) & 1];
                    rho = k * rho * k.adjoint();
                }
            }
            rho.trace().re
        })
        .collect()
}

/// Bit mask of a window: sites `sites-ell+1..=sites` over steps `1..=tau`.
pub fn window_mask(sites: usize, ell: usize, tau: usize) -> usize {
    let mut mask = 0;
    for t in 0..tau {
        for i in sites - ell..sites {
            mask |= 1 << (t * sites + i);
        }
    }
    mask
}
