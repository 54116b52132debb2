use num_complex::Complex64;

type C = Complex64;

/// Two-qubit East gate `u = exp(-i ω n ⊗ σ^x)` on (control, target).
///
/// Two-qubit basis index is `2 · control + target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EastGate {
    pub omega: f64,
    pub matrix: [[C; 4]; 4],
}

pub fn east_gate(omega: f64) -> EastGate {
    let (s, c) = omega.sin_cos();
    let z = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let cc = C::new(c, 0.0);
    let ms = C::new(0.0, -s);
    EastGate {
        omega,
        matrix: [
            [one, z, z, z],
            [z, one, z, z],
            [z, z, cc, ms],
            [z, z, ms, cc],
        ],
    }
}

impl EastGate {
    pub fn apply(&self, v: [C; 4]) -> [C; 4] {
        let mut out = [C::new(0.0, 0.0); 4];
        for (r, row) in self.matrix.iter().enumerate() {
            out[r] = row.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Largest entry of `|u† u - 1|`.
    pub fn unitarity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let dot: C = (0..4).map(|k| self.matrix[k][i].conj() * self.matrix[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).norm());
            }
        }
        worst
    }
}

/// Single-site measurement Kraus operators. Both are diagonal in the
/// computational basis, so only the diagonals are stored: `k0[b]`, `k1[b]` for
/// site occupation `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    pub gamma: f64,
    pub k0: [C; 2],
    pub k1: [C; 2],
}

pub fn kraus_pair(gamma: f64) -> KrausPair {
    let (s, c) = gamma.sin_cos();
    KrausPair {
        gamma,
        k0: [C::new(1.0, 0.0), C::new(c, 0.0)],
        k1: [C::new(0.0, 0.0), C::new(0.0, -s)],
    }
}

impl KrausPair {
    /// Largest entry of `|K0† K0 + K1† K1 - 1|`.
    pub fn completeness_error(&self) -> f64 {
        (0..2)
            .map(|b| (self.k0[b].norm_sqr() + self.k1[b].norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Multiplier of `ρ_mn` under `K0 ρ K0† + w K1 ρ K1†` for site bits
    /// `bm`, `bn`. `w = e^{-s}` gives the tilted map, `w = 0` keeps only the
    /// no-click branch.
    #[inline]
    pub fn entry_factor(&self, bm: usize, bn: usize, weight: f64) -> C {
        self.k0[bm] * self.k0[bn].conj() + self.k1[bm] * self.k1[bn].conj() * weight
    }
}
