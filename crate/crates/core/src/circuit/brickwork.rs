use num_complex::Complex64;

use crate::basis::site_mask;
use crate::error::{Error, Result};
use crate::params::CircuitParams;
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    /// Targets sites 1, 3, 5, ...; site 1 is driven by the `n_0 = 1` boundary.
    Even,
    /// Targets sites 2, 4, 6, ...
    Odd,
}

/// One East gate of a layer, sites 1-based. `control == None` is the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GateSlot {
    pub control: Option<usize>,
    pub target: usize,
}

impl GateSlot {
    /// Bit mask that must be fully set for the gate to act (0 for the boundary).
    #[inline]
    pub fn control_mask(&self) -> usize {
        self.control.map_or(0, site_mask)
    }

    #[inline]
    pub fn target_mask(&self) -> usize {
        site_mask(self.target)
    }

    /// Basis-index pairs `(lo, hi)` the gate rotates: control up, target 0 in
    /// `lo` and 1 in `hi`.
    pub fn pairs(&self, sites: usize) -> impl Iterator<Item = (usize, usize)> {
        let (c, t) = (self.control_mask(), self.target_mask());
        (0..1usize << sites)
            .filter(move |m| m & t == 0 && m & c == c)
            .map(move |m| (m, m | t))
    }
}

pub fn layer_slots(sites: usize, layer: Layer) -> Vec<GateSlot> {
    let first = match layer {
        Layer::Even => 1,
        Layer::Odd => 2,
    };
    (first..=sites)
        .step_by(2)
        .map(|target| GateSlot {
            control: (target > 1).then(|| target - 1),
            target,
        })
        .collect()
}

/// Gates of one full step in application order: even layer, then odd layer.
pub fn brickwork_slots(sites: usize) -> Vec<GateSlot> {
    let mut slots = layer_slots(sites, Layer::Even);
    slots.extend(layer_slots(sites, Layer::Odd));
    slots
}

fn apply_slot(amps: &mut [Complex64], slot: GateSlot, c: f64, s: f64) {
    let (cm, tm) = (slot.control_mask(), slot.target_mask());
    let ms = Complex64::new(0.0, -s);
    for m in 0..amps.len() {
        if m & tm != 0 || m & cm != cm {
            continue;
        }
        let (a, b) = (amps[m], amps[m | tm]);
        amps[m] = a * c + b * ms;
        amps[m | tm] = a * ms + b * c;
    }
}

pub fn apply_layer(state: &mut StateVector, omega: f64, layer: Layer) {
    let (s, c) = omega.sin_cos();
    let sites = state.sites();
    for slot in layer_slots(sites, layer) {
        apply_slot(state.amplitudes_mut(), slot, c, s);
    }
}

/// One step of the unitary `U = U_o U_e`.
pub fn apply_brickwork(state: &mut StateVector, params: &CircuitParams) -> Result<()> {
    if state.sites() != params.sites {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: state.dim(),
        });
    }
    apply_layer(state, params.omega, Layer::Even);
    apply_layer(state, params.omega, Layer::Odd);
    Ok(())
}
