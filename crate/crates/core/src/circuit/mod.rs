//! The monitored brickwork circuit: East gates, weak measurements, trajectory
//! sampling and the averaged and tilted quantum channels.

mod brickwork;
mod channel;
pub mod frame;
mod gates;
mod measure;

pub use brickwork::{apply_brickwork, apply_layer, brickwork_slots, layer_slots, GateSlot, Layer};
pub use channel::{
    apply_kraus_site, apply_unitary_conjugation, channel_step, conditioned_channel_step,
    tilted_channel_step,
};
pub use gates::{east_gate, kraus_pair, EastGate, KrausPair};
pub use measure::{
    measure_site, sample_batch, sample_trajectory, sample_trajectory_with, InitialState,
    Trajectory,
};
