pub mod classical;
pub mod clusters;
pub mod effective;
pub mod phase;
pub mod sample;
