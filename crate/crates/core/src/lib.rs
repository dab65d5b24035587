//! Sound source localization on SRP-PHAT feature maps, sized for edge hardware.
//!
//! The crate covers the whole chain from multichannel audio to a direction
//! estimate and the accounting of what that chain costs on a device:
//!
//! * [`signal`]: WAV ingestion, framing/windowing and the real FFT contract.
//! * [`geometry`]: microphone arrays, spherical candidate grids, TDOA tables.
//! * [`srp`]: GCC-PHAT and the FD / TD / LC / LC-Edge steered response power maps.
//! * [`feature`]: stacking SRP maps and their argmax into the network input.
//! * [`net`]: the causal 3D-CNN (baseline and Edge variants), weights file, counting.
//! * [`simroom`]: far-field and image-source shoebox scenes for verification.
//! * [`cost`]: closed-form FLOP / memory / bandwidth model and roofline records.
//! * [`eval`]: angular error metrics.
//! * [`config`]: the run configuration shared by every CLI stage.

pub mod config;
pub mod cost;
pub mod error;
pub mod eval;
pub mod feature;
pub mod geometry;
pub mod net;
pub mod signal;
pub mod simroom;
pub mod srp;
pub mod tensorfile;

pub use error::{Error, Result};
