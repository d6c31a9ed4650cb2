//! Auto-encoder state representation.

pub mod model;
pub mod spp;
pub mod state;

pub use model::{encode_state, CaeConfig, CaeModel};
pub use spp::{spp_forward, spp_inverse};
pub use state::{compose_state, index_encoding, IndexMode, StateVector};
