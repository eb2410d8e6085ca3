pub mod consistency;
pub mod error;
pub mod game;
pub mod gf;
pub mod poly;
pub mod protocols;
pub mod quantum;
pub mod registry;
pub mod rng;
pub mod sdp;

pub use error::{Error, Result};
