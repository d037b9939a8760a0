//! Box-ball system through its path encoding.
//!
//! A configuration eta in {0,1}^Z is encoded as the walk S with
//! S_n - S_{n-1} = 1 - 2 eta_n. One step of the dynamics is Pitman's transform
//! T S = 2M - S - 2M_0 with M the running maximum, and the carrier is W = M - S.

pub mod acceptance;
pub mod analysis;
pub mod carrier;
pub mod closedform;
pub mod config;
pub mod continuum;
pub mod error;
pub mod evolve;
pub mod gen;
pub mod linalg;
pub mod path;
pub mod rng;
pub mod stats;
pub mod tagged;
pub mod transform;
pub mod window;

pub use carrier::{carrier, phi_inverse_minimal, CarrierWindow};
pub use error::{BbsError, Result};
pub use evolve::{evolve, Backend, EvolutionTrace};
pub use path::{decode, encode, reverse, PathWindow};
pub use transform::{pitman_t, pitman_tinv, Span};
pub use window::{Boundary, ParticleWindow};
