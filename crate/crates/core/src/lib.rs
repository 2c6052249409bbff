//! Protograph-based LDPC block, tail-biting and convolutional codes.
//!
//! The crate covers the whole chain from a protograph base matrix to
//! distance growth rates and simulated error rates:
//!
//! - [`protograph`]: base matrices, degree profiles, copy-and-permute expansion.
//! - [`unwrap`]: cutting a protograph into a convolutional band and wrapping it
//!   into tail-biting base matrices.
//! - [`lift`]: permutation lifting to sparse binary parity-check matrices.
//! - [`spectral`]: asymptotic weight enumerators, growth rates and free
//!   distance bounds.
//! - [`oracle`]: exact GF(2) computations for small codes.
//! - [`decode`]: belief-propagation decoders.
//! - [`sim`]: BPSK/AWGN Monte Carlo error-rate simulation.

pub mod decode;
pub mod error;
pub mod lift;
pub mod oracle;
pub mod protograph;
pub mod rng;
pub mod sim;
pub mod spectral;
pub mod unwrap;

pub use error::{Error, Result};
pub use lift::{lift, LiftSpec, LiftStyle, LiftedBand, SparseBinaryMatrix};
pub use protograph::{DegreeProfile, Protograph};
pub use unwrap::{ConvWindow, Termination, Unwrapping};
