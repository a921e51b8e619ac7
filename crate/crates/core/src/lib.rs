#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod classical;
pub mod ensemble;
pub mod error;
pub mod exact_steady;
pub mod experiments;
pub mod hilbert;
pub mod linalg;
pub mod master;
pub mod model;
pub mod noise;
pub mod qsd;

pub use error::{Error, Result};
pub use hilbert::{FockDim, Operator, StateVector};
pub use model::ModelParams;
