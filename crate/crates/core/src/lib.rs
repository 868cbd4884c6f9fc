//! Control co-design toolkit for a floating offshore wind turbine.
//!
//! The crate is organised bottom-up:
//!
//! * [`lti`]: state-space models, RK4 simulation, frequency response, H∞ error.
//! * [`surrogate`]: the nonlinear five-state turbine, trim and linearization.
//! * [`lpv`]: PCHIP-interpolated LPV models over wind speed and plant grids.
//! * [`qp`] and [`dtqp`]: interior-point QP solver and direct transcription.
//! * [`ccd`]: wind cases, AEP, cost model, LCOE and the design sweep.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror the math.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod ccd;
pub mod dtqp;
pub mod error;
pub mod io;
pub mod lpv;
pub mod lti;
pub mod numerics;
pub mod pchip;
pub mod qp;
pub mod surrogate;
pub mod trajectory;

pub use error::{Error, Result};
pub use lti::{OperatingPoint, StateSpaceModel};
pub use surrogate::{PlantDesign, Surrogate};
pub use trajectory::Trajectory;
