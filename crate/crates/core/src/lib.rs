//! Fundamental-mode photonic local density of states (PLDOS) of step-index
//! nanofibers, and the cathodoluminescence scan experiments that probe it.
//!
//! * [`special`]: Bessel `J_m`, `K_m` and derivatives.
//! * [`fiber`]: HE11 mode solver, field components, normalization.
//! * [`pldos`]: group velocity, PLDOS, decay rate, size-parameter sweeps.
//! * [`beam`]: electron stopping point and cascade blur.
//! * [`experiment`]: simulated scans, shot noise, least-squares fits.
//! * [`io`]: run configuration and CSV curve files.
//! * [`pipeline`]: the command verbs behind the `fiber-pldos` binary.

pub mod beam;
pub mod curve;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod io;
pub mod lm;
pub mod par;
pub mod pipeline;
pub mod pldos;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use fiber::{FiberSpec, ModeSolution};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
