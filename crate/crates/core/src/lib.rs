//! Frequency-domain quantum-noise models for gravitational-wave interferometers
//! assisted by an optomechanical frequency converter (OMFC).
//!
//! The crate is organised bottom-up:
//!
//! - [`optics`]: frequency grids, two-photon quadrature algebra, spectral propagation.
//! - [`omfc`]: converter rates, scattering models, loss and thermal channels.
//! - [`interferometer`]: ponderomotive response, readout, detuned filter cavity.
//! - [`schemes`]: end-to-end noise budgets for the detector configurations.
//! - [`tuning`]: deterministic derivative-free filter optimisation.
//!
//! All quadrature spectra are single-sided and vacuum-normalised (vacuum = identity).

pub mod constants;
pub mod error;
pub mod interferometer;
pub mod omfc;
pub mod optics;
pub mod schemes;
pub mod tuning;

pub use error::{Error, Result};
pub use interferometer::{FilterParams, IfoParams};
pub use omfc::{OmfcParams, OmfcRates};
pub use optics::{FrequencyGrid, Mat2, QuadratureTransfer, Spacing, SpectralDensity, SqueezedState, Vec2, C64};
pub use schemes::{Component, NoiseBudget, SchemeConfig, SchemeMode};
pub use tuning::{FreeVar, FreeVariable, Objective, TuneResult, TuneSpec};
