//! Two-photon quadrature algebra shared by every physics module.
//!
//! Quadrature vectors are ordered (amplitude, phase). Spectral densities are
//! single-sided and normalised so that vacuum is the 2×2 identity.

mod grid;
mod quadrature;
mod spectrum;
mod units;

pub use grid::{make_frequency_grid, FrequencyGrid, Spacing};
pub use quadrature::{from_sidebands, rotation, rotation_angle, wrap_half_turn, Mat2, QuadratureTransfer, RowVec2, Vec2, C64, J};
pub use spectrum::{
    hermitian_eigenvalues, min_eigenvalue, mix_loss, propagate, propagate_point, psd_part, squeezed_spectrum,
    squeezed_spectrum_matrix, Channel, SpectralDensity, SqueezedState,
};
pub use units::{db, from_db, squeeze_factor_from_db};
