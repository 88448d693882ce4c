//! Dissipative Rydberg spin models: operator algebra, model builders,
//! Lindblad and non-Hermitian evolution, spectral sweeps with
//! exceptional-point search, and the measurement pipeline (SPAM correction,
//! shot sampling, curve fits).

pub mod basis;
pub mod dynamics;
pub mod eig;
pub mod measurement;
pub mod error;
pub mod models;
pub mod operator;
pub mod spectra;
pub mod states;
pub mod units;

pub use basis::{Basis, Level, LevelSet, TensorBasis};
pub use eig::{eig_general, Spectrum};
pub use error::{Error, Result};
pub use operator::{embed, kron, Operator, C64};
pub use states::{DensityMatrix, PureState};
