//! Quantum process tomography with calibrated, imperfect preparation and
//! measurement.
//!
//! Channels are handled in the χ representation over the ket-bra basis
//! `A_{m1·s+m2} = |m2⟩⟨m1|`, in which the `s² x 1` root of a Kraus operator is
//! its column-major vectorization and `χ = Σ e e†`.

pub mod calibration;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod mle;
pub mod noise;
pub mod protocol;
pub mod record;
pub mod selection;
pub mod simulator;

pub use channel::{DensityMatrix, KrausSet, OperatorBasis, ProcessChi};
pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use mle::{Reconstruction, SolverOptions};
pub use noise::NoiseSpec;
pub use protocol::TomographyProtocol;
pub use record::{CountRow, MeasurementRecord, SamplingMode};
pub use simulator::SpamScenario;
