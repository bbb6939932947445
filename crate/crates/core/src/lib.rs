//! Residual dipolar coupling (RDC) analysis of discrete-state protein dynamics.
//!
//! The crate covers the full loop used to study rigid-body domain motions from
//! RDC data:
//!
//! - [`tensor`] / [`euler`]: Saupe order-tensor algebra and z-y-z Euler rotations
//! - [`structure`]: PDB backbone I/O, internuclear vectors, dihedral mutations, RMSD
//! - [`fetch`]: cached download client for PDB entries
//! - [`sim`]: synthetic RDCs, occupancy-weighted averaging, noise
//! - [`fit`]: SVD order-tensor fits and RDC-rmsd
//! - [`profile`]: forward/backward dynamic profiles and onset detection
//! - [`solver`]: multi-medium recovery of state rotations and occupancies
//! - [`ensemble`]: ensemble assembly and validation against known states

pub mod ensemble;
pub mod error;
pub mod euler;
pub mod fetch;
pub mod fit;
pub mod profile;
pub mod scenario;
pub mod sim;
pub mod solver;
pub mod structure;
pub mod tensor;

pub use error::{Error, Result};
pub use euler::EulerAngles;
pub use structure::{BackboneStructure, DomainRange, VectorRecord};
pub use tensor::{DmaxTable, PrincipalFrame, SaupeTensor, VectorType};
