//! Measurement-induced loss of logical information in the planar surface code.
//!
//! The crate simulates random single-qubit Pauli measurements on a distance-`d`
//! planar code with a stabilizer tableau, maps the X/Z-only problem to bond
//! percolation, evaluates the closed-form Y-failure probability and fits the
//! resulting curves.

mod error;

pub mod analytics;
pub mod fitting;
pub mod gf2;
pub mod layout;
pub mod montecarlo;
pub mod pauli;
pub mod percolation;
pub mod table;
pub mod tableau;

pub use error::{Error, Result};
pub use layout::CodeLayout;
pub use pauli::{Basis, PauliOperator};
pub use tableau::{CodeState, LogicalStatus, MeasurementCase, MeasurementRecord};
