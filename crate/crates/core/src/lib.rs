pub mod catalog;
pub mod error;
pub mod field;
pub mod jsr;
pub mod limitset;
pub mod linalg;
pub mod measure;
pub mod regularity;
pub mod skew;
pub mod stationary;
pub mod stats;
pub mod structure;
pub mod walk;

pub use error::{Error, Result};
pub use field::{Field, FieldSpec, PadicField, RealField};
pub use linalg::Matrix;
