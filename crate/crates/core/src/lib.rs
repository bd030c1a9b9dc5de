pub mod checks;
pub mod damage;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod fields;
pub mod io;
pub mod linalg;
pub mod material;
pub mod mesh;
pub mod plastic;
pub mod qp;
pub mod tensor;

pub use error::{Error, Result};
