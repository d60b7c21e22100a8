pub mod bath;
pub mod driven;
pub mod dyck;
pub mod error;
pub mod gqme;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod pathsum;
pub mod system;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
