pub mod cli;
pub mod ddm;
pub mod dense;
pub mod error;
pub mod krylov;
pub mod mixedfem;
pub mod mtx;
pub mod report;
pub mod saddle;
pub mod spectra;

pub use error::{Error, Result};
