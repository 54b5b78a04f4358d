//! File formats, thread-pool execution and timing experiments around
//! `snacs-core`, plus the `snacs` command-line tool.

pub mod bench;
pub mod bundle;
pub mod cli;
pub mod error;
pub mod formats;
pub mod npy;
pub mod parallel;
pub mod plot;

pub use error::{AppError, Result};
