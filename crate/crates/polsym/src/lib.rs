//! File formats, an FFT-backed convolution and the command-line workflows
//! built on `polsym-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod fft;
pub mod io;

pub use error::{Error, Result};
pub use fft::FftConvolver;
