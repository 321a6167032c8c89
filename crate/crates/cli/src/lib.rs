//! File formats, certificate files, the random-instance generator and the
//! command-line driver around `mvdyn-core`.

pub mod cert;
pub mod cli;
pub mod format;
pub mod gen;

pub use cli::run;
