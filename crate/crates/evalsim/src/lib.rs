//! File formats and the command-line front end for `evalsim-core`.
//!
//! - [`io`]: profile CSV, positions CSV and histogram TSV
//! - [`report`]: JSON views of fit, embedding and election results
//! - [`cli`]: the `evalsim` subcommands

pub mod cli;
pub mod io;
pub mod numfmt;
pub mod report;

use std::fmt;

/// A failed command. `Input` covers bad files, flags and models (exit 2),
/// `Numerical` covers algorithms that could not produce a result (exit 3).
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Input(String),
    Numerical(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(m) | Error::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Error {}

pub fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub fn numerical(msg: impl Into<String>) -> Error {
    Error::Numerical(msg.into())
}
