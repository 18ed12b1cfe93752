//! The grammar workbench: sessions, the HTTP service and the command line.

pub mod cli;
pub mod service;
pub mod session;
