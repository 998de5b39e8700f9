//! Command-line front end and annotation server for `stance-nli`.

pub mod cli;
pub mod server;
