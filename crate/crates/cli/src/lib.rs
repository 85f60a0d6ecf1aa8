//! Command-line front end and HTTP service over a persisted hierarchy store.

pub mod cli;
pub mod output;
pub mod server;
pub mod store;
