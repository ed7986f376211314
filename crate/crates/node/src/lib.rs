//! HTTP node and command-line front end for the ledger simulator.

pub mod api;

pub use api::{router, serve, ApiConfig};
