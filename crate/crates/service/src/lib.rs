//! HTTP service and command line for the ER-MCDA engine.

pub mod api;
pub mod cli;
pub mod store;

pub use store::{SessionStore, StoreError};
