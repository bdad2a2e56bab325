//! HTTP service and batch commands around the photofit session engine.

pub mod api;
pub mod commands;
pub mod description;
pub mod store;

pub use api::{router, AppState};
pub use store::SessionStore;
