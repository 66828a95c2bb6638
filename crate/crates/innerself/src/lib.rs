//! Service layer for InnerSelf: file formats, persistence, adapter wiring,
//! the turn pipeline, the HTTP/WebSocket API and the command-line tools.
//!
//! The algorithms themselves live in `innerself-core`.

pub mod adapters;
pub mod config;
pub mod engine;
pub mod export;
pub mod http;
pub mod session;
pub mod server;
pub mod simulate;
pub mod store;
pub mod synthetic;
pub mod tables;
pub mod wav;
