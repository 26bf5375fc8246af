//! Persistent group decision service: polls and ballots, results snapshots,
//! issue-by-issue multi-polls and matching sessions, stored in an append-only
//! event log and served over HTTP/JSON.

pub mod api;
pub mod error;
pub mod model;
pub mod service;
pub mod state;
pub mod store;

pub use api::{router, serve, ErrorBody};
pub use error::ServiceError;
pub use model::*;
pub use service::{IssueStatus, IssueView, MatchingView, PollView, Service, ServiceOptions};
