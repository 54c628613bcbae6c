//! Edge caching with a learned admission and eviction order.
//!
//! Requests flow through [`policies::CachePolicy`] implementations. The
//! learned policy in [`hrcache`] labels each window of past requests with
//! [`oracle`] (hazard-rate ordering over [`hazard`] estimates), trains a
//! [`model::GbdtModel`] on [`features`] and uses it to sort incoming objects
//! into a main or a candidate queue. [`engine`] replays traces and compares
//! policies.

pub mod engine;
pub mod error;
pub mod features;
pub mod hazard;
pub mod hrcache;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{Request, Trace};
