//! Test support: a scriptable mock of the GitHub commits endpoint, recorded
//! page fixtures and stub classifier adapters.

pub mod adapters;
pub mod fixtures;
pub mod mock;

pub use mock::{MockConfig, MockGitHub, NowFn, RequestRecord};
