pub mod candidates;
pub mod classify;
pub mod cli;
pub mod dense;
pub mod embedding;
pub mod fixtures;
pub mod labelmap;
pub mod metrics;
pub mod provider;
pub mod store;
