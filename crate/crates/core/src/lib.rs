//! Attribution of data center operational emissions to the tenants of a
//! shared service.
//!
//! The pipeline has three stages:
//!
//! 1. [`ingest`] reads the CSV exports and checks every cross-reference,
//!    producing one [`ingest::RawData`] per month.
//! 2. [`allocation`] estimates per-device energy with the [`power`] models,
//!    derives each tenant's Scope 2 emissions, its responsibility ratio per
//!    data center, and from those its share of Scope 1 and Scope 3 emissions
//!    and of purchased offsets.
//! 3. [`report`] renders each tenant's [`allocation::Footprint`] as a
//!    detailed JSON document and as a one-page HTML summary.

pub mod allocation;
pub mod ingest;
pub mod power;
pub mod report;
pub mod scope;
pub mod synth;
pub mod units;
