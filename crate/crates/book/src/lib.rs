//! The guide's chapters, compiled so that their code listings run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/units.md")]
pub mod units {}

#[doc = include_str!("../../../book/src/power_models.md")]
pub mod power_models {}

#[doc = include_str!("../../../book/src/allocation.md")]
pub mod allocation {}

#[doc = include_str!("../../../book/src/net_emissions.md")]
pub mod net_emissions {}

#[doc = include_str!("../../../book/src/reports.md")]
pub mod reports {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
