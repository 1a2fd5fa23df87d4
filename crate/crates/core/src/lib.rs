//! Agent-based simulation of bottom-up task allocation.
//!
//! Agents own parts of a binary decision vector scored on an NK landscape,
//! search locally under a mix of own and residual incentives, and
//! periodically trade decisions in sealed-bid auctions.

pub mod allocation;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod landscape;
pub mod metrics;
pub mod organization;

pub use error::{Error, Result};
pub use landscape::{build_pattern_seeded, DecisionVector, InfluenceMatrix, Landscape, PatternId};
pub use organization::{IncentiveScheme, Strategy};
