//! Deterministic fire-disaster simulator with a layered agent architecture.
//!
//! The crate is organized around a simulated city ([`world`]), a ground-truth
//! kernel that advances fire physics and applies agent commands ([`kernel`]),
//! a bandwidth-limited message bus ([`bus`]), and the two agent kinds that
//! fight the fire: brigades ([`brigade`]) and a single coordinating station
//! ([`station`]). The station's planning pipeline is built from dynamic-graph
//! path planning ([`pathplan`]), fire-border valuation ([`valuation`]),
//! min-cost mission assignment ([`assign`]), and a small feed-forward
//! predictor ([`predict`]). The [`harness`] module runs seeded scenarios end
//! to end, writes replay logs, and compares strategies.

pub mod assign;
pub mod brigade;
pub mod bus;
pub mod error;
pub mod geom;
pub mod harness;
pub mod kernel;
pub mod params;
pub mod pathplan;
pub mod predict;
pub mod render;
pub mod replay;
pub mod station;
pub mod valuation;
pub mod world;

pub use error::{Error, Result};
pub use params::SimParams;
pub use world::{Building, BuildingId, CityMap, NodeId, RoadId, Scenario};
