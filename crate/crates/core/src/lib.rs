//! Spatial agent-based simulation of a flood-exposed economy.
//!
//! Firms and households live on a hazard grid. Each step, floods are
//! sampled per cell from return-period rasters and damage firm capital,
//! productivity and inventories. Firms produce with fixed-proportion
//! (Leontief) technology along a commodity-to-manufacturer supply chain,
//! trade on sequential labour, input and goods markets, and evolve their
//! budget, pricing, wage and risk strategies through fitness-driven
//! mutation and replacement of failed firms.

pub mod agents;
pub mod charts;
pub mod config;
pub mod engine;
pub mod error;
pub mod evolution;
pub mod hazard;
pub mod markets;
pub mod metrics;
pub mod rng;

pub use agents::{Firm, FirmId, Household, HouseholdId, LeontiefCoefficients, LimitingFactor, Sector, StrategyGenome};
pub use charts::{emit_charts, ChartSeries};
pub use config::{load_inputs, parse_config, HazardSchedule, ScenarioConfig};
pub use engine::{run, run_with, RunOutput, World};
pub use error::{Error, Result};
pub use hazard::{load_hazard_dataset, Cell, HazardField, HazardGrid, ImpactCurve};
pub use metrics::{average_series, read_metrics, write_metrics, MetricsFrame, RunSummary};
