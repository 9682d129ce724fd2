//! Equilibrium computation for transactive multi-agent markets over
//! capacitated flow networks.
//!
//! Agents hold local resources, consume them through concave utilities and
//! trade over a directed flow network with per-arc capacities. This crate
//! computes the planner's social-welfare equilibrium, recovers the supporting
//! prices from its duals, verifies that those prices form a competitive
//! equilibrium, and tests when all agents end up paying the same price.
//!
//! Module map:
//!
//! - [`flownet`]: networks, incidence matrices, Erdős–Rényi and star generators.
//! - [`agents`]: utilities, endowments, market instances.
//! - [`qpcore`]: interior-point QP/LP solver with dual recovery and a grid oracle.
//! - [`equilibria`]: welfare/standard equilibria, CE verification, interior flows.
//! - [`shaping`]: admissible parameter boxes and equal-price validation.
//! - [`experiments`]: seeded reproduction runs and their on-disk artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod equilibria;
pub mod error;
pub mod experiments;
pub mod flownet;
pub mod qpcore;
pub mod shaping;

pub(crate) mod rng;

pub use agents::{AgentProfile, MarketInstance, QuadraticUtility, UtilityFunction};
pub use equilibria::{CeVerificationReport, EquilibriumSolution};
pub use error::{Error, Result};
pub use flownet::{FlowNetwork, IncidenceSet};
pub use qpcore::{ConvexProgram, SolveOptions, SolveReport, SolveStatus};
pub use shaping::ParamBox;
