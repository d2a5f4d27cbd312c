//! Generic second-order traffic node models on networks.
//!
//! The crate provides the fundamental-diagram family of the generic
//! second-order model, event-driven solvers for first- and second-order
//! junction problems, an independent constraint checker for their
//! solutions, a Godunov network simulator, and plain-text scenario files.

pub mod checker;
pub mod error;
pub mod fd;
pub mod flows;
pub mod interval;
pub mod io;
pub mod network;
pub mod node;

pub use checker::{check_first_order, check_second_order, ConstraintReport, Family, Tolerances};
pub use error::{Error, Result};
pub use fd::{Commodities, FundamentalDiagram, LinkState, MiddleState};
pub use flows::FlowArray;
pub use interval::{RestrictionInterval, RestrictionMap};
pub use network::{Network, Order, Scenario, SimOutput, Simulator};
pub use node::{Downstream, Event, Iteration, Junction, NodeProblem, NodeProblem2, NodeSolution, NodeSolution2};
