//! Stochastic and deterministic simulation of chemical reaction networks with
//! variance-based sensitivity analysis.
//!
//! * [`network`] holds the model: species, mass-action reactions, uncertain
//!   parameters and the model-file parser.
//! * [`stochastic`] samples exact jump paths with the modified next reaction method.
//! * [`deterministic`] integrates the reaction rate equations.
//! * [`gsa`] estimates Sobol' indices of both, per frozen noise realization.
//! * [`harness`] runs the CLI commands and writes CSV output.

pub mod deterministic;
pub mod gsa;
pub mod harness;
pub mod network;
pub mod stochastic;
pub mod streams;
