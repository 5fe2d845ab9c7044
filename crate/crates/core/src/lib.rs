//! Quantum neural network classifier on a from-scratch statevector simulator,
//! with dormant circuit Trojans that a device configuration file can trigger.
//!
//! Pipeline: [`qnn`] builds the quanvolution filter and the variational
//! classifier, [`train`] fits its 111 angles, [`trojan`] forges the attack
//! circuits, [`compile`] lowers a circuit against a device configuration
//! (where the trigger lives), [`noise`] runs depolarizing execution and
//! [`harness`] ties it together into evaluation scenarios and a report.

pub mod compile;
pub mod error;
pub mod harness;
pub mod noise;
pub mod qnn;
pub mod sim;
pub mod train;
pub mod trojan;

pub use error::{Error, Result};
