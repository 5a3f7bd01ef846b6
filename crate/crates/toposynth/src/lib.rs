//! Transistor-level circuit topology generation with masked
//! policy-gradient reinforcement learning.
//!
//! Circuits are built as typed graphs by a five-head autoregressive policy
//! whose choices are masked so every structural constraint holds by
//! construction. Training combines PPO with annealed behavioral cloning on
//! expert trajectories and a frozen similarity discriminator; completed
//! designs are scored by built-in evaluators (analytic ring-oscillator
//! model, linear AC small-signal solver) or an external simulator adapter.

pub mod action;
pub mod expert;
pub mod fixtures;
pub mod graph;
pub mod nn;
pub mod reward;
pub mod sim;

pub use graph::{CircuitGraph, EdgeKind, NodeId, NodeKind};
