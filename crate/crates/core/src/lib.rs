//! Simulation and verification of adiabatic Brownian distribution samplers.
//!
//! The crate builds sampler machines out of reversible Turing machines or
//! abstract chain sets, simulates the resulting random walks under Metropolis
//! dynamics, runs the observer protocols and checks the emitted samples.

pub mod builder;
pub mod counter;
pub mod dynamics;
pub mod graph;
pub mod observer;
pub mod stats;
pub mod tm_builder;
pub mod toy;
pub mod trials;
pub mod turing;
