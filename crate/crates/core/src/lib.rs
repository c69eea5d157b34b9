//! Reconstruction of logical circuit structure from lattice-surgery resource traces.
//!
//! The pipeline runs: QASM circuit → placed layout → routed L3 trace →
//! downgraded L1/L2 observation → recovered frames → enumerated path
//! solutions → gate dependency DAG → subroutine detection.

pub mod bench;
pub mod dag;
pub mod enumerate;
pub mod generator;
pub mod layout;
pub mod matcher;
pub mod pipeline;
pub mod qasm;
pub mod reconstruct;
pub mod recovery;
pub mod synth;
pub mod trace;
