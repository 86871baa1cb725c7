//! Distributed leader/follower team formation on bipartite networks.
//!
//! Leaders with team-size constraints recruit followers over a bipartite
//! network using a memoryless two-stage round protocol. The crate provides
//! the network model, deficit accounting and deficit-decreasing paths, an
//! exact best-matching oracle, the round-based simulator, the analysis
//! toolkit for the triangular network family `G_n`, and the experiment
//! harness that drives all of them.

pub mod counterexample;
pub mod dynamics;
pub mod experiments;
pub(crate) mod flow;
pub mod matching;
pub mod network;
pub mod oracle;
pub mod stats;
