//! Core of the laws-to-motivation pipeline: a constraint-gated survival
//! gridworld, interaction records, experience mining, reward predicates,
//! agents and evaluation.

pub mod laws;
pub mod world;
pub mod records;
pub mod collect;
pub mod llm;
pub mod miner;
pub mod rewardgen;
pub mod agents;
pub mod eval;
