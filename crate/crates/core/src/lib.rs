//! A deterministic laboratory for fine-backed consensus mechanisms.
//!
//! The crate models a proof-of-stake-style committee protocol in which a
//! randomly drawn *proposer* and *confirmer* submit block messages that must
//! match for a block to commit, backed by fines and a one-revision challenge
//! stage, together with two fork-resolution mechanisms (per-transaction
//! disputes and whole-allocation disputes). Around those engines it provides:
//!
//! * [`ledger`] — minimal chain/transaction model, fork diffing, and JSON
//!   chain fixtures;
//! * [`agents`] — honest, attacking, and scripted decision policies;
//! * [`sr`] — the simultaneous-report commit round and multi-round runner;
//! * [`fork`] — the two fork dispute mechanisms as executable state machines;
//! * [`solver`] — extensive-form game trees for small committees and a
//!   subgame-perfect-equilibrium solver with uniqueness reporting;
//! * [`analytics`] — closed-form attack thresholds, fork-attack profitability,
//!   and the patient multi-round attack value recursion;
//! * [`sim`] — a seeded Monte Carlo harness with CSV output and empirical
//!   threshold location.
//!
//! Everything is deterministic: every random draw flows from an explicit
//! 64-bit seed through a documented per-replication seed derivation
//! ([`sim::seed`]), and all aggregation happens in index order, so identical
//! inputs produce byte-identical outputs regardless of thread count. The
//! `parallel` feature (on by default) runs sweeps on a rayon pool; disabling
//! it yields a sequential build with identical results.

pub mod agents;
pub mod analytics;
pub mod exec;
pub mod fork;
pub mod ledger;
pub mod sim;
pub mod solver;
pub mod sr;
