//! Counterfactual gender-fairness auditing for LLM emergency-triage assignment.
//!
//! The pipeline runs left to right through the modules:
//!
//! - [`cohort`] ingests MIMIC-shaped ED tables (or synthesizes them), applies the
//!   inclusion/exclusion criteria and draws a stratified sample.
//! - [`vignette`] renders structured rows into vignette text and builds
//!   counterfactual, ablation and blinded variants.
//! - [`strategy`] turns a vignette into chat messages for one of four prompt strategies.
//! - [`gateway`] sends messages to a chat-completion endpoint or the built-in
//!   biased-model simulator, with retry and pacing.
//! - [`parsing`] extracts the ESI level from free-text responses.
//! - [`metrics`] and [`stats`] compute the fairness/accuracy suite and its inference.
//! - [`runner`] orchestrates resumable runs, joins pairs and writes reports.

pub mod cohort;
pub mod domain;
pub mod error;
pub mod gateway;
pub mod metrics;
pub mod parsing;
pub mod runner;
pub mod stats;
pub mod strategy;
pub mod vignette;

mod hashing;
mod text;

pub use domain::{AgeBand, Disposition, Esi, Gender, Race};
pub use error::{Error, Result};
