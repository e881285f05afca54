//! Persona-conditioned user simulation: ingest a human conversation corpus,
//! extract per-speaker personas, render persona prompts, generate bot-vs-bot
//! dialogue, and measure the gap between human and generated language.

pub mod corpus;
pub mod features;
pub mod lexica;
pub mod metrics;
pub mod prompts;
pub mod simulate;
pub mod util;
pub mod optimize;
pub mod config;
pub mod cli;
