//! Cause/effect span extraction from financial text.
//!
//! The pipeline is `corpus` → `prompt` → `llmclient` → `extract` → `evalkit`:
//! rows are rendered into instruction prompts, sent to a chat-completion
//! backend (or a mock), the answers are parsed and grounded back onto verbatim
//! spans of the source, and predictions are scored with token-level weighted
//! F1 and exact match.

pub mod corpus;
pub mod evalkit;
pub mod extract;
pub mod llmclient;
pub mod prompt;
pub mod text;
