//! Building blocks for an academic research assistant: a completion
//! gateway, a scholarly knowledge-graph index, a ReAct tool-calling agent,
//! benchmark construction, few-shot evaluation, peer-review analytics and
//! pretraining-corpus curation.
//!
//! Everything here is synchronous and runs offline against the scripted
//! backend in [`gateway`]; the HTTP service lives in `workbench-service`.

pub mod agent;
pub mod bench;
pub mod curate;
pub mod eval;
pub mod gateway;
pub mod kg;
pub mod review;
pub mod tools;
