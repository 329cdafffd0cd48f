//! From raw model output to grounded cause/effect spans.

mod cue;
pub mod distance;
mod ground;
mod parse;

pub use cue::{cue_baseline, CUES};
pub use ground::{
    ground_span, ground_span_with, GroundError, GroundedSpan, Grounding, GroundingConfig,
    MatchMethod,
};
pub use parse::{format_answer, parse_response, ExtractionCandidate, ParseStatus};
