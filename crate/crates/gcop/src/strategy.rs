//! Deterministic `<strategy>` block parser.
//!
//! The checker is purely syntactic: it never looks at what the strategy
//! says, only whether exactly one well-formed, non-empty, within-budget
//! `<strategy>...</strategy>` block is present. A `<think>...</think>`
//! block may appear anywhere outside the strategy block and never affects
//! validity.
//!
//! Decision order, applied to the literal lowercase tags with no
//! attributes:
//!
//! 1. no `<strategy>` anywhere -> `MissingOpen`
//! 2. `<strategy>` present but no `</strategy>` -> `MissingClose`
//! 3. walk tags left to right with a depth counter:
//!    a close at depth 0 or an open inside an open block -> `ImproperNesting`;
//!    an open after a completed block -> `MultipleBlocks`;
//!    depth still positive at the end -> `MissingClose`
//! 4. body empty after trimming -> `EmptyBody`
//! 5. more whitespace-delimited tokens than the budget -> `OverBudget`

use serde::{Deserialize, Serialize};

/// Default token budget used by callers that do not configure one.
pub const DEFAULT_TOKEN_BUDGET: usize = 1024;

const OPEN: &str = "<strategy>";
const CLOSE: &str = "</strategy>";
const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

/// Why a guide output failed the structure check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    MissingOpen,
    MissingClose,
    ImproperNesting,
    MultipleBlocks,
    EmptyBody,
    OverBudget,
}

/// Parse outcome; invalidity is data, not an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedStrategy {
    pub raw_text: String,
    pub strategy_body: Option<String>,
    pub think_body: Option<String>,
    /// Whitespace-delimited token count of the extracted body; zero when no
    /// unique body was extracted.
    pub token_count: usize,
    pub valid: bool,
    pub failure_reason: Option<FailureReason>,
}

fn find_all(text: &str, needle: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(pos) = text[from..].find(needle) {
        out.push(from + pos);
        from += pos + needle.len();
    }
    out
}

/// Extracts the first `<think>` block from `text`, ignoring the byte range
/// `mask` (the strategy block, when one was found).
fn extract_think(text: &str, mask: Option<(usize, usize)>) -> Option<String> {
    let outside = |pos: usize| mask.map_or(true, |(lo, hi)| pos < lo || pos >= hi);
    let open = find_all(text, THINK_OPEN).into_iter().find(|&p| outside(p))?;
    let body_start = open + THINK_OPEN.len();
    let close = text[body_start..]
        .match_indices(THINK_CLOSE)
        .map(|(p, _)| body_start + p)
        .find(|&p| outside(p))?;
    Some(text[body_start..close].trim().to_string())
}

/// Parses `text` against the structure contract at the given token budget.
///
/// Deterministic and total: every input yields a [`ParsedStrategy`].
pub fn parse_strategy(text: &str, budget: usize) -> ParsedStrategy {
    let opens = find_all(text, OPEN);
    let closes = find_all(text, CLOSE);

    let fail = |reason, body: Option<String>, tokens| ParsedStrategy {
        raw_text: text.to_string(),
        strategy_body: body,
        think_body: extract_think(text, None),
        token_count: tokens,
        valid: false,
        failure_reason: Some(reason),
    };

    if opens.is_empty() {
        return fail(FailureReason::MissingOpen, None, 0);
    }
    if closes.is_empty() {
        return fail(FailureReason::MissingClose, None, 0);
    }

    // Merge tag positions and scan. Open tags start with "<s", close tags
    // with "</s", so positions never collide.
    let mut events: Vec<(usize, bool)> = opens
        .iter()
        .map(|&p| (p, true))
        .chain(closes.iter().map(|&p| (p, false)))
        .collect();
    events.sort_unstable();

    let mut depth = 0usize;
    let mut completed = 0usize;
    let mut block: Option<(usize, usize)> = None;
    let mut block_start = 0usize;
    for (pos, is_open) in events {
        if is_open {
            if depth > 0 {
                return fail(FailureReason::ImproperNesting, None, 0);
            }
            if completed > 0 {
                return fail(FailureReason::MultipleBlocks, None, 0);
            }
            depth = 1;
            block_start = pos + OPEN.len();
        } else {
            if depth == 0 {
                return fail(FailureReason::ImproperNesting, None, 0);
            }
            depth = 0;
            completed += 1;
            block = Some((block_start, pos));
        }
    }
    if depth > 0 {
        return fail(FailureReason::MissingClose, None, 0);
    }

    let (body_start, body_end) = block.expect("one completed block");
    let body = text[body_start..body_end].trim();
    let token_count = body.split_whitespace().count();
    let think = extract_think(text, Some((body_start - OPEN.len(), body_end + CLOSE.len())));

    if body.is_empty() {
        return ParsedStrategy {
            raw_text: text.to_string(),
            strategy_body: Some(String::new()),
            think_body: think,
            token_count: 0,
            valid: false,
            failure_reason: Some(FailureReason::EmptyBody),
        };
    }
    if token_count > budget {
        return ParsedStrategy {
            raw_text: text.to_string(),
            strategy_body: Some(body.to_string()),
            think_body: think,
            token_count,
            valid: false,
            failure_reason: Some(FailureReason::OverBudget),
        };
    }
    ParsedStrategy {
        raw_text: text.to_string(),
        strategy_body: Some(body.to_string()),
        think_body: think,
        token_count,
        valid: true,
        failure_reason: None,
    }
}

/// The structure indicator: 1 iff `parse_strategy(text, budget)` is valid.
pub fn structure_indicator(text: &str, budget: usize) -> u8 {
    parse_strategy(text, budget).valid as u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_well_formed() {
        let p = parse_strategy("<strategy>use set intersection</strategy>", 1024);
        assert!(p.valid);
        assert_eq!(p.strategy_body.as_deref(), Some("use set intersection"));
        assert_eq!(p.token_count, 3);
        assert_eq!(p.failure_reason, None);
    }

    #[test]
    fn missing_close() {
        let p = parse_strategy("<strategy>no closing tag", 1024);
        assert_eq!(p.failure_reason, Some(FailureReason::MissingClose));
        assert!(!p.valid);
    }

    #[test]
    fn whitespace_body_is_empty() {
        let p = parse_strategy("<think>plan</think><strategy>  </strategy>", 1024);
        assert_eq!(p.failure_reason, Some(FailureReason::EmptyBody));
        assert_eq!(p.think_body.as_deref(), Some("plan"));
        assert_eq!(p.token_count, 0);
    }

    #[test]
    fn nested_blocks_are_improper() {
        let p = parse_strategy("<strategy>a<strategy>b</strategy></strategy>", 1024);
        assert_eq!(p.failure_reason, Some(FailureReason::ImproperNesting));
        assert_eq!(structure_indicator("<strategy>a<strategy>b</strategy></strategy>", 1024), 0);
    }

    #[test]
    fn budget_boundary() {
        let body = "a b c d e";
        let text = format!("<strategy>{body}</strategy>");
        assert_eq!(structure_indicator(&text, 5), 1);
        assert_eq!(parse_strategy(&text, 4).failure_reason, Some(FailureReason::OverBudget));
    }

    #[test]
    fn think_is_tolerated_on_either_side() {
        for text in [
            "<think>x</think><strategy>plan</strategy>",
            "<strategy>plan</strategy><think>x</think>",
        ] {
            let p = parse_strategy(text, 1024);
            assert!(p.valid, "{text}");
            assert_eq!(p.think_body.as_deref(), Some("x"));
        }
        // Unclosed think never affects validity.
        let p = parse_strategy("<think>x<strategy>plan</strategy>", 1024);
        assert!(p.valid);
        assert_eq!(p.think_body, None);
    }

    #[test]
    fn tags_are_literal_and_case_sensitive() {
        assert_eq!(
            parse_strategy("<Strategy>a</Strategy>", 16).failure_reason,
            Some(FailureReason::MissingOpen)
        );
        // A spaced tag is not an open tag at all.
        assert_eq!(
            parse_strategy("<strategy >a</strategy>", 16).failure_reason,
            Some(FailureReason::MissingOpen)
        );
    }

    proptest! {
        // Bodies extracted from valid parses re-wrap to the same body.
        #[test]
        fn rewrap_idempotence(body in "[a-z ]{1,60}") {
            let first = parse_strategy(&format!("<strategy>{body}</strategy>"), 1024);
            prop_assume!(first.valid);
            let b = first.strategy_body.clone().unwrap();
            let again = parse_strategy(&format!("<strategy>{b}</strategy>"), 1024);
            prop_assert!(again.valid);
            prop_assert_eq!(again.strategy_body.unwrap(), b);
        }

        // Valid at budget b implies valid at any larger budget.
        #[test]
        fn budget_monotonicity(body in "[a-z ]{1,60}", budget in 1usize..20, extra in 0usize..20) {
            let text = format!("<strategy>{body}</strategy>");
            if parse_strategy(&text, budget).valid {
                prop_assert!(parse_strategy(&text, budget + extra).valid);
            }
        }

        // Identical input, identical outcome.
        #[test]
        fn determinism(text in ".{0,120}") {
            prop_assert_eq!(parse_strategy(&text, 32), parse_strategy(&text, 32));
        }
    }
}
