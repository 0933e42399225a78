//! Free-text answer parsing.
//!
//! A response is valid only when it names exactly one position label exactly
//! once. Text is lowercased, punctuation becomes whitespace, and two-word
//! labels are matched left to right before any leftover `center` token is
//! counted, so "center left" never also counts as "center".

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::PositionLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParsedAnswer {
    pub label: Option<PositionLabel>,
    pub valid: bool,
}

impl ParsedAnswer {
    const INVALID: ParsedAnswer = ParsedAnswer {
        label: None,
        valid: false,
    };
}

/// Lowercases, maps every non-alphanumeric character to a space and
/// collapses runs of whitespace.
pub fn normalize(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

fn compound(first: &str, second: &str) -> Option<PositionLabel> {
    use PositionLabel::*;
    Some(match (first, second) {
        ("top", "left") => TopLeft,
        ("top", "center") => TopCenter,
        ("top", "right") => TopRight,
        ("center", "left") => CenterLeft,
        ("center", "right") => CenterRight,
        ("bottom", "left") => BottomLeft,
        ("bottom", "center") => BottomCenter,
        ("bottom", "right") => BottomRight,
        _ => return None,
    })
}

/// All label mentions in order of appearance.
pub fn mentions(raw: &str) -> Vec<PositionLabel> {
    let text = normalize(raw);
    let tokens: Vec<&str> = text.split(' ').filter(|t| !t.is_empty()).collect();
    let mut found = Vec::new();
    let mut masked = alloc::vec![false; tokens.len()];
    let mut i = 0;
    while i + 1 < tokens.len() {
        if let Some(label) = compound(tokens[i], tokens[i + 1]) {
            found.push((i, label));
            masked[i] = true;
            masked[i + 1] = true;
            i += 2;
        } else {
            i += 1;
        }
    }
    for (i, t) in tokens.iter().enumerate() {
        if !masked[i] && *t == "center" {
            found.push((i, PositionLabel::Center));
        }
    }
    found.sort_by_key(|(i, _)| *i);
    found.into_iter().map(|(_, l)| l).collect()
}

/// Parses a raw model response under the exactly-one-label rule.
pub fn parse_answer(raw: &str) -> ParsedAnswer {
    match mentions(raw).as_slice() {
        [label] => ParsedAnswer {
            label: Some(*label),
            valid: true,
        },
        _ => ParsedAnswer::INVALID,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PositionLabel::*;

    fn ok(raw: &str, l: PositionLabel) {
        assert_eq!(
            parse_answer(raw),
            ParsedAnswer {
                label: Some(l),
                valid: true
            },
            "{raw:?}"
        );
    }

    fn bad(raw: &str) {
        assert_eq!(parse_answer(raw), ParsedAnswer::INVALID, "{raw:?}");
    }

    #[test]
    fn examples() {
        ok("Top left.", TopLeft);
        ok("the object is in the center left region", CenterLeft);
        bad("top left or top right");
        bad("");
    }

    #[test]
    fn center_traps() {
        ok("Center", Center);
        ok("  CENTER!! ", Center);
        ok("bottom-center", BottomCenter);
        bad("center, center");
        bad("center left, center");
        // greedy left-to-right pairing: "top center" then a bare "left"
        ok("top center left", TopCenter);
    }

    #[test]
    fn repeated_label_is_invalid() {
        bad("top left. Yes, top left.");
    }

    #[test]
    fn normalize_is_idempotent() {
        for s in ["Top-Left!", "  a\tb\n", "centre?", "ÜBER center"] {
            let n = normalize(s);
            assert_eq!(normalize(&n), n);
            assert_eq!(parse_answer(&n), parse_answer(s));
        }
    }
}
