use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::llm::{ChatSession, MessageId, Tag};

/// Normalized first error line of a failure window.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ErrorSignature(pub String);

impl fmt::Display for ErrorSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

struct Masks {
    lexicon: Regex,
    location: Regex,
    path: Regex,
    hex: Regex,
    hash: Regex,
    number_pos: Regex,
    line_word: Regex,
    space: Regex,
}

fn masks() -> &'static Masks {
    static M: OnceLock<Masks> = OnceLock::new();
    M.get_or_init(|| Masks {
        lexicon: Regex::new(
            r"(?i)error\b|error:|fatal|undefined reference|no such file|not found|cannot find|could not find|returned a non-zero code|failed",
        )
        .unwrap(),
        location: Regex::new(r"^\s*[^\s:]+:\d+(?::\d+)?:\s*").unwrap(),
        path: Regex::new(r"(?:/[A-Za-z0-9_.+@-]+){2,}/?").unwrap(),
        hex: Regex::new(r"0[xX][0-9a-fA-F]+").unwrap(),
        hash: Regex::new(r"\b[0-9a-f]{12,64}\b").unwrap(),
        number_pos: Regex::new(r":\d+").unwrap(),
        line_word: Regex::new(r"(?i)\bline \d+").unwrap(),
        space: Regex::new(r"\s+").unwrap(),
    })
}

fn mask(line: &str) -> String {
    let m = masks();
    let s = m.location.replace(line, "");
    let s = m.path.replace_all(&s, "<path>");
    let s = m.hex.replace_all(&s, "<hex>");
    let s = m.hash.replace_all(&s, "<hex>");
    let s = m.number_pos.replace_all(&s, ":<n>");
    let s = m.line_word.replace_all(&s, "line <n>");
    m.space.replace_all(s.trim(), " ").into_owned()
}

/// First line matching the error lexicon, else the last line, with
/// locations, absolute paths and hex values masked. Idempotent.
pub fn normalize_signature(window: &[String]) -> ErrorSignature {
    let m = masks();
    let line = window
        .iter()
        .find(|l| m.lexicon.is_match(l))
        .or_else(|| window.iter().rev().find(|l| !l.trim().is_empty()))
        .map_or("", String::as_str);
    ErrorSignature(mask(line))
}

/// Past failures paired with the request ids of the repair exchanges they
/// prompted.
pub type ResolutionHistory = Vec<(ErrorSignature, Vec<MessageId>)>;

/// Tags every past exchange whose signature differs from `new_failure` as
/// resolved. A recurring signature keeps its exchanges unresolved; on
/// success (`None`) everything is resolved.
pub fn mark_resolved(
    session: &mut ChatSession,
    history: &[(ErrorSignature, Vec<MessageId>)],
    new_failure: Option<&ErrorSignature>,
) {
    for (sig, ids) in history {
        let recurring = new_failure == Some(sig);
        for id in ids {
            if recurring {
                session.remove_tag(*id, &Tag::Resolved);
            } else {
                session.add_tag(*id, Tag::Resolved);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lines(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn location_is_masked() {
        let sig = normalize_signature(&lines(&[
            "[ 50%] Building C object CMakeFiles/app.dir/a.c.o",
            "/src/a.c:14:10: fatal error: png.h: No such file or directory",
            "compilation terminated.",
        ]));
        assert_eq!(sig.0, "fatal error: png.h: No such file or directory");
    }

    #[test]
    fn same_error_in_another_place_matches() {
        let a = normalize_signature(&lines(&[
            "/tmp/x/build/foo.cpp:3:1: error: 'bar' was not declared in this scope",
        ]));
        let b = normalize_signature(&lines(&[
            "/src/foo.cpp:99:7: error: 'bar' was not declared in this scope",
        ]));
        assert_eq!(a, b);
    }

    #[test]
    fn fallback_is_masked_last_line() {
        let sig = normalize_signature(&lines(&[
            "hello",
            "at 0xdeadBEEF in /usr/lib/x86_64-linux-gnu/libc.so",
        ]));
        assert_eq!(sig.0, "at <hex> in <path>");
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(window in proptest::collection::vec("[ -~]{0,60}", 0..6)) {
            let once = normalize_signature(&window);
            let twice = normalize_signature(std::slice::from_ref(&once.0));
            prop_assert_eq!(once, twice);
        }
    }
}
