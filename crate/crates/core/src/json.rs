//! Pulls a JSON value out of free-form LLM output.

use serde::de::DeserializeOwned;

/// Tries, in order: the whole text, each fenced block, then every `{` or `[`
/// position. Returns the first candidate that deserializes as `T`.
pub fn extract_json<T: DeserializeOwned>(text: &str) -> Option<T> {
    let trimmed = text.trim();
    if let Ok(v) = serde_json::from_str(trimmed) {
        return Some(v);
    }
    for block in fenced_blocks(text) {
        if let Ok(v) = serde_json::from_str(block.trim()) {
            return Some(v);
        }
    }
    for (i, c) in text.char_indices() {
        if c != '{' && c != '[' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<T>();
        if let Some(Ok(v)) = stream.next() {
            return Some(v);
        }
    }
    None
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(nl) = after.find('\n') else { break };
        let body = &after[nl + 1..];
        let Some(close) = body.find("```") else { break };
        out.push(&body[..close]);
        rest = &body[close + 3..];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Deserialize, Debug, PartialEq)]
    struct Pick {
        system: String,
    }

    #[test]
    fn finds_json_in_prose_and_fences() {
        let p: Pick = extract_json("{\"system\":\"CMake\"}").unwrap();
        assert_eq!(p.system, "CMake");
        let p: Pick = extract_json("Sure!\n```json\n{\"system\": \"Make\"}\n```\nDone").unwrap();
        assert_eq!(p.system, "Make");
        let p: Pick = extract_json("I pick {\"system\": \"Meson\"} because...").unwrap();
        assert_eq!(p.system, "Meson");
        assert_eq!(extract_json::<Pick>("no json here"), None);
        let v: Vec<String> = extract_json("relevant: [\"README.md\"]").unwrap();
        assert_eq!(v, ["README.md"]);
    }
}
