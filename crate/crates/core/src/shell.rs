//! Just enough shell-word handling to reason about `RUN` lines.
//!
//! This is not a shell parser. It splits a command line on the top-level
//! control operators (`&&`, `||`, `;`, `|`, newline) while respecting single
//! and double quotes, and it can strip `VAR=value` and `sudo` prefixes from
//! a segment.

/// Splits `cmd` into its top-level command segments, trimmed, empties dropped.
pub fn segments(cmd: &str) -> Vec<&str> {
    let bytes = cmd.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) => {
                if b == b'\\' && q == b'"' {
                    i += 2;
                    continue;
                }
                if b == q {
                    quote = None;
                }
                i += 1;
            }
            None => match b {
                b'\\' => i += 2,
                b'\'' | b'"' => {
                    quote = Some(b);
                    i += 1;
                }
                b'&' | b'|' if bytes.get(i + 1) == Some(&b) => {
                    out.push(&cmd[start..i]);
                    i += 2;
                    start = i;
                }
                b';' | b'|' | b'\n' => {
                    out.push(&cmd[start..i]);
                    i += 1;
                    start = i;
                }
                _ => i += 1,
            },
        }
    }
    if start < cmd.len() {
        out.push(&cmd[start..]);
    }
    out.into_iter()
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Words of a segment with leading env assignments, `sudo`, `env`, `exec`
/// and grouping punctuation removed.
pub fn command_words(segment: &str) -> Vec<&str> {
    let mut words: Vec<&str> = segment
        .split_whitespace()
        .map(|w| w.trim_start_matches(['(', '{']))
        .filter(|w| !w.is_empty())
        .collect();
    while let Some(first) = words.first() {
        let is_assignment = first.split_once('=').is_some_and(|(k, _)| {
            !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        });
        if is_assignment
            || matches!(*first, "sudo" | "env" | "exec" | "time" | "nohup")
            || first.starts_with('-')
        {
            words.remove(0);
        } else {
            break;
        }
    }
    words
}

const PACKAGE_MANAGERS: &[&str] = &[
    "apt-get",
    "apt",
    "aptitude",
    "yum",
    "dnf",
    "apk",
    "zypper",
    "pacman",
    "pip",
    "pip3",
    "conda",
    "brew",
    "add-apt-repository",
    "update-alternatives",
    "dpkg",
    "snap",
];

/// True when the segment is driven by a system or language package manager.
pub fn is_package_manager(segment: &str) -> bool {
    command_words(segment)
        .first()
        .is_some_and(|w| PACKAGE_MANAGERS.contains(&basename(w)))
}

pub(crate) fn basename(word: &str) -> &str {
    if word.starts_with("./") {
        return word;
    }
    word.rsplit('/').next().unwrap_or(word)
}

/// Matches a command segment against a lexicon phrase such as `cmake --build`.
///
/// The first phrase word must be the segment's command word; the remaining
/// phrase words must appear later in the segment.
pub fn segment_matches_phrase(segment: &str, phrase: &str) -> bool {
    let words = command_words(segment);
    let mut phrase_words = phrase.split_whitespace();
    let Some(head) = phrase_words.next() else {
        return false;
    };
    let Some(cmd) = words.first() else {
        return false;
    };
    if basename(cmd) != head && *cmd != head {
        return false;
    }
    phrase_words.all(|pw| words[1..].contains(&pw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_operators_outside_quotes() {
        assert_eq!(
            segments("apt-get update && apt-get install -y cmake; make -j4 | tee log"),
            vec![
                "apt-get update",
                "apt-get install -y cmake",
                "make -j4",
                "tee log"
            ]
        );
        assert_eq!(
            segments("echo 'a && b' && make"),
            vec!["echo 'a && b'", "make"]
        );
        assert_eq!(segments("test -f x || exit 1"), vec!["test -f x", "exit 1"]);
    }

    #[test]
    fn strips_prefixes() {
        assert_eq!(
            command_words("DEBIAN_FRONTEND=noninteractive sudo apt-get install -y x"),
            vec!["apt-get", "install", "-y", "x"]
        );
        assert!(is_package_manager(
            "DEBIAN_FRONTEND=noninteractive apt-get install -y zlib1g-dev"
        ));
        assert!(!is_package_manager("make install"));
    }

    #[test]
    fn phrase_matching() {
        assert!(segment_matches_phrase("make -j$(nproc)", "make"));
        assert!(segment_matches_phrase(
            "cmake --build build -j",
            "cmake --build"
        ));
        assert!(!segment_matches_phrase("cmake ..", "cmake --build"));
        assert!(!segment_matches_phrase("cmake ..", "make"));
        assert!(segment_matches_phrase("/usr/bin/make all", "make"));
        assert!(segment_matches_phrase(
            "./configure --prefix=/usr",
            "./configure"
        ));
    }
}
