//! `match <leader_id> <follower_id>` lines; unlisted followers are unmatched.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::{Matching, MatchingError};
use crate::network::tokenized_lines;
use crate::network::{BipartiteNetwork, FollowerId, LeaderId};

pub fn parse_matching(net: &Arc<BipartiteNetwork>, text: &str) -> Result<Matching, MatchingError> {
    let mut pairs = Vec::new();
    for (line, tokens) in tokenized_lines(text) {
        let parsed = match tokens.as_slice() {
            ["match", l, f] => l.parse::<u32>().ok().zip(f.parse::<u32>().ok()),
            _ => None,
        };
        match parsed {
            Some((l, f)) => pairs.push((LeaderId(l), FollowerId(f))),
            None => {
                return Err(MatchingError::Parse {
                    line,
                    message: format!("expected `match <leader> <follower>`, got `{}`", tokens.join(" ")),
                })
            }
        }
    }
    Matching::from_pairs(Arc::clone(net), pairs)
}

pub fn write_matching(matching: &Matching) -> String {
    let mut out = String::new();
    for (l, f) in matching.pairs() {
        let _ = writeln!(out, "match {} {}", l.0, f.0);
    }
    out
}

pub fn load_matching(
    net: &Arc<BipartiteNetwork>,
    path: impl AsRef<Path>,
) -> Result<Matching, MatchingError> {
    parse_matching(net, &fs::read_to_string(path)?)
}

pub fn save_matching(matching: &Matching, path: impl AsRef<Path>) -> Result<(), MatchingError> {
    fs::write(path, write_matching(matching))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::tests::{g, m_prime};

    #[test]
    fn round_trip() {
        let g6 = g(6);
        let m = m_prime(&g6);
        let text = write_matching(&m);
        assert_eq!(text.lines().count(), 5);
        assert_eq!(parse_matching(&g6, &text).unwrap(), m);
    }

    #[test]
    fn rejects_garbage_and_non_edges() {
        let g3 = g(3);
        assert!(matches!(
            parse_matching(&g3, "# hi\nmatch 1 x\n"),
            Err(MatchingError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_matching(&g3, "match 1 3\n"),
            Err(MatchingError::NotAnEdge(..))
        ));
    }
}
