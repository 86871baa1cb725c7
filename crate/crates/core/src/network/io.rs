//! Line-oriented network text format.
//!
//! ```text
//! # comment
//! leaders 2
//! followers 3
//! constraint 1 2
//! constraint 2 1
//! edge 1 1
//! edge 1 2
//! edge 2 3
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{BipartiteNetwork, FollowerId, LeaderId, NetworkError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(#[from] NetworkError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

/// Splits text into `(line_number, tokens)` with comments and blank lines
/// removed. Shared with the matching and config readers.
pub(crate) fn tokenized_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_count(line: usize, token: &str, what: &str) -> Result<usize, ParseError> {
    token
        .parse::<usize>()
        .map_err(|_| syntax(line, format!("expected a non-negative integer for {what}, got `{token}`")))
}

pub fn parse_network(text: &str) -> Result<BipartiteNetwork, ParseError> {
    let mut lines = tokenized_lines(text);
    let mut header = |keyword: &str| -> Result<usize, ParseError> {
        match lines.next() {
            Some((ln, t)) if t.len() == 2 && t[0] == keyword => parse_count(ln, t[1], keyword),
            Some((ln, _)) => Err(syntax(ln, format!("expected `{keyword} <count>`"))),
            None => Err(syntax(0, format!("missing `{keyword}` header"))),
        }
    };
    let n = header("leaders")?;
    let m = header("followers")?;

    let mut constraints = BTreeMap::new();
    let mut edges = Vec::new();
    let mut seen_edges = BTreeSet::new();
    for (ln, t) in lines {
        match t.as_slice() {
            ["constraint", l, c] => {
                let l = parse_count(ln, l, "leader id")?;
                let c = parse_count(ln, c, "constraint")?;
                if l == 0 || l > n {
                    return Err(syntax(ln, format!("leader {l} out of range 1..={n}")));
                }
                if constraints.insert(LeaderId(l as u32), c).is_some() {
                    return Err(syntax(ln, format!("duplicate constraint for leader {l}")));
                }
            }
            ["edge", l, f] => {
                let l = parse_count(ln, l, "leader id")?;
                let f = parse_count(ln, f, "follower id")?;
                if l == 0 || l > n {
                    return Err(syntax(ln, format!("leader {l} out of range 1..={n}")));
                }
                if f == 0 || f > m {
                    return Err(syntax(ln, format!("follower {f} out of range 1..={m}")));
                }
                if !seen_edges.insert((l, f)) {
                    return Err(syntax(ln, format!("duplicate edge {l} {f}")));
                }
                edges.push((LeaderId(l as u32), FollowerId(f as u32)));
            }
            _ => return Err(syntax(ln, format!("unrecognized line `{}`", t.join(" ")))),
        }
    }
    Ok(BipartiteNetwork::build(n, m, &edges, &constraints)?)
}

pub fn write_network(net: &BipartiteNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "leaders {}", net.num_leaders());
    let _ = writeln!(out, "followers {}", net.num_followers());
    for l in net.leaders() {
        let _ = writeln!(out, "constraint {} {}", l.0, net.constraint(l));
    }
    for (l, f) in net.edges() {
        let _ = writeln!(out, "edge {} {}", l.0, f.0);
    }
    out
}

pub fn load_network(path: impl AsRef<Path>) -> Result<BipartiteNetwork, ParseError> {
    parse_network(&fs::read_to_string(path)?)
}

pub fn save_network(net: &BipartiteNetwork, path: impl AsRef<Path>) -> Result<(), ParseError> {
    fs::write(path, write_network(net))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{gen_counterexample, gen_random, ConstraintRule};

    #[test]
    fn round_trip_counterexample_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g6.net");
        let g6 = gen_counterexample(6).unwrap();
        save_network(&g6, &path).unwrap();
        assert_eq!(load_network(&path).unwrap(), g6);
    }

    #[test]
    fn comments_and_free_order() {
        let text = "# a tiny network\nleaders 2\nfollowers 2 # inline\n\nedge 2 2\nconstraint 2 1\nedge 1 1\nconstraint 1 1\n";
        let net = parse_network(text).unwrap();
        assert_eq!(net.num_edges(), 2);
        assert!(net.has_edge(LeaderId(2), FollowerId(2)));
    }

    #[test]
    fn missing_constraint_names_leader() {
        let text = "leaders 2\nfollowers 1\nconstraint 1 1\nedge 1 1\n";
        let err = parse_network(text).unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid(NetworkError::MissingConstraint(LeaderId(2)))
        ));
        assert!(err.to_string().contains("l2"));
    }

    #[test]
    fn out_of_range_leader_reports_line() {
        let mut text = write_network(&gen_counterexample(6).unwrap());
        text.push_str("edge 7 1\n");
        let err = parse_network(&text).unwrap_err();
        match err {
            ParseError::Syntax { line, message } => {
                assert_eq!(line, 2 + 6 + 21 + 1);
                assert!(message.contains("leader 7"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_lines_are_errors() {
        let text = "leaders 1\nfollowers 1\nconstraint 1 1\nedge 1 1\nedge 1 1\n";
        assert!(matches!(parse_network(text), Err(ParseError::Syntax { line: 5, .. })));
        let text = "leaders 1\nfollowers 1\nconstraint 1 1\nconstraint 1 1\n";
        assert!(matches!(parse_network(text), Err(ParseError::Syntax { line: 4, .. })));
    }

    #[test]
    fn zero_constraint_and_bad_header() {
        let text = "leaders 1\nfollowers 1\nconstraint 1 0\n";
        assert!(matches!(
            parse_network(text),
            Err(ParseError::Invalid(NetworkError::ZeroConstraint(_)))
        ));
        assert!(matches!(
            parse_network("followers 1\nleaders 1\n"),
            Err(ParseError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_network("leaders x\n"),
            Err(ParseError::Syntax { line: 1, .. })
        ));
    }

    proptest::proptest! {
        #[test]
        fn round_trip_random(n in 1usize..12, m in 1usize..12, rho in 0.0f64..=1.0, seed: u64, c in 1usize..4) {
            let net = gen_random(n, m, rho, seed, ConstraintRule::Fixed(c)).unwrap();
            proptest::prop_assert_eq!(parse_network(&write_network(&net)).unwrap(), net);
        }
    }
}
