//! Line-oriented `key = value` experiment files.
//!
//! ```text
//! kind = fig5
//! pairs = 100x200, 100x300
//! eps = 0.9, 0.7, 0.5
//! networks = 5
//! runs = 5
//! ```
//!
//! Lists are comma separated; `n` also accepts inclusive ranges such as
//! `4..16` or `4..16:2`. `#` starts a comment. Keys not given keep the
//! defaults of the experiment kind.

use std::path::Path;

use super::{ExperimentError, ExperimentKind, ExperimentSpec};
use crate::network::ConstraintRule;

fn err(line: usize, message: impl Into<String>) -> ExperimentError {
    ExperimentError::Config {
        line,
        message: message.into(),
    }
}

fn entries(text: &str) -> Result<Vec<(usize, &str, &str)>, ExperimentError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected `key = value`, got `{line}`")))?;
        out.push((i + 1, key.trim(), value.trim()));
    }
    Ok(out)
}

fn number<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ExperimentError> {
    v.parse()
        .map_err(|_| err(line, format!("bad value `{v}` for `{key}`")))
}

fn list<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<Vec<T>, ExperimentError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| number(line, key, s))
        .collect()
}

fn n_list(line: usize, v: &str) -> Result<Vec<usize>, ExperimentError> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, rest)) = part.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (hi, number::<usize>(line, "n", step.trim())?),
                None => (rest, 1),
            };
            let lo: usize = number(line, "n", lo.trim())?;
            let hi: usize = number(line, "n", hi.trim().trim_start_matches('='))?;
            if step == 0 || lo > hi {
                return Err(err(line, format!("bad range `{part}`")));
            }
            out.extend((lo..=hi).step_by(step));
        } else {
            out.push(number(line, "n", part)?);
        }
    }
    Ok(out)
}

fn pairs(line: usize, v: &str) -> Result<Vec<(usize, usize)>, ExperimentError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (n, m) = s
                .split_once(['x', 'X'])
                .ok_or_else(|| err(line, format!("expected `<n>x<m>`, got `{s}`")))?;
            Ok((number(line, "pairs", n.trim())?, number(line, "pairs", m.trim())?))
        })
        .collect()
}

fn constraint(line: usize, v: &str) -> Result<ConstraintRule, ExperimentError> {
    match v.split_once(':') {
        None if v == "capped" || v == "capped_ratio" => Ok(ConstraintRule::CappedRatio),
        Some(("fixed", c)) => Ok(ConstraintRule::Fixed(number(line, "constraint", c.trim())?)),
        _ => Err(err(line, format!("constraint must be `capped` or `fixed:<c>`, got `{v}`"))),
    }
}

/// Applies the entries of `text` on top of `spec`. A `kind` entry is
/// ignored here; see [`parse_spec`].
pub fn apply_config(spec: &mut ExperimentSpec, text: &str) -> Result<(), ExperimentError> {
    for (line, key, v) in entries(text)? {
        match key {
            "kind" => {}
            "n" => spec.n_values = n_list(line, v)?,
            "pairs" => spec.pairs = pairs(line, v)?,
            "rho" => spec.rho = number(line, key, v)?,
            "eps" => spec.eps = list(line, key, v)?,
            "p" => spec.p = number(line, key, v)?,
            "q" => spec.q = number(line, key, v)?,
            "q_matched" => spec.q_matched = Some(number(line, key, v)?),
            "constraint" => spec.constraint = constraint(line, v)?,
            "networks" => spec.networks = number(line, key, v)?,
            "runs" => spec.runs = number(line, key, v)?,
            "seed" => spec.seed = number(line, key, v)?,
            "max_rounds" => spec.max_rounds = number(line, key, v)?,
            "time_budget_secs" => spec.time_budget_secs = Some(number(line, key, v)?),
            "suites" => {
                spec.suites = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "out" => spec.out = Some(v.into()),
            "chart" => spec.chart = Some(v.into()),
            other => return Err(err(line, format!("unknown key `{other}`"))),
        }
    }
    Ok(())
}

/// Parses a whole file. The `kind` entry picks the defaults, and falls back
/// to `default_kind` when absent.
pub fn parse_spec(text: &str, default_kind: Option<ExperimentKind>) -> Result<ExperimentSpec, ExperimentError> {
    let mut kind = default_kind;
    for (line, key, v) in entries(text)? {
        if key == "kind" {
            kind = Some(ExperimentKind::parse(v).ok_or_else(|| err(line, format!("unknown kind `{v}`")))?);
        }
    }
    let kind = kind.ok_or_else(|| err(0, "missing `kind`"))?;
    let mut spec = ExperimentSpec::default_for(kind);
    apply_config(&mut spec, text)?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: impl AsRef<Path>, default_kind: Option<ExperimentKind>) -> Result<ExperimentSpec, ExperimentError> {
    parse_spec(&std::fs::read_to_string(path)?, default_kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_fig5_file() {
        let text = "# desk scale\nkind = fig5\npairs = 100x200, 150x450\neps = 0.9, 0.7,0.5\nnetworks = 5\nruns = 5 # per network\nseed = 9\n";
        let spec = parse_spec(text, None).unwrap();
        assert_eq!(spec.kind, ExperimentKind::Fig5RandomSweep);
        assert_eq!(spec.pairs, vec![(100, 200), (150, 450)]);
        assert_eq!(spec.eps, vec![0.9, 0.7, 0.5]);
        assert_eq!((spec.networks, spec.runs, spec.seed), (5, 5, 9));
        assert_eq!(spec.rho, 0.04);
        assert_eq!(spec.constraint, ConstraintRule::CappedRatio);
    }

    #[test]
    fn ranges_and_kind_fallback() {
        let spec = parse_spec("n = 4..10:2, 13\nconstraint = fixed:1", Some(ExperimentKind::Fig4Counterexample)).unwrap();
        assert_eq!(spec.n_values, vec![4, 6, 8, 10, 13]);
        assert_eq!(parse_spec("n = 2..=4", Some(ExperimentKind::Fig4Counterexample)).unwrap().n_values, vec![2, 3, 4]);
    }

    #[test]
    fn round_trips_canonical_rendering() {
        let mut spec = ExperimentSpec::fig5();
        spec.q_matched = Some(0.5);
        spec.time_budget_secs = Some(30.0);
        let again = parse_spec(&spec.to_config_string(), None).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_spec("kind = fig4\n\nruns = many\n", None).unwrap_err();
        assert!(matches!(e, ExperimentError::Config { line: 3, .. }), "{e}");
        assert!(matches!(parse_spec("kind = fig4\nbogus = 1\n", None), Err(ExperimentError::Config { line: 2, .. })));
        assert!(parse_spec("runs = 2\n", None).is_err());
        assert!(parse_spec("kind = fig4\nruns\n", None).is_err());
    }
}
