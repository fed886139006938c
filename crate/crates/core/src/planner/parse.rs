//! Strict reader for the line-oriented plan grammar:
//!
//! ```text
//! # optional comment lines
//! move_linear(x=0.3, y=0.1, z=0.25, roll=0, pitch=0, yaw=0)
//! close_gripper(angle=0.33)
//! go_home()
//! ```
//!
//! One call per line. Numbers are plain decimals (`-0.25`, `3`, `90.5`): no
//! exponent, no leading `+`, no bare `.5`. Blank lines are skipped. Anything
//! else is an error; nothing is guessed or repaired.

use std::collections::BTreeMap;
use thiserror::Error;

use super::api::{ActionStep, ApiError, ApiSpec, Primitive};
use super::{ActionSequence, Provenance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: syntax error: {reason}")]
    SyntaxError { line: usize, reason: String },
    #[error("line {line}: unknown primitive `{name}`")]
    UnknownPrimitive { line: usize, name: String },
    #[error("line {line}: argument schema mismatch: {reason}")]
    ArgumentSchemaMismatch { line: usize, reason: String },
    #[error("plan contains no calls")]
    EmptyPlan,
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::SyntaxError { .. } => "SyntaxError",
            ParseError::UnknownPrimitive { .. } => "UnknownPrimitive",
            ParseError::ArgumentSchemaMismatch { .. } => "ArgumentSchemaMismatch",
            ParseError::EmptyPlan => "EmptyPlan",
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// `-?digits(.digits)?`
fn parse_decimal(s: &str) -> Option<f64> {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |d: &str| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit());
    if !digits(int) || frac.is_some_and(|f| !digits(f)) {
        return None;
    }
    s.parse().ok()
}

/// Parses one call line (already known not to be blank or a comment).
pub fn parse_line(text: &str, line: usize) -> Result<ActionStep, ParseError> {
    let syntax = |reason: &str| ParseError::SyntaxError {
        line,
        reason: reason.to_string(),
    };
    let text = text.trim_matches(' ');
    let open = text.find('(').ok_or_else(|| syntax("expected `name(...)`"))?;
    let name = &text[..open];
    if !is_ident(name) {
        return Err(syntax("call name must be a lowercase identifier"));
    }
    let rest = &text[open + 1..];
    let inner = rest.strip_suffix(')').ok_or_else(|| syntax("call must end with `)`"))?;
    if inner.contains(['(', ')']) {
        return Err(syntax("nested parentheses"));
    }
    let mut args = BTreeMap::new();
    if !inner.trim_matches(' ').is_empty() {
        for part in inner.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| syntax("arguments are `key=value`"))?;
            let k = k.trim_matches(' ');
            let v = v.trim_matches(' ');
            if !is_ident(k) {
                return Err(syntax("argument name must be a lowercase identifier"));
            }
            let value = parse_decimal(v).ok_or_else(|| syntax(&format!("`{v}` is not a decimal number")))?;
            if args.insert(k.to_string(), value).is_some() {
                return Err(syntax(&format!("argument `{k}` given twice")));
            }
        }
    }
    Ok(ActionStep {
        primitive: name.to_string(),
        args,
    })
}

/// Parses a full plan and checks each call against `api`.
pub fn parse_plan(text: &str, api: &ApiSpec, provenance: Provenance) -> Result<ActionSequence, ParseError> {
    let mut steps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim_matches(' ');
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let step = parse_line(t, line)?;
        let known = step.primitive.parse::<Primitive>().is_ok_and(|p| api.allows(p));
        if !known {
            return Err(ParseError::UnknownPrimitive {
                line,
                name: step.primitive,
            });
        }
        api.check(&step).map_err(|e| match e {
            ApiError::UnknownPrimitive(name) => ParseError::UnknownPrimitive { line, name },
            other => ParseError::ArgumentSchemaMismatch {
                line,
                reason: other.to_string(),
            },
        })?;
        steps.push(step);
    }
    ActionSequence::new(steps, provenance).map_err(|_| ParseError::EmptyPlan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ActionSequence, ParseError> {
        parse_plan(text, &ApiSpec::default(), Provenance::Rule)
    }

    #[test]
    fn go_home() {
        let s = parse("go_home()").unwrap();
        assert_eq!(s.steps(), &[ActionStep::new("go_home", &[])]);
    }

    #[test]
    fn teleport_is_unknown() {
        assert_eq!(parse("teleport(x=1)").unwrap_err().code(), "UnknownPrimitive");
    }

    #[test]
    fn out_of_range_angle() {
        assert_eq!(
            parse("close_gripper(angle=999)").unwrap_err().code(),
            "ArgumentSchemaMismatch"
        );
    }

    #[test]
    fn comments_and_blank_lines() {
        let s = parse("# plan\n\nmove_vertical(dz=-0.1)\n  \nwait(seconds=1.5)\n").unwrap();
        assert_eq!(s.steps().len(), 2);
        assert_eq!(s.steps()[0].arg("dz"), Some(-0.1));
    }

    #[test]
    fn rejects_deviations() {
        for bad in [
            "go_home",
            "go_home() extra",
            "GoHome()",
            "wait(seconds=1e2)",
            "wait(seconds=+1)",
            "wait(seconds=.5)",
            "wait(seconds=5.)",
            "wait(seconds=1,)",
            "wait(seconds=1, seconds=2)",
            "wait(seconds=abs(1))",
            "```\ngo_home()\n```",
            "wait(seconds=1);",
            "\tgo_home()",
        ] {
            assert!(parse(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn missing_or_extra_args() {
        assert_eq!(parse("move_vertical()").unwrap_err().code(), "ArgumentSchemaMismatch");
        assert_eq!(parse("go_home(x=1)").unwrap_err().code(), "ArgumentSchemaMismatch");
    }

    #[test]
    fn empty_plan() {
        assert_eq!(parse("# nothing\n").unwrap_err(), ParseError::EmptyPlan);
    }

    #[test]
    fn round_trip_rendering() {
        let s = parse("move_linear(x=0.3, y=-0.1, z=0.25, roll=0, pitch=0, yaw=0)\nclose_gripper(angle=0.33333333333333326)\n").unwrap();
        assert_eq!(parse(&s.to_plan_text()).unwrap(), s);
    }
}
