//! Profile file formats.
//!
//! Text form:
//!
//! ```text
//! candidates: a,b,c
//! 0.6: a>b>c
//! 2/5: c>b>a
//! ```
//!
//! The header is optional; without it candidates are numbered in order of
//! first appearance. `#` starts a comment. The JSON form is
//! `{"candidates": [...], "voters": [{"weight": ..., "ranking": [...]}]}` with
//! weights given as numbers or as strings in either text notation.

use serde_json::{json, Value};

use super::{CandidateId, Profile, Ranking};
use crate::error::{Error, Result};
use crate::scalar::{parse_rational, rational_from_f64, Rational, Scalar};

/// Parses either format into an exact profile.
pub fn parse_profile(text: &str) -> Result<Profile<Rational>> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_text(text)
    }
}

/// Parses exactly, then converts the weights.
pub fn parse_profile_as<S: Scalar>(text: &str) -> Result<Profile<S>> {
    Ok(parse_profile(text)?.map_weights(S::from_rational))
}

struct Labels {
    names: Vec<String>,
    fixed: bool,
}

impl Labels {
    fn lookup(&mut self, name: &str) -> std::result::Result<CandidateId, String> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(CandidateId(i));
        }
        if self.fixed {
            return Err(format!("unknown candidate {name:?}"));
        }
        self.names.push(name.to_string());
        Ok(CandidateId(self.names.len() - 1))
    }
}

fn check_label(name: &str) -> std::result::Result<(), String> {
    if name.is_empty() {
        return Err("empty candidate label".into());
    }
    if name.contains(['=', ',', '~']) {
        return Err(format!("ties are not supported (in {name:?})"));
    }
    Ok(())
}

fn parse_text(text: &str) -> Result<Profile<Rational>> {
    let mut labels = Labels {
        names: Vec::new(),
        fixed: false,
    };
    let mut raw: Vec<(usize, Rational, Vec<CandidateId>)> = Vec::new();
    let mut seen_block = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let err = |msg: String| Error::Parse { line: lineno, msg };
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, tail) = line
            .split_once(':')
            .ok_or_else(|| err("expected `<weight>: <ranking>`".into()))?;
        let head = head.trim();
        if head.eq_ignore_ascii_case("candidates") {
            if seen_block || labels.fixed {
                return Err(err("the candidates header must come first".into()));
            }
            for name in tail.split(',') {
                let name = name.trim();
                check_label(name).map_err(err)?;
                if labels.names.iter().any(|n| n == name) {
                    return Err(err(format!("duplicate candidate {name:?}")));
                }
                labels.names.push(name.to_string());
            }
            labels.fixed = true;
            continue;
        }
        seen_block = true;
        let weight = parse_rational(head).map_err(|e| err(e.to_string()))?;
        let mut order = Vec::new();
        for name in tail.split('>') {
            let name = name.trim();
            check_label(name).map_err(err)?;
            order.push(labels.lookup(name).map_err(err)?);
        }
        raw.push((lineno, weight, order));
    }
    build(labels.names, raw)
}

fn build(
    names: Vec<String>,
    raw: Vec<(usize, Rational, Vec<CandidateId>)>,
) -> Result<Profile<Rational>> {
    let m = names.len();
    let mut blocks = Vec::with_capacity(raw.len());
    for (lineno, w, order) in raw {
        if order.len() != m {
            return Err(Error::Ranking(format!(
                "line {lineno}: ranking lists {} of {m} candidates",
                order.len()
            )));
        }
        let ranking =
            Ranking::new(order).map_err(|e| Error::Ranking(format!("line {lineno}: {e}")))?;
        blocks.push((w, ranking));
    }
    if blocks.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no voter blocks".into(),
        });
    }
    Profile::new(names, blocks)
}

fn json_weight(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => parse_rational(s),
        Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(Rational::from_integer(i.into())),
            None => rational_from_f64(n.as_f64().unwrap_or(f64::NAN)),
        },
        other => Err(Error::Number(other.to_string())),
    }
}

fn parse_json(text: &str) -> Result<Profile<Rational>> {
    let v: Value = serde_json::from_str(text)?;
    let perr = |msg: &str| Error::Parse {
        line: 0,
        msg: msg.to_string(),
    };
    let mut labels = Labels {
        names: Vec::new(),
        fixed: false,
    };
    if let Some(cands) = v.get("candidates") {
        let cands = cands
            .as_array()
            .ok_or_else(|| perr("`candidates` must be an array"))?;
        for c in cands {
            let name = match c {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            check_label(&name).map_err(|m| perr(&m))?;
            labels.names.push(name);
        }
        labels.fixed = true;
    }
    let voters = v
        .get("voters")
        .and_then(Value::as_array)
        .ok_or_else(|| perr("`voters` must be an array"))?;
    let mut raw = Vec::new();
    for (i, voter) in voters.iter().enumerate() {
        let weight = json_weight(
            voter
                .get("weight")
                .ok_or_else(|| perr(&format!("voter {i} has no weight")))?,
        )?;
        let ranking = voter
            .get("ranking")
            .and_then(Value::as_array)
            .ok_or_else(|| perr(&format!("voter {i} has no ranking array")))?;
        let mut order = Vec::new();
        for c in ranking {
            let name = match c {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            order.push(labels.lookup(&name).map_err(|m| perr(&m))?);
        }
        raw.push((i + 1, weight, order));
    }
    build(labels.names, raw)
}

impl<S: Scalar> Profile<S> {
    /// Text form with exact weights; re-parses to an equal profile.
    pub fn to_text(&self) -> String {
        let mut out = format!("candidates: {}\n", self.labels.join(","));
        for b in &self.blocks {
            let names: Vec<&str> = b.ranking.order().iter().map(|&c| self.label(c)).collect();
            out.push_str(&format!("{}: {}\n", b.weight, names.join(">")));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let voters: Vec<Value> = self
            .blocks
            .iter()
            .map(|b| {
                let names: Vec<&str> = b.ranking.order().iter().map(|&c| self.label(c)).collect();
                json!({"weight": b.weight.to_string(), "ranking": names})
            })
            .collect();
        json!({"candidates": self.labels, "voters": voters})
    }
}
