//! Line-oriented text format:
//!
//! ```text
//! fst v1
//! initial 0
//! final 0 1
//! trans 0 a3 a1 1
//! ```
//!
//! `#` starts a comment and `<eps>` is the empty symbol. Serialization sorts
//! transitions by `(src, in, out, dst)`.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;

use super::{Fst, StateId};
use crate::error::{Error, Result};
use crate::symbol::Letter;

const HEADER: &str = "fst v1";

impl Fst {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{HEADER}").unwrap();
        writeln!(out, "initial {}", self.initial).unwrap();
        if !self.finals.is_empty() {
            let finals: Vec<String> = self.finals.iter().map(|s| s.to_string()).collect();
            writeln!(out, "final {}", finals.join(" ")).unwrap();
        }
        let mut ts: Vec<_> = self.transitions.iter().collect();
        ts.sort_by(|a, b| {
            (a.src, a.letter.name_key(), a.dst).cmp(&(b.src, b.letter.name_key(), b.dst))
        });
        for t in ts {
            writeln!(
                out,
                "trans {} {} {} {}",
                t.src, t.letter.input, t.letter.output, t.dst
            )
            .unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Fst> {
        let err = |line: usize, msg: String| Error::Parse { line, msg };
        let mut seen_header = false;
        let mut initial: Option<(usize, String)> = None;
        let mut finals: Vec<(usize, String)> = Vec::new();
        let mut trans: Vec<(usize, String, Letter, String)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            if !seen_header {
                if fields != ["fst", "v1"] {
                    return Err(err(line, format!("expected header `{HEADER}`")));
                }
                seen_header = true;
                continue;
            }
            match fields[0] {
                "initial" => {
                    if fields.len() != 2 {
                        return Err(err(line, "expected `initial <state>`".into()));
                    }
                    if initial.is_some() {
                        return Err(err(line, "duplicate `initial` line".into()));
                    }
                    initial = Some((line, fields[1].to_owned()));
                }
                "final" => {
                    finals.extend(fields[1..].iter().map(|s| (line, (*s).to_owned())));
                }
                "trans" => {
                    if fields.len() != 5 {
                        return Err(err(line, "expected `trans <src> <in> <out> <dst>`".into()));
                    }
                    let letter = Letter::from_names(fields[2], fields[3]);
                    trans.push((line, fields[1].to_owned(), letter, fields[4].to_owned()));
                }
                other => return Err(err(line, format!("unknown directive `{other}`"))),
            }
        }
        if !seen_header {
            return Err(err(1, format!("missing header `{HEADER}`")));
        }
        let (_, initial) = initial.ok_or_else(|| err(0, "missing `initial` line".into()))?;

        let mut labels: Vec<&str> = vec![initial.as_str()];
        labels.extend(finals.iter().map(|(_, s)| s.as_str()));
        for (_, s, _, d) in &trans {
            labels.push(s);
            labels.push(d);
        }
        let ids = assign_ids(&labels);
        let id = |s: &str| ids[s];

        let n = ids.values().max().map_or(0, |m| m + 1);
        let mut fst = Fst::new(n, id(&initial));
        for (_, f) in &finals {
            fst.set_final(id(f));
        }
        for (_, s, l, d) in &trans {
            fst.add(id(s), *l, id(d));
        }
        Ok(fst)
    }
}

impl FromStr for Fst {
    type Err = Error;
    fn from_str(s: &str) -> Result<Fst> {
        Fst::from_text(s)
    }
}

/// Numeric labels keep their value; otherwise labels are numbered in sorted
/// order.
fn assign_ids(labels: &[&str]) -> BTreeMap<String, StateId> {
    let numeric: Option<Vec<StateId>> = labels
        .iter()
        .map(|l| l.parse::<u32>().ok().map(|v| v as StateId))
        .collect();
    let mut map = BTreeMap::new();
    match numeric {
        Some(values) => {
            for (l, v) in labels.iter().zip(values) {
                map.insert((*l).to_owned(), v);
            }
        }
        None => {
            let mut sorted: Vec<&str> = labels.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            for (k, l) in sorted.into_iter().enumerate() {
                map.insert(l.to_owned(), k);
            }
        }
    }
    map
}
