use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EditOp {
    Insert(char),
    Delete(char),
    Replace(char, char),
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditOp::Insert(c) => write!(f, "insert: {c}"),
            EditOp::Delete(c) => write!(f, "delete: {c}"),
            EditOp::Replace(a, b) => write!(f, "replace: {a} → {b}"),
        }
    }
}

/// An operation anchored at a character index of the source string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    /// Index into the source string: the replaced or deleted character, or
    /// the character an insertion goes before.
    pub position: usize,
    pub op: EditOp,
}

/// Minimal edit script, left to right.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub edits: Vec<Edit>,
}

impl EditScript {
    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    /// The script's operations as a sorted multiset.
    pub fn pattern(&self) -> Pattern {
        let mut ops: Vec<EditOp> = self.edits.iter().map(|e| e.op).collect();
        ops.sort();
        Pattern(ops)
    }

    /// Applies the script to `source`.
    pub fn apply(&self, source: &str) -> Result<String> {
        let src: Vec<char> = source.chars().collect();
        let mut out = String::new();
        let mut i = 0;
        for e in &self.edits {
            if e.position < i || e.position > src.len() {
                return Err(Error::OutOfRange {
                    what: "edit position",
                    value: e.position,
                    min: i,
                    max: src.len(),
                });
            }
            out.extend(&src[i..e.position]);
            i = e.position;
            match e.op {
                EditOp::Insert(c) => out.push(c),
                EditOp::Delete(c) | EditOp::Replace(c, _) => {
                    if src.get(i) != Some(&c) {
                        return Err(Error::Undefined(format!("edit {} at {}", e.op, e.position)));
                    }
                    if let EditOp::Replace(_, d) = e.op {
                        out.push(d);
                    }
                    i += 1;
                }
            }
        }
        out.extend(&src[i..]);
        Ok(out)
    }
}

/// Multiset of edit operations, used as a histogram key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pattern(pub Vec<EditOp>);

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, op) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{op}")?;
        }
        write!(f, "}}")
    }
}

/// Unit-cost Levenshtein distance.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Minimal script turning `hypothesis` into `gold`. The backtrace prefers a
/// diagonal step (match or replace), then a deletion, then an insertion.
pub fn edit_script(hypothesis: &str, gold: &str) -> EditScript {
    let a: Vec<char> = hypothesis.chars().collect();
    let b: Vec<char> = gold.chars().collect();
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    d[0] = (0..=m).collect();
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut edits = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]) {
            if a[i - 1] != b[j - 1] {
                edits.push(Edit {
                    position: i - 1,
                    op: EditOp::Replace(a[i - 1], b[j - 1]),
                });
            }
            i -= 1;
            j -= 1;
        } else if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            edits.push(Edit {
                position: i - 1,
                op: EditOp::Delete(a[i - 1]),
            });
            i -= 1;
        } else {
            edits.push(Edit {
                position: i,
                op: EditOp::Insert(b[j - 1]),
            });
            j -= 1;
        }
    }
    edits.reverse();
    EditScript { edits }
}

/// Frequency of every non-empty operation multiset, most frequent first
/// (ties in key order).
pub fn aggregate_patterns<'a>(
    scripts: impl IntoIterator<Item = &'a EditScript>,
) -> Vec<(Pattern, usize)> {
    let mut counts: BTreeMap<Pattern, usize> = BTreeMap::new();
    for s in scripts {
        if !s.is_empty() {
            *counts.entry(s.pattern()).or_default() += 1;
        }
    }
    let mut out: Vec<(Pattern, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn write_patterns_csv<W: std::io::Write>(patterns: &[(Pattern, usize)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["pattern", "count"]).map_err(io)?;
    for (p, c) in patterns {
        w.write_record([p.to_string(), c.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean gold-lemma length (in characters) of the errors minus that of the
/// whole corpus.
pub fn length_stats(error_lemmas: &[&str], all_lemmas: &[&str]) -> Result<f64> {
    if error_lemmas.is_empty() {
        return Err(Error::Undefined(
            "length statistic over an empty error set".into(),
        ));
    }
    if all_lemmas.is_empty() {
        return Err(Error::Undefined(
            "length statistic over an empty corpus".into(),
        ));
    }
    let mean =
        |xs: &[&str]| xs.iter().map(|s| s.chars().count()).sum::<usize>() as f64 / xs.len() as f64;
    Ok(mean(error_lemmas) - mean(all_lemmas))
}
