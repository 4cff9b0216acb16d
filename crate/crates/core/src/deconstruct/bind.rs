use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::marks::MarkGroup;
use super::DeconstructError;
use crate::scene::ElementRef;

/// How marks are matched to dataset rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum KeySpec {
    /// Dotted path into each row and each mark's datum.
    Field(String),
    /// The whole datum is the key (e.g. axis ticks bound to plain strings).
    Datum,
    /// Marks sorted by position are matched to rows in dataset order.
    Positional,
}

impl From<String> for KeySpec {
    fn from(s: String) -> Self {
        match s.as_str() {
            "" | "@position" => KeySpec::Positional,
            "@datum" => KeySpec::Datum,
            _ => KeySpec::Field(s),
        }
    }
}

impl From<KeySpec> for String {
    fn from(k: KeySpec) -> String {
        match k {
            KeySpec::Field(f) => f,
            KeySpec::Datum => "@datum".into(),
            KeySpec::Positional => "@position".into(),
        }
    }
}

impl fmt::Display for KeySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from(self.clone()))
    }
}

/// Resolves a dotted path (`a.b.0`) inside a JSON value.
pub fn field_value<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    if path.is_empty() {
        return Some(v);
    }
    path.split('.').try_fold(v, |cur, seg| match cur {
        Value::Object(m) => m.get(seg),
        Value::Array(a) => seg.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    })
}

/// Canonical text form of a key value: strings verbatim, numbers without
/// a trailing `.0`, anything else as compact JSON.
pub fn key_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n
            .as_f64()
            .map(crate::format_number)
            .unwrap_or_else(|| n.to_string()),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchedPair {
    /// Index into `MarkGroup::marks`.
    pub mark: usize,
    /// Index into the dataset.
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingRow {
    pub index: usize,
    pub key: String,
    pub row: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtraMark {
    pub index: usize,
    pub element: ElementRef,
    /// Key read from the mark's datum, when it had one.
    pub key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub expected: usize,
    pub plotted: usize,
    pub missing: Vec<MissingRow>,
    pub extra: Vec<ExtraMark>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub pairs: Vec<MatchedPair>,
    pub report: CompletenessReport,
}

impl Binding {
    pub fn row_for_mark(&self, mark: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.mark == mark).map(|p| p.row)
    }
}

fn row_key(row: &Value, key: &KeySpec, index: usize) -> Option<String> {
    match key {
        KeySpec::Field(path) => field_value(row, path).map(key_string),
        KeySpec::Datum => Some(key_string(row)),
        KeySpec::Positional => Some(format!("row {}", index + 1)),
    }
}

/// Matches marks to dataset rows and tallies the leftovers on both sides.
///
/// Marks that carry a bound datum are matched by key equality. Marks
/// without one are sorted by position (left to right, then top to bottom)
/// and paired with the still-unmatched rows in dataset order.
pub fn bind_data(
    group: &MarkGroup,
    rows: &[Value],
    key: &KeySpec,
) -> Result<Binding, DeconstructError> {
    let mut by_key: BTreeMap<String, usize> = BTreeMap::new();
    if *key != KeySpec::Positional {
        for (i, row) in rows.iter().enumerate() {
            let k = row_key(row, key, i).ok_or_else(|| {
                DeconstructError::KeyUnresolvable(format!("row {} has no field {key}", i + 1))
            })?;
            if by_key.insert(k.clone(), i).is_some() {
                return Err(DeconstructError::AmbiguousKey(k));
            }
        }
    }

    let mut taken = vec![false; rows.len()];
    let mut pairs = Vec::new();
    let mut extra = Vec::new();
    let mut positional = Vec::new();

    for (mi, mark) in group.marks.iter().enumerate() {
        let datum = match (key, &mark.datum) {
            (KeySpec::Positional, _) | (_, None) => {
                positional.push(mi);
                continue;
            }
            (_, Some(d)) => d,
        };
        let mk = match key {
            KeySpec::Field(path) => field_value(datum, path).map(key_string),
            _ => Some(key_string(datum)),
        };
        match mk.as_ref().and_then(|k| by_key.get(k)) {
            Some(&row) if !taken[row] => {
                taken[row] = true;
                pairs.push(MatchedPair { mark: mi, row });
            }
            _ => extra.push(ExtraMark {
                index: mi,
                element: mark.element,
                key: mk,
            }),
        }
    }

    positional.sort_by(|&a, &b| {
        let pa = group.marks[a].geometry.map(|g| (g.x, g.y));
        let pb = group.marks[b].geometry.map(|g| (g.x, g.y));
        match (pa, pb) {
            (Some(pa), Some(pb)) => pa
                .0
                .total_cmp(&pb.0)
                .then(pa.1.total_cmp(&pb.1))
                .then(a.cmp(&b)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.cmp(&b),
        }
    });
    let free: Vec<usize> = (0..rows.len()).filter(|&r| !taken[r]).collect();
    let mut free_rows = free.into_iter();
    for mi in positional {
        match free_rows.next() {
            Some(row) => {
                taken[row] = true;
                pairs.push(MatchedPair { mark: mi, row });
            }
            None => extra.push(ExtraMark {
                index: mi,
                element: group.marks[mi].element,
                key: None,
            }),
        }
    }
    pairs.sort_by_key(|p| p.mark);
    extra.sort_by_key(|e| e.index);

    let missing: Vec<MissingRow> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| !taken[*i])
        .map(|(i, row)| MissingRow {
            index: i,
            key: row_key(row, key, i).unwrap_or_else(|| format!("row {}", i + 1)),
            row: row.clone(),
        })
        .collect();

    Ok(Binding {
        report: CompletenessReport {
            expected: rows.len(),
            plotted: pairs.len(),
            missing,
            extra,
        },
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletenessVerdict {
    pub passed: bool,
    pub message: String,
}

/// Passes iff no row is missing (after removing `allow_missing` keys) and no
/// mark is left over.
pub fn check_completeness(report: &CompletenessReport, allow_missing: &[String]) -> CompletenessVerdict {
    let allowed: BTreeSet<&str> = allow_missing.iter().map(String::as_str).collect();
    let missing: Vec<&str> = report
        .missing
        .iter()
        .map(|m| m.key.as_str())
        .filter(|k| !allowed.contains(k))
        .collect();
    let mut problems = Vec::new();
    if !missing.is_empty() {
        problems.push(format!(
            "{} data row(s) not plotted: {}",
            missing.len(),
            missing.join(", ")
        ));
    }
    if !report.extra.is_empty() {
        let keyed: Vec<&str> = report.extra.iter().filter_map(|e| e.key.as_deref()).collect();
        let mut msg = format!("{} mark(s) do not correspond to any data row", report.extra.len());
        if !keyed.is_empty() {
            msg.push_str(&format!(" (keys: {})", keyed.join(", ")));
        }
        problems.push(msg);
    }
    if problems.is_empty() {
        CompletenessVerdict {
            passed: true,
            message: format!("all {} data rows are plotted", report.expected),
        }
    } else {
        CompletenessVerdict {
            passed: false,
            message: problems.join("; "),
        }
    }
}
