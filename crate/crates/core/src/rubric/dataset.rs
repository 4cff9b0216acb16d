use std::path::Path;

use serde_json::{Map, Value};

use super::RubricError;

/// Reads dataset rows from a `.json` array or a headed `.csv` file. CSV
/// cells that parse as numbers become numbers.
pub fn load_dataset_file(path: &Path) -> Result<Vec<Value>, RubricError> {
    let io = |e: &dyn std::fmt::Display| RubricError::Io(format!("{}: {e}", path.display()));
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("json") => {
            let bytes = std::fs::read(path).map_err(|e| io(&e))?;
            match serde_json::from_slice(&bytes).map_err(|e| io(&e))? {
                Value::Array(rows) => Ok(rows),
                _ => Err(RubricError::Schema(format!("{}: dataset must be a JSON array", path.display()))),
            }
        }
        Some("csv") => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| io(&e))?;
            parse_csv(&mut reader).map_err(|e| io(&e))
        }
        _ => Err(RubricError::Schema(format!(
            "{}: dataset files must be .csv or .json",
            path.display()
        ))),
    }
}

/// Parses CSV text with a header row.
pub fn parse_csv_str(text: &str) -> Result<Vec<Value>, RubricError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    parse_csv(&mut reader).map_err(|e| RubricError::Schema(format!("csv: {e}")))
}

fn parse_csv<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<Vec<Value>, csv::Error> {
    let headers = reader.headers()?.clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut row = Map::new();
        for (h, cell) in headers.iter().zip(record.iter()) {
            row.insert(h.trim().to_string(), cell_value(cell));
        }
        rows.push(Value::Object(row));
    }
    Ok(rows)
}

fn cell_value(cell: &str) -> Value {
    let t = cell.trim();
    if let Ok(i) = t.parse::<i64>() {
        return Value::from(i);
    }
    match t.parse::<f64>() {
        Ok(f) if f.is_finite() && !t.is_empty() => Value::from(f),
        _ => Value::String(cell.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_numbers_and_strings() {
        let rows = parse_csv_str("name,value,ratio\nA,42,0.5\nB,-3,x\n").unwrap();
        assert_eq!(
            rows,
            vec![
                json!({"name": "A", "value": 42, "ratio": 0.5}),
                json!({"name": "B", "value": -3, "ratio": "x"}),
            ]
        );
    }

    #[test]
    fn json_file_must_be_array() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.json");
        std::fs::write(&p, "{\"a\": 1}").unwrap();
        assert!(matches!(load_dataset_file(&p), Err(RubricError::Schema(_))));
        std::fs::write(&p, "[{\"a\": 1}]").unwrap();
        assert_eq!(load_dataset_file(&p).unwrap(), vec![json!({"a": 1})]);
    }
}
