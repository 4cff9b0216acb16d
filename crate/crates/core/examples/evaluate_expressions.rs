//! Evaluates rubric expressions against a small dataset.
//!
//! cargo run --example evaluate_expressions -- "max(value) / 2"

use serde_json::json;
use vizgrade::rubric::expr::{eval_expression, ExprValue, Scope};

fn main() {
    let rows = vec![
        json!({"name": "A", "value": 30}),
        json!({"name": "B", "value": 80}),
        json!({"name": "C", "value": 45}),
    ];
    let mut scope = Scope::new(&rows);
    scope.set("width", ExprValue::Number(800.0));
    scope.set("margin", ExprValue::Number(40.0));
    scope.set("datum", ExprValue::Json(rows[1].clone()));

    let mut exprs: Vec<String> = std::env::args().skip(1).collect();
    if exprs.is_empty() {
        exprs = [
            "width - 2 * margin",
            "(width - margin) / count()",
            "sum(value) / count()",
            "\"Value: \" + datum.value",
            "max(value) - min(value)",
            "width / (margin - 40)",
            "max(name)",
        ]
        .map(String::from)
        .to_vec();
    }
    for e in &exprs {
        match eval_expression(e, &scope) {
            Ok(v) => println!("{e:<28} = {v:?}"),
            Err(err) => println!("{e:<28} ! {err}"),
        }
    }
}
