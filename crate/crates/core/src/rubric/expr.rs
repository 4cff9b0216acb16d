//! Rubric expressions.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | string | path | call | '(' expr ')'
//! path    := ident ('.' ident)*
//! call    := ('min' | 'max' | 'sum') '(' path ')' | 'count' '(' ')'
//! ```
//!
//! `+` concatenates when either side is a string; every other operator
//! needs numbers. Aggregates fold over the dataset rows.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::Value as Json;
use thiserror::Error;

use crate::deconstruct::field_value;
use crate::format_number;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("expression syntax error: {0}")]
    Parse(String),
    #[error("unbound name {0:?}")]
    UnboundName(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("{0}() over an empty dataset")]
    EmptyAggregate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregate {
    Min,
    Max,
    Sum,
    Count,
}

impl Aggregate {
    fn name(self) -> &'static str {
        match self {
            Aggregate::Min => "min",
            Aggregate::Max => "max",
            Aggregate::Sum => "sum",
            Aggregate::Count => "count",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Str(String),
    /// A name, optionally followed by field accesses: `datum.value`.
    Path(Vec<String>),
    Aggregate(Aggregate, Option<String>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Result of evaluating an expression, or a value bound in a scope.
#[derive(Debug, Clone, PartialEq)]
pub enum ExprValue {
    Number(f64),
    Str(String),
    /// Structured values (objects, arrays, booleans, null). They can be
    /// bound and navigated with `.field` but are not valid results.
    Json(Json),
}

impl ExprValue {
    pub fn from_json(v: &Json) -> ExprValue {
        match v {
            Json::Number(n) => ExprValue::Number(n.as_f64().unwrap_or(f64::NAN)),
            Json::String(s) => ExprValue::Str(s.clone()),
            other => ExprValue::Json(other.clone()),
        }
    }

    /// Numbers stay numbers; strings that look like numbers become numbers.
    pub fn from_attr(raw: &str) -> ExprValue {
        match crate::scene::parse_length(raw) {
            Some(n) => ExprValue::Number(n),
            None => ExprValue::Str(raw.to_string()),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            ExprValue::Number(n) => Some(*n),
            _ => None,
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            ExprValue::Number(_) => "number",
            ExprValue::Str(_) => "string",
            ExprValue::Json(Json::Object(_)) => "object",
            ExprValue::Json(Json::Array(_)) => "array",
            ExprValue::Json(_) => "non-scalar value",
        }
    }
}

impl fmt::Display for ExprValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprValue::Number(n) => f.write_str(&format_number(*n)),
            ExprValue::Str(s) => f.write_str(s),
            ExprValue::Json(j) => write!(f, "{j}"),
        }
    }
}

/// Names visible to an expression plus the dataset aggregates range over.
/// Scopes nest: lookups fall through to the parent.
#[derive(Debug, Clone)]
pub struct Scope<'a> {
    vars: BTreeMap<String, ExprValue>,
    parent: Option<&'a Scope<'a>>,
    dataset: &'a [Json],
}

impl<'a> Scope<'a> {
    pub fn new(dataset: &'a [Json]) -> Self {
        Scope {
            vars: BTreeMap::new(),
            parent: None,
            dataset,
        }
    }

    pub fn child(&'a self) -> Scope<'a> {
        Scope {
            vars: BTreeMap::new(),
            parent: Some(self),
            dataset: self.dataset,
        }
    }

    pub fn set(&mut self, name: impl Into<String>, value: ExprValue) {
        self.vars.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: ExprValue) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&ExprValue> {
        self.vars
            .get(name)
            .or_else(|| self.parent.and_then(|p| p.get(name)))
    }

    pub fn dataset(&self) -> &'a [Json] {
        self.dataset
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Dot,
}

fn tokenize(src: &str) -> Result<Vec<Tok>, EvalError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let n = text
                    .parse::<f64>()
                    .map_err(|_| EvalError::Parse(format!("bad number {text:?}")))?;
                out.push(Tok::Num(n));
            }
            '"' | '\'' => {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(EvalError::Parse("unterminated string literal".into())),
                        Some(&q) if q == quote => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = chars
                                .get(i + 1)
                                .ok_or_else(|| EvalError::Parse("dangling escape".into()))?;
                            s.push(match esc {
                                'n' => '\n',
                                't' => '\t',
                                other => *other,
                            });
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                out.push(Tok::Str(s));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            '+' | '-' | '*' | '/' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '×' => {
                out.push(Tok::Op('*'));
                i += 1;
            }
            '÷' => {
                out.push(Tok::Op('/'));
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '.' => {
                out.push(Tok::Dot);
                i += 1;
            }
            other => return Err(EvalError::Parse(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), EvalError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(EvalError::Parse(format!("expected {what}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, EvalError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, EvalError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, EvalError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn path_tail(&mut self, first: String) -> Result<Vec<String>, EvalError> {
        let mut path = vec![first];
        while let Some(Tok::Dot) = self.peek() {
            self.pos += 1;
            match self.next() {
                Some(Tok::Ident(s)) => path.push(s),
                Some(Tok::Num(n)) if n.fract() == 0.0 && n >= 0.0 => path.push(format_number(n)),
                other => {
                    return Err(EvalError::Parse(format!(
                        "expected a field name after '.', found {other:?}"
                    )))
                }
            }
        }
        Ok(path)
    }

    fn primary(&mut self) -> Result<Expr, EvalError> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(Expr::Number(n)),
            Some(Tok::Str(s)) => Ok(Expr::Str(s)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.pos += 1;
                    let agg = match name.as_str() {
                        "min" => Aggregate::Min,
                        "max" => Aggregate::Max,
                        "sum" => Aggregate::Sum,
                        "count" => Aggregate::Count,
                        other => return Err(EvalError::Parse(format!("unknown function {other}()"))),
                    };
                    if agg == Aggregate::Count {
                        self.expect(Tok::RParen, "')' (count takes no argument)")?;
                        return Ok(Expr::Aggregate(agg, None));
                    }
                    let field = match self.next() {
                        Some(Tok::Ident(f)) => self.path_tail(f)?.join("."),
                        other => {
                            return Err(EvalError::Parse(format!(
                                "{}() expects a field name, found {other:?}",
                                agg.name()
                            )))
                        }
                    };
                    self.expect(Tok::RParen, "')'")?;
                    return Ok(Expr::Aggregate(agg, Some(field)));
                }
                Ok(Expr::Path(self.path_tail(name)?))
            }
            other => Err(EvalError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, EvalError> {
        let mut p = Parser {
            toks: tokenize(src)?,
            pos: 0,
        };
        if p.toks.is_empty() {
            return Err(EvalError::Parse("empty expression".into()));
        }
        let e = p.expr()?;
        if p.pos != p.toks.len() {
            return Err(EvalError::Parse(format!(
                "unexpected trailing input at token {}",
                p.pos + 1
            )));
        }
        Ok(e)
    }

    /// Root names the expression reads (the first segment of each path).
    pub fn free_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Path(p) => out.push(&p[0]),
            Expr::Neg(e) => e.collect_names(out),
            Expr::Binary(_, a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
            Expr::Number(_) | Expr::Str(_) | Expr::Aggregate(..) => {}
        }
    }

    pub fn eval(&self, scope: &Scope<'_>) -> Result<ExprValue, EvalError> {
        let v = self.eval_inner(scope)?;
        match v {
            ExprValue::Json(_) => Err(EvalError::TypeMismatch(format!(
                "expression evaluates to a {}, not a number or string",
                v.type_name()
            ))),
            v => Ok(v),
        }
    }

    fn eval_inner(&self, scope: &Scope<'_>) -> Result<ExprValue, EvalError> {
        match self {
            Expr::Number(n) => Ok(ExprValue::Number(*n)),
            Expr::Str(s) => Ok(ExprValue::Str(s.clone())),
            Expr::Path(path) => {
                let root = scope
                    .get(&path[0])
                    .ok_or_else(|| EvalError::UnboundName(path[0].clone()))?;
                let mut cur = root.clone();
                for seg in &path[1..] {
                    cur = match &cur {
                        ExprValue::Json(j) => field_value(j, seg)
                            .map(ExprValue::from_json)
                            .ok_or_else(|| EvalError::UnboundName(path[..].join(".")))?,
                        other => {
                            return Err(EvalError::TypeMismatch(format!(
                                "cannot read .{seg} of a {}",
                                other.type_name()
                            )))
                        }
                    };
                }
                Ok(cur)
            }
            Expr::Aggregate(agg, field) => aggregate(*agg, field.as_deref(), scope.dataset()),
            Expr::Neg(e) => match e.eval_inner(scope)? {
                ExprValue::Number(n) => Ok(ExprValue::Number(-n)),
                other => Err(EvalError::TypeMismatch(format!("cannot negate a {}", other.type_name()))),
            },
            Expr::Binary(op, a, b) => {
                let a = a.eval_inner(scope)?;
                let b = b.eval_inner(scope)?;
                apply(*op, a, b)
            }
        }
    }
}

fn apply(op: BinOp, a: ExprValue, b: ExprValue) -> Result<ExprValue, EvalError> {
    use ExprValue::{Number, Str};
    match (op, a, b) {
        (BinOp::Add, Number(x), Number(y)) => Ok(Number(x + y)),
        (BinOp::Sub, Number(x), Number(y)) => Ok(Number(x - y)),
        (BinOp::Mul, Number(x), Number(y)) => Ok(Number(x * y)),
        (BinOp::Div, Number(_), Number(y)) if y == 0.0 => Err(EvalError::DivisionByZero),
        (BinOp::Div, Number(x), Number(y)) => Ok(Number(x / y)),
        (BinOp::Add, a @ (Str(_) | Number(_)), b @ (Str(_) | Number(_))) => {
            Ok(Str(format!("{a}{b}")))
        }
        (op, a, b) => Err(EvalError::TypeMismatch(format!(
            "{} {} {}",
            a.type_name(),
            op.symbol(),
            b.type_name()
        ))),
    }
}

fn aggregate(agg: Aggregate, field: Option<&str>, rows: &[Json]) -> Result<ExprValue, EvalError> {
    if agg == Aggregate::Count {
        return Ok(ExprValue::Number(rows.len() as f64));
    }
    let field = field.unwrap_or_default();
    let mut values = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let v = field_value(row, field)
            .and_then(Json::as_f64)
            .ok_or_else(|| {
                EvalError::TypeMismatch(format!(
                    "{}({field}): row {} has no numeric {field:?}",
                    agg.name(),
                    i + 1
                ))
            })?;
        values.push(v);
    }
    match agg {
        Aggregate::Sum => Ok(ExprValue::Number(values.iter().sum())),
        Aggregate::Min | Aggregate::Max if values.is_empty() => Err(EvalError::EmptyAggregate(agg.name())),
        Aggregate::Min => Ok(ExprValue::Number(values.iter().cloned().fold(f64::INFINITY, f64::min))),
        Aggregate::Max => Ok(ExprValue::Number(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max))),
        Aggregate::Count => unreachable!(),
    }
}

/// Parses and evaluates in one step.
pub fn eval_expression(src: &str, scope: &Scope<'_>) -> Result<ExprValue, EvalError> {
    Expr::parse(src)?.eval(scope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn num(src: &str, scope: &Scope) -> f64 {
        eval_expression(src, scope).unwrap().as_number().unwrap()
    }

    #[test]
    fn parameter_arithmetic() {
        let rows = [];
        let s = Scope::new(&rows)
            .with("height", ExprValue::Number(400.0))
            .with("margin_bottom", ExprValue::Number(30.0));
        assert_eq!(num("height - margin_bottom", &s), 370.0);
    }

    #[test]
    fn aggregates() {
        let rows = vec![json!({"value": 1}), json!({"value": 2}), json!({"value": 3})];
        let s = Scope::new(&rows);
        // oracle: a plain fold over the rows
        let expected: f64 = rows.iter().map(|r| r["value"].as_f64().unwrap()).sum();
        assert_eq!(num("sum(value)", &s), expected);
        assert_eq!(num("max(value) * 0", &s), 0.0);
        assert_eq!(num("min(value)", &s), 1.0);
        assert_eq!(num("count()", &s), 3.0);
        assert_eq!(num("max(value) - min(value) / 2", &s), 2.5);
    }

    #[test]
    fn precedence_and_associativity() {
        let rows = [];
        let s = Scope::new(&rows);
        assert_eq!(num("1 + 2 * 3", &s), 7.0);
        assert_eq!(num("(1 + 2) * 3", &s), 9.0);
        assert_eq!(num("10 - 4 - 3", &s), 3.0);
        assert_eq!(num("64 / 4 / 2", &s), 8.0);
        assert_eq!(num("-2 * -3", &s), 6.0);
        assert_eq!(num("6 × 7 ÷ 2", &s), 21.0);
        assert_eq!(num("1.5e2 + 5e-1 * 0", &s), 150.0);
    }

    #[test]
    fn string_concatenation_and_fields() {
        let rows = [];
        let s = Scope::new(&rows).with("datum", ExprValue::Json(json!({"value": 42, "name": "A"})));
        assert_eq!(
            eval_expression("\"value: \" + datum.value", &s).unwrap(),
            ExprValue::Str("value: 42".into())
        );
        assert_eq!(
            eval_expression("datum.name + ' ' + 0.5", &s).unwrap(),
            ExprValue::Str("A 0.5".into())
        );
    }

    #[test]
    fn errors() {
        let rows = vec![json!({"v": "x"})];
        let s = Scope::new(&rows).with("o", ExprValue::Json(json!({"a": 1})));
        assert_eq!(eval_expression("nope + 1", &s), Err(EvalError::UnboundName("nope".into())));
        assert_eq!(eval_expression("1 / (2 - 2)", &s), Err(EvalError::DivisionByZero));
        assert!(matches!(eval_expression("'a' - 1", &s), Err(EvalError::TypeMismatch(_))));
        assert!(matches!(eval_expression("o", &s), Err(EvalError::TypeMismatch(_))));
        assert!(matches!(eval_expression("sum(v)", &s), Err(EvalError::TypeMismatch(_))));
        assert!(matches!(eval_expression("o.b", &s), Err(EvalError::UnboundName(_))));
        for bad in ["", "1 +", "(1", "1 2", "avg(v)", "count(v)", "'open", "a.", "3 $ 4"] {
            assert!(matches!(Expr::parse(bad), Err(EvalError::Parse(_))), "{bad:?}");
        }
    }

    #[test]
    fn free_names() {
        let e = Expr::parse("a + b.c * max(d) - a").unwrap();
        assert_eq!(e.free_names(), vec!["a", "b"]);
    }
}
