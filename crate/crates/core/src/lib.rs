pub mod deconstruct;
pub mod harness;
pub mod interact;
pub mod probe;
pub mod report;
pub mod rubric;
pub mod scene;
pub mod wire;

/// Formats a number the way feedback and keys show it: integral values
/// without a fractional part, everything else in shortest round-trip form.
pub fn format_number(n: f64) -> String {
    if n.is_finite() && n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}
