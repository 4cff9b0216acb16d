use std::fmt;

use serde::{Deserialize, Serialize};

use super::named_colors::NAMED_COLORS;
use super::SceneError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Color {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub alpha: f64,
}

impl Color {
    pub const fn rgb(r: u8, g: u8, b: u8) -> Self {
        Color { r, g, b, alpha: 1.0 }
    }

    /// Largest per-channel difference, with alpha scaled to 0–255.
    pub fn max_channel_delta(&self, other: &Color) -> f64 {
        let d = |a: u8, b: u8| (a as f64 - b as f64).abs();
        d(self.r, other.r)
            .max(d(self.g, other.g))
            .max(d(self.b, other.b))
            .max((self.alpha - other.alpha).abs() * 255.0)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alpha >= 1.0 {
            write!(f, "rgb({}, {}, {})", self.r, self.g, self.b)
        } else {
            write!(f, "rgba({}, {}, {}, {})", self.r, self.g, self.b, self.alpha)
        }
    }
}

pub fn parse_color(text: &str) -> Result<Color, SceneError> {
    let err = || SceneError::ColorParse(text.to_string());
    let t = text.trim().to_ascii_lowercase();
    if let Some(hex) = t.strip_prefix('#') {
        return parse_hex(hex).ok_or_else(err);
    }
    if let Some(open) = t.find('(') {
        let name = t[..open].trim();
        let body = t[open + 1..].strip_suffix(')').ok_or_else(err)?;
        if name != "rgb" && name != "rgba" {
            return Err(err());
        }
        return parse_rgb_args(body).ok_or_else(err);
    }
    if t == "transparent" {
        return Ok(Color { r: 0, g: 0, b: 0, alpha: 0.0 });
    }
    NAMED_COLORS
        .binary_search_by(|(n, _)| (*n).cmp(t.as_str()))
        .map(|i| {
            let [r, g, b] = NAMED_COLORS[i].1;
            Color::rgb(r, g, b)
        })
        .map_err(|_| err())
}

fn parse_hex(hex: &str) -> Option<Color> {
    if !hex.chars().all(|c| c.is_ascii_hexdigit()) {
        return None;
    }
    let nib = |i: usize| u8::from_str_radix(&hex[i..i + 1], 16).ok().map(|v| v * 17);
    let byte = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
    let (r, g, b, a) = match hex.len() {
        3 => (nib(0)?, nib(1)?, nib(2)?, 255),
        4 => (nib(0)?, nib(1)?, nib(2)?, nib(3)?),
        6 => (byte(0)?, byte(2)?, byte(4)?, 255),
        8 => (byte(0)?, byte(2)?, byte(4)?, byte(6)?),
        _ => return None,
    };
    Some(Color {
        r,
        g,
        b,
        alpha: if a == 255 { 1.0 } else { a as f64 / 255.0 },
    })
}

fn parse_rgb_args(body: &str) -> Option<Color> {
    // Accepts both the comma form `rgb(1, 2, 3)` / `rgba(1,2,3,0.5)` and the
    // space form `rgb(1 2 3 / 50%)`.
    let (channels, alpha) = match body.split_once('/') {
        Some((c, a)) => (c, Some(a.trim())),
        None => (body, None),
    };
    let mut parts: Vec<&str> = channels
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    let alpha = match (alpha, parts.len()) {
        (Some(a), 3) => Some(a),
        (None, 4) => parts.pop(),
        (None, 3) => None,
        _ => return None,
    };
    let channel = |s: &str| -> Option<u8> {
        let v = match s.strip_suffix('%') {
            Some(p) => p.trim().parse::<f64>().ok()? * 255.0 / 100.0,
            None => s.parse::<f64>().ok()?,
        };
        v.is_finite().then(|| v.round().clamp(0.0, 255.0) as u8)
    };
    let alpha = match alpha {
        None => 1.0,
        Some(a) => {
            let v = match a.strip_suffix('%') {
                Some(p) => p.trim().parse::<f64>().ok()? / 100.0,
                None => a.parse::<f64>().ok()?,
            };
            if !v.is_finite() {
                return None;
            }
            v.clamp(0.0, 1.0)
        }
    };
    Some(Color {
        r: channel(parts[0])?,
        g: channel(parts[1])?,
        b: channel(parts[2])?,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_spellings() {
        assert_eq!(parse_color("#ff0000").unwrap(), Color::rgb(255, 0, 0));
        assert_eq!(parse_color("rgb(255, 0, 0)").unwrap(), Color::rgb(255, 0, 0));
        assert_eq!(parse_color("steelblue").unwrap(), Color::rgb(70, 130, 180));
    }

    #[test]
    fn equivalent_spellings_agree() {
        let red = parse_color("red").unwrap();
        for s in ["#ff0000", "#F00", "rgb(255,0,0)", "RGB(255 0 0)", "rgba(255, 0, 0, 1)", "rgb(100%, 0%, 0%)"] {
            assert_eq!(parse_color(s).unwrap(), red, "{s}");
        }
    }

    #[test]
    fn alpha_forms() {
        let c = parse_color("rgba(10, 20, 30, 0.5)").unwrap();
        assert_eq!((c.r, c.g, c.b, c.alpha), (10, 20, 30, 0.5));
        assert_eq!(parse_color("rgb(10 20 30 / 50%)").unwrap(), c);
        assert_eq!(parse_color("transparent").unwrap().alpha, 0.0);
        assert!((parse_color("#0000ff80").unwrap().alpha - 128.0 / 255.0).abs() < 1e-12);
    }

    #[test]
    fn bad_colors() {
        for s in ["", "#12", "#ggg", "rgb(1,2)", "hsl(0, 100%, 50%)", "notacolor", "rgb(1,2,3", "none"] {
            assert!(matches!(parse_color(s), Err(SceneError::ColorParse(_))), "{s}");
        }
    }

    #[test]
    fn named_table_is_sorted_and_complete() {
        assert!(NAMED_COLORS.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(NAMED_COLORS.len(), 148);
        assert_eq!(parse_color("RebeccaPurple").unwrap(), Color::rgb(102, 51, 153));
    }

    #[test]
    fn delta() {
        let a = Color::rgb(70, 130, 180);
        let b = Color::rgb(72, 130, 179);
        assert_eq!(a.max_channel_delta(&b), 2.0);
    }
}
