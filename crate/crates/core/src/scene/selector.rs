//! The selector subset used for anchors: type selectors, `.class`, `#id`,
//! `[attr]` presence, `*`, compounds of those, and the descendant
//! combinator. Anything else (pseudo-classes, child/sibling combinators,
//! attribute value tests, selector lists) is rejected at parse time.

use super::model::{ElementData, ElementRef, RenderedScene};
use super::SceneError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Compound {
    /// Lowercase tag name; `None` matches any tag.
    pub tag: Option<String>,
    pub ids: Vec<String>,
    pub classes: Vec<String>,
    pub attrs: Vec<String>,
}

impl Compound {
    pub fn matches(&self, el: &ElementData) -> bool {
        if let Some(tag) = &self.tag {
            if el.tag != *tag {
                return false;
            }
        }
        self.ids.iter().all(|id| el.id() == Some(id.as_str()))
            && self.classes.iter().all(|c| el.has_class(c))
            && self.attrs.iter().all(|a| el.attrs.contains_key(a))
    }
}

/// A parsed selector: compounds joined by descendant combinators,
/// outermost first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    pub parts: Vec<Compound>,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-' || c == '_' || !c.is_ascii()
}

impl Selector {
    pub fn parse(input: &str) -> Result<Selector, SceneError> {
        let err = |reason: &str| SceneError::SelectorParse {
            selector: input.to_string(),
            reason: reason.to_string(),
        };
        let chars: Vec<char> = input.chars().collect();
        let mut i = 0;
        let mut parts = Vec::new();

        let ident = |i: &mut usize| -> String {
            let start = *i;
            while *i < chars.len() && is_ident_char(chars[*i]) {
                *i += 1;
            }
            chars[start..*i].iter().collect()
        };

        loop {
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            if i >= chars.len() {
                break;
            }
            let mut compound = Compound::default();
            let mut empty = true;
            if chars[i] == '*' {
                i += 1;
                empty = false;
            } else if is_ident_char(chars[i]) {
                let name = ident(&mut i);
                if name.starts_with(|c: char| c.is_ascii_digit()) {
                    return Err(err("tag names cannot start with a digit"));
                }
                compound.tag = Some(name.to_ascii_lowercase());
                empty = false;
            }
            while i < chars.len() && !chars[i].is_whitespace() {
                match chars[i] {
                    '.' | '#' => {
                        let sigil = chars[i];
                        i += 1;
                        let name = ident(&mut i);
                        if name.is_empty() {
                            return Err(err("expected a name after '.' or '#'"));
                        }
                        if sigil == '.' {
                            compound.classes.push(name);
                        } else {
                            compound.ids.push(name);
                        }
                    }
                    '[' => {
                        i += 1;
                        while i < chars.len() && chars[i].is_whitespace() {
                            i += 1;
                        }
                        let name = ident(&mut i);
                        while i < chars.len() && chars[i].is_whitespace() {
                            i += 1;
                        }
                        if name.is_empty() || i >= chars.len() || chars[i] != ']' {
                            return Err(err("only attribute presence tests [name] are supported"));
                        }
                        i += 1;
                        compound.attrs.push(name);
                    }
                    ':' => return Err(err("pseudo-classes are not supported")),
                    '>' | '+' | '~' => return Err(err("only the descendant combinator is supported")),
                    ',' => return Err(err("selector lists are not supported")),
                    '*' => return Err(err("'*' must start a compound")),
                    c => return Err(err(&format!("unexpected character {c:?}"))),
                }
                empty = false;
            }
            if empty {
                return Err(err("empty compound"));
            }
            parts.push(compound);
        }
        if parts.is_empty() {
            return Err(err("empty selector"));
        }
        Ok(Selector { parts })
    }

    pub fn matches(&self, scene: &RenderedScene, r: ElementRef) -> bool {
        let (last, rest) = self.parts.split_last().expect("selectors are non-empty");
        if !last.matches(scene.element(r)) {
            return false;
        }
        // With only descendant combinators, matching each remaining compound
        // against the nearest qualifying ancestor is complete: a nearer match
        // leaves a superset of ancestors available to the compounds before it.
        let mut ancestors = scene.ancestors(r);
        'parts: for part in rest.iter().rev() {
            for a in ancestors.by_ref() {
                if part.matches(scene.element(a)) {
                    continue 'parts;
                }
            }
            return false;
        }
        true
    }

    /// Document-order matches.
    pub fn select(&self, scene: &RenderedScene) -> Vec<ElementRef> {
        scene.refs().filter(|&r| self.matches(scene, r)).collect()
    }
}
