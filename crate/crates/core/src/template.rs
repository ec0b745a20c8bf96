// SPDX-License-Identifier: Apache-2.0

//! Minimal `{name}` placeholder templates. `{{` and `}}` emit literal braces.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown placeholder {0}")]
    UnknownPlaceholder(String),
    #[error("template is missing placeholder {{{0}}}")]
    MissingPlaceholder(String),
    #[error("unterminated placeholder starting at byte {0}")]
    Unterminated(usize),
    #[error("stray '}}' at byte {0}")]
    StrayBrace(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(String),
}

/// A parsed template whose placeholders are all drawn from an allowed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(source: &str, allowed: &[&str]) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut literal = String::new();
        let mut rest = source.char_indices().peekable();
        while let Some((at, ch)) = rest.next() {
            match ch {
                '{' if matches!(rest.peek(), Some((_, '{'))) => {
                    rest.next();
                    literal.push('{');
                }
                '}' if matches!(rest.peek(), Some((_, '}'))) => {
                    rest.next();
                    literal.push('}');
                }
                '}' => return Err(TemplateError::StrayBrace(at)),
                '{' => {
                    let mut name = String::new();
                    loop {
                        match rest.next() {
                            Some((_, '}')) => break,
                            Some((_, c)) => name.push(c),
                            None => return Err(TemplateError::Unterminated(at)),
                        }
                    }
                    if !allowed.contains(&name.as_str()) {
                        return Err(TemplateError::UnknownPlaceholder(name));
                    }
                    if !literal.is_empty() {
                        pieces.push(Piece::Literal(core::mem::take(&mut literal)));
                    }
                    pieces.push(Piece::Slot(name));
                }
                c => literal.push(c),
            }
        }
        if !literal.is_empty() {
            pieces.push(Piece::Literal(literal));
        }
        Ok(Self { pieces })
    }

    /// Like [`Template::parse`], additionally requiring each of `required` to appear.
    pub fn parse_requiring(source: &str, required: &[&str]) -> Result<Self, TemplateError> {
        let template = Self::parse(source, required)?;
        for name in required {
            if !template.has_slot(name) {
                return Err(TemplateError::MissingPlaceholder(name.to_string()));
            }
        }
        Ok(template)
    }

    pub fn has_slot(&self, name: &str) -> bool {
        self.pieces.iter().any(|p| matches!(p, Piece::Slot(s) if s == name))
    }

    /// Substitutes each slot with `lookup(name)`.
    pub fn render<'a>(&self, mut lookup: impl FnMut(&str) -> &'a str) -> String {
        let mut out = String::new();
        for piece in &self.pieces {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Slot(name) => out.push_str(lookup(name)),
            }
        }
        out
    }
}
