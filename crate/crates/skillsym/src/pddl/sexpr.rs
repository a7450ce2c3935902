//! S-expression reader with line/column locations and `;` comments.

use std::collections::BTreeMap;

use super::PddlError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Atom(String),
    List(Vec<Sexp>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sexp {
    pub node: Node,
    pub line: usize,
    pub col: usize,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match &self.node {
            Node::Atom(a) => Some(a),
            Node::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match &self.node {
            Node::List(l) => Some(l),
            Node::Atom(_) => None,
        }
    }

    /// Lowercased head symbol of a list.
    pub fn head(&self) -> Option<String> {
        self.list()?.first()?.atom().map(str::to_ascii_lowercase)
    }

    pub fn error(&self, msg: impl Into<String>) -> PddlError {
        PddlError::Syntax { line: self.line, col: self.col, msg: msg.into() }
    }
}

/// Parsed top-level forms plus the trailing comment of each line.
pub struct Document {
    pub forms: Vec<Sexp>,
    pub comments: BTreeMap<usize, String>,
}

pub fn read(text: &str) -> Result<Document, PddlError> {
    let mut stack: Vec<(usize, usize, Vec<Sexp>)> = Vec::new();
    let mut forms = Vec::new();
    let mut comments = BTreeMap::new();
    let mut chars = text.char_indices().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    let push = |stack: &mut Vec<(usize, usize, Vec<Sexp>)>, forms: &mut Vec<Sexp>, s: Sexp| match stack.last_mut() {
        Some((_, _, v)) => v.push(s),
        None => forms.push(s),
    };
    while let Some(&(i, c)) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                let start = i;
                let mut end = text.len();
                while let Some(&(j, d)) = chars.peek() {
                    if d == '\n' {
                        end = j;
                        break;
                    }
                    chars.next();
                }
                comments.insert(line, text[start + 1..end].trim().to_string());
                col += end - start;
            }
            '(' => {
                chars.next();
                stack.push((line, col, Vec::new()));
                col += 1;
            }
            ')' => {
                chars.next();
                let Some((l, c0, items)) = stack.pop() else {
                    return Err(PddlError::Syntax { line, col, msg: "unbalanced `)`".into() });
                };
                col += 1;
                push(&mut stack, &mut forms, Sexp { node: Node::List(items), line: l, col: c0 });
            }
            _ => {
                let (l, c0) = (line, col);
                let start = i;
                let mut end = text.len();
                while let Some(&(j, d)) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' || d == ';' {
                        end = j;
                        break;
                    }
                    chars.next();
                    col += 1;
                }
                push(&mut stack, &mut forms, Sexp { node: Node::Atom(text[start..end].to_string()), line: l, col: c0 });
            }
        }
    }
    if let Some((l, c, _)) = stack.last() {
        return Err(PddlError::Syntax { line: *l, col: *c, msg: "unclosed `(`".into() });
    }
    Ok(Document { forms, comments })
}
