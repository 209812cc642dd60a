//! Line-annotated syntax trees.
//!
//! Trees come either from the built-in parser for a Python subset
//! ([`parse_source`]) or from the portable JSON tree document format
//! ([`parse_tree_document`]), which lets other frontends feed pre-parsed
//! trees into the encoder.

mod document;
mod lexer;
mod parser;
mod tree;

use std::fmt;

pub use document::{parse_tree_document, serialize_tree, FormatError};
pub use tree::{TreeNode, KINDS, LABELED_KINDS};

/// The source text is ill-formed or uses a construct outside the supported
/// subset.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub line: u32,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: u32, message: impl Into<String>) -> Self {
        SyntaxError {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn with_found(mut self, found: SyntaxError) -> Self {
        self.message = format!("{} ({})", self.message, found.message);
        self
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at line {}: {}", self.line, self.message)
    }
}

/// Parses Python-subset source into a `Module`-rooted tree.
///
/// Supported: function and class definitions, `if`/`elif`/`else`, `for`,
/// `while`, `try`, `with`, `return`, assignments (plain, augmented,
/// annotated), imports, `raise`, `assert`, `del`, `global`/`nonlocal`,
/// `pass`/`break`/`continue` and expression statements. Expressions cover
/// calls, attribute access, subscripts and slices, names, literals
/// (including list/tuple/dict/set displays), unary, binary, boolean,
/// comparison and conditional operators.
///
/// Decorators, lambdas, comprehensions, generators, `async`/`await`,
/// assignment expressions and `match` are rejected.
///
/// ```
/// use sdx_core::syntax::parse_source;
///
/// let tree = parse_source("x = 1").unwrap();
/// assert_eq!(tree.to_string(), "Module[1..1]{ Assign[1..1]{ Name:x[1..1], Constant:1[1..1] } }");
/// ```
pub fn parse_source(text: &str) -> Result<TreeNode, SyntaxError> {
    parser::parse_module(text)
}

/// Number of lines in `text` under the toolkit's line model: split on `\n`,
/// with a trailing newline not producing an extra empty line.
pub fn line_count(text: &str) -> u32 {
    crate::diffing::split_lines(text).len() as u32
}

#[cfg(test)]
mod tests;
