//! Structure-based traversal (SBT) and the diffSBT encoding of commits.
//!
//! SBT writes every node as `( token … ) token`, with its children's
//! sequences in between. The brackets make the sequence invertible, which
//! [`parse_sbt`] relies on.
//!
//! diffSBT applies SBT to only those nodes of the buggy and fixed trees that
//! intersect the changed lines (plus surrounding context) and joins the two
//! sides with [`SEPARATOR`].

use std::fmt;

use thiserror::Error;

use crate::diffing::{compute_diff, CommitRecord, LineSet};
use crate::syntax::{line_count, parse_source, SyntaxError, TreeNode};

pub const OPEN: &str = "(";
pub const CLOSE: &str = ")";
/// Stage separator between the buggy-side and fixed-side sequences.
pub const SEPARATOR: &str = "</s>";
pub const DEFAULT_CONTEXT_RADIUS: u32 = 3;

/// Node kinds that are extracted whole as soon as they touch a selected line.
pub const DEFAULT_EXPRESSION_KINDS: &[&str] =
    &["Expr", "Call", "Attribute", "Subscript", "BinOp", "BoolOp", "Compare"];

/// The token for a node: its kind, or `kind:label` with whitespace and
/// backslashes in the label escaped so the token stays a single word.
pub fn node_token(node: &TreeNode) -> String {
    match &node.label {
        None => node.kind.clone(),
        Some(label) => format!("{}:{}", node.kind, escape_label(label)),
    }
}

/// Escapes `\` as `\\`, space as `\s`, tab as `\t`, newline as `\n`, CR as `\r`.
pub fn escape_label(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            ' ' => out.push_str("\\s"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

pub fn unescape_label(token: &str) -> Result<String, SbtError> {
    let mut out = String::with_capacity(token.len());
    let mut chars = token.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next() {
            Some('\\') => '\\',
            Some('s') => ' ',
            Some('t') => '\t',
            Some('n') => '\n',
            Some('r') => '\r',
            _ => return Err(SbtError::BadEscape(token.to_string())),
        });
    }
    Ok(out)
}

/// SBT token sequence of one tree.
///
/// ```
/// use sdx_core::sbt::sbt;
/// use sdx_core::syntax::TreeNode;
///
/// let tree = TreeNode::new("A", 1, 1).with_children(vec![
///     TreeNode::new("B", 1, 1),
///     TreeNode::new("C", 1, 1).with_children(vec![TreeNode::new("D", 1, 1), TreeNode::new("E", 1, 1)]),
/// ]);
/// assert_eq!(sbt(&tree).concat(), "(A(B)B(C(D)D(E)E)C)A");
/// ```
pub fn sbt(node: &TreeNode) -> Vec<String> {
    let mut out = Vec::with_capacity(4 * node.size());
    push_sbt(node, &mut out);
    out
}

/// Concatenated SBT of several trees, in the given order.
pub fn sbt_forest<'a>(nodes: impl IntoIterator<Item = &'a TreeNode>) -> Vec<String> {
    let mut out = Vec::new();
    for node in nodes {
        push_sbt(node, &mut out);
    }
    out
}

fn push_sbt(node: &TreeNode, out: &mut Vec<String>) {
    let token = node_token(node);
    out.push(OPEN.to_string());
    out.push(token.clone());
    for child in &node.children {
        push_sbt(child, out);
    }
    out.push(CLOSE.to_string());
    out.push(token);
}

/// A tree recovered from an SBT sequence. Spans are not part of SBT, so only
/// kinds, labels and shape are recovered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SbtTree {
    pub kind: String,
    pub label: Option<String>,
    pub children: Vec<SbtTree>,
}

impl SbtTree {
    pub fn from_node(node: &TreeNode) -> SbtTree {
        SbtTree {
            kind: node.kind.clone(),
            label: node.label.clone(),
            children: node.children.iter().map(SbtTree::from_node).collect(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SbtError {
    #[error("unbalanced SBT sequence at token {0}")]
    Unbalanced(usize),
    #[error("closing token {found:?} does not match opening {expected:?} at token {index}")]
    Mismatch { index: usize, expected: String, found: String },
    #[error("invalid escape in label token {0:?}")]
    BadEscape(String),
}

fn split_token(token: &str) -> Result<(String, Option<String>), SbtError> {
    match token.split_once(':') {
        None => Ok((token.to_string(), None)),
        Some((kind, label)) => Ok((kind.to_string(), Some(unescape_label(label)?))),
    }
}

/// Parses an SBT token sequence back into the forest it encodes.
pub fn parse_sbt<S: AsRef<str>>(tokens: &[S]) -> Result<Vec<SbtTree>, SbtError> {
    let mut roots = Vec::new();
    // (opening token, children so far)
    let mut stack: Vec<(String, Vec<SbtTree>)> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i].as_ref() {
            OPEN => {
                let token = tokens.get(i + 1).ok_or(SbtError::Unbalanced(i))?.as_ref();
                if token == OPEN || token == CLOSE {
                    return Err(SbtError::Unbalanced(i + 1));
                }
                stack.push((token.to_string(), Vec::new()));
                i += 2;
            }
            CLOSE => {
                let (open_token, children) = stack.pop().ok_or(SbtError::Unbalanced(i))?;
                let token = tokens.get(i + 1).ok_or(SbtError::Unbalanced(i))?.as_ref();
                if token != open_token {
                    return Err(SbtError::Mismatch {
                        index: i + 1,
                        expected: open_token,
                        found: token.to_string(),
                    });
                }
                let (kind, label) = split_token(token)?;
                let tree = SbtTree { kind, label, children };
                match stack.last_mut() {
                    Some((_, siblings)) => siblings.push(tree),
                    None => roots.push(tree),
                }
                i += 2;
            }
            _ => return Err(SbtError::Unbalanced(i)),
        }
    }
    if !stack.is_empty() {
        return Err(SbtError::Unbalanced(tokens.len()));
    }
    Ok(roots)
}

/// Widens every changed line to `[line - radius, line + radius]`, clamped to
/// the file.
pub fn expand_context(changed: &LineSet, radius: u32, file_length: u32) -> LineSet {
    let mut out = LineSet::new();
    if file_length == 0 {
        return out;
    }
    for line in changed.iter() {
        let lo = line.saturating_sub(radius).max(1);
        let hi = line.saturating_add(radius).min(file_length);
        for l in lo..=hi {
            out.insert(l);
        }
    }
    out
}

/// Extraction settings shared by both sides of an encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncoderConfig {
    pub context_radius: u32,
    pub expression_kinds: Vec<String>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::with_radius(DEFAULT_CONTEXT_RADIUS)
    }
}

impl EncoderConfig {
    pub fn with_radius(context_radius: u32) -> Self {
        EncoderConfig {
            context_radius,
            expression_kinds: DEFAULT_EXPRESSION_KINDS.iter().map(|k| k.to_string()).collect(),
        }
    }

    fn is_expression(&self, kind: &str) -> bool {
        self.expression_kinds.iter().any(|k| k == kind)
    }
}

/// Nodes of `root` that intersect `lines`, in source order, using the
/// default expression kinds.
pub fn intersections(root: &TreeNode, lines: &LineSet) -> Vec<TreeNode> {
    intersections_with(root, lines, &EncoderConfig::default())
}

/// Node extraction over a tree. For each visited node:
///
/// * kept whole if its span lies inside `lines`, or it intersects `lines`
///   and is an expression kind or has no children;
/// * kept with its children re-filtered if it starts on a selected line;
/// * replaced by its filtered children if it merely overlaps `lines`;
/// * dropped otherwise.
pub fn intersections_with(root: &TreeNode, lines: &LineSet, cfg: &EncoderConfig) -> Vec<TreeNode> {
    let mut out = Vec::new();
    collect(root, lines, cfg, &mut out);
    out
}

fn collect(node: &TreeNode, lines: &LineSet, cfg: &EncoderConfig, out: &mut Vec<TreeNode>) {
    if !lines.intersects(node.start_line, node.end_line) {
        return;
    }
    if lines.covers(node.start_line, node.end_line) || cfg.is_expression(&node.kind) || node.is_leaf() {
        out.push(node.clone());
    } else if lines.contains(node.start_line) {
        let mut children = Vec::new();
        for child in &node.children {
            collect(child, lines, cfg, &mut children);
        }
        out.push(TreeNode {
            kind: node.kind.clone(),
            label: node.label.clone(),
            start_line: node.start_line,
            end_line: node.end_line,
            children,
        });
    } else {
        for child in &node.children {
            collect(child, lines, cfg, out);
        }
    }
}

/// A diffSBT token sequence, optionally split into buggy and fixed sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffSbtSequence {
    pub tokens: Vec<String>,
    pub separator_index: Option<usize>,
}

impl DiffSbtSequence {
    pub fn buggy_side(&self) -> &[String] {
        match self.separator_index {
            Some(i) => &self.tokens[..i],
            None => &self.tokens,
        }
    }

    pub fn fixed_side(&self) -> Option<&[String]> {
        self.separator_index.map(|i| &self.tokens[i + 1..])
    }

    /// Parses a space-joined sequence.
    pub fn parse(text: &str) -> DiffSbtSequence {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let separator_index = tokens.iter().position(|t| t == SEPARATOR);
        DiffSbtSequence { tokens, separator_index }
    }
}

impl fmt::Display for DiffSbtSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Buggy,
    Fixed,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Buggy => "buggy",
            Side::Fixed => "fixed",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("commit changes no lines")]
    NoChange,
    #[error("commit changes {0} files; only single-file changes are encodable")]
    MultipleFiles(usize),
    #[error("{side} version of {path} does not parse: {source}")]
    Syntax {
        side: Side,
        path: String,
        #[source]
        source: SyntaxError,
    },
    #[error("no buggy code to encode (the change only adds lines)")]
    EmptySide,
}

struct ChangedFile<'a> {
    path: &'a str,
    old_source: &'a str,
    new_source: &'a str,
    removed: LineSet,
    added: LineSet,
}

fn single_changed_file(record: &CommitRecord) -> Result<ChangedFile<'_>, EncodeError> {
    let mut changed = record.files.iter().filter_map(|f| {
        let diff = compute_diff(&f.old_source, &f.new_source);
        (!diff.is_empty()).then(|| ChangedFile {
            path: &f.path,
            old_source: &f.old_source,
            new_source: &f.new_source,
            removed: diff.removed,
            added: diff.added,
        })
    });
    let first = changed.next().ok_or(EncodeError::NoChange)?;
    let extra = changed.count();
    if extra > 0 {
        return Err(EncodeError::MultipleFiles(extra + 1));
    }
    Ok(first)
}

fn side_tokens(source: &str, changed: &LineSet, side: Side, path: &str, cfg: &EncoderConfig) -> Result<Vec<String>, EncodeError> {
    let tree = parse_source(source).map_err(|source| EncodeError::Syntax {
        side,
        path: path.to_string(),
        source,
    })?;
    let lines = expand_context(changed, cfg.context_radius, line_count(source));
    Ok(sbt_forest(&intersections_with(&tree, &lines, cfg)))
}

/// Buggy-side and fixed-side sequences joined by [`SEPARATOR`], the input of
/// the discriminatory pre-training stage.
pub fn diffsbt_full(record: &CommitRecord, cfg: &EncoderConfig) -> Result<DiffSbtSequence, EncodeError> {
    let file = single_changed_file(record)?;
    let mut tokens = side_tokens(file.old_source, &file.removed, Side::Buggy, file.path, cfg)?;
    let fixed = side_tokens(file.new_source, &file.added, Side::Fixed, file.path, cfg)?;
    let separator_index = tokens.len();
    tokens.push(SEPARATOR.to_string());
    tokens.extend(fixed);
    Ok(DiffSbtSequence { tokens, separator_index: Some(separator_index) })
}

/// Buggy-side sequence only, the fine-tuning input. Only the old version of
/// the file is parsed.
pub fn diffsbt_buggy(record: &CommitRecord, cfg: &EncoderConfig) -> Result<DiffSbtSequence, EncodeError> {
    let file = single_changed_file(record)?;
    let tokens = side_tokens(file.old_source, &file.removed, Side::Buggy, file.path, cfg)?;
    if tokens.is_empty() {
        return Err(EncodeError::EmptySide);
    }
    Ok(DiffSbtSequence { tokens, separator_index: None })
}

/// Encodes selected lines of buggy code, as done when asking for an
/// explanation of code that has no fix yet.
pub fn encode_lines(source: &str, lines: &LineSet, cfg: &EncoderConfig) -> Result<DiffSbtSequence, EncodeError> {
    let tokens = side_tokens(source, lines, Side::Buggy, "<input>", cfg)?;
    if tokens.is_empty() {
        return Err(EncodeError::EmptySide);
    }
    Ok(DiffSbtSequence { tokens, separator_index: None })
}
