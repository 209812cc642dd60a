use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TreeNode;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("invalid tree document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid tree document: {0}")]
    Invalid(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Doc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    span: [u32; 2],
    #[serde(default)]
    children: Vec<Doc>,
}

fn valid_kind(kind: &str) -> bool {
    let mut chars = kind.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Doc {
    fn from_node(node: &TreeNode) -> Doc {
        Doc {
            kind: node.kind.clone(),
            label: node.label.clone(),
            span: [node.start_line, node.end_line],
            children: node.children.iter().map(Doc::from_node).collect(),
        }
    }

    fn into_node(self) -> Result<TreeNode, FormatError> {
        if !valid_kind(&self.kind) {
            return Err(FormatError::Invalid(format!("bad node kind {:?}", self.kind)));
        }
        let children = self
            .children
            .into_iter()
            .map(Doc::into_node)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TreeNode {
            kind: self.kind,
            label: self.label,
            start_line: self.span[0],
            end_line: self.span[1],
            children,
        })
    }
}

/// Renders a tree as a single-line JSON tree document.
pub fn serialize_tree(node: &TreeNode) -> String {
    serde_json::to_string(&Doc::from_node(node)).expect("tree documents always serialize")
}

/// Reads a JSON tree document
/// `{kind, label?, span: [start, end], children: [...]}`.
///
/// Unknown fields, node kinds that are not identifiers, inverted spans,
/// children escaping their parent's span and out-of-order siblings are all
/// rejected.
pub fn parse_tree_document(text: &str) -> Result<TreeNode, FormatError> {
    let doc: Doc = serde_json::from_str(text)?;
    let node = doc.into_node()?;
    node.validate().map_err(FormatError::Invalid)?;
    Ok(node)
}
