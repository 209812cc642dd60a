use std::fmt;

/// Node kinds produced by the built-in parser.
///
/// Names follow the usual abstract-grammar spelling so that trees from other
/// frontends map onto the same vocabulary.
pub const KINDS: &[&str] = &[
    // statements
    "Module",
    "FunctionDef",
    "ClassDef",
    "arguments",
    "arg",
    "If",
    "For",
    "While",
    "Try",
    "ExceptHandler",
    "With",
    "withitem",
    "Return",
    "Delete",
    "Assign",
    "AugAssign",
    "AnnAssign",
    "Raise",
    "Assert",
    "Import",
    "ImportFrom",
    "alias",
    "Global",
    "Nonlocal",
    "Expr",
    "Pass",
    "Break",
    "Continue",
    // expressions
    "BoolOp",
    "BinOp",
    "UnaryOp",
    "IfExp",
    "Compare",
    "Call",
    "keyword",
    "Starred",
    "Attribute",
    "Subscript",
    "Slice",
    "Name",
    "Constant",
    "List",
    "Tuple",
    "Dict",
    "Set",
];

/// Kinds that always carry a label.
pub const LABELED_KINDS: &[&str] = &[
    "FunctionDef",
    "ClassDef",
    "arg",
    "alias",
    "ImportFrom",
    "Global",
    "Nonlocal",
    "AugAssign",
    "BoolOp",
    "BinOp",
    "UnaryOp",
    "Compare",
    "Attribute",
    "Name",
    "Constant",
];

/// A syntax tree node annotated with the physical lines it covers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreeNode {
    pub kind: String,
    pub label: Option<String>,
    pub start_line: u32,
    pub end_line: u32,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn new(kind: impl Into<String>, start_line: u32, end_line: u32) -> Self {
        TreeNode {
            kind: kind.into(),
            label: None,
            start_line,
            end_line,
            children: Vec::new(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_children(mut self, children: Vec<TreeNode>) -> Self {
        self.children = children;
        self
    }

    /// Total number of nodes in this subtree, including `self`.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(TreeNode::size).sum::<usize>()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn contains_line(&self, line: u32) -> bool {
        self.start_line <= line && line <= self.end_line
    }

    /// Pre-order iterator over this subtree.
    pub fn iter(&self) -> impl Iterator<Item = &TreeNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    /// Checks span and ordering invariants for the whole subtree, returning a
    /// description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.start_line == 0 {
            return Err(format!("{} starts at line 0", self.kind));
        }
        if self.start_line > self.end_line {
            return Err(format!(
                "{} has inverted span [{}, {}]",
                self.kind, self.start_line, self.end_line
            ));
        }
        let mut prev_start = self.start_line;
        for child in &self.children {
            if child.start_line < self.start_line || child.end_line > self.end_line {
                return Err(format!(
                    "{} [{}, {}] escapes parent {} [{}, {}]",
                    child.kind,
                    child.start_line,
                    child.end_line,
                    self.kind,
                    self.start_line,
                    self.end_line
                ));
            }
            if child.start_line < prev_start {
                return Err(format!(
                    "children of {} are out of order at line {}",
                    self.kind, child.start_line
                ));
            }
            prev_start = child.start_line;
            child.validate()?;
        }
        Ok(())
    }
}

impl fmt::Display for TreeNode {
    /// Compact `Kind:label[start..end]{children}` rendering used in tests and
    /// debug output.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kind)?;
        if let Some(label) = &self.label {
            write!(f, ":{label}")?;
        }
        write!(f, "[{}..{}]", self.start_line, self.end_line)?;
        if !self.children.is_empty() {
            f.write_str("{ ")?;
            for (i, child) in self.children.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{child}")?;
            }
            f.write_str(" }")?;
        }
        Ok(())
    }
}
