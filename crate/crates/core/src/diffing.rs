//! Line-level differences between two versions of a file.
//!
//! Lines are 1-based. A hunk is a maximal run of changed lines with no
//! unchanged line between them, so a commit that touches one location has
//! exactly one hunk regardless of how much context a diff tool would print.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

/// Above this many DP cells the middle section is aligned with Myers' algorithm
/// instead of the exact tie-broken LCS table.
const MAX_TABLE_CELLS: usize = 16 * 1024 * 1024;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("malformed unified diff at line {line}: {message}")]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

/// One changed file of a commit, with full contents of both versions.
/// Added files have an empty `old_source`, deleted files an empty
/// `new_source`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    pub old_source: String,
    pub new_source: String,
}

/// A commit and the before/after contents of the files it touches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub repo: String,
    pub sha: String,
    pub message: String,
    pub files: Vec<FileChange>,
}

impl CommitRecord {
    /// Stable example key, `repo@sha`.
    pub fn id(&self) -> String {
        format!("{}@{}", self.repo, self.sha)
    }

    /// Per-file diffs, paired with their file.
    pub fn diffs(&self) -> impl Iterator<Item = (&FileChange, DiffResult)> {
        self.files.iter().map(|f| (f, compute_diff(&f.old_source, &f.new_source)))
    }

    /// Hunks summed over all files.
    pub fn hunk_count(&self) -> usize {
        self.diffs().map(|(_, d)| d.hunk_count).sum()
    }

    /// Zero-context unified diff of every changed file, concatenated.
    pub fn render_diff(&self) -> String {
        self.files
            .iter()
            .map(|f| render_unified_diff(&f.path, &f.old_source, &f.new_source))
            .collect()
    }
}

/// Sorted set of 1-based line numbers on one side of a diff.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineSet(BTreeSet<u32>);

impl LineSet {
    pub fn new() -> Self {
        LineSet(BTreeSet::new())
    }

    /// Inserts a line number. Line 0 is not a valid line and is ignored.
    pub fn insert(&mut self, line: u32) -> bool {
        line >= 1 && self.0.insert(line)
    }

    pub fn contains(&self, line: u32) -> bool {
        self.0.contains(&line)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    /// Number of members inside the inclusive range.
    pub fn count_in(&self, start: u32, end: u32) -> usize {
        if start > end {
            return 0;
        }
        self.0.range(start..=end).count()
    }

    /// True if every line of `[start, end]` is a member.
    pub fn covers(&self, start: u32, end: u32) -> bool {
        start <= end && self.count_in(start, end) == (end - start + 1) as usize
    }

    /// True if some line of `[start, end]` is a member.
    pub fn intersects(&self, start: u32, end: u32) -> bool {
        start <= end && self.0.range(start..=end).next().is_some()
    }

    pub fn union(&self, other: &LineSet) -> LineSet {
        LineSet(self.0.union(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &LineSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl FromIterator<u32> for LineSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        let mut set = LineSet::new();
        for line in iter {
            set.insert(line);
        }
        set
    }
}

/// Changed lines of one file, in old-file and new-file coordinates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffResult {
    pub removed: LineSet,
    pub added: LineSet,
    pub hunk_count: usize,
}

impl DiffResult {
    pub fn is_empty(&self) -> bool {
        self.hunk_count == 0
    }

    /// Number of removed plus added lines.
    pub fn edit_size(&self) -> usize {
        self.removed.len() + self.added.len()
    }

    /// Rebuilds the new file from the old one: drops the removed lines and
    /// takes the added lines, by position, from `new_source`.
    ///
    /// Returns `None` if the unchanged lines of the two files disagree,
    /// meaning this result does not describe the pair.
    pub fn apply(&self, old_source: &str, new_source: &str) -> Option<String> {
        let old_lines = split_lines(old_source);
        let new_lines = split_lines(new_source);
        let mut kept = old_lines
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.removed.contains(*i as u32 + 1))
            .map(|(_, line)| *line);
        let mut out = Vec::with_capacity(new_lines.len());
        for (j, line) in new_lines.iter().enumerate() {
            if self.added.contains(j as u32 + 1) {
                out.push(*line);
            } else {
                out.push(kept.next()?);
            }
        }
        if kept.next().is_some() {
            return None;
        }
        Some(join_lines(&out))
    }
}

/// Splits text into lines on `\n`. A final newline terminates the last line
/// rather than starting an empty one.
pub fn split_lines(text: &str) -> Vec<&str> {
    if text.is_empty() {
        return Vec::new();
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    body.split('\n').collect()
}

fn join_lines(lines: &[&str]) -> String {
    let mut out = String::new();
    for line in lines {
        out.push_str(line);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Equal,
    Delete,
    Insert,
}

/// One contiguous change region with zero context lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hunk {
    /// 0-based index of the first old line in the hunk (insertion point when
    /// `old_len == 0`).
    pub old_start: usize,
    pub old_len: usize,
    pub new_start: usize,
    pub new_len: usize,
}

fn edit_script(old: &[&str], new: &[&str]) -> Vec<Op> {
    let prefix = old.iter().zip(new).take_while(|(a, b)| a == b).count();
    let old_rest = &old[prefix..];
    let new_rest = &new[prefix..];
    let suffix = old_rest
        .iter()
        .rev()
        .zip(new_rest.iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let old_mid = &old_rest[..old_rest.len() - suffix];
    let new_mid = &new_rest[..new_rest.len() - suffix];

    let mut ops = vec![Op::Equal; prefix];
    if (old_mid.len() + 1).saturating_mul(new_mid.len() + 1) <= MAX_TABLE_CELLS {
        ops.extend(lcs_ops(old_mid, new_mid));
    } else {
        ops.extend(myers_ops(old_mid, new_mid));
    }
    ops.extend(std::iter::repeat_n(Op::Equal, suffix));
    ops
}

/// Exact LCS alignment. A match is taken whenever the current lines agree;
/// otherwise deletion wins ties, so removed lines precede added lines
/// within a hunk.
fn lcs_ops(old: &[&str], new: &[&str]) -> Vec<Op> {
    let n = old.len();
    let m = new.len();
    let width = m + 1;
    // suffix[i][j] = LCS length of old[i..] and new[j..]
    let mut suffix = vec![0u32; (n + 1) * width];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[i * width + j] = if old[i] == new[j] {
                suffix[(i + 1) * width + j + 1] + 1
            } else {
                suffix[(i + 1) * width + j].max(suffix[i * width + j + 1])
            };
        }
    }
    let mut ops = Vec::with_capacity(n + m);
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if old[i] == new[j] {
            ops.push(Op::Equal);
            i += 1;
            j += 1;
        } else if suffix[(i + 1) * width + j] >= suffix[i * width + j + 1] {
            ops.push(Op::Delete);
            i += 1;
        } else {
            ops.push(Op::Insert);
            j += 1;
        }
    }
    ops.extend(std::iter::repeat_n(Op::Delete, n - i));
    ops.extend(std::iter::repeat_n(Op::Insert, m - j));
    ops
}

fn myers_ops(old: &[&str], new: &[&str]) -> Vec<Op> {
    let mut ops = Vec::with_capacity(old.len() + new.len());
    for op in similar::capture_diff_slices(similar::Algorithm::Myers, old, new) {
        for change in op.iter_changes(old, new) {
            ops.push(match change.tag() {
                similar::ChangeTag::Equal => Op::Equal,
                similar::ChangeTag::Delete => Op::Delete,
                similar::ChangeTag::Insert => Op::Insert,
            });
        }
    }
    ops
}

fn hunks_of(ops: &[Op]) -> Vec<Hunk> {
    let mut hunks = Vec::new();
    let (mut oi, mut ni) = (0usize, 0usize);
    let mut current: Option<Hunk> = None;
    for op in ops {
        match op {
            Op::Equal => {
                hunks.extend(current.take());
                oi += 1;
                ni += 1;
            }
            Op::Delete => {
                current
                    .get_or_insert(Hunk { old_start: oi, old_len: 0, new_start: ni, new_len: 0 })
                    .old_len += 1;
                oi += 1;
            }
            Op::Insert => {
                current
                    .get_or_insert(Hunk { old_start: oi, old_len: 0, new_start: ni, new_len: 0 })
                    .new_len += 1;
                ni += 1;
            }
        }
    }
    hunks.extend(current);
    hunks
}

/// Zero-context change regions between two texts.
pub fn hunks(old_source: &str, new_source: &str) -> Vec<Hunk> {
    let old = split_lines(old_source);
    let new = split_lines(new_source);
    hunks_of(&edit_script(&old, &new))
}

/// Minimal line-based edit between two file versions.
///
/// ```
/// use sdx_core::diffing::compute_diff;
///
/// let diff = compute_diff("a\nb\nc\n", "a\nB\nc\n");
/// assert_eq!(diff.removed.iter().collect::<Vec<_>>(), [2]);
/// assert_eq!(diff.added.iter().collect::<Vec<_>>(), [2]);
/// assert_eq!(diff.hunk_count, 1);
/// ```
pub fn compute_diff(old_source: &str, new_source: &str) -> DiffResult {
    let old = split_lines(old_source);
    let new = split_lines(new_source);
    let ops = edit_script(&old, &new);
    let mut result = DiffResult::default();
    let (mut oi, mut ni) = (0u32, 0u32);
    for op in &ops {
        match op {
            Op::Equal => {
                oi += 1;
                ni += 1;
            }
            Op::Delete => {
                oi += 1;
                result.removed.insert(oi);
            }
            Op::Insert => {
                ni += 1;
                result.added.insert(ni);
            }
        }
    }
    result.hunk_count = hunks_of(&ops).len();
    result
}

fn header_range(start: usize, len: usize) -> String {
    // Empty ranges name the line before the change, as diff(1) does.
    let first = if len == 0 { start } else { start + 1 };
    format!("{first},{len}")
}

/// Renders a zero-context unified diff for one file. Hunk headers always
/// carry explicit counts: `@@ -a,b +c,d @@`.
pub fn render_unified_diff(path: &str, old_source: &str, new_source: &str) -> String {
    let old = split_lines(old_source);
    let new = split_lines(new_source);
    let hunks = hunks_of(&edit_script(&old, &new));
    let mut out = String::new();
    if hunks.is_empty() {
        return out;
    }
    let _ = writeln!(out, "--- a/{path}");
    let _ = writeln!(out, "+++ b/{path}");
    for h in hunks {
        let _ = writeln!(
            out,
            "@@ -{} +{} @@",
            header_range(h.old_start, h.old_len),
            header_range(h.new_start, h.new_len)
        );
        for line in &old[h.old_start..h.old_start + h.old_len] {
            let _ = writeln!(out, "-{line}");
        }
        for line in &new[h.new_start..h.new_start + h.new_len] {
            let _ = writeln!(out, "+{line}");
        }
    }
    out
}

fn hunk_header() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@").expect("valid hunk header regex")
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum BodyLine<'a> {
    Context(&'a str),
    Removed(&'a str),
    Added(&'a str),
}

#[derive(Debug, Clone)]
struct ParsedHunk<'a> {
    old_first: usize,
    new_first: usize,
    old_len: usize,
    lines: Vec<BodyLine<'a>>,
}

fn parse_hunks(text: &str) -> Result<Vec<ParsedHunk<'_>>, FormatError> {
    let mut hunks: Vec<ParsedHunk<'_>> = Vec::new();
    let mut remaining = (0usize, 0usize);
    for (idx, raw) in split_lines(text).into_iter().enumerate() {
        let lineno = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let err = |message: &str| FormatError { line: lineno, message: message.to_string() };
        let in_hunk = remaining != (0, 0);
        if !in_hunk {
            if line.starts_with("@@") {
                let caps = hunk_header().captures(line).ok_or_else(|| err("bad hunk header"))?;
                let num = |i: usize, default: usize| -> Result<usize, FormatError> {
                    caps.get(i)
                        .map(|m| m.as_str().parse::<usize>().map_err(|_| err("hunk header number out of range")))
                        .unwrap_or(Ok(default))
                };
                let (a, b, c, d) = (num(1, 0)?, num(2, 1)?, num(3, 0)?, num(4, 1)?);
                if (b > 0 && a == 0) || (d > 0 && c == 0) {
                    return Err(err("hunk range starts at line 0"));
                }
                let old_first = if b == 0 { a + 1 } else { a };
                let new_first = if d == 0 { c + 1 } else { c };
                if let Some(prev) = hunks.last() {
                    let prev_end = prev.old_first + prev.old_len;
                    if old_first < prev_end {
                        return Err(err("hunks overlap or are out of order"));
                    }
                }
                hunks.push(ParsedHunk { old_first, new_first, old_len: b, lines: Vec::new() });
                remaining = (b, d);
                continue;
            }
            if line.starts_with('\\') {
                continue;
            }
            if hunks.is_empty() {
                continue;
            }
            if line.starts_with("--- ") || line.starts_with("diff ") {
                return Err(err("more than one file in diff"));
            }
            if line.starts_with(['+', '-', ' ']) {
                return Err(err("hunk body longer than its header counts"));
            }
            continue;
        }
        let hunk = hunks.last_mut().expect("inside a hunk");
        let (body, kind) = match line.as_bytes().first() {
            Some(b'-') => (&line[1..], 1),
            Some(b'+') => (&line[1..], 2),
            Some(b' ') => (&line[1..], 0),
            Some(b'\\') => continue,
            None => ("", 0),
            Some(_) => return Err(err("hunk body shorter than its header counts")),
        };
        match kind {
            0 => {
                if remaining.0 == 0 || remaining.1 == 0 {
                    return Err(err("context line exceeds hunk counts"));
                }
                remaining.0 -= 1;
                remaining.1 -= 1;
                hunk.lines.push(BodyLine::Context(body));
            }
            1 => {
                if remaining.0 == 0 {
                    return Err(err("removed line exceeds hunk counts"));
                }
                remaining.0 -= 1;
                hunk.lines.push(BodyLine::Removed(body));
            }
            _ => {
                if remaining.1 == 0 {
                    return Err(err("added line exceeds hunk counts"));
                }
                remaining.1 -= 1;
                hunk.lines.push(BodyLine::Added(body));
            }
        }
    }
    if remaining != (0, 0) {
        return Err(FormatError {
            line: split_lines(text).len(),
            message: "diff ends inside a hunk".to_string(),
        });
    }
    Ok(hunks)
}

/// Reconstructs changed line sets from a single-file unified diff. Each
/// `@@` header counts as one hunk, whatever context it carries.
pub fn parse_unified_diff(text: &str) -> Result<DiffResult, FormatError> {
    let hunks = parse_hunks(text)?;
    let mut result = DiffResult { hunk_count: hunks.len(), ..DiffResult::default() };
    for h in &hunks {
        let (mut old_ln, mut new_ln) = (h.old_first as u32, h.new_first as u32);
        for line in &h.lines {
            match line {
                BodyLine::Context(_) => {
                    old_ln += 1;
                    new_ln += 1;
                }
                BodyLine::Removed(_) => {
                    result.removed.insert(old_ln);
                    old_ln += 1;
                }
                BodyLine::Added(_) => {
                    result.added.insert(new_ln);
                    new_ln += 1;
                }
            }
        }
    }
    Ok(result)
}

/// Applies a single-file unified diff to `old_source`, checking that context
/// and removed lines match.
pub fn apply_unified_diff(old_source: &str, diff_text: &str) -> Result<String, FormatError> {
    let old = split_lines(old_source);
    let hunks = parse_hunks(diff_text)?;
    let mut out: Vec<&str> = Vec::with_capacity(old.len());
    let mut cursor = 0usize;
    let mismatch = |line: usize| FormatError { line, message: "diff does not apply to the old file".into() };
    for h in &hunks {
        let start = h.old_first - 1;
        if start < cursor || start > old.len() {
            return Err(mismatch(h.old_first));
        }
        out.extend_from_slice(&old[cursor..start]);
        cursor = start;
        for line in &h.lines {
            match line {
                BodyLine::Context(text) | BodyLine::Removed(text) => {
                    if old.get(cursor) != Some(text) {
                        return Err(mismatch(cursor + 1));
                    }
                    if matches!(line, BodyLine::Context(_)) {
                        out.push(text);
                    }
                    cursor += 1;
                }
                BodyLine::Added(text) => out.push(text),
            }
        }
    }
    out.extend_from_slice(&old[cursor.min(old.len())..]);
    Ok(join_lines(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(lines: &[u32]) -> LineSet {
        lines.iter().copied().collect()
    }

    #[test]
    fn identical_inputs_have_no_hunks() {
        let text = "a\nb\nc\n";
        let diff = compute_diff(text, text);
        assert!(diff.removed.is_empty() && diff.added.is_empty());
        assert_eq!(diff.hunk_count, 0);
        assert_eq!(render_unified_diff("f.py", text, text), "");
    }

    #[test]
    fn single_insertion() {
        let diff = compute_diff("a\nb\nc\n", "a\nb\nX\nc\n");
        assert_eq!(diff.removed, LineSet::new());
        assert_eq!(diff.added, set(&[3]));
        assert_eq!(diff.hunk_count, 1);
    }

    #[test]
    fn dedented_call_is_one_replaced_line() {
        let old = include_str!("../tests/fixtures/snippets/dedent_buggy.py");
        let new = include_str!("../tests/fixtures/snippets/dedent_fixed.py");
        let diff = compute_diff(old, new);
        // `diff -U0` on the two files reports the same single hunk: @@ -5 +5 @@
        assert_eq!(diff.removed, set(&[5]));
        assert_eq!(diff.added, set(&[5]));
        assert_eq!(diff.hunk_count, 1);
        let rendered = render_unified_diff("names.py", old, new);
        assert!(rendered.contains("@@ -5,1 +5,1 @@\n-        sanitize(name_str)\n+    sanitize(name_str)\n"));
    }

    #[test]
    fn separated_changes_are_separate_hunks() {
        let diff = compute_diff("a\nb\nc\nd\n", "A\nb\nc\nD\n");
        assert_eq!(diff.hunk_count, 2);
        let diff = compute_diff("a\nb\nc\nd\n", "A\nB\nc\nd\n");
        assert_eq!(diff.hunk_count, 1);
    }

    #[test]
    fn missing_final_newline_is_not_a_change() {
        assert!(compute_diff("a\nb", "a\nb\n").is_empty());
        assert_eq!(split_lines(""), Vec::<&str>::new());
        assert_eq!(split_lines("\n"), vec![""]);
    }

    #[test]
    fn header_ranges_for_empty_sides() {
        let rendered = render_unified_diff("f", "a\nb\n", "a\nX\nb\n");
        assert!(rendered.contains("@@ -1,0 +2,1 @@\n+X\n"), "{rendered}");
        let rendered = render_unified_diff("f", "a\nb\n", "b\n");
        assert!(rendered.contains("@@ -1,1 +0,0 @@\n-a\n"), "{rendered}");
    }

    #[test]
    fn parse_one_hunk() {
        let text = "--- a/f.py\n+++ b/f.py\n@@ -4,1 +4,1 @@\n-old\n+new\n";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.removed, set(&[4]));
        assert_eq!(diff.added, set(&[4]));
        assert_eq!(diff.hunk_count, 1);
    }

    #[test]
    fn parse_two_hunks_with_context() {
        let text = "\
--- a/f.py
+++ b/f.py
@@ -1,3 +1,3 @@
 a
-b
+B
 c
@@ -10,2 +10,3 @@
 j
+new
 k
";
        let diff = parse_unified_diff(text).unwrap();
        assert_eq!(diff.hunk_count, 2);
        assert_eq!(diff.removed, set(&[2]));
        assert_eq!(diff.added, set(&[2, 11]));
    }

    #[test]
    fn parse_omitted_counts_default_to_one() {
        let diff = parse_unified_diff("@@ -3 +3 @@\n-x\n+y\n").unwrap();
        assert_eq!(diff.removed, set(&[3]));
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(parse_unified_diff("@@ -x +1 @@\n").is_err());
        assert!(parse_unified_diff("@@ -1,2 +1,1 @@\n-a\n").is_err());
        assert!(parse_unified_diff("@@ -1,1 +1,1 @@\n-a\n+b\n+c\n").is_err());
        let two_files = "--- a/x\n+++ b/x\n@@ -1,1 +1,1 @@\n-a\n+b\n--- a/y\n+++ b/y\n";
        assert_eq!(parse_unified_diff(two_files).unwrap_err().line, 6);
    }

    #[test]
    fn apply_rendered_patch() {
        let old = "a\nb\nc\nd\ne\n";
        let new = "a\nc\nX\nd\ne\nf\n";
        let patch = render_unified_diff("f", old, new);
        assert_eq!(apply_unified_diff(old, &patch).unwrap(), new);
        assert_eq!(compute_diff(old, new).apply(old, new).unwrap(), new);
    }

    #[test]
    fn line_set_queries() {
        let s = set(&[2, 3, 4, 9]);
        assert!(s.covers(2, 4));
        assert!(!s.covers(2, 5));
        assert!(s.intersects(5, 9));
        assert!(!s.intersects(5, 8));
        assert_eq!(s.count_in(1, 100), 4);
        assert!(!set(&[0]).contains(0));
    }
}
