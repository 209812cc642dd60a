use std::fmt;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::diffing::{compute_diff, CommitRecord};
use crate::sbt::{diffsbt_full, EncodeError, EncoderConfig};

/// The built-in machine-template list.
pub const DEFAULT_TEMPLATES: &str = include_str!("../../templates/default.txt");

/// Patterns for machine-generated message lines.
#[derive(Debug, Clone)]
pub struct TemplateList {
    patterns: Vec<Regex>,
}

impl PartialEq for TemplateList {
    fn eq(&self, other: &Self) -> bool {
        self.patterns.len() == other.patterns.len()
            && self.patterns.iter().zip(&other.patterns).all(|(a, b)| a.as_str() == b.as_str())
    }
}

impl Default for TemplateList {
    fn default() -> Self {
        TemplateList::parse(DEFAULT_TEMPLATES).expect("built-in templates compile")
    }
}

impl TemplateList {
    /// One case-insensitive pattern per line; blank and `#` lines skipped.
    pub fn parse(text: &str) -> Result<TemplateList, String> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let re = RegexBuilder::new(line)
                .case_insensitive(true)
                .build()
                .map_err(|e| format!("line {}: {e}", i + 1))?;
            patterns.push(re);
        }
        Ok(TemplateList { patterns })
    }

    pub fn empty() -> TemplateList {
        TemplateList { patterns: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn matches(&self, line: &str) -> bool {
        self.patterns.iter().any(|re| re.is_match(line))
    }
}

/// True iff the lowercased message contains "fix" or "solve".
///
/// ```
/// use sdx_core::corpus::is_bugfix;
///
/// assert!(is_bugfix("Fix crash on empty config file"));
/// assert!(is_bugfix("solve race in scheduler"));
/// assert!(!is_bugfix("add dark mode"));
/// ```
pub fn is_bugfix(message: &str) -> bool {
    let lower = message.to_lowercase();
    lower.contains("fix") || lower.contains("solve")
}

/// Drops every message line matched by a template, then trims surrounding
/// blank lines. An empty result means the whole message was boilerplate.
///
/// ```
/// use sdx_core::corpus::{strip_generated, TemplateList};
///
/// let t = TemplateList::default();
/// assert_eq!(strip_generated("Merge branch 'dev' into master", &t), "");
/// assert_eq!(strip_generated("fix crash\nSigned-off-by: A <a@b.c>", &t), "fix crash");
/// ```
pub fn strip_generated(message: &str, templates: &TemplateList) -> String {
    let kept: Vec<&str> = message.lines().filter(|l| !templates.matches(l)).collect();
    kept.join("\n").trim().to_string()
}

/// True for test scripts: a `test` or `tests` directory segment, or a
/// basename of the form `test_*.py` / `*_test.py`.
pub fn is_test_path(path: &str) -> bool {
    let segments: Vec<&str> = path.split(['/', '\\']).filter(|s| !s.is_empty()).collect();
    let Some((basename, dirs)) = segments.split_last() else {
        return false;
    };
    dirs.iter().any(|d| *d == "test" || *d == "tests")
        || basename.starts_with("test_") && basename.ends_with(".py")
        || basename.ends_with("_test.py")
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reason {
    NotBugfix,
    MachineGenerated,
    NoPythonFile,
    OnlyTestFiles,
    MsgTooLong,
    DiffTooLong,
    MsgTooShort,
    MultiHunk,
    ParseFailure,
    EmptyBuggySide,
}

impl Reason {
    pub const ALL: [Reason; 10] = [
        Reason::NotBugfix,
        Reason::MachineGenerated,
        Reason::NoPythonFile,
        Reason::OnlyTestFiles,
        Reason::MsgTooLong,
        Reason::DiffTooLong,
        Reason::MsgTooShort,
        Reason::MultiHunk,
        Reason::ParseFailure,
        Reason::EmptyBuggySide,
    ];
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub accepted: bool,
    pub reason: Option<Reason>,
}

impl FilterDecision {
    pub fn accept() -> Self {
        FilterDecision { accepted: true, reason: None }
    }

    pub fn reject(reason: Reason) -> Self {
        FilterDecision { accepted: false, reason: Some(reason) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub min_message_tokens: usize,
    pub max_message_tokens: usize,
    pub max_diff_tokens: usize,
    pub templates: TemplateList,
    /// Used for the parse and buggy-side checks.
    pub encoder: EncoderConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_message_tokens: 5,
            max_message_tokens: 30,
            max_diff_tokens: 170,
            templates: TemplateList::default(),
            encoder: EncoderConfig::default(),
        }
    }
}

/// Applies the bug-fix and noise filters to a record whose message has
/// already been template-stripped. The first failing rule is reported.
///
/// Rules, in order: fix/solve keyword; at least one changed `.py` file, not
/// all of them tests; message length within bounds; rendered diff length;
/// exactly one hunk over the whole commit; both versions parse; the buggy
/// side is non-empty. Token counts are whitespace-delimited words, and the
/// diff is the zero-context unified diff including its file headers.
pub fn passes_filters(record: &CommitRecord, cfg: &FilterConfig) -> FilterDecision {
    use Reason::*;
    if !is_bugfix(&record.message) {
        return FilterDecision::reject(NotBugfix);
    }
    let changed_python: Vec<&str> = record
        .files
        .iter()
        .filter(|f| f.path.ends_with(".py") && !compute_diff(&f.old_source, &f.new_source).is_empty())
        .map(|f| f.path.as_str())
        .collect();
    if changed_python.is_empty() {
        return FilterDecision::reject(NoPythonFile);
    }
    if changed_python.iter().all(|p| is_test_path(p)) {
        return FilterDecision::reject(OnlyTestFiles);
    }
    let words = word_count(&record.message);
    if words > cfg.max_message_tokens {
        return FilterDecision::reject(MsgTooLong);
    }
    if words < cfg.min_message_tokens {
        return FilterDecision::reject(MsgTooShort);
    }
    if word_count(&record.render_diff()) > cfg.max_diff_tokens {
        return FilterDecision::reject(DiffTooLong);
    }
    if record.hunk_count() != 1 {
        return FilterDecision::reject(MultiHunk);
    }
    match diffsbt_full(record, &cfg.encoder) {
        Ok(seq) if seq.buggy_side().is_empty() => FilterDecision::reject(EmptyBuggySide),
        Ok(_) => FilterDecision::accept(),
        Err(EncodeError::Syntax { .. }) => FilterDecision::reject(ParseFailure),
        Err(EncodeError::EmptySide) => FilterDecision::reject(EmptyBuggySide),
        // A single hunk means exactly one changed file with a change.
        Err(EncodeError::NoChange | EncodeError::MultipleFiles(_)) => FilterDecision::reject(MultiHunk),
    }
}

/// Strips templates from the message, then filters. Returns the cleaned
/// record alongside the decision.
pub fn screen(record: &CommitRecord, cfg: &FilterConfig) -> (CommitRecord, FilterDecision) {
    let mut cleaned = record.clone();
    cleaned.message = strip_generated(&record.message, &cfg.templates);
    if cleaned.message.is_empty() {
        return (cleaned, FilterDecision::reject(Reason::MachineGenerated));
    }
    let decision = passes_filters(&cleaned, cfg);
    (cleaned, decision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffing::FileChange;

    fn record(message: &str, files: &[(&str, &str, &str)]) -> CommitRecord {
        CommitRecord {
            repo: "o/r".into(),
            sha: "abc".into(),
            message: message.into(),
            files: files
                .iter()
                .map(|(p, a, b)| FileChange { path: p.to_string(), old_source: a.to_string(), new_source: b.to_string() })
                .collect(),
        }
    }

    fn reason(r: &CommitRecord) -> Option<Reason> {
        screen(r, &FilterConfig::default()).1.reason
    }

    #[test]
    fn keyword_rule_uses_substrings() {
        assert!(is_bugfix("Fixes #12"));
        assert!(is_bugfix("bugfix release"));
        assert!(is_bugfix("add prefix option"));
        assert!(is_bugfix("Solved it"));
        assert!(!is_bugfix("add dark mode"));
    }

    #[test]
    fn templates() {
        let t = TemplateList::default();
        assert_eq!(strip_generated("fix crash", &t), "fix crash");
        assert_eq!(strip_generated("Revert \"fix crash\"\n\nThis reverts commit 0123abcd.", &t), "");
        assert_eq!(strip_generated("fix a bug\n\n(cherry picked from commit deadbeef1)", &t), "fix a bug");
        assert_eq!(strip_generated("Bump requests from 2.0 to 2.1", &t), "");
        assert_eq!(strip_generated("Co-authored-by: X <x@y>\nfix it", &t), "fix it");
        assert_eq!(strip_generated("[skip ci]", &t), "");
        assert_eq!(strip_generated("fix merge of dicts", &t), "fix merge of dicts");
        assert!(TemplateList::parse("(unclosed").is_err());
    }

    #[test]
    fn test_paths() {
        assert!(is_test_path("tests/test_x.py"));
        assert!(is_test_path("pkg/test/util.py"));
        assert!(is_test_path("test_api.py"));
        assert!(is_test_path("pkg/api_test.py"));
        assert!(!is_test_path("pkg/testing.py"));
        assert!(!is_test_path("contest/app.py"));
        assert!(!is_test_path("attest_x.py"));
    }

    #[test]
    fn accepts_a_small_fix() {
        let r = record("fix off by one in counter", &[("a.py", "n = 1\n", "n = 2\n")]);
        assert_eq!(screen(&r, &FilterConfig::default()).1, FilterDecision::accept());
    }

    #[test]
    fn reasons_in_rule_order() {
        let one = ("a.py", "n = 1\n", "n = 2\n");
        assert_eq!(reason(&record("add dark mode to settings page", &[one])), Some(Reason::NotBugfix));
        assert_eq!(reason(&record("Merge branch 'fix' into main", &[one])), Some(Reason::MachineGenerated));
        assert_eq!(reason(&record("fix the readme typo here", &[("README.md", "a\n", "b\n")])), Some(Reason::NoPythonFile));
        assert_eq!(reason(&record("fix the failing unit test", &[("tests/t.py", "n = 1\n", "n = 2\n")])), Some(Reason::OnlyTestFiles));
        assert_eq!(reason(&record("fix it now", &[one])), Some(Reason::MsgTooShort));
        let long = format!("fix {}", "word ".repeat(30));
        assert_eq!(reason(&record(&long, &[one])), Some(Reason::MsgTooLong));
        let big_old: String = (0..60).map(|i| format!("v{i} = {i}\n")).collect();
        let big_new: String = (0..60).map(|i| format!("w{i} = {i}\n")).collect();
        assert_eq!(reason(&record("fix the variable names here", &[("a.py", &big_old, &big_new)])), Some(Reason::DiffTooLong));
        let two = ("a.py", "a = 1\nb = 2\nc = 3\n", "a = 0\nb = 2\nc = 0\n");
        assert_eq!(reason(&record("fix both of the constants", &[two])), Some(Reason::MultiHunk));
        assert_eq!(reason(&record("fix the broken syntax here", &[("a.py", "x = [1\n", "x = [1]\n")])), Some(Reason::ParseFailure));
        assert_eq!(reason(&record("fix missing import of os", &[("a.py", "", "import os\n")])), Some(Reason::EmptyBuggySide));
    }

    #[test]
    fn decision_invariant() {
        for r in Reason::ALL {
            let d = FilterDecision::reject(r);
            assert!(!d.accepted && d.reason == Some(r));
        }
        assert!(FilterDecision::accept().reason.is_none());
    }
}
