//! The dedented-call example: the buggy version calls `sanitize` inside the
//! loop body, the fix moves it after the loop.

use sdx_core::diffing::{compute_diff, CommitRecord, FileChange, LineSet};
use sdx_core::sbt::{diffsbt_buggy, diffsbt_full, intersections, EncoderConfig};
use sdx_core::syntax::parse_source;

const BUGGY: &str = include_str!("fixtures/snippets/dedent_buggy.py");
const FIXED: &str = include_str!("fixtures/snippets/dedent_fixed.py");

fn record() -> CommitRecord {
    CommitRecord {
        repo: "demo/names".into(),
        sha: "f4".into(),
        message: "fix sanitize being called for every name".into(),
        files: vec![FileChange { path: "names.py".into(), old_source: BUGGY.into(), new_source: FIXED.into() }],
    }
}

fn position(tokens: &[String], pair: [&str; 2]) -> usize {
    tokens.windows(2).position(|w| w[0] == pair[0] && w[1] == pair[1]).unwrap_or_else(|| panic!("{pair:?} missing"))
}

#[test]
fn one_line_changes_on_each_side() {
    let d = compute_diff(BUGGY, FIXED);
    assert_eq!(d.removed.iter().collect::<Vec<_>>(), [5]);
    assert_eq!(d.added.iter().collect::<Vec<_>>(), [5]);
    assert_eq!(d.hunk_count, 1);
}

#[test]
fn loop_closes_after_the_call_only_in_the_buggy_side() {
    let full = diffsbt_full(&record(), &EncoderConfig::default()).unwrap();
    let buggy = full.buggy_side();
    assert!(position(buggy, [")", "For"]) > position(buggy, [")", "Expr"]));
    let fixed = full.fixed_side().unwrap();
    assert!(position(fixed, [")", "For"]) < position(fixed, ["(", "Expr"]));
    let only_buggy = diffsbt_buggy(&record(), &EncoderConfig::default()).unwrap();
    assert_eq!(only_buggy.tokens, buggy);
}

#[test]
fn whole_function_selection_keeps_it_whole() {
    let tree = parse_source(BUGGY).unwrap();
    let func = &tree.children[0];
    let all: LineSet = (func.start_line..=func.end_line).collect();
    assert_eq!(intersections(func, &all), vec![func.clone()]);
    assert_eq!(intersections(&tree, &all), vec![tree.clone()]);
}

#[test]
fn default_context_extracts_the_body_statements() {
    let tree = parse_source(BUGGY).unwrap();
    // Line 5 widened by three lines is 2..=6; the header line 1 is outside.
    let lines: LineSet = (2..=6).collect();
    let out = intersections(&tree, &lines);
    let kinds: Vec<&str> = out.iter().map(|n| n.kind.as_str()).collect();
    assert_eq!(kinds, ["Assign", "For", "Return"]);
}
