//! Seeded generators and independently written oracles shared by the
//! property tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use sdx_core::diffing::{CommitRecord, FileChange, LineSet};
use sdx_core::syntax::TreeNode;

pub const KINDS: &[&str] = &["A", "B", "C", "Expr", "Call", "If", "For", "Name", "Assign", "Module"];
pub const LABELS: &[&str] = &["x", "names", "1", "a b", "(", ")", "</s>", "k:v", "", "back\\slash", "tab\there", "é"];

/// Random tree of at most `max_nodes` nodes with valid line spans rooted
/// at line 1.
pub fn random_tree<R: Rng>(rng: &mut R, max_nodes: usize) -> TreeNode {
    let mut budget = rng.gen_range(1..=max_nodes.max(1));
    grow(rng, 1, &mut budget, 0)
}

fn grow<R: Rng>(rng: &mut R, start: u32, budget: &mut usize, depth: usize) -> TreeNode {
    *budget -= 1;
    let kind = *KINDS.choose(rng).unwrap();
    let mut node = TreeNode::new(kind, start, start);
    if rng.gen_bool(0.5) {
        node.label = Some(LABELS.choose(rng).unwrap().to_string());
    }
    let mut cursor = start + rng.gen_range(0..=1);
    let n_children = if depth > 6 { 0 } else { rng.gen_range(0..=3) };
    for _ in 0..n_children {
        if *budget == 0 {
            break;
        }
        let child = grow(rng, cursor, budget, depth + 1);
        cursor = child.end_line + rng.gen_range(0..=1);
        node.children.push(child);
    }
    let last = node.children.last().map_or(start, |c| c.end_line);
    node.end_line = last.max(start) + rng.gen_range(0..=1);
    node
}

pub fn random_lines<R: Rng>(rng: &mut R, max_line: u32, p: f64) -> LineSet {
    (1..=max_line).filter(|_| rng.gen_bool(p)).collect()
}

/// Lines `l` for which some node starts on `l`, or some leaf spans `l`.
pub fn owned_lines(root: &TreeNode) -> LineSet {
    let mut out = LineSet::new();
    for n in root.iter() {
        out.insert(n.start_line);
        if n.is_leaf() {
            for l in n.start_line..=n.end_line {
                out.insert(l);
            }
        }
    }
    out
}

/// Random text of at most `max_lines` lines over a tiny alphabet, so that
/// equal lines are common. May or may not end in a newline.
pub fn random_text<R: Rng>(rng: &mut R, max_lines: usize) -> String {
    let n = rng.gen_range(0..=max_lines);
    let lines: Vec<&str> = (0..n).map(|_| *["a", "b", "c", "d", ""].choose(rng).unwrap()).collect();
    let mut text = lines.join("\n");
    if n > 0 && rng.gen_bool(0.5) {
        text.push('\n');
    }
    text
}

pub fn text_lines(text: &str) -> Vec<&str> {
    let mut v: Vec<&str> = text.split('\n').collect();
    if text.is_empty() || text.ends_with('\n') {
        v.pop();
    }
    v
}

/// Plain quadratic LCS length.
pub fn brute_lcs(a: &[&str], b: &[&str]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..a.len() {
        for j in 0..b.len() {
            t[i + 1][j + 1] = if a[i] == b[j] { t[i][j] + 1 } else { t[i][j + 1].max(t[i + 1][j]) };
        }
    }
    t[a.len()][b.len()]
}

const STATEMENT_TEMPLATES: &[&str] = &[
    "x = {n}",
    "total = total + {n}",
    "print(x, {n})",
    "items.append({n})",
    "if x > {n}:\n    x = {n}",
    "for i in range({n}):\n    total += i",
    "def f{n}(a):\n    return a + {n}",
    "while x < {n}:\n    x += 1",
];

/// A parseable program of `n_statements` random statements.
pub fn random_program<R: Rng>(rng: &mut R, n_statements: usize) -> String {
    let mut out = String::new();
    for _ in 0..n_statements {
        let t = STATEMENT_TEMPLATES.choose(rng).unwrap();
        out.push_str(&t.replace("{n}", &rng.gen_range(0..100).to_string()));
        out.push('\n');
    }
    out
}

/// A one-file commit changing a random program by a replacement, deletion
/// or insertion of a single line.
pub fn random_commit<R: Rng>(rng: &mut R, id: usize) -> CommitRecord {
    loop {
        let n = rng.gen_range(1..8);
        let old = random_program(rng, n);
        let mut lines: Vec<String> = old.lines().map(str::to_string).collect();
        let i = rng.gen_range(0..lines.len());
        match rng.gen_range(0..3) {
            0 => lines[i] = lines[i].replace(|c: char| c.is_ascii_digit(), "7"),
            1 if !lines[i].starts_with(' ') && lines.len() > 1 => {
                let next_indented = lines.get(i + 1).is_some_and(|l| l.starts_with(' '));
                if next_indented {
                    lines.remove(i + 1);
                } else {
                    lines.remove(i);
                }
            }
            _ => lines.insert(i, "y = 12".into()),
        }
        let new = lines.iter().map(|l| format!("{l}\n")).collect::<String>();
        if new == old || sdx_core::syntax::parse_source(&new).is_err() {
            continue;
        }
        return CommitRecord {
            repo: format!("org/repo{}", id % 7),
            sha: format!("{id:08x}"),
            message: format!("fix the value in statement {id}"),
            files: vec![FileChange { path: "app.py".into(), old_source: old, new_source: new }],
        };
    }
}

/// BLEU-4 straight from the formula: lowercase whitespace tokens, clipped
/// n-gram precision, add-one smoothing from bigrams up, brevity penalty.
pub fn bleu_oracle(candidate: &str, reference: &str) -> f64 {
    let c: Vec<String> = candidate.split_whitespace().map(|t| t.to_lowercase()).collect();
    let r: Vec<String> = reference.split_whitespace().map(|t| t.to_lowercase()).collect();
    if c.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4usize {
        let grams = |toks: &[String]| {
            let mut m: HashMap<Vec<String>, usize> = HashMap::new();
            if toks.len() >= n {
                for w in toks.windows(n) {
                    *m.entry(w.to_vec()).or_default() += 1;
                }
            }
            m
        };
        let cg = grams(&c);
        let rg = grams(&r);
        let total: usize = cg.values().sum();
        let hits: usize = cg.iter().map(|(g, k)| (*k).min(*rg.get(g).unwrap_or(&0))).sum();
        let p = if n == 1 {
            if hits == 0 {
                return 0.0;
            }
            hits as f64 / total as f64
        } else {
            (hits as f64 + 1.0) / (total as f64 + 1.0)
        };
        log_sum += 0.25 * p.ln();
    }
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    100.0 * bp * log_sum.exp()
}

/// Random short sentence over a small vocabulary, with random casing.
pub fn random_sentence<R: Rng>(rng: &mut R, max_words: usize) -> String {
    const WORDS: &[&str] = &["fix", "crash", "when", "cache", "not", "found", "the", "bug", "in", "Parser", "null"];
    let n = rng.gen_range(0..=max_words);
    (0..n)
        .map(|_| {
            let w = *WORDS.choose(rng).unwrap();
            if rng.gen_bool(0.2) {
                w.to_uppercase()
            } else {
                w.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Exhaustive two-stage nearest-neighbour scan: exact cosine ranking by
/// cross-multiplication (ties to the lower index), then the best BLEU among
/// the top `k` (ties to the lower index). Returns the chosen index.
pub fn nngen_oracle(diffs: &[String], query: &str, k: usize, bleu: impl Fn(&str, &str) -> f64) -> usize {
    let mut vocab: Vec<&str> = Vec::new();
    for d in diffs {
        for t in d.split_whitespace() {
            if !vocab.contains(&t) {
                vocab.push(t);
            }
        }
    }
    let tf = |text: &str| -> Vec<u128> {
        let mut v = vec![0u128; vocab.len()];
        for t in text.split_whitespace() {
            if let Some(i) = vocab.iter().position(|w| *w == t) {
                v[i] += 1;
            }
        }
        v
    };
    let q = tf(query);
    let qn: u128 = q.iter().map(|x| x * x).sum();
    let k = k.min(diffs.len()).max(1);
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    let top: Vec<usize> = if qn == 0 {
        order.truncate(k);
        order
    } else {
        let scores: Vec<(u128, u128)> = diffs
            .iter()
            .map(|d| {
                let v = tf(d);
                let dot: u128 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
                let vn: u128 = v.iter().map(|x| x * x).sum();
                (dot, vn * qn)
            })
            .collect();
        // a before b iff cos(a) > cos(b), i.e. dot_a² · n_b > dot_b² · n_a.
        let better = |a: usize, b: usize| {
            let (da, na) = scores[a];
            let (db, nb) = scores[b];
            match (na == 0, nb == 0) {
                (true, true) => std::cmp::Ordering::Equal,
                (true, false) => 0.cmp(&db),
                (false, true) => da.cmp(&0),
                _ => (da * da * nb).cmp(&(db * db * na)),
            }
        };
        order.sort_by(|&a, &b| better(b, a).then(a.cmp(&b)));
        order.truncate(k);
        order
    };
    let mut best = top[0];
    let mut best_score = bleu(&diffs[best], query);
    for &i in &top[1..] {
        let s = bleu(&diffs[i], query);
        if s > best_score || (s == best_score && i < best) {
            best = i;
            best_score = s;
        }
    }
    best
}

/// Random diff-like text over a small code vocabulary.
pub fn random_diff<R: Rng>(rng: &mut R) -> String {
    const TOKENS: &[&str] = &["-", "+", "x", "=", "1", "2", "return", "(", ")", "self", "name", "None", "if", ":"];
    let n = rng.gen_range(1..12);
    (0..n).map(|_| *TOKENS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}
