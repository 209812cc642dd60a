//! Shared helpers: running the binary and scripting a small git history.

#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn sdx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdx")).args(args).env_remove("SDX_API_TOKEN").output().expect("run sdx")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn git(dir: &Path, args: &[&str]) -> String {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_AUTHOR_NAME", "t")
        .env("GIT_AUTHOR_EMAIL", "t@example.com")
        .env("GIT_COMMITTER_NAME", "t")
        .env("GIT_COMMITTER_EMAIL", "t@example.com")
        .env("GIT_AUTHOR_DATE", "2020-01-01T00:00:00Z")
        .env("GIT_COMMITTER_DATE", "2020-01-01T00:00:00Z")
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("HOME", dir)
        .output()
        .expect("run git");
    assert!(out.status.success(), "git {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

fn commit(dir: &Path, files: &[(&str, String)], message: &str) {
    for (path, text) in files {
        let p = dir.join(path);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, text).unwrap();
    }
    git(dir, &["add", "-A"]);
    git(dir, &["commit", "-q", "--allow-empty", "-m", message]);
}

const SUBJECTS: &[&str] = &[
    "fix off by one in {f} when the count is zero",
    "fix wrong offset returned by {f} for negative input",
    "fix crash in {f} when the value is missing",
    "solve rounding error in {f} for large totals",
];

fn module(name: &str, offsets: &[u32]) -> String {
    offsets
        .iter()
        .enumerate()
        .map(|(i, off)| format!("def {name}{i}(value):\n    total = value * 2\n    return total + {off}\n\n\n"))
        .collect()
}

/// Builds a repository of 30 commits: a root commit, 24 single-line fixes
/// over two modules, and noise (docs, merges, features, tests, a tangled
/// change). Returns the number of commits.
pub fn scripted_repo(dir: &Path) -> usize {
    git(dir, &["init", "-q", "-b", "main"]);
    let mut calc = vec![0u32; 12];
    let mut text = vec![0u32; 12];
    commit(
        dir,
        &[("calc.py", module("calc", &calc)), ("text.py", module("text", &text)), ("README.md", "helpers\n".into())],
        "initial import",
    );
    let mut count = 1;
    for i in 0..24 {
        let (name, offsets) = if i % 2 == 0 { ("calc", &mut calc) } else { ("text", &mut text) };
        let f = i / 2;
        offsets[f] += 1;
        let subject = SUBJECTS[i % SUBJECTS.len()].replace("{f}", &format!("{name}{f}"));
        commit(dir, &[(&format!("{name}.py"), module(name, offsets))], &subject);
        count += 1;
        if i % 6 == 5 {
            let noise: (&str, String, String) = match i / 6 {
                0 => ("README.md", format!("helpers v{i}\n"), "update the readme with usage notes".into()),
                1 => ("tests/test_calc.py", format!("assert calc0(1) == {i}\n"), "fix expected value in calc tests".into()),
                2 => ("extra.py", format!("def extra():\n    return {i}\n"), "add an extra helper module".into()),
                _ => ("README.md", format!("helpers v{i}\n"), "Merge branch 'docs' into main".into()),
            };
            commit(dir, &[(noise.0, noise.1)], &noise.2);
            count += 1;
        }
    }
    calc[0] += 5;
    calc[11] += 5;
    commit(dir, &[("calc.py", module("calc", &calc))], "fix two unrelated offsets in calc helpers");
    count + 1
}
