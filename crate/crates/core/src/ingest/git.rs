use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use log::warn;
use thiserror::Error;

use crate::diffing::{compute_diff, CommitRecord, FileChange};

const NULL_OID: &str = "0000000000000000000000000000000000000000";

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("{path} is not a git repository: {detail}")]
    NotARepository { path: PathBuf, detail: String },
    #[error("cannot run git: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("git {command} failed: {detail}")]
    Command { command: String, detail: String },
}

fn git(repo: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C").arg(repo).env("GIT_TERMINAL_PROMPT", "0");
    cmd
}

fn run(repo: &Path, args: &[&str]) -> Result<Vec<u8>, RepoError> {
    let out = git(repo).args(args).stderr(Stdio::piped()).output().map_err(RepoError::Spawn)?;
    if !out.status.success() {
        return Err(RepoError::Command {
            command: args.join(" "),
            detail: String::from_utf8_lossy(&out.stderr).trim().to_string(),
        });
    }
    Ok(out.stdout)
}

/// A long-lived `git cat-file --batch` process.
struct ObjectReader {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ObjectReader {
    fn spawn(repo: &Path) -> Result<ObjectReader, RepoError> {
        let mut child = git(repo)
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(RepoError::Spawn)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ObjectReader { child, stdin, stdout })
    }

    /// Raw object contents, or `None` when the object does not exist.
    fn read(&mut self, oid: &str) -> std::io::Result<Option<Vec<u8>>> {
        writeln!(self.stdin, "{oid}")?;
        self.stdin.flush()?;
        let mut header = String::new();
        self.stdout.read_line(&mut header)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() == 2 && fields[1] == "missing" {
            return Ok(None);
        }
        let size: usize = fields
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("bad cat-file header {header:?}")))?;
        let mut body = vec![0u8; size + 1];
        self.stdout.read_exact(&mut body)?;
        body.pop();
        Ok(Some(body))
    }
}

impl Drop for ObjectReader {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A local clone read through git plumbing commands.
pub struct GitRepo {
    path: PathBuf,
    name: String,
}

impl GitRepo {
    /// Opens `path`; the repository name defaults to the directory name.
    pub fn open(path: impl AsRef<Path>) -> Result<GitRepo, RepoError> {
        let path = path.as_ref().to_path_buf();
        let not_repo = |detail: String| RepoError::NotARepository { path: path.clone(), detail };
        let top = run(&path, &["rev-parse", "--show-toplevel"]).map_err(|e| not_repo(e.to_string()))?;
        let top = PathBuf::from(String::from_utf8_lossy(&top).trim());
        let name = top.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "repo".into());
        Ok(GitRepo { path, name })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> GitRepo {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Single-parent commits reachable from HEAD, oldest first. The list of
    /// commits is read up front; contents are read lazily.
    pub fn commits(&self) -> Result<CommitIter, RepoError> {
        let listing = run(&self.path, &["rev-list", "--reverse", "--topo-order", "--parents", "HEAD"])?;
        let pending: Vec<(String, String)> = String::from_utf8_lossy(&listing)
            .lines()
            .filter_map(|line| {
                let ids: Vec<&str> = line.split_whitespace().collect();
                (ids.len() == 2).then(|| (ids[0].to_string(), ids[1].to_string()))
            })
            .collect();
        Ok(CommitIter {
            path: self.path.clone(),
            repo: self.name.clone(),
            objects: ObjectReader::spawn(&self.path)?,
            pending: pending.into_iter(),
        })
    }
}

/// Streams [`CommitRecord`]s; see [`GitRepo::commits`].
pub struct CommitIter {
    path: PathBuf,
    repo: String,
    objects: ObjectReader,
    pending: std::vec::IntoIter<(String, String)>,
}

struct RawChange {
    old_oid: String,
    new_oid: String,
    path: String,
}

fn parse_raw_diff(raw: &[u8]) -> Vec<RawChange> {
    let mut fields = raw.split(|&b| b == 0).filter(|f| !f.is_empty());
    let mut out = Vec::new();
    while let (Some(meta), Some(path)) = (fields.next(), fields.next()) {
        let meta = String::from_utf8_lossy(meta);
        let parts: Vec<&str> = meta.trim_start_matches(':').split_whitespace().collect();
        if parts.len() < 5 {
            continue;
        }
        let regular = |mode: &str| mode == "000000" || mode.starts_with("100");
        if !regular(parts[0]) || !regular(parts[1]) {
            continue;
        }
        out.push(RawChange {
            old_oid: parts[2].to_string(),
            new_oid: parts[3].to_string(),
            path: String::from_utf8_lossy(path).into_owned(),
        });
    }
    out
}

fn commit_message(raw: &[u8]) -> String {
    let text = String::from_utf8_lossy(raw);
    match text.split_once("\n\n") {
        Some((_, message)) => message.trim_end().to_string(),
        None => String::new(),
    }
}

impl CommitIter {
    fn blob(&mut self, oid: &str) -> Result<Option<String>, String> {
        if oid == NULL_OID {
            return Ok(Some(String::new()));
        }
        let bytes = self.objects.read(oid).map_err(|e| e.to_string())?.ok_or_else(|| format!("missing blob {oid}"))?;
        Ok(String::from_utf8(bytes).ok())
    }

    fn load(&mut self, sha: &str, parent: &str) -> Result<Option<CommitRecord>, String> {
        let raw = self.objects.read(sha).map_err(|e| e.to_string())?.ok_or_else(|| format!("missing commit {sha}"))?;
        let message = commit_message(&raw);
        let listing = run(&self.path, &["diff-tree", "-r", "--no-renames", "--raw", "-z", parent, sha]).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for change in parse_raw_diff(&listing) {
            let (Some(old_source), Some(new_source)) = (self.blob(&change.old_oid)?, self.blob(&change.new_oid)?) else {
                continue;
            };
            if compute_diff(&old_source, &new_source).is_empty() {
                continue;
            }
            files.push(FileChange { path: change.path, old_source, new_source });
        }
        if files.is_empty() {
            return Ok(None);
        }
        Ok(Some(CommitRecord { repo: self.repo.clone(), sha: sha.to_string(), message, files }))
    }
}

impl Iterator for CommitIter {
    type Item = CommitRecord;

    fn next(&mut self) -> Option<CommitRecord> {
        while let Some((sha, parent)) = self.pending.next() {
            match self.load(&sha, &parent) {
                Ok(Some(record)) => return Some(record),
                Ok(None) => {}
                Err(e) => warn!("skipping commit {sha} in {}: {e}", self.repo),
            }
        }
        None
    }
}

/// All single-parent commits of the repository at `path`, oldest first,
/// with full before/after contents of each changed text file.
pub fn enumerate_commits(path: impl AsRef<Path>) -> Result<CommitIter, RepoError> {
    GitRepo::open(path)?.commits()
}
