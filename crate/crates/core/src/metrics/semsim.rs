use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use log::warn;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("embedding provider failed: {0}")]
    Failed(String),
    #[error("embedding provider I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// Maps texts to fixed-length vectors. Output order matches input order.
pub trait EmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;

    /// Identifies the provider in reports.
    fn name(&self) -> String;
}

/// Feature-hashed term-frequency vectors over lower-cased whitespace tokens,
/// L2-normalized.
///
/// This is a lexical stand-in that keeps semantic-similarity scoring usable
/// offline. Its numbers are not comparable to sentence-encoder scores; use
/// [`CommandProvider`] with a real encoder for those.
#[derive(Debug, Clone)]
pub struct HashBagProvider {
    pub dimension: usize,
}

impl Default for HashBagProvider {
    fn default() -> Self {
        HashBagProvider { dimension: 256 }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

impl HashBagProvider {
    /// Vector index a token lands in.
    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.to_lowercase().as_bytes()) % self.dimension as u64) as usize
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for token in text.split_whitespace() {
            v[self.bucket(token)] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

impl EmbeddingProvider for HashBagProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn name(&self) -> String {
        format!("hash-bag-{} (lexical; not a sentence encoder)", self.dimension)
    }
}

/// Runs an external command (through `sh -c`) that reads one text per line on
/// stdin and writes one vector per line (space-separated decimals) on stdout.
#[derive(Debug, Clone)]
pub struct CommandProvider {
    pub command: String,
}

impl CommandProvider {
    pub fn new(command: impl Into<String>) -> Self {
        CommandProvider { command: command.into() }
    }
}

impl EmbeddingProvider for CommandProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input: String = texts
            .iter()
            .map(|t| {
                let mut line = t.replace(['\n', '\r'], " ");
                line.push('\n');
                line
            })
            .collect();
        // Feed stdin from a separate thread so a provider that streams output
        // before reading all input cannot deadlock us.
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let stdout = child.stdout.take().expect("piped stdout");
        let mut vectors = Vec::with_capacity(texts.len());
        let mut dimension = None;
        for (i, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line?;
            let vector = line
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ProviderError::Failed(format!("output line {}: {e}", i + 1)))?;
            match dimension {
                None => dimension = Some(vector.len()),
                Some(d) if d != vector.len() => return Err(ProviderError::DimensionMismatch(d, vector.len())),
                _ => {}
            }
            vectors.push(vector);
        }
        writer
            .join()
            .map_err(|_| ProviderError::Failed("stdin writer panicked".into()))?
            .or_else(|e| if e.kind() == std::io::ErrorKind::BrokenPipe { Ok(()) } else { Err(e) })?;
        let status = child.wait()?;
        if !status.success() {
            return Err(ProviderError::Failed(format!("`{}` exited with {status}", self.command)));
        }
        if vectors.len() != texts.len() {
            return Err(ProviderError::Failed(format!(
                "expected {} vectors, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        Ok(vectors)
    }

    fn name(&self) -> String {
        format!("command: {}", self.command)
    }
}

/// Cosine of two embeddings; 0 when either is the zero vector.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, ProviderError> {
    if a.len() != b.len() {
        return Err(ProviderError::DimensionMismatch(a.len(), b.len()));
    }
    let na = a.iter().map(|x| x * x).sum::<f64>();
    let nb = b.iter().map(|x| x * x).sum::<f64>();
    if na == 0.0 || nb == 0.0 {
        warn!("zero embedding vector; similarity set to 0");
        return Ok(0.0);
    }
    if a == b {
        return Ok(1.0);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Cosine similarity of the provider's embeddings of the two texts.
pub fn semantic_similarity(
    candidate: &str,
    reference: &str,
    provider: &dyn EmbeddingProvider,
) -> Result<f64, ProviderError> {
    let vectors = provider.embed(&[candidate.to_string(), reference.to_string()])?;
    match vectors.as_slice() {
        [a, b] => cosine(a, b),
        _ => Err(ProviderError::Failed(format!("expected 2 vectors, got {}", vectors.len()))),
    }
}
