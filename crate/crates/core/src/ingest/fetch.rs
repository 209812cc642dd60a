//! Repository discovery through a code-hosting search API.
//!
//! Search endpoints cap every query at 1000 results, so the star range is
//! cut into buckets that are each expected to stay under the cap. The
//! expectation comes from a power-law prior on star counts; a bucket that
//! still reports more results than the cap is halved and queried again.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TOKEN_ENV: &str = "SDX_API_TOKEN";
pub const RESULT_CAP: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoDescriptor {
    pub full_name: String,
    pub stars: u64,
    pub clone_url: String,
}

/// Inclusive star range; `max = None` is unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarBucket {
    pub min: u64,
    pub max: Option<u64>,
}

impl StarBucket {
    pub fn qualifier(&self) -> String {
        match self.max {
            Some(max) => format!("stars:{}..{}", self.min, max),
            None => format!("stars:>={}", self.min),
        }
    }

    /// Two halves covering the same range, higher half first. `None` for a
    /// single star value.
    pub fn halve(&self) -> Option<(StarBucket, StarBucket)> {
        let max = match self.max {
            Some(max) if max > self.min => max,
            Some(_) => return None,
            None => self.min.saturating_mul(2).max(self.min + 1),
        };
        let mid = self.min + (max - self.min) / 2;
        let upper = StarBucket { min: mid + 1, max: self.max };
        Some((upper, StarBucket { min: self.min, max: Some(mid) }))
    }
}

/// Expected number of repositories with at least `s` stars:
/// `count_at · (stars_at / s)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarPrior {
    pub stars_at: f64,
    pub count_at: f64,
    pub exponent: f64,
}

impl Default for StarPrior {
    /// Roughly ten thousand Python repositories at 300 to 400 stars, with a
    /// Zipf-like tail.
    fn default() -> Self {
        StarPrior { stars_at: 350.0, count_at: 10_000.0, exponent: 1.0 }
    }
}

impl StarPrior {
    pub fn at_least(&self, stars: u64) -> f64 {
        self.count_at * (self.stars_at / (stars.max(1) as f64)).powf(self.exponent)
    }

    pub fn expected(&self, bucket: &StarBucket) -> f64 {
        let upper = bucket.max.map_or(0.0, |m| self.at_least(m + 1));
        self.at_least(bucket.min) - upper
    }
}

/// Buckets covering `[min_stars, ∞)` without gaps or overlaps, highest
/// first, each expected under the prior to hold at most `budget` results.
///
/// ```
/// use sdx_core::ingest::{plan_buckets, StarPrior};
///
/// let plan = plan_buckets(300, &StarPrior::default(), 800.0);
/// assert_eq!(plan.last().unwrap().min, 300);
/// assert_eq!(plan[0].max, None);
/// assert!(plan.iter().all(|b| StarPrior::default().expected(b) <= 800.0));
/// ```
pub fn plan_buckets(min_stars: u64, prior: &StarPrior, budget: f64) -> Vec<StarBucket> {
    let mut plan = Vec::new();
    let mut lo = min_stars;
    loop {
        let above = prior.at_least(lo);
        if above <= budget {
            plan.push(StarBucket { min: lo, max: None });
            break;
        }
        // Largest hi with at_least(hi + 1) >= above - budget.
        let limit = prior.stars_at * (prior.count_at / (above - budget)).powf(1.0 / prior.exponent);
        let mut hi = (limit.floor() as u64).saturating_sub(1).max(lo);
        while hi > lo && prior.expected(&StarBucket { min: lo, max: Some(hi) }) > budget {
            hi -= 1;
        }
        plan.push(StarBucket { min: lo, max: Some(hi) });
        lo = hi + 1;
    }
    plan.reverse();
    plan
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FetchError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited{}", retry_after.map(|s| format!(", retry after {s} s")).unwrap_or_default())]
    RateLimit { retry_after: Option<u64> },
    #[error("network error: {0}")]
    Network(String),
}

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub api_base: String,
    /// Added as a `language:` qualifier when present.
    pub language: Option<String>,
    pub per_page: u32,
    pub max_pages: u32,
    pub prior: StarPrior,
    /// Planned results per bucket, kept below the cap for headroom.
    pub bucket_budget: f64,
    /// Overrides the planned buckets.
    pub buckets: Option<Vec<StarBucket>>,
    pub timeout: Duration,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            api_base: "https://api.github.com".into(),
            language: Some("python".into()),
            per_page: 100,
            max_pages: 10,
            prior: StarPrior::default(),
            bucket_budget: 800.0,
            buckets: None,
            timeout: Duration::from_secs(30),
        }
    }
}

/// Reads the token from `SDX_API_TOKEN`.
pub fn token_from_env() -> Option<String> {
    std::env::var(TOKEN_ENV).ok().filter(|t| !t.trim().is_empty())
}

#[cfg(feature = "fetch")]
mod client {
    use super::*;

    #[derive(Deserialize)]
    struct SearchPage {
        total_count: u64,
        items: Vec<Item>,
    }

    #[derive(Deserialize)]
    struct Item {
        full_name: String,
        stargazers_count: u64,
        clone_url: String,
    }

    fn header_secs(resp: &ureq::Response) -> Option<u64> {
        if let Some(v) = resp.header("retry-after").and_then(|v| v.trim().parse().ok()) {
            return Some(v);
        }
        let reset: u64 = resp.header("x-ratelimit-reset")?.trim().parse().ok()?;
        let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).ok()?.as_secs();
        Some(reset.saturating_sub(now))
    }

    fn classify(err: ureq::Error) -> FetchError {
        match err {
            ureq::Error::Status(401, resp) => FetchError::Auth(resp.into_string().unwrap_or_default()),
            ureq::Error::Status(429, resp) => FetchError::RateLimit { retry_after: header_secs(&resp) },
            ureq::Error::Status(403, resp) => {
                let limited = resp.header("x-ratelimit-remaining").map(str::trim) == Some("0") || resp.header("retry-after").is_some();
                if limited {
                    FetchError::RateLimit { retry_after: header_secs(&resp) }
                } else {
                    FetchError::Auth(resp.into_string().unwrap_or_default())
                }
            }
            ureq::Error::Status(code, resp) => FetchError::Network(format!("HTTP {code}: {}", resp.into_string().unwrap_or_default())),
            ureq::Error::Transport(t) => FetchError::Network(t.to_string()),
        }
    }

    pub(super) struct Client {
        agent: ureq::Agent,
        token: String,
        cfg: FetchConfig,
    }

    impl Client {
        pub fn new(token: &str, cfg: &FetchConfig) -> Client {
            let agent = ureq::AgentBuilder::new().timeout(cfg.timeout).build();
            Client { agent, token: token.to_string(), cfg: cfg.clone() }
        }

        fn page(&self, bucket: &StarBucket, page: u32) -> Result<SearchPage, FetchError> {
            let mut q = bucket.qualifier();
            if let Some(lang) = &self.cfg.language {
                q = format!("language:{lang} {q}");
            }
            let url = format!("{}/search/repositories", self.cfg.api_base.trim_end_matches('/'));
            let resp = self
                .agent
                .get(&url)
                .set("Authorization", &format!("Bearer {}", self.token))
                .set("Accept", "application/vnd.github+json")
                .set("User-Agent", concat!("sdx/", env!("CARGO_PKG_VERSION")))
                .query("q", &q)
                .query("sort", "stars")
                .query("order", "desc")
                .query("per_page", &self.cfg.per_page.to_string())
                .query("page", &page.to_string())
                .call()
                .map_err(classify)?;
            resp.into_json().map_err(|e| FetchError::Network(format!("bad search response: {e}")))
        }

        /// Pages through one bucket. Returns `Ok(None)` when the bucket reports
        /// more results than the cap and can still be halved.
        pub fn bucket(&self, bucket: &StarBucket) -> Result<Option<Vec<RepoDescriptor>>, FetchError> {
            let mut out = Vec::new();
            for page in 1..=self.cfg.max_pages {
                let result = self.page(bucket, page)?;
                if page == 1 && result.total_count > RESULT_CAP && bucket.halve().is_some() {
                    return Ok(None);
                }
                let n = result.items.len();
                out.extend(result.items.into_iter().map(|i| RepoDescriptor {
                    full_name: i.full_name,
                    stars: i.stargazers_count,
                    clone_url: i.clone_url,
                }));
                let reachable = result.total_count.min(RESULT_CAP) as usize;
                if n < self.cfg.per_page as usize || out.len() >= reachable {
                    break;
                }
            }
            Ok(Some(out))
        }
    }
}

/// Every repository with at least `min_stars` stars, deduplicated by name,
/// in the order found (highest bucket first).
#[cfg(feature = "fetch")]
pub fn fetch_repositories_with(min_stars: u64, auth_token: &str, cfg: &FetchConfig) -> Result<Vec<RepoDescriptor>, FetchError> {
    if auth_token.trim().is_empty() {
        return Err(FetchError::Auth(format!("no API token; set {TOKEN_ENV}")));
    }
    let client = client::Client::new(auth_token, cfg);
    let mut stack: Vec<StarBucket> = cfg
        .buckets
        .clone()
        .unwrap_or_else(|| plan_buckets(min_stars, &cfg.prior, cfg.bucket_budget));
    stack.reverse();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    while let Some(bucket) = stack.pop() {
        match client.bucket(&bucket)? {
            Some(found) => {
                for repo in found {
                    if repo.stars >= min_stars && seen.insert(repo.full_name.clone()) {
                        out.push(repo);
                    }
                }
            }
            None => {
                let (upper, lower) = bucket.halve().expect("halvable bucket");
                stack.push(lower);
                stack.push(upper);
            }
        }
    }
    Ok(out)
}

#[cfg(feature = "fetch")]
pub fn fetch_repositories(min_stars: u64, auth_token: &str) -> Result<Vec<RepoDescriptor>, FetchError> {
    fetch_repositories_with(min_stars, auth_token, &FetchConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_covers_the_range_without_gaps() {
        let prior = StarPrior::default();
        let plan = plan_buckets(300, &prior, 800.0);
        assert!(plan.len() > 1);
        assert_eq!(plan[0].max, None);
        let mut ascending = plan.clone();
        ascending.reverse();
        assert_eq!(ascending[0].min, 300);
        for w in ascending.windows(2) {
            assert_eq!(w[0].max, Some(w[1].min - 1));
        }
        for b in &plan {
            assert!(prior.expected(b) <= 800.0, "{b:?}");
            assert!(prior.expected(b) < RESULT_CAP as f64);
        }
    }

    #[test]
    fn tiny_corpus_is_one_open_bucket() {
        let plan = plan_buckets(100_000, &StarPrior::default(), 800.0);
        assert_eq!(plan, vec![StarBucket { min: 100_000, max: None }]);
    }

    #[test]
    fn halving() {
        let (hi, lo) = StarBucket { min: 300, max: Some(399) }.halve().unwrap();
        assert_eq!((lo.min, lo.max, hi.min, hi.max), (300, Some(349), 350, Some(399)));
        let (hi, lo) = StarBucket { min: 5000, max: None }.halve().unwrap();
        assert_eq!((lo.max, hi.min, hi.max), (Some(7500), 7501, None));
        assert!(StarBucket { min: 7, max: Some(7) }.halve().is_none());
        assert_eq!(StarBucket { min: 3, max: None }.qualifier(), "stars:>=3");
    }

    #[cfg(feature = "fetch")]
    #[test]
    fn missing_token_fails_before_any_request() {
        let cfg = FetchConfig { api_base: "http://127.0.0.1:9".into(), ..FetchConfig::default() };
        assert!(matches!(fetch_repositories_with(300, "", &cfg), Err(FetchError::Auth(_))));
    }
}
