//! Commit records from local git clones or NDJSON dumps, and repository
//! discovery through a hosting search API.

mod dump;
mod fetch;
mod git;

pub use dump::{load_dump, write_records, DumpError, DumpReader};
#[cfg(feature = "fetch")]
pub use fetch::{fetch_repositories, fetch_repositories_with};
pub use fetch::{
    plan_buckets, token_from_env, FetchConfig, FetchError, RepoDescriptor, StarBucket, StarPrior, RESULT_CAP, TOKEN_ENV,
};
pub use git::{enumerate_commits, CommitIter, GitRepo, RepoError};
