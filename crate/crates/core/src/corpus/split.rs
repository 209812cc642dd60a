use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Partition names, in the order used by every per-partition array.
pub const PARTITIONS: [&str; 5] = ["train", "pretrain_val", "pretrain_test", "finetune_val", "finetune_test"];

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("nothing to split")]
    EmptyInput,
    #[error("repository {repo} has {size} examples but partition {partition} only had room for {room} (slack {slack})")]
    InfeasibleSplit {
        repo: String,
        size: usize,
        partition: &'static str,
        room: i64,
        slack: f64,
    },
    #[error("{0}")]
    Config(String),
}

/// Target fractions of the five partitions. The training partition feeds
/// both stages; the four evaluation partitions are separate.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    pub train: f64,
    pub pretrain_val: f64,
    pub pretrain_test: f64,
    pub finetune_val: f64,
    pub finetune_test: f64,
    /// How far, as a fraction of all examples, one repository may overshoot
    /// the room left in the partition it is assigned to.
    pub slack: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train: 110.0 / 150.0,
            pretrain_val: 10.0 / 150.0,
            pretrain_test: 10.0 / 150.0,
            finetune_val: 10.0 / 150.0,
            finetune_test: 10.0 / 150.0,
            slack: 0.1,
        }
    }
}

impl SplitConfig {
    pub fn fractions(&self) -> [f64; 5] {
        [self.train, self.pretrain_val, self.pretrain_test, self.finetune_val, self.finetune_test]
    }

    pub fn from_fractions(f: [f64; 5]) -> SplitConfig {
        SplitConfig {
            train: f[0],
            pretrain_val: f[1],
            pretrain_test: f[2],
            finetune_val: f[3],
            finetune_test: f[4],
            ..SplitConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let f = self.fractions();
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err("split fractions must be non-negative".into());
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(format!("split fractions must sum to 1, got {sum}"));
        }
        if !self.slack.is_finite() || self.slack < 0.0 {
            return Err("cross-project slack must be non-negative".into());
        }
        Ok(())
    }

    /// Partition sizes for `n` items by largest-remainder rounding; ties in
    /// the remainder go to the earlier partition.
    ///
    /// ```
    /// use sdx_core::corpus::SplitConfig;
    ///
    /// assert_eq!(SplitConfig::default().sizes(150), [110, 10, 10, 10, 10]);
    /// assert_eq!(SplitConfig::default().sizes(5), [4, 1, 0, 0, 0]);
    /// ```
    pub fn sizes(&self, n: usize) -> [usize; 5] {
        let f = self.fractions();
        let total: f64 = f.iter().sum();
        let mut sizes = [0usize; 5];
        let mut remainders = [0f64; 5];
        for i in 0..5 {
            let exact = n as f64 * f[i] / total;
            let floor = (exact + 1e-9).floor();
            sizes[i] = floor as usize;
            remainders[i] = (exact - floor).max(0.0);
        }
        let mut left = n - sizes.iter().sum::<usize>().min(n);
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&a, &b| remainders[b].total_cmp(&remainders[a]).then(a.cmp(&b)));
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            sizes[i] += 1;
            left -= 1;
        }
        sizes
    }
}

/// The five partitions of a split, each in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub pretrain_val: Vec<T>,
    pub pretrain_test: Vec<T>,
    pub finetune_val: Vec<T>,
    pub finetune_test: Vec<T>,
}

impl<T> Splits<T> {
    fn from_assignment(items: Vec<T>, assignment: &[usize]) -> Splits<T> {
        let mut parts: [Vec<T>; 5] = Default::default();
        for (item, &p) in items.into_iter().zip(assignment) {
            parts[p].push(item);
        }
        let [train, pretrain_val, pretrain_test, finetune_val, finetune_test] = parts;
        Splits { train, pretrain_val, pretrain_test, finetune_val, finetune_test }
    }

    /// Partitions paired with their names, in [`PARTITIONS`] order.
    pub fn named(&self) -> [(&'static str, &Vec<T>); 5] {
        [
            (PARTITIONS[0], &self.train),
            (PARTITIONS[1], &self.pretrain_val),
            (PARTITIONS[2], &self.pretrain_test),
            (PARTITIONS[3], &self.finetune_val),
            (PARTITIONS[4], &self.finetune_test),
        ]
    }

    pub fn sizes(&self) -> [usize; 5] {
        self.named().map(|(_, p)| p.len())
    }
}

/// Partition index per input position for a seeded random split.
pub fn random_assignment(n: usize, cfg: &SplitConfig, seed: u64) -> Result<Vec<usize>, SplitError> {
    if n == 0 {
        return Err(SplitError::EmptyInput);
    }
    cfg.validate().map_err(SplitError::Config)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    let mut cursor = order.into_iter();
    for (p, size) in cfg.sizes(n).into_iter().enumerate() {
        for i in cursor.by_ref().take(size) {
            assignment[i] = p;
        }
    }
    Ok(assignment)
}

/// Shuffles the items under `seed` and cuts the shuffled order into
/// partitions of [`SplitConfig::sizes`].
pub fn split_random<T>(items: Vec<T>, cfg: &SplitConfig, seed: u64) -> Result<Splits<T>, SplitError> {
    let assignment = random_assignment(items.len(), cfg, seed)?;
    Ok(Splits::from_assignment(items, &assignment))
}

/// Partition index per input position for a cross-project split. `repos`
/// holds the repository of each item.
pub fn cross_project_assignment<S: AsRef<str>>(repos: &[S], cfg: &SplitConfig, seed: u64) -> Result<Vec<usize>, SplitError> {
    let n = repos.len();
    if n == 0 {
        return Err(SplitError::EmptyInput);
    }
    cfg.validate().map_err(SplitError::Config)?;
    let mut groups: Vec<(&str, Vec<usize>)> = Vec::new();
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (i, r) in repos.iter().enumerate() {
        let r = r.as_ref();
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push((r, Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(i);
    }
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let targets = cfg.sizes(n);
    let mut filled = [0usize; 5];
    let allowed = cfg.slack * n as f64;
    let mut assignment = vec![0; n];
    for (repo, members) in &groups {
        let room = |p: usize| targets[p] as i64 - filled[p] as i64;
        let best = (0..5).max_by(|&a, &b| room(a).cmp(&room(b)).then(b.cmp(&a))).expect("five partitions");
        let overshoot = members.len() as i64 - room(best);
        if overshoot as f64 > allowed {
            return Err(SplitError::InfeasibleSplit {
                repo: repo.to_string(),
                size: members.len(),
                partition: PARTITIONS[best],
                room: room(best),
                slack: cfg.slack,
            });
        }
        filled[best] += members.len();
        for &i in members {
            assignment[i] = best;
        }
    }
    Ok(assignment)
}

/// Assigns whole repositories to partitions: repositories are shuffled
/// under `seed`, then each goes to the partition with the most room left
/// (ties to the earlier partition). No repository spans two partitions.
pub fn split_cross_project<T>(
    items: Vec<T>,
    cfg: &SplitConfig,
    seed: u64,
    repo_of: impl Fn(&T) -> &str,
) -> Result<Splits<T>, SplitError> {
    let repos: Vec<String> = items.iter().map(|t| repo_of(t).to_string()).collect();
    let assignment = cross_project_assignment(&repos, cfg, seed)?;
    Ok(Splits::from_assignment(items, &assignment))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizes() {
        let cfg = SplitConfig::default();
        assert_eq!(cfg.sizes(150), [110, 10, 10, 10, 10]);
        assert_eq!(cfg.sizes(5), [4, 1, 0, 0, 0]);
        assert_eq!(cfg.sizes(1), [1, 0, 0, 0, 0]);
        for n in 0..400 {
            assert_eq!(cfg.sizes(n).iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn random_split_is_seeded() {
        let items: Vec<u32> = (0..150).collect();
        let cfg = SplitConfig::default();
        let a = split_random(items.clone(), &cfg, 1).unwrap();
        let b = split_random(items.clone(), &cfg, 1).unwrap();
        let c = split_random(items, &cfg, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.sizes(), [110, 10, 10, 10, 10]);
    }

    #[test]
    fn empty_and_bad_fractions() {
        assert_eq!(split_random(Vec::<u8>::new(), &SplitConfig::default(), 0), Err(SplitError::EmptyInput));
        let bad = SplitConfig::from_fractions([0.5, 0.1, 0.1, 0.1, 0.1]);
        assert!(matches!(split_random(vec![1], &bad, 0), Err(SplitError::Config(_))));
    }

    #[test]
    fn three_equal_repos_one_each() {
        let cfg = SplitConfig::from_fractions([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]);
        let items: Vec<(String, u32)> = (0..12).map(|i| (format!("r{}", i % 3), i)).collect();
        for seed in 0..10 {
            let s = split_cross_project(items.clone(), &cfg, seed, |x| x.0.as_str()).unwrap();
            assert_eq!(s.sizes(), [4, 4, 4, 0, 0]);
            for part in [&s.train, &s.pretrain_val, &s.pretrain_test] {
                assert!(part.iter().all(|x| x.0 == part[0].0));
            }
        }
    }

    #[test]
    fn oversized_repo_is_infeasible() {
        let mut repos = vec!["big"; 140];
        repos.extend(vec!["small"; 10]);
        let err = cross_project_assignment(&repos, &SplitConfig::default(), 0).unwrap_err();
        assert!(matches!(err, SplitError::InfeasibleSplit { size: 140, .. }), "{err}");
    }
}
