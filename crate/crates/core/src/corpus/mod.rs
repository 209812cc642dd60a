//! Bug-fix identification, noise filtering, dataset splits and emission.

mod dataset;
mod filter;
mod split;

pub use dataset::{emit_dataset, encode, read_dataset, DatasetError, DatasetExample, Stage};
pub use filter::{
    is_bugfix, is_test_path, passes_filters, screen, strip_generated, word_count, FilterConfig, FilterDecision, Reason,
    TemplateList, DEFAULT_TEMPLATES,
};
pub use split::{
    cross_project_assignment, random_assignment, split_cross_project, split_random, SplitConfig, SplitError, Splits,
    PARTITIONS,
};
