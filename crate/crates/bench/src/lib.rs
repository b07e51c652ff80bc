//! Shared fixtures for the criterion benchmarks in `benches/`.

use histlearn_core::evalbench::derived_seed;
use histlearn_core::workload::{gen_gaussian_mixture, gen_queries, label_queries, streams, MixtureSpec, QueryModelSpec};
use histlearn_core::{AttributeDomain, FrequencyTensor, Preset, QueryFeedbackRecord, QueryModel};

/// Dataset over `ranges` plus `n` labeled uniform queries, all derived from `seed`.
pub fn training_set(preset: Preset, ranges: &[usize], n: usize, seed: u64) -> (FrequencyTensor, Vec<QueryFeedbackRecord>) {
    let domain = AttributeDomain::new(ranges.to_vec()).expect("valid domain");
    let spec = MixtureSpec::from_preset(preset, domain, 100_000, seed).expect("preset mixture");
    let truth = gen_gaussian_mixture(&spec, seed).expect("dataset");
    let queries = gen_queries(
        &QueryModelSpec::new(QueryModel::Uniform, n, derived_seed(seed, streams::TRAIN_QUERIES)),
        &truth,
    )
    .expect("queries");
    let qfrs = label_queries(&truth, &queries).expect("labels");
    (truth, qfrs)
}
