//! Empirical decomposition of inconclusive variability into examiner and
//! item components.
//!
//! For each examiner the share of their responses that were inconclusive is
//! computed, likewise for each item; the ratio of examiner variance to the
//! sum of both variances is the share of inconclusives attributed to
//! examiners. Callers are expected to pass one ground-truth class at a time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::study_data::{StudyDataset, StudyDesign};

/// Sample variance with the n - 1 denominator. Fewer than two values give 0.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Variance with the n denominator.
pub fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    sample_variance(xs) * (n - 1.0).max(0.0) / n
}

/// `examiner / (examiner + item)`, undefined when both are zero.
pub fn variance_ratio(examiner: f64, item: f64) -> Option<f64> {
    let total = examiner + item;
    (total > 0.0).then(|| examiner / total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub examiner_props: BTreeMap<String, f64>,
    pub item_props: BTreeMap<String, f64>,
    pub sigma2_examiner: f64,
    pub sigma2_item: f64,
    pub ratio: Option<f64>,
    /// Same quantities with n-denominator variances, for sensitivity.
    pub sigma2_examiner_pop: f64,
    pub sigma2_item_pop: f64,
    pub ratio_pop: Option<f64>,
}

impl DecompositionResult {
    pub fn ratio(&self) -> Result<f64> {
        self.ratio.ok_or(Error::UndefinedRatio)
    }
}

/// Per-examiner and per-item inconclusive proportions from indicator
/// triples `(examiner, item, inconclusive)`. Rosters with no responses
/// produce NaN entries, which callers avoid by construction.
pub(crate) fn proportions(
    n_examiners: usize,
    n_items: usize,
    responses: impl IntoIterator<Item = (usize, usize, bool)>,
) -> (Vec<f64>, Vec<f64>) {
    let mut ex = vec![(0u32, 0u32); n_examiners];
    let mut it = vec![(0u32, 0u32); n_items];
    for (i, j, inc) in responses {
        ex[i].1 += 1;
        it[j].1 += 1;
        if inc {
            ex[i].0 += 1;
            it[j].0 += 1;
        }
    }
    let prop = |(k, n): (u32, u32)| k as f64 / n as f64;
    (ex.into_iter().map(prop).collect(), it.into_iter().map(prop).collect())
}

/// Empirical ratio for indicator data on a design; `inconclusive[k]`
/// belongs to `design.pairs[k]`.
pub fn empirical_ratio(design: &StudyDesign, inconclusive: &[bool]) -> Option<f64> {
    let (ex, it) = proportions(
        design.n_examiners(),
        design.n_items(),
        design
            .pairs
            .iter()
            .zip(inconclusive)
            .map(|(&(i, j), &x)| (i, j, x)),
    );
    variance_ratio(sample_variance(&ex), sample_variance(&it))
}

/// Decomposition that reports an undefined ratio instead of failing.
pub fn decompose_lenient(dataset: &StudyDataset) -> DecompositionResult {
    let obs = dataset.observations();
    let (ex, it) = proportions(
        obs.design.n_examiners(),
        obs.design.n_items(),
        obs.responses.iter().map(|o| (o.examiner, o.item, !o.conclusive)),
    );
    let (s_i, s_j) = (sample_variance(&ex), sample_variance(&it));
    let (p_i, p_j) = (population_variance(&ex), population_variance(&it));
    DecompositionResult {
        examiner_props: obs.design.examiner_ids.iter().cloned().zip(ex).collect(),
        item_props: obs.design.item_ids.iter().cloned().zip(it).collect(),
        sigma2_examiner: s_i,
        sigma2_item: s_j,
        ratio: variance_ratio(s_i, s_j),
        sigma2_examiner_pop: p_i,
        sigma2_item_pop: p_j,
        ratio_pop: variance_ratio(p_i, p_j),
    }
}

/// Fails with [`Error::UndefinedRatio`] when every proportion is constant.
pub fn decompose(dataset: &StudyDataset) -> Result<DecompositionResult> {
    let d = decompose_lenient(dataset);
    d.ratio()?;
    Ok(d)
}

/// Runs [`decompose`] on each examiner subgroup; item proportions are
/// recomputed from that subgroup's responses only.
pub fn decompose_by_group<G: Ord + Clone>(
    dataset: &StudyDataset,
    groups: &BTreeMap<String, G>,
) -> BTreeMap<G, Result<DecompositionResult>> {
    let mut members: BTreeMap<G, std::collections::BTreeSet<String>> = BTreeMap::new();
    for ex in dataset.examiners() {
        if let Some(g) = groups.get(ex) {
            members.entry(g.clone()).or_default().insert(ex.clone());
        }
    }
    members
        .into_iter()
        .map(|(g, set)| {
            let res = dataset.restrict_to_examiners(&set).and_then(|d| decompose(&d));
            (g, res)
        })
        .collect()
}

/// Serializable report row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub ground_truth: String,
    pub group: String,
    pub examiner_var: f64,
    pub item_var: f64,
    pub ratio: Option<f64>,
    pub examiner_var_pop: f64,
    pub item_var_pop: f64,
    pub ratio_pop: Option<f64>,
}

impl DecompositionRow {
    pub fn new(ground_truth: &str, group: &str, d: &DecompositionResult) -> Self {
        DecompositionRow {
            ground_truth: ground_truth.into(),
            group: group.into(),
            examiner_var: d.sigma2_examiner,
            item_var: d.sigma2_item,
            ratio: d.ratio,
            examiner_var_pop: d.sigma2_examiner_pop,
            item_var_pop: d.sigma2_item_pop,
            ratio_pop: d.ratio_pop,
        }
    }
}
