//! Response-level black-box study data: parsing, validation, canonical
//! conclusion categories, first-response deduplication, unsuitable-handling
//! policies and examiner grouping by elimination basis.

mod ingest;
mod mapping;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{ingest_csv, ingest_reader, write_csv};
pub use mapping::ConclusionMapping;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroundTruth {
    SameSource,
    DifferentSource,
}

impl GroundTruth {
    pub const ALL: [GroundTruth; 2] = [GroundTruth::SameSource, GroundTruth::DifferentSource];

    pub fn code(self) -> &'static str {
        match self {
            GroundTruth::SameSource => "SS",
            GroundTruth::DifferentSource => "DS",
        }
    }

    /// The conclusive category that is correct for this ground truth.
    pub fn correct_conclusion(self) -> Conclusion {
        match self {
            GroundTruth::SameSource => Conclusion::Identification,
            GroundTruth::DifferentSource => Conclusion::Exclusion,
        }
    }
}

impl fmt::Display for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for GroundTruth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SS" => Ok(GroundTruth::SameSource),
            "DS" => Ok(GroundTruth::DifferentSource),
            _ => Err(Error::Domain(format!("ground truth must be SS or DS, got `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    Identification,
    Exclusion,
    Inconclusive,
    Unsuitable,
}

impl Conclusion {
    pub fn is_conclusive(self) -> bool {
        matches!(self, Conclusion::Identification | Conclusion::Exclusion)
    }

    pub fn name(self) -> &'static str {
        match self {
            Conclusion::Identification => "Identification",
            Conclusion::Exclusion => "Exclusion",
            Conclusion::Inconclusive => "Inconclusive",
            Conclusion::Unsuitable => "Unsuitable",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InconclusiveSubtype {
    SupportSame,
    SupportDifferent,
    SupportNeither,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationBasis {
    Class,
    Individual,
}

impl FromStr for EliminationBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "class" => Ok(EliminationBasis::Class),
            "individual" => Ok(EliminationBasis::Individual),
            _ => Err(Error::Domain(format!("basis must be class or individual, got `{s}`"))),
        }
    }
}

/// One examiner's determination on one item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub examiner_id: String,
    pub item_id: String,
    pub ground_truth: GroundTruth,
    pub raw_conclusion: String,
    pub canonical: Conclusion,
    /// Only set when `canonical` is `Inconclusive`.
    pub inconclusive_subtype: Option<InconclusiveSubtype>,
    /// Only set when `canonical` is `Exclusion`.
    pub elimination_basis: Option<EliminationBasis>,
    pub sequence: u64,
}

impl Response {
    pub fn is_conclusive(&self) -> bool {
        self.canonical.is_conclusive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnsuitableHandling {
    PoolAsInconclusive,
    Exclude,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisPolicy {
    pub unsuitable_handling: UnsuitableHandling,
    pub ground_truth_filter: Option<GroundTruth>,
    pub group_by_elimination_basis: bool,
}

impl AnalysisPolicy {
    /// Variance decomposition and model fitting pool every non-conclusive
    /// response as inconclusive.
    pub fn for_modeling() -> Self {
        AnalysisPolicy {
            unsuitable_handling: UnsuitableHandling::PoolAsInconclusive,
            ground_truth_filter: None,
            group_by_elimination_basis: false,
        }
    }

    /// Error-rate tables drop unsuitable / no-value determinations.
    pub fn for_error_rates() -> Self {
        AnalysisPolicy {
            unsuitable_handling: UnsuitableHandling::Exclude,
            ground_truth_filter: None,
            group_by_elimination_basis: false,
        }
    }

    pub fn with_ground_truth(mut self, gt: Option<GroundTruth>) -> Self {
        self.ground_truth_filter = gt;
        self
    }

    pub fn with_grouping(mut self, group: bool) -> Self {
        self.group_by_elimination_basis = group;
        self
    }
}

/// Examiner grouping used for the firearms analyses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExaminerGroup {
    MadeIndividualElims,
    NoIndividualElims,
}

impl ExaminerGroup {
    pub fn label(self) -> &'static str {
        match self {
            ExaminerGroup::MadeIndividualElims => "made_ind_elims",
            ExaminerGroup::NoIndividualElims => "no_ind_elims",
        }
    }
}

/// Counts suitable for a machine-readable validation summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub responses: usize,
    pub examiners: usize,
    pub items: usize,
    pub duplicates_removed: usize,
    /// Responses per (ground truth, canonical category).
    pub cells: BTreeMap<String, usize>,
    pub notes: Vec<String>,
}

/// A validated set of responses with derived rosters.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyDataset {
    responses: Vec<Response>,
    examiners: BTreeSet<String>,
    items: BTreeMap<String, GroundTruth>,
    assignment: BTreeMap<String, BTreeSet<String>>,
    duplicates_removed: usize,
    log: Vec<String>,
}

impl StudyDataset {
    /// Builds a dataset from responses in file order.
    pub fn from_responses(responses: Vec<Response>) -> Result<Self> {
        Self::build(responses, 0, Vec::new())
    }

    fn build(responses: Vec<Response>, duplicates_removed: usize, log: Vec<String>) -> Result<Self> {
        if responses.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut examiners = BTreeSet::new();
        let mut items: BTreeMap<String, GroundTruth> = BTreeMap::new();
        let mut assignment: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for r in &responses {
            check_response(r)?;
            match items.get(&r.item_id) {
                Some(gt) if *gt != r.ground_truth => {
                    return Err(Error::InconsistentGroundTruth(r.item_id.clone()))
                }
                Some(_) => {}
                None => {
                    items.insert(r.item_id.clone(), r.ground_truth);
                }
            }
            examiners.insert(r.examiner_id.clone());
            assignment
                .entry(r.examiner_id.clone())
                .or_default()
                .insert(r.item_id.clone());
        }
        Ok(StudyDataset {
            responses,
            examiners,
            items,
            assignment,
            duplicates_removed,
            log,
        })
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn examiners(&self) -> &BTreeSet<String> {
        &self.examiners
    }

    pub fn items(&self) -> &BTreeMap<String, GroundTruth> {
        &self.items
    }

    pub fn assignment(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.assignment
    }

    pub fn duplicates_removed(&self) -> usize {
        self.duplicates_removed
    }

    /// Human-readable notes accumulated during validation and filtering.
    pub fn validation_log(&self) -> &[String] {
        &self.log
    }

    pub fn has_duplicates(&self) -> bool {
        let pairs: usize = self.assignment.values().map(BTreeSet::len).sum();
        pairs != self.responses.len()
    }

    pub fn summary(&self) -> ValidationSummary {
        let mut cells = BTreeMap::new();
        for r in &self.responses {
            *cells
                .entry(format!("{}:{}", r.ground_truth.code(), r.canonical.name()))
                .or_insert(0) += 1;
        }
        ValidationSummary {
            responses: self.responses.len(),
            examiners: self.examiners.len(),
            items: self.items.len(),
            duplicates_removed: self.duplicates_removed,
            cells,
            notes: self.log.clone(),
        }
    }

    fn note(&mut self, msg: String) {
        log::warn!("{msg}");
        self.log.push(msg);
    }

    /// Keeps only the first presentation of each (examiner, item) pair:
    /// minimal `sequence`, ties broken by file order.
    pub fn deduplicate_first_response(&self) -> StudyDataset {
        let mut best: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for (idx, r) in self.responses.iter().enumerate() {
            let key = (r.examiner_id.as_str(), r.item_id.as_str());
            match best.get(&key) {
                Some(&cur) if self.responses[cur].sequence <= r.sequence => {}
                _ => {
                    best.insert(key, idx);
                }
            }
        }
        let keep: BTreeSet<usize> = best.into_values().collect();
        let mut out = self.clone();
        if keep.len() == self.responses.len() {
            return out;
        }
        let mut kept = Vec::with_capacity(keep.len());
        let mut removed = Vec::new();
        for (idx, r) in self.responses.iter().enumerate() {
            if keep.contains(&idx) {
                kept.push(r.clone());
            } else {
                removed.push(r);
            }
        }
        for r in &removed {
            out.note(format!(
                "dropped repeat response examiner={} item={} sequence={}",
                r.examiner_id, r.item_id, r.sequence
            ));
        }
        out.duplicates_removed += removed.len();
        out.responses = kept;
        out
    }

    /// Applies unsuitable handling and the ground-truth filter, then
    /// revalidates. Examiners and items left without responses are dropped.
    pub fn apply_policy(&self, policy: &AnalysisPolicy) -> Result<StudyDataset> {
        let mut out = Vec::with_capacity(self.responses.len());
        for r in &self.responses {
            if let Some(gt) = policy.ground_truth_filter {
                if r.ground_truth != gt {
                    continue;
                }
            }
            if r.canonical == Conclusion::Unsuitable {
                match policy.unsuitable_handling {
                    UnsuitableHandling::Exclude => continue,
                    UnsuitableHandling::PoolAsInconclusive => {
                        let mut pooled = r.clone();
                        pooled.canonical = Conclusion::Inconclusive;
                        out.push(pooled);
                        continue;
                    }
                }
            }
            out.push(r.clone());
        }
        self.rebuild(out)
    }

    /// Subset restricted to the given examiners.
    pub fn restrict_to_examiners(&self, keep: &BTreeSet<String>) -> Result<StudyDataset> {
        let out = self
            .responses
            .iter()
            .filter(|r| keep.contains(&r.examiner_id))
            .cloned()
            .collect();
        self.rebuild(out)
    }

    fn rebuild(&self, responses: Vec<Response>) -> Result<StudyDataset> {
        if responses.is_empty() {
            return Err(Error::AllResponsesRemoved);
        }
        let mut out = StudyDataset::build(responses, self.duplicates_removed, self.log.clone())?;
        let gone_examiners: Vec<_> = self.examiners.difference(&out.examiners).cloned().collect();
        let gone_items: Vec<_> = self
            .items
            .keys()
            .filter(|k| !out.items.contains_key(*k))
            .cloned()
            .collect();
        if !gone_examiners.is_empty() {
            out.note(format!(
                "dropped {} examiner(s) with no remaining responses: {}",
                gone_examiners.len(),
                gone_examiners.join(",")
            ));
        }
        if !gone_items.is_empty() {
            out.note(format!(
                "dropped {} item(s) with no remaining responses",
                gone_items.len()
            ));
        }
        Ok(out)
    }

    /// Index-based view of the design used by the model and sampler.
    pub fn design(&self) -> StudyDesign {
        let examiner_ids: Vec<String> = self.examiners.iter().cloned().collect();
        let item_ids: Vec<String> = self.items.keys().cloned().collect();
        let item_truth = self.items.values().copied().collect();
        let ex_index: BTreeMap<&str, usize> = examiner_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let it_index: BTreeMap<&str, usize> = item_ids
            .iter()
            .enumerate()
            .map(|(j, s)| (s.as_str(), j))
            .collect();
        let mut pairs = Vec::new();
        for (ex, set) in &self.assignment {
            for it in set {
                pairs.push((ex_index[ex.as_str()], it_index[it.as_str()]));
            }
        }
        let mut design = StudyDesign {
            examiner_ids: examiner_ids.clone(),
            item_ids: item_ids.clone(),
            item_truth,
            pairs,
        };
        design.pairs.sort_unstable();
        design
    }

    /// Conclusive indicators aligned with the design, one per response.
    pub fn observations(&self) -> Observations {
        let design = self.design();
        let ex_index: BTreeMap<&str, usize> = design
            .examiner_ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let it_index: BTreeMap<&str, usize> = design
            .item_ids
            .iter()
            .enumerate()
            .map(|(j, s)| (s.as_str(), j))
            .collect();
        let responses = self
            .responses
            .iter()
            .map(|r| Observation {
                examiner: ex_index[r.examiner_id.as_str()],
                item: it_index[r.item_id.as_str()],
                conclusive: r.is_conclusive(),
            })
            .collect();
        Observations { design, responses }
    }
}

fn check_response(r: &Response) -> Result<()> {
    if r.inconclusive_subtype.is_some() && r.canonical != Conclusion::Inconclusive {
        return Err(Error::Domain(format!(
            "subtype set on non-inconclusive response ({}, {})",
            r.examiner_id, r.item_id
        )));
    }
    if r.elimination_basis.is_some() && r.canonical != Conclusion::Exclusion {
        return Err(Error::Domain(format!(
            "elimination basis set on non-exclusion response ({}, {})",
            r.examiner_id, r.item_id
        )));
    }
    Ok(())
}

/// Which examiners saw which items, by roster index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub examiner_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub item_truth: Vec<GroundTruth>,
    /// Sorted (examiner index, item index) pairs.
    pub pairs: Vec<(usize, usize)>,
}

impl StudyDesign {
    /// Every examiner answers every item.
    pub fn fully_crossed(n_examiners: usize, n_items: usize, truth: GroundTruth) -> Self {
        StudyDesign {
            examiner_ids: (0..n_examiners).map(|i| format!("E{:03}", i + 1)).collect(),
            item_ids: (0..n_items).map(|j| format!("I{:03}", j + 1)).collect(),
            item_truth: vec![truth; n_items],
            pairs: (0..n_examiners)
                .flat_map(|i| (0..n_items).map(move |j| (i, j)))
                .collect(),
        }
    }

    pub fn n_examiners(&self) -> usize {
        self.examiner_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observation {
    pub examiner: usize,
    pub item: usize,
    pub conclusive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observations {
    pub design: StudyDesign,
    pub responses: Vec<Observation>,
}

/// Classifies each examiner of `dataset` by whether they made any exclusion
/// on individual characteristics in `dataset` or the optional auxiliary set.
pub fn group_examiners(
    dataset: &StudyDataset,
    auxiliary: Option<&StudyDataset>,
) -> Result<BTreeMap<String, ExaminerGroup>> {
    let mut made: BTreeSet<&str> = BTreeSet::new();
    let sources = std::iter::once(dataset).chain(auxiliary);
    for ds in sources {
        for r in &ds.responses {
            if r.canonical != Conclusion::Exclusion {
                continue;
            }
            match r.elimination_basis {
                None => return Err(Error::MissingBasis(r.examiner_id.clone())),
                Some(EliminationBasis::Individual) => {
                    made.insert(r.examiner_id.as_str());
                }
                Some(EliminationBasis::Class) => {}
            }
        }
    }
    Ok(dataset
        .examiners
        .iter()
        .map(|e| {
            let g = if made.contains(e.as_str()) {
                ExaminerGroup::MadeIndividualElims
            } else {
                ExaminerGroup::NoIndividualElims
            };
            (e.clone(), g)
        })
        .collect())
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn resp(ex: &str, item: &str, gt: GroundTruth, c: Conclusion, seq: u64) -> Response {
        Response {
            examiner_id: ex.into(),
            item_id: item.into(),
            ground_truth: gt,
            raw_conclusion: c.name().into(),
            canonical: c,
            inconclusive_subtype: None,
            elimination_basis: None,
            sequence: seq,
        }
    }

    pub fn excl(ex: &str, item: &str, basis: Option<EliminationBasis>) -> Response {
        let mut r = resp(ex, item, GroundTruth::DifferentSource, Conclusion::Exclusion, 0);
        r.elimination_basis = basis;
        r
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use GroundTruth::*;

    #[test]
    fn dedup_keeps_minimal_sequence() {
        let ds = StudyDataset::from_responses(vec![
            resp("E1", "I1", SameSource, Conclusion::Inconclusive, 2),
            resp("E1", "I1", SameSource, Conclusion::Identification, 1),
        ])
        .unwrap();
        let d = ds.deduplicate_first_response();
        assert_eq!(d.len(), 1);
        assert_eq!(d.responses()[0].sequence, 1);
        assert_eq!(d.duplicates_removed(), 1);
    }

    #[test]
    fn dedup_without_duplicates_is_identity() {
        let ds = StudyDataset::from_responses(vec![
            resp("E1", "I1", SameSource, Conclusion::Inconclusive, 0),
            resp("E1", "I2", SameSource, Conclusion::Identification, 1),
        ])
        .unwrap();
        assert_eq!(ds.deduplicate_first_response(), ds);
    }

    #[test]
    fn dedup_three_repeats_keeps_one_and_is_idempotent() {
        let ds = StudyDataset::from_responses(vec![
            resp("E1", "I1", SameSource, Conclusion::Inconclusive, 5),
            resp("E1", "I1", SameSource, Conclusion::Identification, 5),
            resp("E1", "I1", SameSource, Conclusion::Exclusion, 7),
            resp("E2", "I1", SameSource, Conclusion::Exclusion, 0),
        ])
        .unwrap();
        let d = ds.deduplicate_first_response();
        assert_eq!(d.len(), 2);
        // tie on sequence 5 goes to the earlier row
        assert_eq!(d.responses()[0].canonical, Conclusion::Inconclusive);
        assert_eq!(d.validation_log().len(), 2);
        assert_eq!(d.examiners(), ds.examiners());
        assert_eq!(d.items(), ds.items());
        assert_eq!(d.deduplicate_first_response(), d);
    }

    fn with_unsuitable() -> StudyDataset {
        StudyDataset::from_responses(vec![
            resp("E1", "I1", DifferentSource, Conclusion::Unsuitable, 0),
            resp("E1", "I2", DifferentSource, Conclusion::Exclusion, 1),
            resp("E2", "I2", DifferentSource, Conclusion::Inconclusive, 2),
        ])
        .unwrap()
    }

    #[test]
    fn pooling_relabels_unsuitable() {
        let ds = with_unsuitable();
        let pooled = ds.apply_policy(&AnalysisPolicy::for_modeling()).unwrap();
        assert_eq!(pooled.len(), 3);
        assert_eq!(pooled.responses()[0].canonical, Conclusion::Inconclusive);
        assert_eq!(pooled.responses()[0].raw_conclusion, "Unsuitable");
    }

    #[test]
    fn exclusion_removes_unsuitable_and_drops_empty_items() {
        let ds = with_unsuitable();
        let ex = ds.apply_policy(&AnalysisPolicy::for_error_rates()).unwrap();
        assert_eq!(ex.len(), 2);
        assert!(!ex.items().contains_key("I1"));
        assert!(ex.validation_log().iter().any(|l| l.contains("item")));
    }

    #[test]
    fn filter_to_absent_truth_removes_everything() {
        let ds = with_unsuitable();
        let p = AnalysisPolicy::for_modeling().with_ground_truth(Some(SameSource));
        assert!(matches!(ds.apply_policy(&p), Err(Error::AllResponsesRemoved)));
    }

    #[test]
    fn inconsistent_ground_truth_rejected() {
        let err = StudyDataset::from_responses(vec![
            resp("E1", "I1", SameSource, Conclusion::Inconclusive, 0),
            resp("E2", "I1", DifferentSource, Conclusion::Inconclusive, 1),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::InconsistentGroundTruth(id) if id == "I1"));
    }

    #[test]
    fn grouping_rules() {
        let mut rows = vec![
            excl("E1", "I1", Some(EliminationBasis::Class)),
            excl("E1", "I2", Some(EliminationBasis::Class)),
            resp("E3", "I1", DifferentSource, Conclusion::Inconclusive, 0),
        ];
        // E2: one individual exclusion among 30 responses
        for k in 0..29 {
            rows.push(resp("E2", &format!("J{k}"), DifferentSource, Conclusion::Inconclusive, 0));
        }
        rows.push(excl("E2", "I1", Some(EliminationBasis::Individual)));
        let ds = StudyDataset::from_responses(rows).unwrap();
        let g = group_examiners(&ds, None).unwrap();
        assert_eq!(g["E1"], ExaminerGroup::NoIndividualElims);
        assert_eq!(g["E2"], ExaminerGroup::MadeIndividualElims);
        assert_eq!(g["E3"], ExaminerGroup::NoIndividualElims);
        assert_eq!(g.len(), ds.examiners().len());
    }

    #[test]
    fn grouping_uses_auxiliary_dataset() {
        let ds = StudyDataset::from_responses(vec![excl("E1", "B1", Some(EliminationBasis::Class))])
            .unwrap();
        let aux = StudyDataset::from_responses(vec![excl("E1", "C1", Some(EliminationBasis::Individual))])
            .unwrap();
        assert_eq!(group_examiners(&ds, None).unwrap()["E1"], ExaminerGroup::NoIndividualElims);
        assert_eq!(
            group_examiners(&ds, Some(&aux)).unwrap()["E1"],
            ExaminerGroup::MadeIndividualElims
        );
    }

    #[test]
    fn grouping_requires_basis() {
        let ds = StudyDataset::from_responses(vec![excl("E9", "I1", None)]).unwrap();
        assert!(matches!(group_examiners(&ds, None), Err(Error::MissingBasis(e)) if e == "E9"));
    }

    #[test]
    fn design_indexes_pairs() {
        let ds = StudyDataset::from_responses(vec![
            resp("B", "x", SameSource, Conclusion::Inconclusive, 0),
            resp("A", "y", SameSource, Conclusion::Identification, 1),
        ])
        .unwrap();
        let d = ds.design();
        assert_eq!(d.examiner_ids, vec!["A", "B"]);
        assert_eq!(d.pairs, vec![(0, 1), (1, 0)]);
        let obs = ds.observations();
        assert_eq!(obs.responses[0], Observation { examiner: 1, item: 0, conclusive: false });
    }
}
