//! Loading a study and splitting it into (ground truth, examiner group)
//! analysis units.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use bbr_core::study_data::{
    group_examiners, ingest_csv, AnalysisPolicy, ConclusionMapping, ExaminerGroup, GroundTruth,
    StudyDataset,
};
use bbr_core::Error;

use crate::args::{DataArgs, PolicyArg, TruthArg};
use crate::output::{CliResult, RunManifest};

pub const ALL_GROUP: &str = "all";

/// Everything needed to rebuild the analysis units of a run.
#[derive(Clone, Debug)]
pub struct DataSpec {
    pub input: PathBuf,
    pub mapping: String,
    pub policy: PolicyArg,
    pub truth: TruthArg,
    pub group_by_elims: bool,
    pub auxiliary: Option<PathBuf>,
}

impl DataSpec {
    pub fn from_args(args: &DataArgs, default_policy: PolicyArg) -> Self {
        DataSpec {
            input: args.input.input.clone(),
            mapping: args.input.mapping.clone(),
            policy: args.policy.unwrap_or(default_policy),
            truth: args.ground_truth,
            group_by_elims: args.group_by_elims,
            auxiliary: args.auxiliary.clone(),
        }
    }

    pub fn from_manifest(m: &RunManifest) -> CliResult<Self> {
        let missing = |f: &str| {
            crate::output::CliError::Prerequisite(format!(
                "manifest.{}.json lacks `{f}`: run {} again",
                m.command, m.command
            ))
        };
        Ok(DataSpec {
            input: m.input.clone().ok_or_else(|| missing("input"))?,
            mapping: m.mapping.clone().ok_or_else(|| missing("mapping"))?,
            policy: m.policy.ok_or_else(|| missing("policy"))?,
            truth: m.ground_truth.ok_or_else(|| missing("ground_truth"))?,
            group_by_elims: m.group_by_elims,
            auxiliary: m.auxiliary.clone(),
        })
    }

    pub fn record(&self, m: &mut RunManifest) {
        m.input = Some(self.input.clone());
        m.mapping = Some(self.mapping.clone());
        m.policy = Some(self.policy);
        m.ground_truth = Some(self.truth);
        m.group_by_elims = self.group_by_elims;
        m.auxiliary = self.auxiliary.clone();
    }
}

pub struct Unit {
    pub truth: GroundTruth,
    pub group: String,
    pub data: StudyDataset,
}

impl Unit {
    /// Directory-safe key such as `ss_all` or `ds_no_ind_elims`.
    pub fn slug(&self) -> String {
        unit_slug(self.truth, &self.group)
    }
}

pub fn unit_slug(truth: GroundTruth, group: &str) -> String {
    format!("{}_{group}", truth.code().to_ascii_lowercase())
}

/// Ingests and keeps the first response of repeated pairs.
pub fn load(input: &PathBuf, mapping: &str) -> CliResult<StudyDataset> {
    let mapping = ConclusionMapping::resolve(mapping)?;
    Ok(ingest_csv(input, &mapping)?.deduplicate_first_response())
}

pub struct Study {
    pub full: StudyDataset,
    pub groups: Option<BTreeMap<String, ExaminerGroup>>,
}

impl Study {
    pub fn load(spec: &DataSpec) -> CliResult<Self> {
        let full = load(&spec.input, &spec.mapping)?;
        let groups = if spec.group_by_elims {
            let aux = spec
                .auxiliary
                .as_ref()
                .map(|p| load(p, &spec.mapping))
                .transpose()?;
            Some(group_examiners(&full, aux.as_ref())?)
        } else {
            None
        };
        Ok(Study { full, groups })
    }

    /// Group labels in output order, paired with their examiner sets.
    pub fn group_sets(&self) -> Vec<(String, Option<BTreeSet<String>>)> {
        match &self.groups {
            None => vec![(ALL_GROUP.to_string(), None)],
            Some(g) => [ExaminerGroup::MadeIndividualElims, ExaminerGroup::NoIndividualElims]
                .into_iter()
                .map(|grp| {
                    let set = g.iter().filter(|(_, v)| **v == grp).map(|(k, _)| k.clone()).collect();
                    (grp.label().to_string(), Some(set))
                })
                .collect(),
        }
    }

    /// Datasets per group with the policy's unsuitable handling and
    /// optional ground-truth filter applied. Empty groups are skipped.
    pub fn by_group(&self, policy: PolicyArg, truth: Option<GroundTruth>) -> CliResult<Vec<(String, StudyDataset)>> {
        let mut pol = AnalysisPolicy::for_modeling();
        pol.unsuitable_handling = policy.handling();
        let pol = pol.with_ground_truth(truth);
        let mut out = Vec::new();
        for (label, set) in self.group_sets() {
            let base = match &set {
                None => Ok(self.full.clone()),
                Some(s) => self.full.restrict_to_examiners(s),
            };
            match base.and_then(|b| b.apply_policy(&pol)) {
                Ok(d) => out.push((label, d)),
                Err(Error::AllResponsesRemoved) => {
                    log::warn!(
                        "no responses for group {label}{}; skipped",
                        truth.map(|t| format!(" ({})", t.code())).unwrap_or_default()
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(out)
    }

    pub fn units(&self, spec: &DataSpec) -> CliResult<Vec<Unit>> {
        let mut units = Vec::new();
        for truth in spec.truth.selected() {
            for (group, data) in self.by_group(spec.policy, Some(truth))? {
                units.push(Unit { truth, group, data });
            }
        }
        Ok(units)
    }
}
